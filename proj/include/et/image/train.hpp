// Copyright 2026 The Energy Transformer Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "et/ad/adam.hpp"
#include "et/image/model.hpp"
#include "et/io/image.hpp"

namespace et::image {

struct ImageTrainConfig {
  ad::AdamConfig adam{.lr = 5e-4, .b1 = 0.9, .b2 = 0.99, .eps = 1e-8, .weight_decay = 0.05, .grad_clip = 1.0};
  int epochs = 10;
  int batch_size = 16;
  Index n_occluded = 8;
  Index n_replaced = 7;
  int warmup_steps = 0;  // linear ramp of the learning rate
  int max_steps = 0;     // 0: no cap beyond epochs
  std::uint64_t seed = 0;

  void validate(Index n_tokens) const;
};

struct StepRecord {
  int epoch = 0;
  int step = 0;
  double loss = 0;
  double grad_norm = 0;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0;  // mean of the epoch's batch losses
};

struct ImageTrainResult {
  ImageTaskParams params;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

/// Mean loss and mean gradient over a batch. Items are evaluated in
/// parallel and reduced in index order, so the result does not depend on
/// the thread count.
LossAndGrad batch_loss_and_grad(const ImageTaskParams& p, const std::vector<PatchGrid>& patches,
                                const std::vector<MaskPlan>& plans);

/// Trains from the seed's initialization. Initialization, shuffling and
/// masking draw from separate streams of `config.seed`.
ImageTrainResult train_image(const ImageModelConfig& model, const std::vector<io::Image>& images,
                             const ImageTrainConfig& config,
                             const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Continues training from `init` instead of a fresh initialization.
ImageTrainResult train_image_from(ImageTaskParams init, const std::vector<io::Image>& images,
                                  const ImageTrainConfig& config,
                                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Mean masked MSE over `images`, each with a mask drawn from `mask_seed`.
/// The same seed gives the same masks for any parameters.
double evaluate_image(const ImageTaskParams& p, const std::vector<io::Image>& images, Index n_occluded,
                      Index n_replaced, std::uint64_t mask_seed);

}  // namespace et::image
