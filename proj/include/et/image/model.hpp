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

#include <vector>

#include "et/ad/et_ops.hpp"
#include "et/ad/tensor_view.hpp"
#include "et/core/dynamics.hpp"
#include "et/image/mask_plan.hpp"
#include "et/image/patches.hpp"
#include "et/io/checkpoint.hpp"
#include "et/io/rng.hpp"

namespace et::image {

/// Architecture of the masked-image model. Defaults are the desk-scale
/// configuration: 32x32 grayscale, 8x8 patches (N=16, P=64), D=64, H=4,
/// Y=16, M=256, T=6, alpha=0.1.
struct ImageModelConfig {
  int channels = 1;
  int height = 32;
  int width = 32;
  int patch_h = 8;
  int patch_w = 8;
  Index token_dim = 64;
  Index heads = 4;
  Index head_dim = 16;
  Index memories = 256;
  double beta = 0.25;  // 1/sqrt(head_dim)
  double alpha = 0.1;
  int steps = 6;
  double epsilon = 1e-5;
  bool allow_self_attention = false;
  bool enable_attn = true;
  bool enable_hopfield = true;
  Activation activation = Relu{};
  double init_std = 0.02;

  Index tokens() const { return Index(height / patch_h) * (width / patch_w); }
  Index patch_dim() const { return Index(channels) * patch_h * patch_w; }
  void validate() const;
};

struct ImageTaskParams {
  ImageModelConfig config;
  Matrix enc_kernel;   // P x D
  RowVector enc_bias;  // D
  LayerNormParams<double> dec_norm;
  Matrix dec_kernel;   // D x P
  RowVector dec_bias;  // P
  RowVector mask_token;  // D
  Matrix pos_bias;       // N x D
  EtParams<double> et;
};

/// N(0, init_std) kernels, mask token and position bias; zero biases; unit
/// layer-norm scales.
ImageTaskParams init_image_params(const ImageModelConfig& config, io::Rng& rng);

/// Same shapes, all zeros: the container used for gradients.
ImageTaskParams zeros_like(const ImageTaskParams& p);

/// Every learnable tensor, in a fixed order with stable names.
std::vector<ad::TensorView> tensor_views(ImageTaskParams& p);
std::vector<ad::ConstTensorView> tensor_views(const ImageTaskParams& p);

io::Checkpoint to_checkpoint(const ImageTaskParams& p);
/// Fresh parameters for `config`, overwritten from the checkpoint.
ImageTaskParams from_checkpoint(const ImageModelConfig& config, const io::Checkpoint& ckpt);

/// Encoded tokens with replaced rows swapped for the mask token, plus position bias.
Matrix encode_and_mask(const PatchGrid& patches, const MaskPlan& plan, const ImageTaskParams& p);
/// Decoder layer norm followed by the affine map back to patch space.
Matrix decode(const Matrix& tokens, const ImageTaskParams& p);

/// Mean squared error over all pixels of occluded patches; 0 for an empty plan.
double masked_mse(const Matrix& recon, const Matrix& original, const MaskPlan& plan);

struct Reconstruction {
  io::Image image;
  Matrix patches;
  std::vector<EnergyBreakdown<double>> energies;  // T + 1 entries
  int decoded_step = 0;
};

/// Runs the block for config.steps updates and decodes the final state, or
/// the lowest-energy state when `decode_at_min_energy` is set.
Reconstruction reconstruct(const io::Image& image, const MaskPlan& plan, const ImageTaskParams& p,
                           bool decode_at_min_energy = false);

// Tape form of the model.

struct ImageTapeVars {
  ad::Var enc_kernel, enc_bias, dec_gamma, dec_delta, dec_kernel, dec_bias, mask_token, pos_bias;
  ad::EtVars et;
};

ImageTapeVars bind_image(ad::Tape& tape, const ImageTaskParams& p);
void collect_image_grads(const ad::Gradients& grads, const ImageTapeVars& vars, ImageTaskParams& out);

/// Records the masked-MSE loss for one image on the tape.
ad::Var record_image_loss(ad::Tape& tape, const ImageTapeVars& vars, const ImageTaskParams& p,
                          const PatchGrid& patches, const MaskPlan& plan);

struct LossAndGrad {
  double loss = 0;
  ImageTaskParams grad;
};

LossAndGrad image_loss_and_grad(const ImageTaskParams& p, const PatchGrid& patches, const MaskPlan& plan);

/// Loss by direct evaluation (no tape).
double image_loss(const ImageTaskParams& p, const PatchGrid& patches, const MaskPlan& plan);

}  // namespace et::image
