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

#include "et/image/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "et/parallel.hpp"

namespace et::image {

void ImageTrainConfig::validate(Index n_tokens) const {
  if (epochs < 0 || batch_size < 1 || max_steps < 0 || warmup_steps < 0) {
    throw ConfigError("image training: epochs, max_steps, warmup >= 0 and batch_size >= 1 required");
  }
  if (n_replaced < 0 || n_replaced > n_occluded || n_occluded > n_tokens) {
    throw ConfigError("image training: need 0 <= n_replaced <= n_occluded <= " + std::to_string(n_tokens));
  }
  if (!(adam.lr >= 0) || !(adam.b1 >= 0 && adam.b1 < 1) || !(adam.b2 >= 0 && adam.b2 < 1) ||
      !(adam.weight_decay >= 0) || !(adam.eps > 0)) {
    throw ConfigError("image training: invalid optimizer settings");
  }
}

namespace {

void accumulate(ImageTaskParams& into, const ImageTaskParams& g, double weight) {
  auto dst = tensor_views(into);
  const auto src = tensor_views(g);
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k].array() += weight * src[k].array();
}

std::vector<PatchGrid> patchify_all(const std::vector<io::Image>& images, const ImageModelConfig& c) {
  std::vector<PatchGrid> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    if (img.channels != c.channels || img.height != c.height || img.width != c.width) {
      throw ShapeError("image training: image is " + std::to_string(img.channels) + "x" +
                       std::to_string(img.height) + "x" + std::to_string(img.width) + ", model expects " +
                       std::to_string(c.channels) + "x" + std::to_string(c.height) + "x" + std::to_string(c.width));
    }
    out.push_back(patchify(img, c.patch_h, c.patch_w));
  }
  return out;
}

}  // namespace

LossAndGrad batch_loss_and_grad(const ImageTaskParams& p, const std::vector<PatchGrid>& patches,
                                const std::vector<MaskPlan>& plans) {
  if (patches.size() != plans.size() || patches.empty()) throw ShapeError("batch: need one plan per item");
  std::vector<LossAndGrad> items(patches.size());
  parallel_for(patches.size(), [&](std::size_t i) { items[i] = image_loss_and_grad(p, patches[i], plans[i]); });
  LossAndGrad out{0.0, zeros_like(p)};
  const double w = 1.0 / double(items.size());
  for (const auto& item : items) {
    out.loss += w * item.loss;
    accumulate(out.grad, item.grad, w);
  }
  return out;
}

ImageTrainResult train_image(const ImageModelConfig& model, const std::vector<io::Image>& images,
                             const ImageTrainConfig& config, const std::function<void(const EpochRecord&)>& on_epoch) {
  io::Rng init_rng = io::Rng::for_purpose(config.seed, "init");
  return train_image_from(init_image_params(model, init_rng), images, config, on_epoch);
}

ImageTrainResult train_image_from(ImageTaskParams init, const std::vector<io::Image>& images,
                                  const ImageTrainConfig& config,
                                  const std::function<void(const EpochRecord&)>& on_epoch) {
  const ImageModelConfig& model = init.config;
  model.validate();
  config.validate(model.tokens());
  if (images.empty()) throw InvalidInput("image training: empty dataset");
  const std::vector<PatchGrid> grids = patchify_all(images, model);

  ImageTrainResult result;
  result.params = std::move(init);
  io::Rng shuffle_rng = io::Rng::for_purpose(config.seed, "shuffle");
  io::Rng mask_rng = io::Rng::for_purpose(config.seed, "mask");
  ad::AdamState adam;
  adam.config = config.adam;
  std::vector<std::size_t> order(grids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.max_steps > 0 && step >= config.max_steps) break;
    shuffle_rng.shuffle(order);
    double epoch_loss = 0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch_size)) {
      if (config.max_steps > 0 && step >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + std::size_t(config.batch_size));
      std::vector<PatchGrid> batch;
      std::vector<MaskPlan> plans;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(grids[order[i]]);
        plans.push_back(make_mask_plan(model.tokens(), config.n_occluded, config.n_replaced, mask_rng));
      }
      const LossAndGrad lg = batch_loss_and_grad(result.params, batch, plans);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("image training: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step));
      }
      adam.config.lr = config.adam.lr;
      if (config.warmup_steps > 0 && step < config.warmup_steps) {
        adam.config.lr *= double(step + 1) / double(config.warmup_steps);
      }
      const auto report = ad::adam_step(tensor_views(result.params), tensor_views(lg.grad), adam);
      result.steps.push_back({epoch, step, lg.loss, report.grad_norm});
      epoch_loss += lg.loss;
      ++batches;
      ++step;
    }
    if (batches == 0) break;
    result.epochs.push_back({epoch, epoch_loss / batches});
    if (on_epoch) on_epoch(result.epochs.back());
  }
  return result;
}

double evaluate_image(const ImageTaskParams& p, const std::vector<io::Image>& images, Index n_occluded,
                      Index n_replaced, std::uint64_t mask_seed) {
  if (images.empty()) throw InvalidInput("image evaluation: empty dataset");
  const std::vector<PatchGrid> grids = patchify_all(images, p.config);
  io::Rng mask_rng = io::Rng::for_purpose(mask_seed, "eval-mask");
  std::vector<MaskPlan> plans;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    plans.push_back(make_mask_plan(p.config.tokens(), n_occluded, n_replaced, mask_rng));
  }
  std::vector<double> losses(grids.size());
  parallel_for(grids.size(), [&](std::size_t i) { losses[i] = image_loss(p, grids[i], plans[i]); });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / double(losses.size());
}

}  // namespace et::image
