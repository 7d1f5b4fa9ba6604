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

#include "et/image/model.hpp"

#include <algorithm>

namespace et::image {

void ImageModelConfig::validate() const {
  if (channels < 1 || height < 1 || width < 1 || patch_h < 1 || patch_w < 1) {
    throw ConfigError("image model: image and patch dims must be positive");
  }
  if (height % patch_h != 0 || width % patch_w != 0) {
    throw ConfigError("image model: image dims must be divisible by patch dims");
  }
  if (token_dim < 1 || heads < 1 || head_dim < 1 || memories < 1) {
    throw ConfigError("image model: D, H, Y, M must be positive");
  }
  if (!(beta > 0) || !(alpha >= 0) || steps < 1 || !(epsilon > 0)) {
    throw ConfigError("image model: need beta > 0, alpha >= 0, T >= 1, epsilon > 0");
  }
  if (!enable_attn && !enable_hopfield) throw ConfigError("image model: both modules disabled");
  if (enable_attn && !allow_self_attention && tokens() < 2) {
    throw ConfigError("image model: attention without self needs at least 2 tokens");
  }
}

ImageTaskParams init_image_params(const ImageModelConfig& c, io::Rng& rng) {
  c.validate();
  const Index d = c.token_dim;
  const Index p = c.patch_dim();
  const Index n = c.tokens();
  ImageTaskParams out;
  out.config = c;
  // Draw order is part of the reproducibility contract; do not reorder.
  out.et.attn.w_key = rng.normal_matrix(c.heads * c.head_dim, d, c.init_std);
  out.et.attn.w_query = rng.normal_matrix(c.heads * c.head_dim, d, c.init_std);
  out.et.hopfield.xi = rng.normal_matrix(c.memories, d, c.init_std);
  out.mask_token = rng.normal_matrix(1, d, c.init_std);
  out.enc_kernel = rng.normal_matrix(p, d, c.init_std);
  out.dec_kernel = rng.normal_matrix(d, p, c.init_std);
  out.pos_bias = rng.normal_matrix(n, d, c.init_std);
  out.enc_bias = RowVector::Zero(d);
  out.dec_bias = RowVector::Zero(p);
  out.dec_norm = LayerNormParams<double>::identity(d, c.epsilon);
  out.et.norm = LayerNormParams<double>::identity(d, c.epsilon);
  out.et.attn.heads = c.heads;
  out.et.attn.beta = c.beta;
  out.et.attn.mask = c.allow_self_attention ? MaskMode{IncludeSelf{}} : MaskMode{ExcludeSelf{}};
  out.et.hopfield.activation = c.activation;
  out.et.enable_attn = c.enable_attn;
  out.et.enable_hopfield = c.enable_hopfield;
  return out;
}

ImageTaskParams zeros_like(const ImageTaskParams& p) {
  ImageTaskParams z = p;
  for (auto& v : tensor_views(z)) v.array().setZero();
  return z;
}

namespace {

template <typename P>
auto views_impl(P& p) {
  using View = std::conditional_t<std::is_const_v<P>, ad::ConstTensorView, ad::TensorView>;
  const Index h = p.config.heads;
  const Index y = p.config.head_dim;
  const Index d = p.config.token_dim;
  auto mat = [](std::string name, auto& m, bool decay, std::vector<Index> dims = {}) {
    if (dims.empty()) dims = {m.rows(), m.cols()};
    return View{std::move(name), m.data(), std::move(dims), decay};
  };
  auto vec = [](std::string name, auto& v) { return View{std::move(name), v.data(), {v.size()}, false}; };
  auto scalar = [](std::string name, auto& s) { return View{std::move(name), &s, {}, false}; };
  return std::vector<View>{
      mat("encoder.kernel", p.enc_kernel, true),
      vec("encoder.bias", p.enc_bias),
      scalar("decoder.norm.gamma", p.dec_norm.gamma),
      vec("decoder.norm.delta", p.dec_norm.delta),
      mat("decoder.kernel", p.dec_kernel, true),
      vec("decoder.bias", p.dec_bias),
      vec("mask_token", p.mask_token),
      mat("pos_bias", p.pos_bias, false),
      scalar("et.norm.gamma", p.et.norm.gamma),
      vec("et.norm.delta", p.et.norm.delta),
      mat("et.w_key", p.et.attn.w_key, true, {h, y, d}),
      mat("et.w_query", p.et.attn.w_query, true, {h, y, d}),
      mat("et.xi", p.et.hopfield.xi, true),
  };
}

}  // namespace

std::vector<ad::TensorView> tensor_views(ImageTaskParams& p) { return views_impl(p); }
std::vector<ad::ConstTensorView> tensor_views(const ImageTaskParams& p) { return views_impl(p); }

io::Checkpoint to_checkpoint(const ImageTaskParams& p) { return io::to_checkpoint(tensor_views(p)); }

ImageTaskParams from_checkpoint(const ImageModelConfig& config, const io::Checkpoint& ckpt) {
  io::Rng unused(0);
  ImageTaskParams p = init_image_params(config, unused);
  io::restore(ckpt, tensor_views(p));
  return p;
}

namespace {

void check_patches(const PatchGrid& patches, const ImageTaskParams& p) {
  if (patches.count() != p.config.tokens() || patches.patch_dim() != p.config.patch_dim()) {
    throw ShapeError("image model: patch grid does not match model geometry");
  }
}

void check_plan(const MaskPlan& plan, const ImageTaskParams& p) {
  if (plan.n_tokens != p.config.tokens()) throw ShapeError("image model: mask plan token count mismatch");
}

}  // namespace

Matrix encode_and_mask(const PatchGrid& patches, const MaskPlan& plan, const ImageTaskParams& p) {
  check_patches(patches, p);
  check_plan(plan, p);
  Matrix x = (patches.patches * p.enc_kernel).rowwise() + p.enc_bias;
  for (Index a : plan.replaced) x.row(a) = p.mask_token;
  x += p.pos_bias;
  return x;
}

Matrix decode(const Matrix& tokens, const ImageTaskParams& p) {
  return (layer_norm_rows(tokens, p.dec_norm) * p.dec_kernel).rowwise() + p.dec_bias;
}

double masked_mse(const Matrix& recon, const Matrix& original, const MaskPlan& plan) {
  if (recon.rows() != original.rows() || recon.cols() != original.cols()) {
    throw ShapeError("masked_mse: reconstruction and original differ in shape");
  }
  if (plan.occluded.empty()) return 0.0;
  double total = 0;
  for (Index a : plan.occluded) total += (recon.row(a) - original.row(a)).squaredNorm();
  return total / (double(plan.occluded.size()) * double(recon.cols()));
}

Reconstruction reconstruct(const io::Image& image, const MaskPlan& plan, const ImageTaskParams& p,
                           bool decode_at_min_energy) {
  const PatchGrid grid = patchify(image, p.config.patch_h, p.config.patch_w);
  const Matrix x0 = encode_and_mask(grid, plan, p);
  const auto trajectory = et_forward(x0, p.et, p.config.alpha, p.config.steps);
  Reconstruction out;
  std::size_t chosen = trajectory.size() - 1;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    out.energies.push_back(trajectory[t].energy);
    if (decode_at_min_energy && trajectory[t].energy.e_total < trajectory[chosen].energy.e_total) chosen = t;
  }
  out.decoded_step = static_cast<int>(chosen);
  out.patches = decode(trajectory[chosen].x, p);
  PatchGrid decoded = grid;
  decoded.patches = out.patches;
  out.image = unpatchify(decoded);
  return out;
}

ImageTapeVars bind_image(ad::Tape& tape, const ImageTaskParams& p) {
  ImageTapeVars v;
  v.enc_kernel = tape.leaf(p.enc_kernel);
  v.enc_bias = tape.leaf(p.enc_bias);
  v.dec_gamma = tape.scalar_leaf(p.dec_norm.gamma);
  v.dec_delta = tape.leaf(p.dec_norm.delta.transpose());
  v.dec_kernel = tape.leaf(p.dec_kernel);
  v.dec_bias = tape.leaf(p.dec_bias);
  v.mask_token = tape.leaf(p.mask_token);
  v.pos_bias = tape.leaf(p.pos_bias);
  v.et = ad::bind_et(tape, p.et, p.config.tokens());
  return v;
}

void collect_image_grads(const ad::Gradients& grads, const ImageTapeVars& v, ImageTaskParams& out) {
  out.enc_kernel = grads.wrt(v.enc_kernel);
  out.enc_bias = grads.wrt(v.enc_bias);
  out.dec_norm.gamma = grads.wrt(v.dec_gamma)(0, 0);
  out.dec_norm.delta = grads.wrt(v.dec_delta).transpose();
  out.dec_kernel = grads.wrt(v.dec_kernel);
  out.dec_bias = grads.wrt(v.dec_bias);
  out.mask_token = grads.wrt(v.mask_token);
  out.pos_bias = grads.wrt(v.pos_bias);
  ad::collect_et_grads(grads, v.et, out.et);
}

ad::Var record_image_loss(ad::Tape& tape, const ImageTapeVars& v, const ImageTaskParams& p,
                          const PatchGrid& patches, const MaskPlan& plan) {
  check_patches(patches, p);
  check_plan(plan, p);
  if (plan.occluded.empty()) return tape.constant(Matrix::Zero(1, 1));
  ad::Var pixels = tape.constant(patches.patches);
  ad::Var x = ad::add_row(ad::matmul(pixels, v.enc_kernel), v.enc_bias);
  if (!plan.replaced.empty()) x = ad::select_rows(x, v.mask_token, plan.replaced_flags());
  x = x + v.pos_bias;
  for (int t = 0; t < p.config.steps; ++t) x = ad::et_step(x, v.et, p.config.alpha);
  ad::Var normed = ad::layer_norm_rows(x, v.dec_gamma, v.dec_delta, p.dec_norm.epsilon);
  ad::Var recon = ad::add_row(ad::matmul(normed, v.dec_kernel), v.dec_bias);
  ad::Var target = tape.constant(patches.patches);
  ad::Var diff = ad::gather_rows(recon, plan.occluded) - ad::gather_rows(target, plan.occluded);
  const double denom = double(plan.occluded.size()) * double(patches.patch_dim());
  return ad::scale(ad::sum(ad::square(diff)), 1.0 / denom);
}

LossAndGrad image_loss_and_grad(const ImageTaskParams& p, const PatchGrid& patches, const MaskPlan& plan) {
  ad::Tape tape;
  const ImageTapeVars vars = bind_image(tape, p);
  const ad::Var loss = record_image_loss(tape, vars, p, patches, plan);
  LossAndGrad out{loss.value()(0, 0), p};
  collect_image_grads(tape.backward(loss), vars, out.grad);
  return out;
}

double image_loss(const ImageTaskParams& p, const PatchGrid& patches, const MaskPlan& plan) {
  const Matrix x0 = encode_and_mask(patches, plan, p);
  Matrix x = x0;
  const EtBlock<double> block(p.et, x.rows());
  for (int t = 0; t < p.config.steps; ++t) x = block.step(x, p.config.alpha);
  return masked_mse(decode(x, p), patches.patches, plan);
}

}  // namespace et::image
