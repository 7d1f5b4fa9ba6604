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

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "et/image/export.hpp"
#include "et/image/model.hpp"
#include "et/image/train.hpp"
#include "et/io/synthetic.hpp"

using namespace et;
using namespace et::image;
namespace fs = std::filesystem;

namespace {

io::Image random_image(int c, int h, int w, std::uint64_t seed) {
  io::Rng rng(seed);
  io::Image img(c, h, w);
  for (double& v : img.data) v = rng.normal();
  return img;
}

ImageModelConfig tiny_config() {
  ImageModelConfig c;
  c.height = 8;
  c.width = 8;
  c.patch_h = 4;
  c.patch_w = 4;
  c.token_dim = 6;
  c.heads = 2;
  c.head_dim = 3;
  c.memories = 5;
  c.steps = 2;
  return c;
}

bool same_bits(const ImageTaskParams& a, const ImageTaskParams& b) {
  const auto va = tensor_views(a);
  const auto vb = tensor_views(b);
  for (std::size_t k = 0; k < va.size(); ++k) {
    if (std::memcmp(va[k].data, vb[k].data, sizeof(double) * std::size_t(va[k].size())) != 0) return false;
  }
  return true;
}

MaskPlan plan_of(Index n, std::vector<Index> replaced, std::vector<Index> untouched) {
  MaskPlan p;
  p.n_tokens = n;
  p.replaced = replaced;
  p.untouched = untouched;
  p.occluded = replaced;
  p.occluded.insert(p.occluded.end(), untouched.begin(), untouched.end());
  std::sort(p.occluded.begin(), p.occluded.end());
  return p;
}

}  // namespace

TEST_CASE("patchify orders patches row-major") {
  io::Image img(1, 2, 2);
  img.data = {1, 2, 3, 4};
  const auto g = patchify(img, 1, 1);
  CHECK(g.count() == 4);
  CHECK(g.patch_dim() == 1);
  for (int a = 0; a < 4; ++a) CHECK(g.patches(a, 0) == double(a + 1));

  io::Image wide(1, 2, 4);
  wide.data = {1, 2, 3, 4, 5, 6, 7, 8};
  const auto w = patchify(wide, 2, 2);
  REQUIRE(w.count() == 2);
  CHECK(w.patches.row(0) == (RowVector(4) << 1, 2, 5, 6).finished());
  CHECK(w.patches.row(1) == (RowVector(4) << 3, 4, 7, 8).finished());
}

TEST_CASE("patchify flattens channel first within a patch") {
  io::Image img(2, 1, 2);
  img.data = {1, 2, 10, 20};  // channel 0 then channel 1
  const auto g = patchify(img, 1, 1);
  CHECK(g.patches.row(0) == (RowVector(2) << 1, 10).finished());
  CHECK(g.patches.row(1) == (RowVector(2) << 2, 20).finished());
}

TEST_CASE("patchify and unpatchify are inverse") {
  for (auto [c, h, w, ph, pw] : {std::array{1, 8, 8, 4, 4}, std::array{3, 6, 9, 3, 3}, std::array{2, 4, 6, 1, 2}}) {
    const auto img = random_image(c, h, w, std::uint64_t(c * 100 + h));
    CHECK(unpatchify(patchify(img, ph, pw)) == img);
  }
}

TEST_CASE("ImageNet geometry gives 196 tokens of width 768") {
  const io::Image img(3, 224, 224);
  const auto g = patchify(img, 16, 16);
  CHECK(g.count() == 196);
  CHECK(g.patch_dim() == 768);
}

TEST_CASE("patchify rejects indivisible images") {
  CHECK_THROWS_AS(patchify(io::Image(1, 5, 4), 2, 2), ShapeError);
  CHECK_THROWS_AS(patchify(io::Image(1, 4, 4), 0, 2), ShapeError);
}

TEST_CASE("mask plans have the requested counts and partition") {
  io::Rng rng(3);
  const auto p = make_mask_plan(196, 100, 90, rng);
  CHECK(p.occluded.size() == 100);
  CHECK(p.replaced.size() == 90);
  CHECK(p.untouched.size() == 10);
  std::vector<Index> merged = p.replaced;
  merged.insert(merged.end(), p.untouched.begin(), p.untouched.end());
  std::sort(merged.begin(), merged.end());
  CHECK(merged == p.occluded);
  CHECK(std::adjacent_find(p.occluded.begin(), p.occluded.end()) == p.occluded.end());
  for (Index a : p.occluded) CHECK((a >= 0 && a < 196));

  io::Rng r0(1);
  const auto empty = make_mask_plan(16, 0, 0, r0);
  CHECK(empty.occluded.empty());
  const auto all = make_mask_plan(16, 5, 5, r0);
  CHECK(all.untouched.empty());

  io::Rng a(9), b(9);
  const auto pa = make_mask_plan(16, 8, 7, a);
  const auto pb = make_mask_plan(16, 8, 7, b);
  CHECK(pa.occluded == pb.occluded);
  CHECK(pa.replaced == pb.replaced);

  io::Rng bad(1);
  CHECK_THROWS_AS(make_mask_plan(16, 4, 5, bad), InvalidInput);
  CHECK_THROWS_AS(make_mask_plan(16, 17, 0, bad), InvalidInput);
}

TEST_CASE("mask plans are uniform over tokens") {
  io::Rng rng(12);
  std::vector<int> hits(16, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    for (Index a : make_mask_plan(16, 4, 3, rng).occluded) ++hits[std::size_t(a)];
  }
  // Each token is occluded with probability 1/4; binomial std is about 61.
  for (int h : hits) CHECK(std::abs(h - trials / 4) < 300);
}

TEST_CASE("encode_and_mask") {
  io::Rng rng(4);
  const auto cfg = tiny_config();
  const auto p = init_image_params(cfg, rng);
  const auto g = patchify(random_image(1, 8, 8, 5), 4, 4);
  const Index n = cfg.tokens();

  SUBCASE("nothing replaced is plain encoding plus position bias") {
    const Matrix x = encode_and_mask(g, plan_of(n, {}, {1}), p);
    const Matrix expect = ((g.patches * p.enc_kernel).rowwise() + p.enc_bias) + p.pos_bias;
    CHECK((x - expect).norm() < 1e-14);
  }
  SUBCASE("everything replaced differs only by position bias") {
    const Matrix x = encode_and_mask(g, plan_of(n, {0, 1, 2, 3}, {}), p);
    for (Index a = 0; a < n; ++a) CHECK((x.row(a) - p.pos_bias.row(a) - p.mask_token).norm() < 1e-15);
  }
  SUBCASE("identity encoder and decoder reproduce untouched patches") {
    ImageModelConfig c = cfg;
    c.token_dim = 16;
    c.heads = 2;
    c.head_dim = 4;
    c.epsilon = 1e-12;
    io::Rng r2(1);
    auto q = init_image_params(c, r2);
    q.enc_kernel = Matrix::Identity(16, 16);
    q.dec_kernel = Matrix::Identity(16, 16);
    q.pos_bias.setZero();
    io::Image img(1, 8, 8);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const auto gg = patchify(img, 4, 4);
    const Matrix x = encode_and_mask(gg, plan_of(n, {2}, {}), q);
    const Matrix back = decode(x, q);
    for (Index a : {0, 1, 3}) CHECK((back.row(a) - gg.patches.row(a)).norm() < 1e-9);
  }
  SUBCASE("shape mismatches are rejected") {
    const auto other = patchify(random_image(1, 8, 8, 5), 2, 2);
    CHECK_THROWS_AS(encode_and_mask(other, plan_of(n, {}, {}), p), ShapeError);
    CHECK_THROWS_AS(encode_and_mask(g, plan_of(n + 1, {}, {}), p), ShapeError);
  }
}

TEST_CASE("masked_mse") {
  Matrix orig = Matrix::Random(4, 3);
  CHECK(masked_mse(orig, orig, plan_of(4, {1}, {2})) == 0.0);

  Matrix recon = orig;
  recon.row(2).array() += 2.0;
  CHECK(masked_mse(recon, orig, plan_of(4, {}, {2})) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(masked_mse(recon, orig, plan_of(4, {}, {})) == 0.0);

  io::Rng rng(8);
  const Matrix r = rng.normal_matrix(5, 7, 1.0);
  const Matrix o = rng.normal_matrix(5, 7, 1.0);
  const auto plan = plan_of(5, {0, 3}, {4});
  double brute = 0;
  int count = 0;
  for (Index a : {0, 3, 4}) {
    for (Index k = 0; k < 7; ++k) {
      brute += (r(a, k) - o(a, k)) * (r(a, k) - o(a, k));
      ++count;
    }
  }
  CHECK(masked_mse(r, o, plan) == doctest::Approx(brute / count).epsilon(1e-14));
  CHECK_THROWS_AS(masked_mse(r, o.leftCols(6), plan), ShapeError);
}

TEST_CASE("masked_mse ignores patches outside the plan") {
  io::Rng rng(2);
  const Matrix o = rng.normal_matrix(4, 3, 1.0);
  Matrix r = rng.normal_matrix(4, 3, 1.0);
  const auto plan = plan_of(4, {1}, {3});
  const double base = masked_mse(r, o, plan);
  for (Index a : {0, 2}) {
    for (Index k = 0; k < 3; ++k) {
      Matrix bumped = r;
      bumped(a, k) += 1e-3;
      CHECK(masked_mse(bumped, o, plan) == base);
    }
  }
}

TEST_CASE("reconstruct") {
  const auto cfg = tiny_config();
  io::Rng rng(6);
  auto p = init_image_params(cfg, rng);
  const auto img = random_image(1, 8, 8, 1);
  io::Rng mr(2);
  const auto plan = make_mask_plan(cfg.tokens(), 2, 1, mr);

  SUBCASE("untrained parameters give finite output of the right shape") {
    const auto r = reconstruct(img, plan, p);
    CHECK(r.image.channels == 1);
    CHECK(r.image.height == 8);
    CHECK(r.image.width == 8);
    CHECK(r.energies.size() == std::size_t(cfg.steps + 1));
    CHECK(r.decoded_step == cfg.steps);
    for (double v : r.image.data) CHECK(std::isfinite(v));
  }
  SUBCASE("zero energy weights leave the state at a fixed point") {
    p.et.attn.w_key.setZero();
    p.et.attn.w_query.setZero();
    p.et.hopfield.xi.setZero();
    const auto r = reconstruct(img, plan, p);
    const Matrix expect = decode(encode_and_mask(patchify(img, 4, 4), plan, p), p);
    CHECK((r.patches - expect).norm() == 0.0);
  }
  SUBCASE("energy does not increase at small step size") {
    ImageModelConfig c = cfg;
    c.alpha = 0.01;
    c.steps = 8;
    io::Rng r2(3);
    const auto q = init_image_params(c, r2);
    const auto r = reconstruct(img, plan, q);
    for (std::size_t t = 1; t < r.energies.size(); ++t) {
      CHECK(r.energies[t].e_total <= r.energies[t - 1].e_total + 1e-12);
    }
  }
  SUBCASE("min-energy decoding picks the lowest recorded energy") {
    const auto r = reconstruct(img, plan, p, true);
    for (const auto& e : r.energies) CHECK(r.energies[std::size_t(r.decoded_step)].e_total <= e.e_total);
  }
}

TEST_CASE("taped loss equals direct loss") {
  const auto cfg = tiny_config();
  io::Rng rng(10);
  const auto p = init_image_params(cfg, rng);
  const auto g = patchify(random_image(1, 8, 8, 3), 4, 4);
  io::Rng mr(5);
  const auto plan = make_mask_plan(cfg.tokens(), 3, 2, mr);
  CHECK(image_loss_and_grad(p, g, plan).loss == doctest::Approx(image_loss(p, g, plan)).epsilon(1e-12));
  const auto empty = plan_of(cfg.tokens(), {}, {});
  const auto lg = image_loss_and_grad(p, g, empty);
  CHECK(lg.loss == 0.0);
  for (const auto& v : tensor_views(std::as_const(lg.grad))) CHECK(v.array().abs().maxCoeff() == 0.0);
}

TEST_CASE("image parameters") {
  const auto cfg = tiny_config();
  io::Rng rng(1);
  const auto p = init_image_params(cfg, rng);
  CHECK(p.enc_kernel.rows() == cfg.patch_dim());
  CHECK(p.enc_kernel.cols() == cfg.token_dim);
  CHECK(p.pos_bias.rows() == cfg.tokens());
  CHECK(p.enc_bias.isZero());
  CHECK(p.dec_bias.isZero());
  CHECK(p.dec_norm.gamma == 1.0);
  CHECK(p.et.norm.gamma == 1.0);

  ImageModelConfig big;
  io::Rng r2(0);
  const auto q = init_image_params(big, r2);
  const double sd = std::sqrt(q.et.hopfield.xi.squaredNorm() / double(q.et.hopfield.xi.size()));
  CHECK(sd == doctest::Approx(0.02).epsilon(0.05));

  ImageModelConfig bad = cfg;
  bad.width = 9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.enable_attn = false;
  bad.enable_hopfield = false;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.steps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("training with zero learning rate leaves parameters unchanged") {
  const auto cfg = tiny_config();
  io::SyntheticSpec spec;
  spec.height = 8;
  spec.width = 8;
  spec.min_rect_side = 2;
  spec.max_rect_side = 6;
  const auto images = io::gen_synthetic_images(1, 6, spec);
  ImageTrainConfig tc;
  tc.adam.lr = 0.0;
  tc.adam.weight_decay = 0.05;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.n_occluded = 2;
  tc.n_replaced = 1;
  const auto r = train_image(cfg, images, tc);
  io::Rng init = io::Rng::for_purpose(tc.seed, "init");
  CHECK(same_bits(r.params, init_image_params(cfg, init)));
  CHECK(r.epochs.size() == 2);
  CHECK(r.steps.size() == 4);
}

TEST_CASE("one training step is one Adam update") {
  const auto cfg = tiny_config();
  const std::vector<io::Image> images{random_image(1, 8, 8, 21)};
  ImageTrainConfig tc;
  tc.adam.lr = 1e-3;
  tc.adam.weight_decay = 0.0;
  tc.adam.grad_clip = 0.0;
  tc.epochs = 1;
  tc.batch_size = 1;
  tc.n_occluded = 2;
  tc.n_replaced = 1;
  tc.seed = 5;
  const auto r = train_image(cfg, images, tc);

  io::Rng init_rng = io::Rng::for_purpose(tc.seed, "init");
  const auto p0 = init_image_params(cfg, init_rng);
  io::Rng mask_rng = io::Rng::for_purpose(tc.seed, "mask");
  const auto plan = make_mask_plan(cfg.tokens(), tc.n_occluded, tc.n_replaced, mask_rng);
  const auto lg = image_loss_and_grad(p0, patchify(images[0], 4, 4), plan);
  CHECK(r.steps.at(0).loss == lg.loss);

  // First step: both moments are bias-corrected to g and g^2.
  const auto before = tensor_views(p0);
  const auto after = tensor_views(r.params);
  const auto grad = tensor_views(lg.grad);
  for (std::size_t k = 0; k < before.size(); ++k) {
    const Eigen::ArrayXd g = grad[k].array();
    const Eigen::ArrayXd expect = before[k].array() - tc.adam.lr * g / (g.abs() + tc.adam.eps);
    CHECK((after[k].array() - expect).abs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("training is deterministic and independent of batch evaluation order") {
  const auto cfg = tiny_config();
  io::SyntheticSpec spec;
  spec.height = 8;
  spec.width = 8;
  spec.min_rect_side = 2;
  spec.max_rect_side = 6;
  const auto images = io::gen_synthetic_images(2, 10, spec);
  ImageTrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.n_occluded = 2;
  tc.n_replaced = 1;
  tc.seed = 9;
  const auto a = train_image(cfg, images, tc);
  const auto b = train_image(cfg, images, tc);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].loss == b.steps[i].loss);
  CHECK(same_bits(a.params, b.params));
  CHECK(io::encode_checkpoint(to_checkpoint(a.params)) == io::encode_checkpoint(to_checkpoint(b.params)));

  tc.seed = 10;
  const auto c = train_image(cfg, images, tc);
  CHECK_FALSE(same_bits(a.params, c.params));

  tc.max_steps = 2;
  CHECK(train_image(cfg, images, tc).steps.size() == 2);
}

TEST_CASE("training reduces the loss on synthetic data") {
  const auto cfg = tiny_config();
  io::SyntheticSpec spec;
  spec.height = 8;
  spec.width = 8;
  spec.min_period = 16;
  spec.max_period = 32;
  spec.min_rect_side = 3;
  spec.max_rect_side = 6;
  const auto images = io::gen_synthetic_images(3, 32, spec);
  ImageTrainConfig tc;
  tc.adam.lr = 1e-2;
  tc.epochs = 20;
  tc.batch_size = 8;
  tc.n_occluded = 2;
  tc.n_replaced = 2;
  const double before = [&] {
    io::Rng init = io::Rng::for_purpose(tc.seed, "init");
    return evaluate_image(init_image_params(cfg, init), images, 2, 2, 77);
  }();
  const auto r = train_image(cfg, images, tc);
  CHECK(evaluate_image(r.params, images, 2, 2, 77) < before);
  CHECK(r.epochs.back().loss < r.epochs.front().loss);
}

TEST_CASE("training rejects bad configurations and inputs") {
  const auto cfg = tiny_config();
  const std::vector<io::Image> images{random_image(1, 8, 8, 1)};
  ImageTrainConfig tc;
  tc.n_occluded = 2;
  tc.n_replaced = 3;
  CHECK_THROWS_AS(train_image(cfg, images, tc), ConfigError);
  tc.n_replaced = 1;
  tc.batch_size = 0;
  CHECK_THROWS_AS(train_image(cfg, images, tc), ConfigError);
  tc.batch_size = 1;
  CHECK_THROWS_AS(train_image(cfg, {}, tc), InvalidInput);
  CHECK_THROWS_AS(train_image(cfg, {random_image(1, 4, 4, 1)}, tc), ShapeError);
}

TEST_CASE("training reports divergence") {
  const auto cfg = tiny_config();
  io::Rng rng(1);
  auto p = init_image_params(cfg, rng);
  p.enc_kernel(0, 0) = std::numeric_limits<double>::quiet_NaN();
  ImageTrainConfig tc;
  tc.n_occluded = 2;
  tc.n_replaced = 1;
  tc.batch_size = 1;
  CHECK_THROWS_AS(train_image_from(p, {random_image(1, 8, 8, 1)}, tc), DivergenceError);
}

TEST_CASE("weight export") {
  const auto cfg = tiny_config();
  io::Rng rng(7);
  auto p = init_image_params(cfg, rng);

  SUBCASE("one patch per memory or per head coordinate") {
    const auto mem = export_weights_as_patches(p, WeightKind::HopfieldMemories);
    CHECK(mem.count() == cfg.memories);
    CHECK(mem.patch_dim() == cfg.patch_dim());
    const auto keys = export_weights_as_patches(p, WeightKind::AttentionKeys);
    CHECK(keys.count() == cfg.heads * cfg.head_dim);
    CHECK(export_weights_as_patches(p, WeightKind::AttentionQueries).count() == cfg.heads * cfg.head_dim);
  }
  SUBCASE("identity decoder returns the raw rows") {
    ImageModelConfig c = cfg;
    c.token_dim = 16;
    c.epsilon = 1e-14;
    io::Rng r2(2);
    auto q = init_image_params(c, r2);
    q.dec_kernel = Matrix::Identity(16, 16);
    // Rows with zero mean and unit variance are fixed by the decoder norm.
    for (Index m = 0; m < q.et.hopfield.xi.rows(); ++m) {
      for (Index j = 0; j < 16; ++j) q.et.hopfield.xi(m, j) = ((j + m) % 2 == 0) ? 1.0 : -1.0;
    }
    const auto g = export_weights_as_patches(q, WeightKind::HopfieldMemories);
    CHECK((g.patches - q.et.hopfield.xi).norm() < 1e-9);
  }
  SUBCASE("written patches load back within quantization") {
    const auto g = export_weights_as_patches(p, WeightKind::HopfieldMemories);
    const fs::path dir = fs::temp_directory_path() / "et_test_export";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto paths = write_patch_images(g, dir, weight_prefix(WeightKind::HopfieldMemories));
    REQUIRE(paths.size() == std::size_t(cfg.memories));
    CHECK(paths[0].filename() == "mem_0000.pgm");
    for (Index r = 0; r < g.count(); ++r) {
      const auto back = io::load_image(paths[std::size_t(r)]);
      const auto orig = patch_image(g, r);
      const double scale = io::fit_scale(orig).scale;
      for (std::size_t i = 0; i < orig.data.size(); ++i) {
        CHECK(std::abs(back.data[i] - orig.data[i]) <= scale / 510.0 + 1e-12);
      }
    }
  }
  SUBCASE("kind names") {
    CHECK(parse_weight_kind("memories") == WeightKind::HopfieldMemories);
    CHECK(parse_weight_kind("keys") == WeightKind::AttentionKeys);
    CHECK(parse_weight_kind("query") == WeightKind::AttentionQueries);
    CHECK_THROWS_AS(parse_weight_kind("values"), ConfigError);
  }
}
