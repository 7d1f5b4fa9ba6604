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

#include <cmath>
#include <functional>

#include "et/ad/adam.hpp"
#include "et/ad/et_ops.hpp"
#include "et/ad/finite_diff.hpp"
#include "et/ad/tape.hpp"
#include "support/instances.hpp"

using namespace et;
using ad::Tape;
using ad::Var;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Max relative error between tape gradients and central differences over all inputs.
double check_builder(const Builder& build, const std::vector<Matrix>& inputs) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
  const Var out = build(tape, leaves);
  const ad::Gradients grads = tape.backward(out);
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix fd = ad::finite_diff(
        [&](const Matrix& v) {
          Tape t;
          std::vector<Var> ls;
          for (std::size_t j = 0; j < inputs.size(); ++j) ls.push_back(t.leaf(j == k ? v : inputs[j]));
          return build(t, ls).value()(0, 0);
        },
        inputs[k]);
    worst = std::max(worst, ad::relative_error(grads.wrt(leaves[k]), fd));
  }
  return worst;
}

}  // namespace

TEST_SUITE("finite_diff") {
  TEST_CASE("exact on quadratics") {
    const Matrix a{{2.0, 0.5}, {0.5, 3.0}};
    const Matrix x{{0.3}, {-1.2}};
    const Matrix fd = ad::finite_diff([&](const Matrix& v) { return 0.5 * (v.transpose() * a * v)(0, 0); }, x);
    CHECK(ad::relative_error(fd, a * x) <= 1e-10);
  }

  TEST_CASE("linear functions do not depend on the step") {
    const Matrix w{{1.5, -2.0, 0.25}};
    const Matrix x{{0.1, 0.2, 0.3}};
    auto f = [&](const Matrix& v) { return (w.array() * v.array()).sum(); };
    CHECK(ad::relative_error(ad::finite_diff(f, x, 1e-3), ad::finite_diff(f, x, 1e-6)) <= 1e-9);
    CHECK(ad::relative_error(ad::finite_diff(f, x, 1e-3), w) <= 1e-12);
  }
}

TEST_SUITE("tape") {
  TEST_CASE("every primitive matches finite differences") {
    io::Rng rng(101);
    const Matrix a = rng.normal_matrix(3, 4, 1.0);
    const Matrix b = rng.normal_matrix(4, 2, 1.0);
    const Matrix c = rng.normal_matrix(3, 4, 1.0);
    const Matrix row = rng.normal_matrix(1, 4, 1.0);
    const Matrix s = Matrix::Constant(1, 1, 0.7);
    const Matrix pos = (rng.normal_matrix(3, 4, 1.0).array().abs() + 0.5).matrix();

    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::matmul(v[0], v[1])); }, {a, b}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::matmul_nt(v[0], v[1]))); }, {a, c}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::matmul_tn(v[0], v[1]))); }, {a, c}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::hadamard(v[0] - v[1], v[0] + v[1])); }, {a, c}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::scale_by(ad::add_row(v[0], v[1]), v[2]))); },
                        {a, row, s}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::hadamard(ad::rms_normalize_rows(ad::mean_subtract_rows(v[0]), 1e-3), v[1])); },
                        {a, c}) <= 1e-7);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::power(v[0], 2.5)); }, {pos}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::reciprocal(v[0])); }, {pos}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::hadamard(ad::softplus(v[0]), ad::sigmoid(v[1]))); }, {a, c}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::hadamard(ad::softmax_rows(v[0]), v[1])); }, {a, c}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::logsumexp_rows(v[0]))); }, {a}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::gather_rows(v[0], {2, 0, 2}))); }, {a}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::select_rows(v[0], v[1], {1, 0, 1}))); },
                        {a, row}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::slice_rows(v[0], 1, 2))); }, {a}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::concat_cols(v[0], v[1]))); }, {a, c}) <= 1e-8);
    CHECK(check_builder([](Tape&, const auto& v) { return ad::scale(ad::sum(ad::square(v[0])), -0.3); }, {a}) <= 1e-8);
  }

  TEST_CASE("relu away from the kink") {
    const Matrix a{{0.5, -0.4}, {1.5, -2.0}};
    CHECK(check_builder([](Tape&, const auto& v) { return ad::sum(ad::square(ad::relu(v[0]))); }, {a}) <= 1e-9);
  }

  TEST_CASE("pattern primitives for every mask mode") {
    io::Rng rng(102);
    for (int mode = 0; mode < 4; ++mode) {
      const Index n = 5;
      auto pattern = std::make_shared<const AttentionPattern>(AttentionPattern::build(n, testing::mask_mode(mode, n, rng)));
      const Matrix k = rng.normal_matrix(n, 3, 1.0);
      const Matrix q = rng.normal_matrix(n, 3, 1.0);
      const Matrix w = rng.normal_matrix(pattern->nnz(), 1, 1.0);
      CHECK(check_builder([&](Tape&, const auto& v) { return ad::sum(ad::pattern_logsumexp(ad::pattern_scores(v[0], v[1], pattern), pattern)); },
                          {k, q}) <= 1e-8);
      CHECK(check_builder([&](Tape&, const auto& v) {
              const Var p = ad::pattern_softmax(ad::pattern_scores(v[0], v[1], pattern), pattern);
              return ad::sum(ad::hadamard(ad::pattern_aggregate(p, v[0], pattern), ad::pattern_aggregate_transposed(p, v[1], pattern)));
            },
                          {k, q}) <= 1e-8);
      CHECK(check_builder([&](Tape&, const auto& v) { return ad::sum(ad::square(ad::pattern_aggregate(v[0], v[1], pattern))); },
                          {w, k}) <= 1e-8);
    }
  }

  TEST_CASE("recorded energy equals the direct energy") {
    io::Rng rng(103);
    for (int trial = 0; trial < 12; ++trial) {
      const auto s = testing::random_dims(rng);
      const auto p = testing::random_params(s, rng, testing::mask_mode(trial, s.n, rng), testing::activation(trial));
      const Matrix x = rng.normal_matrix(s.n, s.d, 1.0);
      Tape tape;
      const ad::EtVars v = ad::bind_et(tape, p, s.n);
      const Var g = ad::layer_norm_rows(tape.constant(x), v.gamma, v.delta, v.epsilon);
      const Var e = ad::et_energy(g, v);
      CHECK(e.value()(0, 0) == doctest::Approx(total_energy(x, p).e_total).epsilon(1e-12));
      // The tape step and the direct step agree.
      const Var step = ad::et_step(tape.constant(x), v, 0.1);
      CHECK(ad::relative_error(step.value(), et_step(x, p, 0.1)) <= 1e-12);
      CHECK(tape.replay_matches());
    }
  }

  TEST_CASE("backward through unrolled steps matches finite differences") {
    io::Rng rng(104);
    int checked = 0;
    for (int trial = 0; trial < 24; ++trial) {
      const auto s = testing::random_dims(rng);
      const auto p = testing::random_params(s, rng, testing::mask_mode(trial, s.n, rng), testing::activation(trial), 0.4);
      const Matrix x = rng.normal_matrix(s.n, s.d, 1.0);
      const int steps = 1 + trial % 3;
      const Matrix target = rng.normal_matrix(s.n, s.d, 1.0);
      // Loss on the state after the steps; the parameters enter through every step.
      auto loss_of = [&](const EtParams<double>& q, const Matrix& x0) {
        Matrix y = x0;
        for (int t = 0; t < steps; ++t) y = et_step(y, q, 0.1);
        return (y - target).squaredNorm();
      };
      Tape tape;
      const ad::EtVars v = ad::bind_et(tape, p, s.n, true);
      const Var x0 = tape.leaf(x);
      Var y = x0;
      for (int t = 0; t < steps; ++t) y = ad::et_step(y, v, 0.1);
      const Var diff = y - tape.constant(target);
      const Var loss = ad::sum(ad::square(diff));
      CHECK(loss.value()(0, 0) == doctest::Approx(loss_of(p, x)).epsilon(1e-12));
      const auto grads = tape.backward(loss);
      EtParams<double> g = p;
      ad::collect_et_grads(grads, v, g);

      // Skip instances where a hidden unit sits on a relu kink within FD resolution.
      bool smooth = true;
      Matrix probe = x;
      for (int t = 0; t <= steps && smooth; ++t) {
        smooth = testing::far_from_kinks(layer_norm_rows(probe, p.norm), p.hopfield.xi, 1e-3);
        probe = et_step(probe, p, 0.1);
      }
      if (!smooth) continue;
      ++checked;

      auto fd_param = [&](auto get) {
        EtParams<double> q = p;
        Matrix& slot = get(q);
        const Matrix at = slot;
        return ad::finite_diff([&](const Matrix& val) { slot = val; return loss_of(q, x); }, at);
      };
      CHECK(ad::relative_error(grads.wrt(x0), ad::finite_diff([&](const Matrix& v0) { return loss_of(p, v0); }, x)) <= 1e-6);
      CHECK(ad::relative_error(g.attn.w_key, fd_param([](EtParams<double>& q) -> Matrix& { return q.attn.w_key; })) <= 1e-6);
      CHECK(ad::relative_error(g.attn.w_query, fd_param([](EtParams<double>& q) -> Matrix& { return q.attn.w_query; })) <= 1e-6);
      CHECK(ad::relative_error(g.hopfield.xi, fd_param([](EtParams<double>& q) -> Matrix& { return q.hopfield.xi; })) <= 1e-6);
      EtParams<double> q = p;
      const Matrix delta_fd = ad::finite_diff([&](const Matrix& d) { q.norm.delta = d; return loss_of(q, x); }, Matrix(p.norm.delta));
      CHECK(ad::relative_error(Matrix(g.norm.delta), delta_fd) <= 1e-6);
      q = p;
      const Matrix gamma_fd = ad::finite_diff([&](const Matrix& d) { q.norm.gamma = d(0, 0); return loss_of(q, x); }, Matrix::Constant(1, 1, p.norm.gamma));
      CHECK(ad::relative_error(Matrix::Constant(1, 1, g.norm.gamma), gamma_fd) <= 1e-6);
      q = p;
      const Matrix beta_fd = ad::finite_diff([&](const Matrix& d) { q.attn.beta = d(0, 0); return loss_of(q, x); }, Matrix::Constant(1, 1, p.attn.beta));
      CHECK(ad::relative_error(Matrix::Constant(1, 1, g.attn.beta), beta_fd) <= 1e-6);
    }
    CHECK(checked >= 12);
  }

  TEST_CASE("constant loss gives zero gradients") {
    Tape tape;
    const Var a = tape.leaf(Matrix::Ones(2, 2));
    const Var c = tape.constant(Matrix::Constant(1, 1, 3.0));
    const auto grads = tape.backward(c);
    CHECK(grads.wrt(a) == Matrix::Zero(2, 2));
  }

  TEST_CASE("scaling the loss scales the gradient") {
    io::Rng rng(105);
    const Matrix a = rng.normal_matrix(3, 3, 1.0);
    Tape tape;
    const Var x = tape.leaf(a);
    const Var l = ad::sum(ad::softplus(ad::matmul(x, x)));
    const Var l3 = ad::scale(l, 3.0);
    const Matrix g1 = tape.backward(l).wrt(x);
    const Matrix g3 = tape.backward(l3).wrt(x);
    CHECK(ad::relative_error(g3, 3.0 * g1) <= 1e-15);
  }

  TEST_CASE("inputs that do not reach the loss get exactly zero") {
    Tape tape;
    const Var a = tape.leaf(Matrix::Ones(2, 2));
    const Var unused = tape.leaf(Matrix::Ones(1, 2));
    const Var other = ad::add_row(a, unused);
    (void)other;
    const auto grads = tape.backward(ad::sum(ad::square(a)));
    CHECK(grads.wrt(unused) == Matrix::Zero(1, 2));
  }

  TEST_CASE("misuse is reported") {
    Tape t1, t2;
    const Var a = t1.leaf(Matrix::Ones(2, 3));
    const Var b = t2.leaf(Matrix::Ones(3, 2));
    CHECK_THROWS(ad::matmul(a, b));
    CHECK_THROWS_AS(ad::matmul(a, t1.leaf(Matrix::Ones(2, 2))), ShapeError);
    CHECK_THROWS(t1.backward(a));
    CHECK_THROWS(ad::gather_rows(a, {5}));
  }
}

TEST_SUITE("adam") {
  TEST_CASE("single scalar step by hand") {
    double w = 0.5;
    double g = 1.0;
    ad::AdamState state;
    state.config = {.lr = 1e-3, .b1 = 0.9, .b2 = 0.99, .eps = 1e-8, .weight_decay = 0.0, .grad_clip = 0.0};
    ad::adam_step({ad::view_of("w", w, false)}, {ad::ConstTensorView{"w", &g, {}, false}}, state);
    // m = 0.1, v = 0.01; both bias corrections give exactly 1.
    CHECK(w == doctest::Approx(0.5 - 1e-3 / (1.0 + 1e-8)).epsilon(1e-14));
    ad::adam_step({ad::view_of("w", w, false)}, {ad::ConstTensorView{"w", &g, {}, false}}, state);
    CHECK(w == doctest::Approx(0.5 - 2e-3 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(state.step == 2);
  }

  TEST_CASE("zero gradient and no decay leaves parameters unchanged") {
    Matrix w = Matrix::Random(3, 2);
    const Matrix before = w;
    const Matrix g = Matrix::Zero(3, 2);
    ad::AdamState state;
    state.config.weight_decay = 0.0;
    ad::adam_step({ad::view_of("w", w, true)}, {ad::ConstTensorView{"w", g.data(), {3, 2}, true}}, state);
    CHECK(w == before);
  }

  TEST_CASE("decoupled decay only touches flagged tensors") {
    Matrix w = Matrix::Ones(2, 2);
    Matrix b = Matrix::Ones(2, 2);
    const Matrix g = Matrix::Zero(2, 2);
    ad::AdamState state;
    state.config.lr = 0.01;
    state.config.weight_decay = 0.1;
    ad::adam_step({ad::view_of("w", w, true), ad::view_of("b", b, false)},
                  {ad::ConstTensorView{"w", g.data(), {2, 2}, true}, ad::ConstTensorView{"b", g.data(), {2, 2}, false}}, state);
    CHECK(w(0, 0) == doctest::Approx(1.0 - 0.001).epsilon(1e-15));
    CHECK(b == Matrix::Ones(2, 2));
  }

  TEST_CASE("global norm clipping") {
    Matrix w = Matrix::Zero(1, 2);
    const Matrix g{{6.0, 8.0}};
    ad::AdamState state;
    state.config.grad_clip = 1.0;
    const auto report = ad::adam_step({ad::view_of("w", w, false)}, {ad::ConstTensorView{"w", g.data(), {1, 2}, false}}, state);
    CHECK(report.grad_norm == doctest::Approx(10.0));
    CHECK(report.applied_norm == doctest::Approx(1.0));
    // The first moment holds (1 - b1) times the clipped gradient.
    CHECK(state.first_moment[0](0) == doctest::Approx(0.1 * 0.6));
    CHECK(state.first_moment[0](1) == doctest::Approx(0.1 * 0.8));
  }

  TEST_CASE("non-finite gradient aborts before any change") {
    Matrix w = Matrix::Ones(1, 2);
    const Matrix g{{1.0, NAN}};
    ad::AdamState state;
    CHECK_THROWS_AS(ad::adam_step({ad::view_of("w", w, false)}, {ad::ConstTensorView{"w", g.data(), {1, 2}, false}}, state),
                    DivergenceError);
    CHECK(w == Matrix::Ones(1, 2));
    CHECK(state.step == 0);
  }
}
