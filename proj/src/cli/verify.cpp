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

#include "et/cli/verify.hpp"

#include <algorithm>
#include <map>

#include "et/ad/finite_diff.hpp"
#include "et/core/dynamics.hpp"
#include "et/image/model.hpp"
#include "et/io/format.hpp"
#include "et/io/rng.hpp"

namespace et::cli {

namespace {

constexpr double kFaultScale = 1.001;

class Recorder {
 public:
  explicit Recorder(const GradCheckOptions& o) : options_(o) {}

  void record(const std::string& name, const Matrix& analytic, const Matrix& fd, std::uint64_t seed) {
    auto [it, fresh] = index_.try_emplace(name, report_.tensors.size());
    if (fresh) report_.tensors.push_back({name});
    TensorCheck& t = report_.tensors[it->second];
    const Matrix a = name == options_.inject_fault ? Matrix(analytic * kFaultScale) : analytic;
    const double err = ad::relative_error(a, fd);
    if (t.checked == 0 || err > t.worst) {
      t.worst = err;
      t.worst_seed = seed;
    }
    ++t.checked;
    t.passed = t.passed && err <= options_.tolerance;
  }

  GradCheckReport take() { return std::move(report_); }

 private:
  const GradCheckOptions& options_;
  GradCheckReport report_;
  std::map<std::string, std::size_t> index_;
};

std::shared_ptr<const Adjacency> random_adjacency(Index n, io::Rng& rng) {
  auto adj = std::make_shared<Adjacency>();
  adj->neighbors.resize(std::size_t(n));
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      if (rng.uniform() < 0.5) {
        adj->neighbors[std::size_t(a)].push_back(b);
        adj->neighbors[std::size_t(b)].push_back(a);
      }
    }
  }
  for (Index a = 0; a < n; ++a) {
    auto& row = adj->neighbors[std::size_t(a)];
    if (row.empty()) {
      const Index b = (a + 1) % n;
      row.push_back(b);
      adj->neighbors[std::size_t(b)].push_back(a);
    }
  }
  for (auto& row : adj->neighbors) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

EtParams<double> random_block(io::Rng& rng) {
  const Index d = 2 + rng.index(5);
  const Index heads = 1 + rng.index(2);
  const Index y = 1 + rng.index(3);
  EtParams<double> p;
  p.norm = LayerNormParams<double>::identity(d);
  p.norm.gamma = rng.uniform(0.5, 1.5);
  p.norm.delta = rng.normal_matrix(d, 1, 0.3);
  p.attn.heads = heads;
  p.attn.w_key = rng.normal_matrix(heads * y, d, 0.7);
  p.attn.w_query = rng.normal_matrix(heads * y, d, 0.7);
  p.attn.beta = rng.uniform(0.3, 1.5);
  p.hopfield.xi = rng.normal_matrix(1 + rng.index(5), d, 0.7);
  return p;
}

// FD of E(g) against the analytic dE/dg.
void check_energy(Recorder& rec, const std::string& name, const EtParams<double>& p, Index n, std::uint64_t seed,
                  io::Rng& rng, double h) {
  const EtBlock<double> block(p, n);
  const Matrix g = rng.normal_matrix(n, p.dim(), 1.0);
  const Matrix fd = ad::finite_diff([&](const Matrix& v) { return block.energy_of_normalized(v).e_total; }, g, h);
  rec.record(name, block.energy_grad(g), fd, seed);
}

void check_image_loss(Recorder& rec, const GradCheckOptions& o, std::uint64_t seed) {
  io::Rng rng(seed);
  image::ImageModelConfig c;
  c.height = c.width = 8;
  c.patch_h = c.patch_w = 4;
  c.token_dim = 5;
  c.heads = 2;
  c.head_dim = 3;
  c.memories = 4;
  c.beta = 0.7;
  c.steps = o.image_steps;
  c.init_std = 0.4;
  c.activation = o.image_activation;
  image::ImageTaskParams p = image::init_image_params(c, rng);
  p.enc_bias = rng.normal_matrix(1, c.token_dim, 0.2);
  p.dec_bias = rng.normal_matrix(1, c.patch_dim(), 0.2);
  p.dec_norm.gamma = rng.uniform(0.5, 1.5);
  p.dec_norm.delta = rng.normal_matrix(c.token_dim, 1, 0.2);
  p.et.norm.gamma = rng.uniform(0.5, 1.5);
  p.et.norm.delta = rng.normal_matrix(c.token_dim, 1, 0.2);

  io::Image img(1, 8, 8);
  for (double& v : img.data) v = rng.normal();
  const image::PatchGrid grid = image::patchify(img, 4, 4);
  const image::MaskPlan plan = image::make_mask_plan(c.tokens(), 2, 1, rng);

  const image::LossAndGrad lg = image::image_loss_and_grad(p, grid, plan);
  auto views = image::tensor_views(p);
  const auto grads = image::tensor_views(lg.grad);
  for (std::size_t k = 0; k < views.size(); ++k) {
    Eigen::Map<Matrix> slot(views[k].data, views[k].size(), 1);
    const Matrix at = slot;
    const Matrix fd = ad::finite_diff(
        [&](const Matrix& v) {
          slot = v;
          const double l = image::image_loss(p, grid, plan);
          slot = at;
          return l;
        },
        at, o.fd_step);
    rec.record(views[k].name, Eigen::Map<const Matrix>(grads[k].data, grads[k].size(), 1), fd, seed);
  }
}

}  // namespace

bool GradCheckReport::passed() const {
  return !tensors.empty() && std::all_of(tensors.begin(), tensors.end(), [](const TensorCheck& t) { return t.passed; });
}

GradCheckReport run_grad_checks(const GradCheckOptions& o) {
  if (o.instances < 1) throw ConfigError("verify-grad: instances must be >= 1");
  if (!(o.tolerance >= 0)) throw ConfigError("verify-grad: tolerance must be >= 0");
  if (!(o.fd_step > 0)) throw ConfigError("verify-grad: fd_step must be > 0");
  if (o.image_steps < 1) throw ConfigError("verify-grad: image_steps must be >= 1");
  Recorder rec(o);
  for (int i = 0; i < o.instances; ++i) {
    const std::uint64_t seed = o.seed + std::uint64_t(i);
    io::Rng rng(seed);
    const Index n = 2 + rng.index(5);

    const std::pair<const char*, MaskMode> modes[] = {
        {"dE_att/dg[exclude_self]", ExcludeSelf{}},
        {"dE_att/dg[include_self]", IncludeSelf{}},
        {"dE_att/dg[graph]", GraphNeighborhood{random_adjacency(n, rng), false}},
        {"dE_att/dg[graph+self]", GraphNeighborhood{random_adjacency(n, rng), true}},
    };
    for (const auto& [name, mode] : modes) {
      EtParams<double> p = random_block(rng);
      p.attn.mask = mode;
      p.enable_hopfield = false;
      check_energy(rec, name, p, n, seed, rng, o.fd_step);
    }
    const std::pair<const char*, Activation> acts[] = {
        {"dE_hn/dg[relu]", Relu{}},
        {"dE_hn/dg[power:3]", Power{3}},
        {"dE_hn/dg[softmax]", Softmax{rng.uniform(0.5, 2.0)}},
    };
    for (const auto& [name, act] : acts) {
      EtParams<double> p = random_block(rng);
      p.hopfield.activation = act;
      p.enable_attn = false;
      check_energy(rec, name, p, n, seed, rng, o.fd_step);
    }
    check_image_loss(rec, o, seed);
  }
  auto report = rec.take();
  if (!o.inject_fault.empty() &&
      std::none_of(report.tensors.begin(), report.tensors.end(),
                   [&](const TensorCheck& t) { return t.name == o.inject_fault; })) {
    throw ConfigError("verify-grad: inject_fault names no checked tensor: '" + o.inject_fault + "'");
  }
  return report;
}

std::string display_name(const std::string& tensor) {
  static const std::map<std::string, std::string> kSymbols{
      {"et.w_query", "W^Q"}, {"et.w_key", "W^K"}, {"et.xi", "xi"}, {"et.beta", "beta"}};
  const auto it = kSymbols.find(tensor);
  return it == kSymbols.end() ? tensor : tensor + " (" + it->second + ")";
}

std::string grad_report_csv(const GradCheckReport& report) {
  std::string out = "tensor,worst_rel_err,instance_seed,checked,status\n";
  for (const auto& t : report.tensors) {
    out += t.name + "," + io::format_double(t.worst) + "," + std::to_string(t.worst_seed) + "," +
           std::to_string(t.checked) + "," + (t.passed ? "pass" : "FAIL") + "\n";
  }
  return out;
}

}  // namespace et::cli
