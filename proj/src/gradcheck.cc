// Copyright 2026 The FedSL-Sim Authors
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

#include "fedsl/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fedsl/frameworks.h"
#include "fedsl/nn.h"
#include "fedsl/rng.h"

namespace fedsl::check {

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& c : cases) w = std::max(w, c.max_rel_error);
  return w;
}

namespace {

using Real = long double;
using Vec = std::vector<Real>;

double rel_error(double fd, double an, double floor) {
  return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
}

Vec widen(const Tensor& t) { return Vec(t.data().begin(), t.data().end()); }

// Mean softmax cross-entropy over a row-major [batch, classes] buffer.
Real cross_entropy(const Vec& z, std::size_t batch, std::size_t classes,
                   const std::vector<int>& labels) {
  Real total = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    const Real* row = z.data() + n * classes;
    const Real m = *std::max_element(row, row + classes);
    Real s = 0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(row[c] - m);
    total += m + std::log(s) - row[labels[n]];
  }
  return total / static_cast<Real>(batch);
}

Vec log_softmax(const Vec& z, std::size_t batch, std::size_t classes, Real t) {
  Vec out(z.size());
  for (std::size_t n = 0; n < batch; ++n) {
    const Real* row = z.data() + n * classes;
    Real m = row[0] / t;
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, row[c] / t);
    Real s = 0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(row[c] / t - m);
    for (std::size_t c = 0; c < classes; ++c) out[n * classes + c] = row[c] / t - m - std::log(s);
  }
  return out;
}

// Extended-precision MLP. Flattened parameters and input; `signs` receives
// the ReLU activation pattern.
struct RefMlp {
  const nn::ModelSpec* spec;
  std::size_t batch;
  std::vector<int> labels;

  Real loss(const std::vector<Vec>& w, const std::vector<Vec>& b, const Vec& x,
            std::vector<bool>* signs) const {
    Vec a = x;
    std::size_t width = spec->input_dim;
    std::size_t dense = 0;
    if (signs) signs->clear();
    for (const auto& layer : spec->layers) {
      if (layer.kind == nn::LayerKind::kDense) {
        Vec y(batch * layer.out_dim);
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t o = 0; o < layer.out_dim; ++o) {
            Real s = b[dense][o];
            for (std::size_t i = 0; i < width; ++i) {
              s += w[dense][o * width + i] * a[n * width + i];
            }
            y[n * layer.out_dim + o] = s;
          }
        }
        a = std::move(y);
        width = layer.out_dim;
        ++dense;
      } else {
        for (Real& v : a) {
          if (signs) signs->push_back(v > 0);
          v = v > 0 ? v : 0;
        }
      }
    }
    return cross_entropy(a, batch, width, labels);
  }
};

struct Probe {
  GradCheckCase* out;
  double h;
  double floor;
};

// Perturbs each entry of `values` by +-h and compares the central difference
// of `loss` with `grad`. `loss` reports whether the point is smooth.
void compare(Vec& values, const Tensor& grad, const std::function<Real(bool*)>& loss,
             const Probe& probe) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Real saved = values[i];
    bool smooth = true;
    values[i] = saved + probe.h;
    const Real up = loss(&smooth);
    values[i] = saved - probe.h;
    const Real down = loss(&smooth);
    values[i] = saved;
    if (!smooth) {
      ++probe.out->skipped;
      continue;
    }
    const double fd = static_cast<double>((up - down) / (2 * static_cast<Real>(probe.h)));
    probe.out->max_rel_error =
        std::max(probe.out->max_rel_error, rel_error(fd, grad[i], probe.floor));
    ++probe.out->checked;
  }
}

void record_loss_agreement(double ours, Real reference, GradCheckCase& c) {
  const double ref = static_cast<double>(reference);
  c.max_rel_error = std::max(c.max_rel_error, std::abs(ours - ref) / std::max(std::abs(ref), 1.0));
}

Tensor random_tensor(std::vector<std::size_t> shape, sim::RngStream& rng, double scale) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

GradCheckCase check_mlp(std::size_t trial, sim::RngStream& rng, double h, double floor) {
  const std::size_t in = 2 + rng.uniform_int(4);
  const std::size_t depth = 1 + rng.uniform_int(3);
  std::vector<std::size_t> hidden;
  for (std::size_t i = 0; i < depth; ++i) hidden.push_back(2 + rng.uniform_int(5));
  const std::size_t classes = 2 + rng.uniform_int(3);
  const std::size_t batch = 1 + rng.uniform_int(4);
  const auto spec = nn::make_mlp(in, hidden, classes);
  auto params = nn::init_params(spec, rng.next_u64());
  for (auto& b : params.biases) {
    for (double& v : b.data()) v = 0.1 * rng.normal();
  }
  const Tensor x = random_tensor({batch, in}, rng, 1.0);
  std::vector<int> labels(batch);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(classes));

  const auto lg = nn::loss_and_grad(spec, params, x, labels);
  const auto bwd = nn::backward(spec, params, lg.cache, lg.logit_grad);

  RefMlp ref{&spec, batch, labels};
  std::vector<Vec> w, b;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    w.push_back(widen(params.weights[l]));
    b.push_back(widen(params.biases[l]));
  }
  Vec xr = widen(x);
  std::vector<bool> base_signs;
  const Real base = ref.loss(w, b, xr, &base_signs);

  GradCheckCase c;
  c.name = "mlp#" + std::to_string(trial);
  record_loss_agreement(lg.loss, base, c);
  auto loss = [&](bool* smooth) {
    std::vector<bool> signs;
    const Real v = ref.loss(w, b, xr, &signs);
    if (signs != base_signs) *smooth = false;
    return v;
  };
  const Probe probe{&c, h, floor};
  for (std::size_t l = 0; l < w.size(); ++l) {
    compare(w[l], bwd.grads.weights[l], loss, probe);
    compare(b[l], bwd.grads.biases[l], loss, probe);
  }
  compare(xr, bwd.input_grad, loss, probe);
  return c;
}

GradCheckCase check_distill(std::size_t trial, sim::RngStream& rng, double h, double floor) {
  const std::size_t batch = 1 + rng.uniform_int(4);
  const std::size_t classes = 2 + rng.uniform_int(4);
  const double temperature = 0.5 + 3.5 * rng.uniform();
  const double lambda = rng.uniform();
  const bool with_labels = rng.bernoulli(0.5);
  const Tensor student = random_tensor({batch, classes}, rng, 2.0);
  const Tensor teacher = random_tensor({batch, classes}, rng, 2.0);
  std::vector<int> labels;
  if (with_labels) {
    for (std::size_t n = 0; n < batch; ++n) {
      labels.push_back(static_cast<int>(rng.uniform_int(classes)));
    }
  }
  const auto r = fl::distill_loss(student, teacher, labels, temperature, lambda);

  const Real t = temperature;
  const Vec log_q = log_softmax(widen(teacher), batch, classes, t);
  Vec s = widen(student);
  // lambda T^2 KL(q || p_T) + (1 - lambda) CE, averaged over the batch.
  auto reference = [&](bool*) {
    const Vec log_p = log_softmax(s, batch, classes, t);
    Real kl = 0;
    for (std::size_t i = 0; i < s.size(); ++i) kl += std::exp(log_q[i]) * (log_q[i] - log_p[i]);
    Real v = static_cast<Real>(lambda) * t * t * kl / static_cast<Real>(batch);
    if (!labels.empty()) v += (1 - static_cast<Real>(lambda)) * cross_entropy(s, batch, classes, labels);
    return v;
  };
  GradCheckCase c;
  c.name = "distill#" + std::to_string(trial);
  record_loss_agreement(r.loss, reference(nullptr), c);
  compare(s, r.logit_grad, reference, Probe{&c, h, floor});
  return c;
}

}  // namespace

GradCheckReport grad_check(std::size_t trials, std::uint64_t seed, double h, double floor) {
  sim::RngStream rng(seed, "gradcheck");
  GradCheckReport report;
  for (std::size_t t = 0; t < trials; ++t) report.cases.push_back(check_mlp(t, rng, h, floor));
  for (std::size_t t = 0; t < trials; ++t) {
    report.cases.push_back(check_distill(t, rng, h, floor));
  }
  return report;
}

}  // namespace fedsl::check
