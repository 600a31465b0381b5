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

#include "fedsl/nn.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fedsl/error.h"
#include "fedsl/kernels.h"
#include "fedsl/rng.h"

namespace fedsl::nn {

std::uint64_t LayerSpec::param_count() const {
  return kind == LayerKind::kDense ? in_dim * out_dim + out_dim : 0;
}

std::uint64_t LayerSpec::flops_fwd() const {
  return kind == LayerKind::kDense ? 2 * in_dim * out_dim : out_dim;
}

std::uint64_t LayerSpec::flops_bwd() const {
  return kind == LayerKind::kDense ? 4 * in_dim * out_dim : out_dim;
}

std::uint64_t ModelSpec::param_count() const {
  std::uint64_t total = 0;
  for (const auto& l : layers) total += l.param_count();
  return total;
}

void ModelSpec::validate() const {
  if (layers.empty()) throw ValidationError("model has no layers");
  if (input_dim == 0 || num_classes == 0) {
    throw ValidationError("model input_dim and num_classes must be positive");
  }
  if (layers.front().in_dim != input_dim) {
    throw ValidationError("layer 0 in_dim does not match input_dim");
  }
  if (layers.back().out_dim != num_classes) {
    throw ValidationError("last layer out_dim does not match num_classes");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in_dim == 0 || l.out_dim == 0) {
      throw ValidationError("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (l.kind == LayerKind::kReLU && l.in_dim != l.out_dim) {
      throw ValidationError("ReLU layer " + std::to_string(i) +
                            " requires in_dim == out_dim");
    }
    if (i + 1 < layers.size() && l.out_dim != layers[i + 1].in_dim) {
      throw ValidationError("layer " + std::to_string(i) + " out_dim " +
                            std::to_string(l.out_dim) + " does not chain into layer " +
                            std::to_string(i + 1));
    }
  }
}

ModelSpec make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t num_classes) {
  ModelSpec spec;
  spec.input_dim = input_dim;
  spec.num_classes = num_classes;
  std::size_t width = input_dim;
  for (std::size_t h : hidden) {
    spec.layers.push_back(LayerSpec::dense(width, h));
    spec.layers.push_back(LayerSpec::relu(h));
    width = h;
  }
  spec.layers.push_back(LayerSpec::dense(width, num_classes));
  spec.validate();
  return spec;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    n += weights[k].size() + biases[k].size();
  }
  return n;
}

bool ParamSet::congruent(const ParamSet& other) const {
  if (weights.size() != other.weights.size() ||
      biases.size() != other.biases.size()) {
    return false;
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!weights[k].same_shape(other.weights[k]) ||
        !biases[k].same_shape(other.biases[k])) {
      return false;
    }
  }
  return true;
}

bool ParamSet::all_finite() const {
  return std::all_of(weights.begin(), weights.end(),
                     [](const Tensor& t) { return t.all_finite(); }) &&
         std::all_of(biases.begin(), biases.end(),
                     [](const Tensor& t) { return t.all_finite(); });
}

ParamSet zero_params(std::span<const LayerSpec> layers) {
  ParamSet p;
  for (const auto& l : layers) {
    if (l.kind != LayerKind::kDense) continue;
    p.weights.emplace_back(std::vector<std::size_t>{l.out_dim, l.in_dim});
    p.biases.emplace_back(std::vector<std::size_t>{l.out_dim});
  }
  return p;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  sim::RngStream rng(seed, "init");
  ModelParams p = zero_params(spec.layers);
  std::size_t k = 0;
  for (const auto& l : spec.layers) {
    if (l.kind != LayerKind::kDense) continue;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(l.in_dim + l.out_dim));
    for (double& w : p.weights[k].data()) w = rng.uniform(-limit, limit);
    ++k;
  }
  return p;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.features = features.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  return out;
}

namespace {

std::size_t count_dense(std::span<const LayerSpec> layers) {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) {
        return l.kind == LayerKind::kDense;
      }));
}

void check_param_layout(std::span<const LayerSpec> layers, const ParamSet& params) {
  if (params.weights.size() != count_dense(layers) ||
      params.biases.size() != params.weights.size()) {
    throw ValidationError("parameter set does not match layer list");
  }
}

}  // namespace

ForwardResult forward_layers(std::span<const LayerSpec> layers,
                             const ParamSet& params, const Tensor& x) {
  check_param_layout(layers, params);
  if (x.rank() != 2) throw DimensionError("forward: input must be [batch, width]");
  if (!x.all_finite()) throw NumericError("forward: non-finite input");
  ForwardResult r;
  r.cache.inputs.reserve(layers.size());
  Tensor h = x;
  std::size_t k = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (h.cols() != l.in_dim) {
      throw DimensionError("layer " + std::to_string(i) + ": input width " +
                           std::to_string(h.cols()) + " != in_dim " +
                           std::to_string(l.in_dim));
    }
    Tensor next = l.kind == LayerKind::kDense
                      ? kernels::dense_forward(h, params.weights[k], params.biases[k])
                      : kernels::relu_forward(h);
    if (l.kind == LayerKind::kDense) ++k;
    r.cache.inputs.push_back(std::move(h));
    h = std::move(next);
  }
  r.output = std::move(h);
  return r;
}

BackwardResult backward_layers(std::span<const LayerSpec> layers,
                               const ParamSet& params, const ForwardCache& cache,
                               const Tensor& output_grad) {
  check_param_layout(layers, params);
  if (cache.inputs.size() != layers.size()) {
    throw InternalError("backward: cache has " +
                        std::to_string(cache.inputs.size()) +
                        " entries for " + std::to_string(layers.size()) + " layers");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (cache.inputs[i].rank() != 2 || cache.inputs[i].cols() != layers[i].in_dim) {
      throw InternalError("backward: cache entry " + std::to_string(i) +
                          " does not match layer");
    }
  }
  const auto& last_in = cache.inputs.back();
  if (output_grad.rank() != 2 || output_grad.rows() != last_in.rows() ||
      output_grad.cols() != layers.back().out_dim) {
    throw InternalError("backward: output gradient shape mismatch");
  }
  BackwardResult r;
  r.grads = zero_params(layers);
  Tensor g = output_grad;
  std::size_t k = params.weights.size();
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& in = cache.inputs[i];
    if (layers[i].kind == LayerKind::kDense) {
      --k;
      auto dg = kernels::dense_backward(in, params.weights[k], g);
      r.grads.weights[k] = std::move(dg.weight);
      r.grads.biases[k] = std::move(dg.bias);
      g = std::move(dg.input);
    } else {
      g = kernels::relu_backward(in, g);
    }
  }
  r.input_grad = std::move(g);
  return r;
}

ForwardResult forward(const ModelSpec& spec, const ModelParams& params,
                      const Tensor& x) {
  return forward_layers(spec.layers, params, x);
}

BackwardResult backward(const ModelSpec& spec, const ModelParams& params,
                        const ForwardCache& cache, const Tensor& logit_grad) {
  return backward_layers(spec.layers, params, cache, logit_grad);
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.rows() != labels.size()) {
    throw DimensionError("cross-entropy: logits/labels batch mismatch");
  }
  const std::size_t batch = logits.rows();
  const std::size_t classes = logits.cols();
  LossResult r{0.0, Tensor({batch, classes})};
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ValidationError("label " + std::to_string(label) +
                            " out of range [0, " + std::to_string(classes) + ")");
    }
    std::size_t top = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (logits.at(n, c) > logits.at(n, top)) top = c;
    }
    const double m = logits.at(n, top);
    double rest = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (c != top) rest += std::exp(logits.at(n, c) - m);
    }
    total += (m - logits.at(n, static_cast<std::size_t>(label))) + std::log1p(rest);
    const double denom = 1.0 + rest;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(logits.at(n, c) - m) / denom;
      const double y = static_cast<std::size_t>(label) == c ? 1.0 : 0.0;
      r.logit_grad.at(n, c) = (p - y) * inv_batch;
    }
  }
  r.loss = total * inv_batch;
  return r;
}

LossAndGrad loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                          const Tensor& x, std::span<const int> labels) {
  auto fwd = forward(spec, params, x);
  auto ce = softmax_cross_entropy(fwd.output, labels);
  return {ce.loss, std::move(ce.logit_grad), std::move(fwd.cache)};
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ValidationError("learning rate must be finite and non-negative");
  }
  if (!params.congruent(grads)) {
    throw DimensionError("sgd_step: gradients not congruent with parameters");
  }
  if (!grads.all_finite()) throw NumericError("sgd_step: non-finite gradient");
  ModelParams out = params;
  auto step = [lr](Tensor& p, const Tensor& g) {
    auto pd = p.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) pd[i] -= lr * gd[i];
  };
  for (std::size_t k = 0; k < out.weights.size(); ++k) {
    step(out.weights[k], grads.weights[k]);
    step(out.biases[k], grads.biases[k]);
  }
  return out;
}

Tensor softmax(const Tensor& logits, double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  Tensor out({logits.rows(), logits.cols()});
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    double m = logits.at(n, 0) / temperature;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      m = std::max(m, logits.at(n, c) / temperature);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      out.at(n, c) = std::exp(logits.at(n, c) / temperature - m);
      s += out.at(n, c);
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) out.at(n, c) /= s;
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits.at(n, c) > logits.at(n, best)) best = c;
    }
    out[n] = static_cast<int>(best);
  }
  return out;
}

double evaluate(const ModelSpec& spec, const ModelParams& params,
                const Dataset& dataset) {
  if (dataset.size() == 0) throw ValidationError("evaluate: empty dataset");
  const auto logits = forward(spec, params, dataset.features).output;
  const auto pred = argmax_rows(logits);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    if (pred[n] == dataset.labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace fedsl::nn
