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

#ifndef FEDSL_NN_H_
#define FEDSL_NN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsl/tensor.h"

// Minimal float64 MLP engine: Dense and ReLU layers, softmax cross-entropy,
// exact reverse-mode gradients, plain SGD. Everything is value semantics.
namespace fedsl::nn {

enum class LayerKind { kDense, kReLU };

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  static LayerSpec dense(std::size_t in, std::size_t out) {
    return {LayerKind::kDense, in, out};
  }
  static LayerSpec relu(std::size_t width) {
    return {LayerKind::kReLU, width, width};
  }

  std::uint64_t param_count() const;
  // Per-sample floating point operation counts.
  std::uint64_t flops_fwd() const;
  std::uint64_t flops_bwd() const;
  // Bits for one sample's output activation at `precision` bits per value.
  std::uint64_t act_bits(unsigned precision) const { return out_dim * precision; }

  bool operator==(const LayerSpec&) const = default;
};

struct ModelSpec {
  std::vector<LayerSpec> layers;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;

  std::size_t layer_count() const { return layers.size(); }
  std::uint64_t param_count() const;
  // Throws ValidationError if layers do not chain.
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

// Dense(in->h0), ReLU, Dense(h0->h1), ReLU, ..., Dense(h_last->classes).
ModelSpec make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   std::size_t num_classes);

// Weights ([out, in]) and biases ([out]) of every Dense layer, in layer order.
// Gradients use the same layout.
struct ParamSet {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  std::size_t dense_count() const { return weights.size(); }
  std::size_t scalar_count() const;
  bool congruent(const ParamSet& other) const;
  bool all_finite() const;

  bool operator==(const ParamSet&) const = default;
};

using ModelParams = ParamSet;
using Gradients = ParamSet;

// Zero-valued parameter set shaped for `layers`.
ParamSet zero_params(std::span<const LayerSpec> layers);

// Glorot-uniform weights, zero biases. Deterministic in (spec, seed).
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

// Labelled samples. features [n, d], labels in [0, num_classes).
struct Dataset {
  Tensor features;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return features.cols(); }
  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;
};

// Per-layer inputs recorded during forward, consumed by backward.
struct ForwardCache {
  std::vector<Tensor> inputs;
};

struct ForwardResult {
  Tensor output;
  ForwardCache cache;
};

struct BackwardResult {
  Gradients grads;
  Tensor input_grad;
};

struct LossResult {
  double loss = 0.0;
  Tensor logit_grad;
};

// Forward/backward over an arbitrary contiguous run of layers with the
// matching parameter slice. These are what split segments run.
ForwardResult forward_layers(std::span<const LayerSpec> layers,
                             const ParamSet& params, const Tensor& x);
BackwardResult backward_layers(std::span<const LayerSpec> layers,
                               const ParamSet& params, const ForwardCache& cache,
                               const Tensor& output_grad);

ForwardResult forward(const ModelSpec& spec, const ModelParams& params,
                      const Tensor& x);
BackwardResult backward(const ModelSpec& spec, const ModelParams& params,
                        const ForwardCache& cache, const Tensor& logit_grad);

// Mean softmax cross-entropy over the batch, log-sum-exp stabilized.
// logit_grad = (softmax - onehot) / batch.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// Forward pass followed by the loss; the cache is kept for a backward call.
struct LossAndGrad {
  double loss = 0.0;
  Tensor logit_grad;
  ForwardCache cache;
};
LossAndGrad loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                          const Tensor& x, std::span<const int> labels);

// p - lr * g. Throws NumericError on non-finite gradients.
ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr);

// Row-wise softmax of logits / temperature.
Tensor softmax(const Tensor& logits, double temperature = 1.0);

// Index of the largest entry of each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

double evaluate(const ModelSpec& spec, const ModelParams& params,
                const Dataset& dataset);

}  // namespace fedsl::nn

#endif  // FEDSL_NN_H_
