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

#include "fedsl/split.h"

#include <string>

#include "fedsl/error.h"

namespace fedsl::split {

std::vector<std::string> SplitPlan::tier_names() const {
  switch (cuts.size()) {
    case 0:
      return {"server"};
    case 1:
      return {"device", "server"};
    case 2:
      return {"device", "edge", "cloud"};
    default:
      throw ValidationError("split plans support at most two cuts");
  }
}

void SplitPlan::validate(const nn::ModelSpec& spec) const {
  if (cuts.size() > 2) throw ValidationError("split plans support at most two cuts");
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    if (c == 0 || c >= spec.layer_count()) {
      throw ValidationError("cut index " + std::to_string(c) +
                            " outside (0, " + std::to_string(spec.layer_count()) + ")");
    }
    if (c <= prev) throw ValidationError("cut indices must be strictly increasing");
    prev = c;
  }
}

std::size_t dense_before(const nn::ModelSpec& spec, std::size_t layer_index) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < layer_index && i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == nn::LayerKind::kDense) ++n;
  }
  return n;
}

namespace {

std::vector<std::size_t> bounds(const nn::ModelSpec& spec, const SplitPlan& plan) {
  std::vector<std::size_t> b{0};
  b.insert(b.end(), plan.cuts.begin(), plan.cuts.end());
  b.push_back(spec.layer_count());
  return b;
}

}  // namespace

std::vector<Segment> partition(const nn::ModelSpec& spec,
                               const nn::ModelParams& params, const SplitPlan& plan) {
  spec.validate();
  plan.validate(spec);
  if (params.dense_count() != dense_before(spec, spec.layer_count())) {
    throw ValidationError("partition: parameters do not match model");
  }
  const auto b = bounds(spec, plan);
  std::vector<Segment> segs;
  for (std::size_t t = 0; t + 1 < b.size(); ++t) {
    Segment s;
    s.tier = t;
    s.first_layer = b[t];
    s.layers.assign(spec.layers.begin() + static_cast<std::ptrdiff_t>(b[t]),
                    spec.layers.begin() + static_cast<std::ptrdiff_t>(b[t + 1]));
    const std::size_t k0 = dense_before(spec, b[t]);
    const std::size_t k1 = dense_before(spec, b[t + 1]);
    for (std::size_t k = k0; k < k1; ++k) {
      s.params.weights.push_back(params.weights[k]);
      s.params.biases.push_back(params.biases[k]);
    }
    segs.push_back(std::move(s));
  }
  return segs;
}

std::vector<nn::LayerSpec> tier_layers(const nn::ModelSpec& spec,
                                       const SplitPlan& plan, std::size_t tier) {
  plan.validate(spec);
  const auto b = bounds(spec, plan);
  if (tier + 1 >= b.size()) throw ValidationError("tier index out of range");
  return {spec.layers.begin() + static_cast<std::ptrdiff_t>(b[tier]),
          spec.layers.begin() + static_cast<std::ptrdiff_t>(b[tier + 1])};
}

nn::ParamSet join_params(const std::vector<const nn::ParamSet*>& parts) {
  nn::ParamSet out;
  for (const auto* p : parts) {
    out.weights.insert(out.weights.end(), p->weights.begin(), p->weights.end());
    out.biases.insert(out.biases.end(), p->biases.begin(), p->biases.end());
  }
  return out;
}

nn::ModelParams reassemble(const std::vector<Segment>& segments) {
  std::vector<const nn::ParamSet*> parts;
  for (const auto& s : segments) parts.push_back(&s.params);
  return join_params(parts);
}

nn::ForwardResult segment_forward(const Segment& seg, const Tensor& input) {
  if (input.rank() != 2 || input.cols() != seg.input_width()) {
    throw DimensionError("segment (tier " + std::to_string(seg.tier) +
                         "): input width " + std::to_string(input.cols()) +
                         " != " + std::to_string(seg.input_width()));
  }
  return nn::forward_layers(seg.layers, seg.params, input);
}

nn::BackwardResult segment_backward(const Segment& seg, const nn::ForwardCache& cache,
                                    const Tensor& grad_out) {
  return nn::backward_layers(seg.layers, seg.params, cache, grad_out);
}

std::uint64_t cut_payload_bits(const nn::ModelSpec& spec, std::size_t cut,
                               std::size_t batch, unsigned precision) {
  if (cut == 0 || cut >= spec.layer_count()) {
    throw ValidationError("invalid cut " + std::to_string(cut));
  }
  if (precision == 0 || precision > 64) {
    throw ValidationError("precision must be in [1, 64] bits");
  }
  return static_cast<std::uint64_t>(batch) *
         spec.layers[cut - 1].act_bits(precision);
}

std::vector<std::uint64_t> smashed_payload_bits(const SplitPlan& plan,
                                                const nn::ModelSpec& spec,
                                                std::size_t batch,
                                                unsigned precision) {
  plan.validate(spec);
  std::vector<std::uint64_t> out;
  for (std::size_t c : plan.cuts) {
    out.push_back(cut_payload_bits(spec, c, batch, precision));
  }
  return out;
}

}  // namespace fedsl::split
