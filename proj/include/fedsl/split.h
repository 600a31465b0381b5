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

#ifndef FEDSL_SPLIT_H_
#define FEDSL_SPLIT_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fedsl/nn.h"
#include "fedsl/tensor.h"

// Partitioning a model into tier segments at layer boundaries.
namespace fedsl::split {

// Cut c puts layers [0, c) below and [c, ...) above. Zero cuts is the
// unsplit model; one cut is device/server; two cuts is device/edge/cloud.
struct SplitPlan {
  std::vector<std::size_t> cuts;

  std::size_t tier_count() const { return cuts.size() + 1; }
  std::vector<std::string> tier_names() const;
  // Throws ValidationError unless 0 < c < layer_count and cuts increase.
  void validate(const nn::ModelSpec& spec) const;

  bool operator==(const SplitPlan&) const = default;
};

struct Segment {
  std::size_t tier = 0;
  std::size_t first_layer = 0;
  std::vector<nn::LayerSpec> layers;
  nn::ParamSet params;

  std::size_t input_width() const { return layers.front().in_dim; }
  std::size_t output_width() const { return layers.back().out_dim; }
};

// Number of Dense layers in [0, layer_index).
std::size_t dense_before(const nn::ModelSpec& spec, std::size_t layer_index);

std::vector<Segment> partition(const nn::ModelSpec& spec,
                               const nn::ModelParams& params, const SplitPlan& plan);

// Layers of `plan`'s tier `tier` only, without parameters.
std::vector<nn::LayerSpec> tier_layers(const nn::ModelSpec& spec,
                                       const SplitPlan& plan, std::size_t tier);

// Concatenation of segment parameter sets in order. Inverse of partition.
nn::ParamSet join_params(const std::vector<const nn::ParamSet*>& parts);
nn::ModelParams reassemble(const std::vector<Segment>& segments);

nn::ForwardResult segment_forward(const Segment& seg, const Tensor& input);
nn::BackwardResult segment_backward(const Segment& seg, const nn::ForwardCache& cache,
                                    const Tensor& grad_out);

// Activation tensor crossing a cut, tagged with its origin.
struct SmashedData {
  Tensor activation;
  int producing_client = 0;
  std::int64_t round_tag = 0;

  std::uint64_t payload_bits(unsigned precision) const {
    return activation.size() * precision;
  }
};

// batch * width(cut) * precision; the same in both directions.
std::uint64_t cut_payload_bits(const nn::ModelSpec& spec, std::size_t cut,
                               std::size_t batch, unsigned precision);
// One entry per cut of the plan.
std::vector<std::uint64_t> smashed_payload_bits(const SplitPlan& plan,
                                                const nn::ModelSpec& spec,
                                                std::size_t batch,
                                                unsigned precision);

}  // namespace fedsl::split

#endif  // FEDSL_SPLIT_H_
