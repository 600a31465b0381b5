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

#ifndef FEDSL_ADAPT_H_
#define FEDSL_ADAPT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsl/netphys.h"
#include "fedsl/nn.h"
#include "fedsl/tensor.h"

// Resource-adaptive knobs for split training: smashed-data quantization,
// split-point search, DVFS frequency choice and uplink bandwidth sharing.
namespace fedsl::adapt {

struct QuantizerConfig {
  unsigned bits = 8;
  double clip_range = 1.0;  // R; values are clipped to [-R, R]

  void validate() const;
};

// Symmetric clip range: the `quantile` of |x| over the tensor.
double calibrate_clip_range(const Tensor& t, double quantile = 0.999);

struct Quantized {
  std::vector<std::uint32_t> codes;
  Tensor dequantized;
  std::uint64_t payload_bits = 0;
};

// 2^b - 1 equal steps over [-R, R]; nearest level, ties to even.
Quantized quantize_uniform(const Tensor& t, const QuantizerConfig& q);
double dequantize_level(std::uint32_t level, const QuantizerConfig& q);

// Per-cut costs for one training iteration of `batch` samples.
struct CutCost {
  std::size_t cut = 0;
  double device_flops = 0.0;  // forward + backward of layers [0, cut)
  double server_flops = 0.0;  // forward + backward of layers [cut, end)
  double up_bits = 0.0;
  double down_bits = 0.0;
};

struct CostProfile {
  std::vector<CutCost> cuts;
};

CostProfile build_cost_profile(const nn::ModelSpec& spec, std::size_t batch,
                               unsigned precision = 64);

enum class Objective { kLatency, kEnergy, kWeighted };

struct SplitCostRow {
  std::size_t cut = 0;
  double device_s = 0.0;
  double uplink_s = 0.0;
  double downlink_s = 0.0;
  double server_s = 0.0;
  double total_s = 0.0;
  double total_j = 0.0;
  double score = 0.0;  // value of the selected objective
};

struct SplitChoice {
  std::size_t cut = 0;
  std::vector<SplitCostRow> table;
};

// Exhaustive search; the lowest cut wins ties. Energy counts device compute
// and device uplink transmission. The weighted objective is
// latency_weight * total_s + (1 - latency_weight) * total_j.
SplitChoice select_split_layer(const CostProfile& profile,
                               const netphys::DeviceProfile& device,
                               const netphys::DeviceProfile& server,
                               const netphys::ChannelParams& channel, double distance_m,
                               Objective objective, double latency_weight = 0.5);

SplitChoice select_split_layer(const nn::ModelSpec& spec,
                               const netphys::DeviceProfile& device,
                               const netphys::DeviceProfile& server,
                               const netphys::ChannelParams& channel, double distance_m,
                               std::size_t batch, Objective objective,
                               double latency_weight = 0.5);

// `cut,device_s,uplink_s,downlink_s,server_s,total_s,total_j` plus rows.
std::string format_cost_table(const SplitChoice& choice);

// Lowest-energy frequency meeting the deadline: clamp(C / T, f_min, f_max).
// Throws InfeasibleError if even f_max misses the deadline.
double allocate_frequency(double cycles, double deadline_s,
                          const netphys::DeviceProfile& device);

struct BandwidthDemand {
  double payload_bits = 0.0;
  double spectral_efficiency = 0.0;  // log2(1 + SNR)
};

// Shares that make every client finish its upload at the same instant.
// The last share is the remainder so the shares sum to `total_hz`.
std::vector<double> allocate_bandwidth(std::span<const BandwidthDemand> clients,
                                       double total_hz);

}  // namespace fedsl::adapt

#endif  // FEDSL_ADAPT_H_
