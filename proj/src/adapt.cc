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

#include "fedsl/adapt.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "fedsl/error.h"

namespace fedsl::adapt {

void QuantizerConfig::validate() const {
  if (bits < 1 || bits > 16) throw ValidationError("quantizer bits must be in [1, 16]");
  if (!(clip_range > 0.0) || !std::isfinite(clip_range)) {
    throw ValidationError("quantizer clip range must be positive");
  }
}

double calibrate_clip_range(const Tensor& t, double quantile) {
  if (t.empty()) return 1.0;
  std::vector<double> mags(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) mags[i] = std::fabs(t[i]);
  const auto n = static_cast<double>(mags.size());
  std::size_t idx = static_cast<std::size_t>(std::ceil(quantile * n));
  idx = std::clamp<std::size_t>(idx, 1, mags.size()) - 1;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(idx),
                   mags.end());
  const double r = mags[idx];
  if (r > 0.0 && std::isfinite(r)) return r;
  // All (or nearly all) zeros: fall back to the largest magnitude, then 1.
  const double top = *std::max_element(mags.begin(), mags.end());
  return top > 0.0 ? top : 1.0;
}

double dequantize_level(std::uint32_t level, const QuantizerConfig& q) {
  const std::uint32_t top = (1u << q.bits) - 1;
  if (level >= top) return q.clip_range;
  return -q.clip_range + (2.0 * q.clip_range * level) / static_cast<double>(top);
}

Quantized quantize_uniform(const Tensor& t, const QuantizerConfig& q) {
  q.validate();
  const std::uint32_t top = (1u << q.bits) - 1;
  const double levels = static_cast<double>(top);
  const double r = q.clip_range;
  Quantized out;
  out.codes.resize(t.size());
  out.dequantized = t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = std::clamp(t[i], -r, r);
    // nearbyint honours the default round-to-nearest-even mode.
    const double level = std::nearbyint((x + r) * levels / (2.0 * r));
    const auto code =
        static_cast<std::uint32_t>(std::clamp(level, 0.0, levels));
    out.codes[i] = code;
    out.dequantized[i] = dequantize_level(code, q);
  }
  out.payload_bits = static_cast<std::uint64_t>(t.size()) * q.bits;
  return out;
}

CostProfile build_cost_profile(const nn::ModelSpec& spec, std::size_t batch,
                               unsigned precision) {
  spec.validate();
  if (spec.layer_count() < 2) throw ValidationError("split search needs >= 2 layers");
  const double b = static_cast<double>(batch);
  double total = 0.0;
  for (const auto& l : spec.layers) {
    total += static_cast<double>(l.flops_fwd() + l.flops_bwd());
  }
  CostProfile p;
  double below = 0.0;
  for (std::size_t c = 1; c < spec.layer_count(); ++c) {
    const auto& l = spec.layers[c - 1];
    below += static_cast<double>(l.flops_fwd() + l.flops_bwd());
    const double bits = b * static_cast<double>(l.act_bits(precision));
    p.cuts.push_back({c, below * b, (total - below) * b, bits, bits});
  }
  return p;
}

namespace {

double objective_value(const SplitCostRow& r, Objective o, double w) {
  switch (o) {
    case Objective::kLatency:
      return r.total_s;
    case Objective::kEnergy:
      return r.total_j;
    case Objective::kWeighted:
      return w * r.total_s + (1.0 - w) * r.total_j;
  }
  return r.total_s;
}

}  // namespace

SplitChoice select_split_layer(const CostProfile& profile,
                               const netphys::DeviceProfile& device,
                               const netphys::DeviceProfile& server,
                               const netphys::ChannelParams& channel, double distance_m,
                               Objective objective, double latency_weight) {
  if (profile.cuts.empty()) throw ValidationError("cost profile has no cuts");
  SplitChoice choice;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : profile.cuts) {
    SplitCostRow row;
    row.cut = c.cut;
    row.device_s = netphys::compute_time(device, c.device_flops);
    const auto up = netphys::tx_time_energy(channel, distance_m, c.up_bits);
    const auto down = netphys::tx_time_energy(channel, distance_m, c.down_bits);
    row.uplink_s = up.seconds;
    row.downlink_s = down.seconds;
    row.server_s = netphys::compute_time(server, c.server_flops);
    row.total_s = row.device_s + row.uplink_s + row.downlink_s + row.server_s;
    row.total_j = netphys::compute_energy(device, c.device_flops) + up.joules;
    row.score = objective_value(row, objective, latency_weight);
    if (row.score < best) {
      best = row.score;
      choice.cut = c.cut;
    }
    choice.table.push_back(row);
  }
  return choice;
}

SplitChoice select_split_layer(const nn::ModelSpec& spec,
                               const netphys::DeviceProfile& device,
                               const netphys::DeviceProfile& server,
                               const netphys::ChannelParams& channel, double distance_m,
                               std::size_t batch, Objective objective,
                               double latency_weight) {
  return select_split_layer(build_cost_profile(spec, batch), device, server, channel,
                            distance_m, objective, latency_weight);
}

std::string format_cost_table(const SplitChoice& choice) {
  std::string out = "cut,device_s,uplink_s,downlink_s,server_s,total_s,total_j\n";
  char buf[64];
  auto put = [&](double v) {
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out += ',';
    out.append(buf, r.ptr);
  };
  for (const auto& r : choice.table) {
    out += std::to_string(r.cut);
    put(r.device_s);
    put(r.uplink_s);
    put(r.downlink_s);
    put(r.server_s);
    put(r.total_s);
    put(r.total_j);
    out += '\n';
  }
  return out;
}

double allocate_frequency(double cycles, double deadline_s,
                          const netphys::DeviceProfile& device) {
  if (!(cycles > 0.0)) throw ValidationError("cycles must be positive");
  if (!(deadline_s > 0.0)) throw ValidationError("deadline must be positive");
  if (cycles / device.f_max_hz > deadline_s) {
    throw InfeasibleError("deadline infeasible even at f_max");
  }
  return std::clamp(cycles / deadline_s, device.f_min_hz, device.f_max_hz);
}

std::vector<double> allocate_bandwidth(std::span<const BandwidthDemand> clients,
                                       double total_hz) {
  if (clients.empty()) throw ValidationError("bandwidth allocation needs clients");
  if (!(total_hz > 0.0)) throw ValidationError("total bandwidth must be positive");
  double denom = 0.0;
  for (const auto& c : clients) {
    if (!(c.payload_bits > 0.0) || !(c.spectral_efficiency > 0.0)) {
      throw ValidationError("payloads and spectral efficiencies must be positive");
    }
    denom += c.payload_bits / c.spectral_efficiency;
  }
  std::vector<double> shares(clients.size());
  double assigned = 0.0;
  for (std::size_t i = 0; i + 1 < clients.size(); ++i) {
    shares[i] =
        total_hz * (clients[i].payload_bits / clients[i].spectral_efficiency) / denom;
    assigned += shares[i];
  }
  shares.back() = total_hz - assigned;
  return shares;
}

}  // namespace fedsl::adapt
