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

#include "fedsl/netphys.h"

#include <cmath>
#include <string>

#include "fedsl/error.h"

namespace fedsl::netphys {

void ChannelParams::validate() const {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
    throw ValidationError("channel bandwidth must be positive and finite");
  }
  if (!(packet_loss_rate >= 0.0 && packet_loss_rate <= 1.0)) {
    throw ValidationError("packet loss rate must lie in [0, 1]");
  }
  if (!(ref_dist_m > 0.0)) throw ValidationError("reference distance must be positive");
  if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_dbm) ||
      !std::isfinite(pl0_db) || !std::isfinite(pl_exponent) || pl_exponent < 0.0) {
    throw ValidationError("channel parameters must be finite");
  }
}

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

void DeviceProfile::validate() const {
  if (!(f_min_hz > 0.0 && f_min_hz <= cpu_freq_hz && cpu_freq_hz <= f_max_hz)) {
    throw ValidationError("device frequency must satisfy 0 < f_min <= f <= f_max");
  }
  if (!(kappa > 0.0)) throw ValidationError("device kappa must be positive");
  if (!(cycles_per_flop > 0.0)) {
    throw ValidationError("device cycles_per_flop must be positive");
  }
}

void Arena::validate() const {
  if (!(width_m > 0.0 && height_m > 0.0)) {
    throw ValidationError("arena dimensions must be positive");
  }
  if (!contains(server)) throw ValidationError("server lies outside the arena");
}

bool Arena::contains(Position p) const {
  return p.x >= 0.0 && p.x <= width_m && p.y >= 0.0 && p.y <= height_m;
}

double path_loss_db(const ChannelParams& ch, double d_m) {
  if (!(d_m > 0.0)) throw ValidationError("path loss: distance must be positive");
  if (d_m < ch.ref_dist_m) return ch.pl0_db;
  return ch.pl0_db + 10.0 * ch.pl_exponent * std::log10(d_m / ch.ref_dist_m);
}

double noise_power_dbm(const ChannelParams& ch) {
  return ch.noise_model == NoiseModel::kTotalPower
             ? ch.noise_dbm
             : ch.noise_dbm + 10.0 * std::log10(ch.bandwidth_hz);
}

double snr_db(const ChannelParams& ch, double d_m) {
  return ch.tx_power_dbm - path_loss_db(ch, d_m) - noise_power_dbm(ch);
}

double link_rate_bps(const ChannelParams& ch, double d_m) {
  const double snr = std::pow(10.0, snr_db(ch, d_m) / 10.0);
  return ch.bandwidth_hz * std::log2(1.0 + snr);
}

double tx_power_watts(const ChannelParams& ch) {
  return std::pow(10.0, (ch.tx_power_dbm - 30.0) / 10.0);
}

TxCost tx_time_energy(const ChannelParams& ch, double d_m, double bits) {
  if (!(bits >= 0.0)) throw ValidationError("bits must be non-negative");
  if (bits == 0.0) return {};
  const double rate = link_rate_bps(ch, d_m);
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw InfeasibleError("link rate is zero at distance " + std::to_string(d_m));
  }
  const double t = bits / rate;
  return {t, tx_power_watts(ch) * t};
}

bool packet_delivered(sim::RngStream& stream, double p) {
  return !stream.bernoulli(p);
}

double compute_time(const DeviceProfile& dev, double flops) {
  if (!(flops >= 0.0)) throw ValidationError("flops must be non-negative");
  return flops * dev.cycles_per_flop / dev.cpu_freq_hz;
}

double compute_energy(const DeviceProfile& dev, double flops) {
  if (!(flops >= 0.0)) throw ValidationError("flops must be non-negative");
  const double cycles = flops * dev.cycles_per_flop;
  return dev.kappa * cycles * dev.cpu_freq_hz * dev.cpu_freq_hz;
}

}  // namespace fedsl::netphys
