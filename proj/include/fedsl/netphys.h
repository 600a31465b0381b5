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

#ifndef FEDSL_NETPHYS_H_
#define FEDSL_NETPHYS_H_

#include <cstdint>

#include "fedsl/rng.h"

// Wireless link and on-device compute physics.
namespace fedsl::netphys {

// kTotalPower: `noise_dbm` is in-band noise power.
// kPerHz: `noise_dbm` is a density, scaled by 10 log10(bandwidth).
enum class NoiseModel { kTotalPower, kPerHz };

struct ChannelParams {
  double bandwidth_hz = 1e7;
  double tx_power_dbm = 23.0;
  double noise_dbm = -85.0;
  NoiseModel noise_model = NoiseModel::kTotalPower;
  double pl0_db = 40.0;      // path loss at ref_dist_m
  double ref_dist_m = 1.0;
  double pl_exponent = 3.0;
  double packet_loss_rate = 0.0;

  void validate() const;
  bool operator==(const ChannelParams&) const = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

double distance(Position a, Position b);

struct DeviceProfile {
  Position position;
  double cpu_freq_hz = 1e9;
  double cycles_per_flop = 1.0;
  double kappa = 1e-28;  // effective switched capacitance, J*s^2/cycle^3
  double f_min_hz = 1e6;
  double f_max_hz = 1e9;

  void validate() const;
  bool operator==(const DeviceProfile&) const = default;
};

struct Arena {
  double width_m = 50.0;
  double height_m = 50.0;
  Position server{25.0, 25.0};

  void validate() const;
  bool contains(Position p) const;
  bool operator==(const Arena&) const = default;
};

// Log-distance model; distances below the reference clamp to pl0_db.
double path_loss_db(const ChannelParams& ch, double d_m);
double noise_power_dbm(const ChannelParams& ch);
double snr_db(const ChannelParams& ch, double d_m);
// Shannon rate B * log2(1 + SNR).
double link_rate_bps(const ChannelParams& ch, double d_m);
double tx_power_watts(const ChannelParams& ch);

struct TxCost {
  double seconds = 0.0;
  double joules = 0.0;
};

TxCost tx_time_energy(const ChannelParams& ch, double d_m, double bits);

// One transmission attempt; true with probability 1 - p.
bool packet_delivered(sim::RngStream& stream, double p);

double compute_time(const DeviceProfile& dev, double flops);
// Dynamic DVFS energy kappa * cycles * f^2.
double compute_energy(const DeviceProfile& dev, double flops);

// Fixed-rate lossless link, used between edge and cloud.
struct WiredLink {
  double rate_bps = 1e9;
  double latency_s = 5e-3;

  double transfer_time(double bits) const { return latency_s + bits / rate_bps; }
  bool operator==(const WiredLink&) const = default;
};

}  // namespace fedsl::netphys

#endif  // FEDSL_NETPHYS_H_
