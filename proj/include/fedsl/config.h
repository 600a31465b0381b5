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

#ifndef FEDSL_CONFIG_H_
#define FEDSL_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsl/frameworks.h"
#include "fedsl/netphys.h"

namespace fedsl::workbench {

struct ModelConfig {
  std::vector<std::size_t> hidden{32, 64, 64, 32};
  std::vector<std::size_t> cuts;  // empty: framework default

  bool operator==(const ModelConfig&) const = default;
};

struct ClusterConfig {
  std::size_t size = 5;
  ModelConfig model;

  bool operator==(const ClusterConfig&) const = default;
};

struct DeviceOverride {
  std::size_t client = 0;
  std::optional<double> cpu_freq_hz;
  std::optional<double> packet_loss_rate;
  std::optional<double> x_m;
  std::optional<double> y_m;

  bool operator==(const DeviceOverride&) const = default;
};

struct DeviceConfig {
  double cpu_freq_hz = 1e9;
  double heterogeneity = 10.0;  // frequencies are cpu_freq_hz / U, log U ~ U(0, log h)
  double cycles_per_flop = 1.0;
  double kappa = 1e-28;
  double f_min_hz = 1e6;
  double f_max_hz = 1e9;
  double min_distance_m = 1.0;
  std::vector<DeviceOverride> overrides;

  bool operator==(const DeviceConfig&) const = default;
};

struct ServerConfig {
  double cpu_freq_hz = 1e10;
  double cycles_per_flop = 1.0;
  double kappa = 1e-28;

  netphys::DeviceProfile profile() const;
  bool operator==(const ServerConfig&) const = default;
};

enum class Partition { kUniform, kDirichlet };

struct DataConfig {
  std::size_t n_train = 4000;
  std::size_t n_test = 1000;
  std::size_t dims = 32;
  std::size_t classes = 4;
  double spread = 0.1;
  Partition partition = Partition::kUniform;
  double dirichlet_alpha = 0.5;

  bool operator==(const DataConfig&) const = default;
};

struct ExperimentConfig {
  fl::FrameworkConfig framework;
  ModelConfig model;
  std::vector<ClusterConfig> clusters;  // heterogeneous only
  netphys::ChannelParams channel;
  DeviceConfig devices;
  ServerConfig edge;
  ServerConfig cloud{1e11, 1.0, 1e-28};
  netphys::WiredLink wired;
  netphys::Arena arena;
  DataConfig data;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> rounds = 200;  // unset: time budget only
  std::optional<double> time_budget_s;  // unset: no time limit
  // When set, the time budget is the zero-loss duration of this many rounds of
  // the synchronous baseline on the same data, devices and channel.
  std::optional<std::uint64_t> budget_sync_rounds;
  std::size_t eval_every = 5;

  bool operator==(const ExperimentConfig&) const = default;
};

// Fills framework-dependent defaults (cuts, clusters) and checks every field.
// Violations raise ConfigError naming the JSON pointer of the field.
void finalize(ExperimentConfig& cfg);

ExperimentConfig config_from_json_text(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Returns a copy with the numeric leaf at `pointer` replaced by `value`.
// Unknown or non-numeric leaves raise ValidationError.
ExperimentConfig with_value(const ExperimentConfig& cfg, const std::string& pointer,
                            double value);

}  // namespace fedsl::workbench

#endif  // FEDSL_CONFIG_H_
