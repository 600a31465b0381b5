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

#ifndef FEDSL_METRICS_H_
#define FEDSL_METRICS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedsl {

// One evaluation point of one run.
struct MetricsRow {
  std::string framework;
  std::uint64_t seed = 0;
  std::optional<double> axis_value;  // set by sweeps only
  std::uint64_t round = 0;
  double sim_time_s = 0.0;
  double train_loss = 0.0;
  double test_acc = 0.0;
  std::uint64_t bits_tx = 0;
  double energy_j = 0.0;
  double max_staleness = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

using MetricsTable = std::vector<MetricsRow>;

inline constexpr std::string_view kCsvHeader =
    "framework,seed,axis_value,round,sim_time_s,train_loss,test_acc,bits_tx,energy_j,"
    "max_staleness";

// Orders by (framework, seed, axis_value, round); rows without an axis value
// come first.
void sort_rows(MetricsTable& table);

std::string format_csv(MetricsTable table);
void write_csv(const MetricsTable& table, const std::string& path);

MetricsTable parse_csv(std::string_view text);
MetricsTable read_csv(const std::string& path);

}  // namespace fedsl

#endif  // FEDSL_METRICS_H_
