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

#ifndef FEDSL_EXPERIMENT_H_
#define FEDSL_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsl/config.h"
#include "fedsl/frameworks.h"
#include "fedsl/metrics.h"

namespace fedsl::workbench {

struct BuiltExperiment {
  fl::Environment env;
  fl::ModelSetup model;                   // single-model frameworks
  std::vector<fl::ClusterSetup> clusters;  // heterogeneous only
  fl::RunLimits limits;
};

// Materializes data, devices, channel and models. Deterministic in cfg.
BuiltExperiment build_experiment(const ExperimentConfig& cfg);

// Zero-loss duration of `rounds` rounds of the synchronous baseline that
// shares cfg's data, devices and channel.
double sync_budget(const ExperimentConfig& cfg, std::uint64_t rounds);

fl::RunResult run_experiment_full(const ExperimentConfig& cfg,
                                  const fl::RunOptions& options = {});
MetricsTable run_experiment(const ExperimentConfig& cfg);

struct SweepSpec {
  std::string axis;            // JSON pointer into the config; empty: no axis
  std::vector<double> values;  // ignored without an axis
  std::vector<std::uint64_t> seeds;
};

// Every (value, seed) pair is an independent run; execution may be parallel
// and in any order, the returned rows are sorted.
MetricsTable sweep(const ExperimentConfig& cfg, const SweepSpec& spec);

// Expands a sweep into the run list without executing it.
std::vector<ExperimentConfig> sweep_configs(const ExperimentConfig& cfg, const SweepSpec& spec,
                                            std::vector<std::optional<double>>* axis_values);

MetricsTable run_all(const std::vector<ExperimentConfig>& configs,
                     const std::vector<std::optional<double>>& axis_values);

}  // namespace fedsl::workbench

#endif  // FEDSL_EXPERIMENT_H_
