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

#include "fedsl/experiment.h"

#include <algorithm>
#include <cmath>
#include <exception>

#include "fedsl/data.h"
#include "fedsl/error.h"
#include "fedsl/rng.h"

namespace fedsl::workbench {

namespace {

nn::ModelSpec spec_of(const ModelConfig& m, const DataConfig& d) {
  return nn::make_mlp(d.dims, m.hidden, d.classes);
}

fl::ModelSetup model_setup(const ModelConfig& m, const DataConfig& d, std::uint64_t seed,
                           const std::string& label) {
  fl::ModelSetup s;
  s.spec = spec_of(m, d);
  s.plan = split::SplitPlan{m.cuts};
  s.init = nn::init_params(s.spec, sim::derive_seed(seed, label));
  return s;
}

}  // namespace

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
  const auto& f = cfg.framework;
  const auto& d = cfg.data;
  BuiltExperiment b;
  auto& env = b.env;
  env.seed = sim::derive_seed(cfg.seed, "runtime");
  env.channel = cfg.channel;
  env.edge = cfg.edge.profile();
  env.cloud = cfg.cloud.profile();
  env.wired = cfg.wired;

  const auto train =
      gen_blobs(sim::derive_seed(cfg.seed, "data.train"), d.n_train, d.dims, d.classes, d.spread);
  env.test =
      gen_blobs(sim::derive_seed(cfg.seed, "data.test"), d.n_test, d.dims, d.classes, d.spread);
  if (f.kind == fl::FrameworkKind::kHeterogeneous) {
    env.public_set = gen_blobs(sim::derive_seed(cfg.seed, "data.public"), f.distill.public_size,
                               d.dims, d.classes, d.spread);
  }
  const auto part_seed = sim::derive_seed(cfg.seed, "partition");
  auto shards = d.partition == Partition::kUniform
                    ? partition_uniform(train, f.num_clients, part_seed)
                    : partition_dirichlet(train, f.num_clients, d.dirichlet_alpha, part_seed);

  const auto& dev = cfg.devices;
  sim::RngStream placement(cfg.seed, "devices");
  const double log_h = std::log(dev.heterogeneity);
  for (std::size_t i = 0; i < f.num_clients; ++i) {
    fl::ClientSetup c;
    c.id = static_cast<int>(i);
    c.shard = std::move(shards[i]);
    c.device.cpu_freq_hz = dev.cpu_freq_hz / std::exp(placement.uniform() * log_h);
    c.device.cycles_per_flop = dev.cycles_per_flop;
    c.device.kappa = dev.kappa;
    c.device.f_min_hz = dev.f_min_hz;
    c.device.f_max_hz = dev.f_max_hz;
    c.device.position.x = placement.uniform(0.0, cfg.arena.width_m);
    c.device.position.y = placement.uniform(0.0, cfg.arena.height_m);
    c.loss_rate = cfg.channel.packet_loss_rate;
    for (const auto& o : dev.overrides) {
      if (o.client != i) continue;
      if (o.cpu_freq_hz) c.device.cpu_freq_hz = *o.cpu_freq_hz;
      if (o.packet_loss_rate) c.loss_rate = *o.packet_loss_rate;
      if (o.x_m) c.device.position.x = *o.x_m;
      if (o.y_m) c.device.position.y = *o.y_m;
    }
    c.device.cpu_freq_hz = std::clamp(c.device.cpu_freq_hz, dev.f_min_hz, dev.f_max_hz);
    c.distance_m = std::max(dev.min_distance_m,
                            netphys::distance(c.device.position, cfg.arena.server));
    env.clients.push_back(std::move(c));
  }

  if (f.kind == fl::FrameworkKind::kHeterogeneous) {
    std::size_t next = 0;
    for (std::size_t k = 0; k < cfg.clusters.size(); ++k) {
      fl::ClusterSetup cl;
      for (std::size_t j = 0; j < cfg.clusters[k].size; ++j) cl.members.push_back(next++);
      cl.model = model_setup(cfg.clusters[k].model, d, cfg.seed,
                             "model.cluster" + std::to_string(k));
      b.clusters.push_back(std::move(cl));
    }
  } else {
    b.model = model_setup(cfg.model, d, cfg.seed, "model");
  }

  b.limits.max_rounds = cfg.rounds;
  b.limits.eval_every = cfg.eval_every;
  b.limits.time_budget_s = cfg.time_budget_s;
  if (cfg.budget_sync_rounds) b.limits.time_budget_s = sync_budget(cfg, *cfg.budget_sync_rounds);
  return b;
}

double sync_budget(const ExperimentConfig& cfg, std::uint64_t rounds) {
  ExperimentConfig base = cfg;
  base.framework.kind = fl::FrameworkKind::kSync;
  base.framework.quantization.enabled = false;
  base.model.cuts.clear();
  base.clusters.clear();
  base.channel.packet_loss_rate = 0.0;
  for (auto& o : base.devices.overrides) o.packet_loss_rate.reset();
  base.time_budget_s.reset();
  base.budget_sync_rounds.reset();
  base.rounds = rounds;
  finalize(base);
  const auto built = build_experiment(base);
  // 1e-9 relative slack over the closed form.
  return fl::sync_reference_duration(base.framework, built.env, built.model, rounds) *
         (1.0 + 1e-9);
}

fl::RunResult run_experiment_full(const ExperimentConfig& cfg, const fl::RunOptions& options) {
  const auto b = build_experiment(cfg);
  const std::string ctx = std::string(fl::to_string(cfg.framework.kind)) + " run, seed " +
                          std::to_string(cfg.seed) + ": ";
  fl::RunResult r;
  try {
    switch (cfg.framework.kind) {
      case fl::FrameworkKind::kSync:
        r = fl::run_sync(cfg.framework, b.env, b.model, b.limits, options);
        break;
      case fl::FrameworkKind::kSequential:
        r = fl::run_sequential(cfg.framework, b.env, b.model, b.limits, options);
        break;
      case fl::FrameworkKind::kAsyncThreshold:
        r = fl::run_async(cfg.framework, b.env, b.model, b.limits, options);
        break;
      case fl::FrameworkKind::kHierarchical:
        r = fl::run_hierarchical(cfg.framework, b.env, b.model, b.limits, options);
        break;
      case fl::FrameworkKind::kHeterogeneous:
        r = fl::run_heterogeneous(cfg.framework, b.env, b.clusters, b.limits, options);
        break;
    }
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + e.what());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(ctx + e.what());
  } catch (const NumericError& e) {
    throw NumericError(ctx + e.what());
  }
  for (auto& row : r.rows) row.seed = cfg.seed;
  return r;
}

MetricsTable run_experiment(const ExperimentConfig& cfg) {
  return run_experiment_full(cfg).rows;
}

std::vector<ExperimentConfig> sweep_configs(const ExperimentConfig& cfg, const SweepSpec& spec,
                                            std::vector<std::optional<double>>* axis_values) {
  if (spec.seeds.empty()) throw ValidationError("sweep needs at least one seed");
  if (!spec.axis.empty() && spec.values.empty()) {
    throw ValidationError("sweep axis '" + spec.axis + "' has no values");
  }
  std::vector<ExperimentConfig> out;
  axis_values->clear();
  const std::vector<std::optional<double>> values =
      spec.axis.empty() ? std::vector<std::optional<double>>{std::nullopt}
                        : std::vector<std::optional<double>>(spec.values.begin(),
                                                             spec.values.end());
  for (const auto& v : values) {
    ExperimentConfig base = v ? with_value(cfg, spec.axis, *v) : cfg;
    for (auto seed : spec.seeds) {
      ExperimentConfig c = base;
      c.seed = seed;
      out.push_back(std::move(c));
      axis_values->push_back(v);
    }
  }
  return out;
}

MetricsTable run_all(const std::vector<ExperimentConfig>& configs,
                     const std::vector<std::optional<double>>& axis_values) {
  if (configs.size() != axis_values.size()) throw InternalError("run_all: size mismatch");
  std::vector<MetricsTable> parts(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const auto n = static_cast<std::int64_t>(configs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      parts[i] = run_experiment(configs[i]);
      for (auto& row : parts[i]) row.axis_value = axis_values[i];
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  MetricsTable all;
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  sort_rows(all);
  return all;
}

MetricsTable sweep(const ExperimentConfig& cfg, const SweepSpec& spec) {
  std::vector<std::optional<double>> axis_values;
  const auto configs = sweep_configs(cfg, spec, &axis_values);
  return run_all(configs, axis_values);
}

}  // namespace fedsl::workbench
