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

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsl/adapt.h"
#include "fedsl/config.h"
#include "fedsl/error.h"
#include "fedsl/experiment.h"
#include "fedsl/gradcheck.h"

namespace {

namespace fs = std::filesystem;
using namespace fedsl;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheck = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("", "bad " + what + " '" + s + "'");
  }
  return v;
}

// "5" means seeds 1..5; "3,7,9" is an explicit list.
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  const auto parts = split_list(s);
  std::vector<std::uint64_t> seeds;
  if (parts.size() == 1) {
    const auto n = parse_number<std::uint64_t>(parts[0], "seed count");
    if (n == 0) throw ConfigError("", "seed count must be >= 1");
    for (std::uint64_t i = 1; i <= n; ++i) seeds.push_back(i);
    return seeds;
  }
  for (const auto& p : parts) seeds.push_back(parse_number<std::uint64_t>(p, "seed"));
  return seeds;
}

bool trace_enabled() {
  const char* v = std::getenv("FEDSL_TRACE");
  return v != nullptr && std::string(v) == "1";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error("write to '" + path.string() + "' failed");
}

int cmd_run(const std::string& config, const std::string& out,
            const std::optional<std::uint64_t>& seed) {
  auto cfg = workbench::load_config(config);
  if (seed) cfg.seed = *seed;
  fs::create_directories(out);
  fl::RunOptions options;
  options.trace = trace_enabled();
  const auto result = workbench::run_experiment_full(cfg, options);
  write_csv(result.rows, (fs::path(out) / "metrics.csv").string());
  if (options.trace) write_text(fs::path(out) / "trace.csv", sim::format_trace(result.trace));
  std::cout << "wrote " << result.rows.size() << " rows to "
            << (fs::path(out) / "metrics.csv").string() << "\n";
  return 0;
}

int cmd_sweep(const std::vector<std::string>& configs, const std::string& axis,
              const std::string& seeds, const std::string& out) {
  workbench::SweepSpec spec;
  spec.seeds = parse_seeds(seeds);
  if (!axis.empty()) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ConfigError("", "--axis expects <pointer>=<v1,v2,...>");
    spec.axis = axis.substr(0, eq);
    for (const auto& v : split_list(axis.substr(eq + 1))) {
      spec.values.push_back(parse_number<double>(v, "axis value"));
    }
  }
  std::vector<workbench::ExperimentConfig> runs;
  std::vector<std::optional<double>> values;
  for (const auto& path : configs) {
    const auto cfg = workbench::load_config(path);
    std::vector<std::optional<double>> v;
    std::vector<workbench::ExperimentConfig> c;
    try {
      c = workbench::sweep_configs(cfg, spec, &v);
    } catch (const ValidationError& e) {
      throw ConfigError(spec.axis, e.what());
    }
    runs.insert(runs.end(), c.begin(), c.end());
    values.insert(values.end(), v.begin(), v.end());
  }
  fs::create_directories(out);
  const auto table = workbench::run_all(runs, values);
  write_csv(table, (fs::path(out) / "metrics.csv").string());
  std::cout << runs.size() << " runs, " << table.size() << " rows\n";
  return 0;
}

int cmd_optimize_split(const std::string& config, std::size_t client,
                       const std::string& objective) {
  const auto cfg = workbench::load_config(config);
  const auto built = workbench::build_experiment(cfg);
  if (client >= built.env.clients.size()) throw ConfigError("", "no such client");
  adapt::Objective obj = adapt::Objective::kLatency;
  if (objective == "energy") {
    obj = adapt::Objective::kEnergy;
  } else if (objective == "weighted") {
    obj = adapt::Objective::kWeighted;
  } else if (objective != "latency") {
    throw ConfigError("", "unknown objective '" + objective + "'");
  }
  const auto spec = nn::make_mlp(cfg.data.dims, cfg.model.hidden, cfg.data.classes);
  const auto& c = built.env.clients[client];
  const auto choice =
      adapt::select_split_layer(spec, c.device, built.env.edge, built.env.channel, c.distance_m,
                                cfg.framework.batch_size, obj);
  std::cout << adapt::format_cost_table(choice);
  std::cerr << "selected cut " << choice.cut << "\n";
  return 0;
}

int cmd_grad_check(std::size_t trials, std::uint64_t seed) {
  const auto report = check::grad_check(trials, seed);
  const double tol = 1e-6;
  for (const auto& c : report.cases) {
    std::cout << c.name << " checked=" << c.checked << " skipped=" << c.skipped
              << " max_rel_error=" << c.max_rel_error << (c.max_rel_error <= tol ? "" : "  FAIL") << "\n";
  }
  std::cout << "worst " << report.worst() << (report.passed(tol) ? " PASS" : " FAIL") << "\n";
  return report.passed(tol) ? 0 : kExitCheck;
}

int cmd_validate(const std::string& config) {
  workbench::load_config(config);
  std::cout << config << ": ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated split learning simulator"};
  app.require_subcommand(1);

  std::string config, out, axis, seeds = "1", objective = "latency";
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 20, client = 0;
  std::uint64_t check_seed = 1;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config, "Experiment JSON")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Override the config seed");

  auto* sw = app.add_subcommand("sweep", "Cartesian sweep over an axis and seeds");
  sw->add_option("--config", configs, "Experiment JSON (repeatable)")->required();
  sw->add_option("--axis", axis, "<json-pointer>=<v1,v2,...>");
  sw->add_option("--seeds", seeds, "Seed count n (seeds 1..n) or a comma list");
  sw->add_option("--out", out, "Output directory")->required();

  auto* opt = app.add_subcommand("optimize-split", "Print the split-layer cost table");
  opt->add_option("--config", config, "Experiment JSON")->required();
  opt->add_option("--client", client, "Client whose device and link are used");
  opt->add_option("--objective", objective, "latency, energy or weighted");

  auto* gc = app.add_subcommand("grad-check", "Finite-difference gradient suite");
  gc->add_option("--trials", trials, "Random models per suite");
  gc->add_option("--seed", check_seed, "Seed of the random models");

  auto* val = app.add_subcommand("validate", "Load and validate a config");
  val->add_option("--config", config, "Experiment JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, out, seed);
    if (*sw) return cmd_sweep(configs, axis, seeds, out);
    if (*opt) return cmd_optimize_split(config, client, objective);
    if (*gc) return cmd_grad_check(trials, check_seed);
    if (*val) return cmd_validate(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
