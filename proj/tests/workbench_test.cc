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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fedsl/config.h"
#include "fedsl/data.h"
#include "fedsl/error.h"
#include "fedsl/experiment.h"
#include "fedsl/metrics.h"
#include "fedsl/nn.h"

namespace fedsl::workbench {
namespace {

namespace fs = std::filesystem;

const fs::path kSource = FEDSL_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fedsl_wb_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> class_shares(const Dataset& ds) {
  std::vector<double> share(ds.num_classes, 0.0);
  for (int y : ds.labels) share[static_cast<std::size_t>(y)] += 1.0;
  for (auto& s : share) s /= static_cast<double>(ds.size());
  return share;
}

// Row identity for union/disjointness checks; blob rows are distinct almost surely.
std::multiset<std::vector<double>> row_set(const Dataset& ds) {
  std::multiset<std::vector<double>> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> r(ds.dims() + 1);
    for (std::size_t j = 0; j < ds.dims(); ++j) r[j] = ds.features.at(i, j);
    r.back() = ds.labels[i];
    out.insert(std::move(r));
  }
  return out;
}

ExperimentConfig small_config(fl::FrameworkKind kind = fl::FrameworkKind::kSync) {
  ExperimentConfig c;
  c.framework.kind = kind;
  c.framework.num_clients = 4;
  c.framework.k = 2;
  c.framework.aggregation_period_rounds = 2;
  c.framework.local_iters = 2;
  c.framework.batch_size = 16;
  c.framework.lr = 0.05;
  c.framework.distill.period = 4;
  c.framework.distill.public_size = 64;
  c.framework.distill.steps = 3;
  c.framework.distill.batch = 32;
  c.model.hidden = {16, 16};
  c.data.n_train = 400;
  c.data.n_test = 200;
  c.data.dims = 8;
  c.data.classes = 4;
  c.rounds = 12;
  c.eval_every = 5;
  if (kind == fl::FrameworkKind::kHierarchical) c.model.cuts = {2, 4};
  if (kind == fl::FrameworkKind::kHeterogeneous) {
    c.clusters = {ClusterConfig{2, {{16, 16}, {}}}, ClusterConfig{2, {{12, 20}, {}}}};
  }
  finalize(c);
  return c;
}

// ---------------------------------------------------------------- blobs

TEST(Blobs, ZeroSpreadNearestMeanIsPerfect) {
  const auto ds = gen_blobs(3, 400, 6, 4, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int best = -1;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < 4; ++c) {
      const auto mu = blob_mean(6, 4, c);
      double d = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_TRUE(ds.labels[i] != static_cast<int>(c) || ds.features.at(i, j) == mu[j]);
        d += (ds.features.at(i, j) - mu[j]) * (ds.features.at(i, j) - mu[j]);
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    correct += best == ds.labels[i];
  }
  EXPECT_EQ(correct, ds.size());
}

TEST(Blobs, MeansUnitNormAndSeparated) {
  for (std::size_t classes : {2u, 3u, 4u, 8u}) {
    for (std::size_t dims : {8u, 32u}) {
      std::vector<std::vector<double>> mu;
      for (std::size_t c = 0; c < classes; ++c) mu.push_back(blob_mean(dims, classes, c));
      for (std::size_t a = 0; a < classes; ++a) {
        EXPECT_NEAR(std::sqrt(std::inner_product(mu[a].begin(), mu[a].end(), mu[a].begin(), 0.0)),
                    1.0, 1e-12);
        for (std::size_t b = a + 1; b < classes; ++b) {
          double d = 0.0;
          for (std::size_t j = 0; j < dims; ++j) d += (mu[a][j] - mu[b][j]) * (mu[a][j] - mu[b][j]);
          EXPECT_GE(std::sqrt(d), 1.0 - 1e-12) << classes << " classes, pair " << a << "," << b;
        }
      }
    }
  }
}

TEST(Blobs, BalancedAndDeterministic) {
  const auto a = gen_blobs(11, 1000, 32, 4, 0.1);
  const auto b = gen_blobs(11, 1000, 32, 4, 0.1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, gen_blobs(12, 1000, 32, 4, 0.1));
  for (double s : class_shares(a)) EXPECT_DOUBLE_EQ(s, 0.25);
  EXPECT_THROW(gen_blobs(1, 10, 4, 1, 0.1), ValidationError);
  EXPECT_THROW(gen_blobs(1, 10, 1, 2, 0.1), ValidationError);
  EXPECT_THROW(gen_blobs(1, 10, 4, 2, -1.0), ValidationError);
}

TEST(Blobs, EmpiricalSpreadMatches) {
  const auto ds = gen_blobs(5, 4000, 32, 4, 0.1);
  double ss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto mu = blob_mean(32, 4, static_cast<std::size_t>(ds.labels[i]));
    for (std::size_t j = 0; j < 32; ++j) ss += std::pow(ds.features.at(i, j) - mu[j], 2);
  }
  EXPECT_NEAR(std::sqrt(ss / (4000.0 * 32.0)), 0.1, 0.002);
}

TEST(Blobs, CentralizedMlpSeparatesDefaultBlobs) {
  const auto train = gen_blobs(1, 4000, 32, 4, 0.1);
  const auto test = gen_blobs(2, 1000, 32, 4, 0.1);
  const auto spec = nn::make_mlp(32, {32, 64, 64, 32}, 4);
  auto p = nn::init_params(spec, 3);
  auto rng = sim::rng_stream(4, "train");
  for (int step = 0; step < 400; ++step) {
    const auto b = sample_batch(train, 32, rng);
    const auto lg = nn::loss_and_grad(spec, p, b.features, b.labels);
    p = nn::sgd_step(p, nn::backward(spec, p, lg.cache, lg.logit_grad).grads, 0.05);
  }
  EXPECT_GE(nn::evaluate(spec, p, test), 0.99);
}

TEST(Blobs, SampleBatchDrawsFromShard) {
  const auto ds = gen_blobs(1, 50, 4, 2, 0.1);
  auto rng = sim::rng_stream(9, "b");
  const auto rows = row_set(ds);
  const auto b = sample_batch(ds, 20, rng);
  ASSERT_EQ(b.features.rows(), 20u);
  ASSERT_EQ(b.labels.size(), 20u);
  Dataset as{b.features, b.labels, 2};
  for (const auto& r : row_set(as)) EXPECT_TRUE(rows.count(r));
  EXPECT_THROW(sample_batch(Dataset{Tensor({0, 4}), {}, 2}, 4, rng), ValidationError);
}

// ----------------------------------------------------------- partitions

TEST(PartitionUniform, TenShardsOfTen) {
  const auto idx = partition_uniform_indices(100, 10, 7);
  ASSERT_EQ(idx.size(), 10u);
  for (const auto& s : idx) EXPECT_EQ(s.size(), 10u);
}

TEST(PartitionUniform, SizesDifferByAtMostOneAndCoverExactly) {
  for (std::size_t n : {7u, 100u, 1003u}) {
    for (std::size_t shards : {1u, 3u, 7u}) {
      const auto idx = partition_uniform_indices(n, shards, n * 31 + shards);
      std::size_t lo = n, hi = 0;
      std::vector<std::size_t> all;
      for (const auto& s : idx) {
        lo = std::min(lo, s.size());
        hi = std::max(hi, s.size());
        all.insert(all.end(), s.begin(), s.end());
      }
      EXPECT_LE(hi - lo, 1u);
      std::sort(all.begin(), all.end());
      std::vector<std::size_t> expect(n);
      std::iota(expect.begin(), expect.end(), 0u);
      EXPECT_EQ(all, expect);
    }
  }
  EXPECT_THROW(partition_uniform_indices(5, 6, 1), ValidationError);
}

TEST(PartitionUniform, ShardsAreSubsetsOfTheData) {
  const auto ds = gen_blobs(4, 200, 4, 2, 0.3);
  const auto shards = partition_uniform(ds, 6, 2);
  std::multiset<std::vector<double>> joined;
  for (const auto& s : shards) {
    const auto r = row_set(s);
    joined.insert(r.begin(), r.end());
  }
  EXPECT_EQ(joined, row_set(ds));
  EXPECT_THROW(partition_uniform(ds, 201, 1), ValidationError);
}

TEST(PartitionUniform, ClassProportionsNearGlobal) {
  const auto ds = gen_blobs(8, 4000, 32, 4, 0.1);
  const auto global = class_shares(ds);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (const auto& s : partition_uniform(ds, 10, seed)) {
      const auto share = class_shares(s);
      for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(share[c], global[c], 0.10);
    }
  }
}

TEST(PartitionDirichlet, LargeAlphaIsNearUniform) {
  const auto ds = gen_blobs(8, 4000, 32, 4, 0.1);
  const auto global = class_shares(ds);
  for (const auto& s : partition_dirichlet(ds, 10, 1000.0, 3)) {
    const auto share = class_shares(s);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(share[c], global[c], 0.15);
  }
}

TEST(PartitionDirichlet, SmallAlphaIsSkewed) {
  const auto ds = gen_blobs(8, 4000, 32, 4, 0.1);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double top = 0.0;
    for (const auto& s : partition_dirichlet(ds, 10, 0.1, seed)) {
      const auto share = class_shares(s);
      top = std::max(top, *std::max_element(share.begin(), share.end()));
    }
    EXPECT_GE(top, 0.6) << "seed " << seed;
  }
}

TEST(PartitionDirichlet, DisjointCompleteNonEmpty) {
  const auto ds = gen_blobs(8, 600, 8, 4, 0.1);
  for (double alpha : {0.1, 1.0, 100.0}) {
    const auto idx = partition_dirichlet_indices(ds, 7, alpha, 5);
    std::vector<std::size_t> all;
    for (const auto& s : idx) {
      EXPECT_FALSE(s.empty());
      all.insert(all.end(), s.begin(), s.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(ds.size());
    std::iota(expect.begin(), expect.end(), 0u);
    EXPECT_EQ(all, expect) << "alpha " << alpha;
  }
}

TEST(PartitionDirichlet, Errors) {
  const auto ds = gen_blobs(8, 20, 4, 2, 0.1);
  EXPECT_THROW(partition_dirichlet(ds, 4, 0.0, 1), ValidationError);
  EXPECT_THROW(partition_dirichlet(ds, 4, -1.0, 1), ValidationError);
  // Twenty samples over twenty shards at tiny alpha: every shard nonempty is hopeless.
  EXPECT_THROW(partition_dirichlet(ds, 20, 1e-3, 1, 3), ValidationError);
}

// --------------------------------------------------------------- config

TEST(Config, ShippedSyncConfig) {
  const auto cfg = load_config((kSource / "configs/sync.json").string());
  EXPECT_EQ(cfg.framework.kind, fl::FrameworkKind::kSync);
  EXPECT_EQ(cfg.framework.num_clients, 10u);
  EXPECT_EQ(cfg.framework.aggregation_period_rounds, 25u);
  EXPECT_EQ(cfg.framework.local_iters, 5u);
  EXPECT_EQ(cfg.framework.lr, 0.001);
  EXPECT_EQ(cfg.rounds, 200u);
  EXPECT_EQ(cfg.eval_every, 5u);
  EXPECT_EQ(cfg.model.hidden, (std::vector<std::size_t>{32, 64, 64, 32}));
  EXPECT_EQ(cfg.model.cuts, (std::vector<std::size_t>{4}));  // after the second hidden ReLU
  EXPECT_EQ(cfg.arena.width_m, 50.0);
}

TEST(Config, EveryShippedAndValidConfigLoads) {
  std::vector<fs::path> files;
  for (const auto& dir : {kSource / "configs", kSource / "tests/fixtures/valid"}) {
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  }
  ASSERT_GE(files.size(), 14u);
  for (const auto& f : files) {
    EXPECT_NO_THROW(load_config(f.string())) << f;
  }
}

TEST(Config, EveryInvalidFixtureRejectedWithPointer) {
  const auto dir = kSource / "tests/fixtures/invalid";
  std::ifstream list(dir / "expected_pointers.txt");
  std::string name, pointer;
  std::set<std::string> listed;
  while (list >> name >> pointer) {
    listed.insert(name);
    try {
      load_config((dir / (name + ".json")).string());
      ADD_FAILURE() << name << " loaded";
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.pointer(), pointer) << name << ": " << e.what();
    }
  }
  std::set<std::string> present;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") present.insert(e.path().stem().string());
  }
  EXPECT_EQ(listed, present);
  EXPECT_GE(listed.size(), 20u);
}

TEST(Config, ParseErrorNamesLineAndColumn) {
  try {
    config_from_json_text("{\n  \"seed\": 1,\n  \"rounds\": ,\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3, column 13"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), ConfigError);
}

TEST(Config, SerializeLoadRoundTrip) {
  for (const auto& e : fs::directory_iterator(kSource / "configs")) {
    const auto a = load_config(e.path().string());
    const auto b = config_from_json_text(serialize_config(a));
    EXPECT_EQ(a, b) << e.path();
    EXPECT_EQ(serialize_config(a), serialize_config(b));
  }
  const auto h = small_config(fl::FrameworkKind::kHeterogeneous);
  EXPECT_EQ(config_from_json_text(serialize_config(h)), h);
}

TEST(Config, EmptyObjectGivesDefaults) {
  const auto cfg = config_from_json_text("{}");
  EXPECT_EQ(cfg.framework.num_clients, 10u);
  EXPECT_EQ(cfg.rounds, 200u);
  EXPECT_EQ(cfg.data.dims, 32u);
}

TEST(Config, WithValue) {
  const auto base = small_config();
  const auto c = with_value(base, "/channel/packet_loss_rate", 0.2);
  EXPECT_EQ(c.channel.packet_loss_rate, 0.2);
  EXPECT_EQ(with_value(base, "/framework/num_clients", 6).framework.num_clients, 6u);
  EXPECT_THROW(with_value(base, "/channel/nope", 1.0), ValidationError);
  EXPECT_THROW(with_value(base, "channel", 1.0), ValidationError);
  EXPECT_THROW(with_value(base, "/framework/num_clients", 2.5), ValidationError);
  EXPECT_THROW(with_value(base, "/channel/packet_loss_rate", 1.5), ConfigError);
}

// ------------------------------------------------------------------ csv

MetricsRow sample_row(std::uint64_t round) {
  MetricsRow r;
  r.framework = "sync";
  r.seed = 3;
  r.round = round;
  r.sim_time_s = 0.1 + 1.0 / 3.0 * static_cast<double>(round);
  r.train_loss = std::nextafter(0.7, 1.0);
  r.test_acc = 0.875;
  r.bits_tx = 123456789012345ull;
  r.energy_j = 1e-300;
  r.max_staleness = 2.0;
  return r;
}

TEST(Csv, EmptyTableIsHeaderOnly) {
  EXPECT_EQ(format_csv({}), std::string(kCsvHeader) + "\n");
}

TEST(Csv, OneRowTwoLines) {
  const auto text = format_csv({sample_row(5)});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST(Csv, WriteReadRoundTripExact) {
  MetricsTable t;
  for (std::uint64_t r = 0; r < 6; ++r) t.push_back(sample_row(r));
  t[2].axis_value = 0.1;
  t[3].axis_value = 0.30000000000000004;
  t[4].framework = "async";
  t[5].train_loss = std::numeric_limits<double>::denorm_min();
  const auto path = scratch("csv") / "m.csv";
  write_csv(t, path.string());
  auto expect = t;
  sort_rows(expect);
  EXPECT_EQ(read_csv(path.string()), expect);
  EXPECT_EQ(parse_csv(format_csv(t)), expect);
}

TEST(Csv, RowsSortedByFrameworkSeedAxisRound) {
  MetricsTable t;
  for (const char* fw : {"sync", "async"}) {
    for (std::uint64_t seed : {2u, 1u}) {
      for (std::uint64_t round : {10u, 5u}) {
        auto r = sample_row(round);
        r.framework = fw;
        r.seed = seed;
        t.push_back(r);
      }
    }
  }
  std::mt19937 g(4);
  std::shuffle(t.begin(), t.end(), g);
  const auto rows = parse_csv(format_csv(t));
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.framework, a.seed, a.axis_value, a.round) <
           std::tie(b.framework, b.seed, b.axis_value, b.round);
  }));
}

TEST(Csv, WriteFailureNamesPath) {
  try {
    write_csv({}, "/nonexistent_dir/x.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir/x.csv"), std::string::npos);
  }
}

// ----------------------------------------------------------- experiments

TEST(Experiment, RowCountMatchesEvaluations) {
  for (std::uint64_t rounds : {10u, 12u}) {
    auto cfg = small_config();
    cfg.rounds = rounds;
    const auto rows = run_experiment(cfg);
    EXPECT_EQ(rows.size(), rounds / 5 + (rounds % 5 ? 1 : 0));
    EXPECT_EQ(rows.back().round, rounds);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      EXPECT_GE(rows[i].sim_time_s, rows[i - 1].sim_time_s);
      EXPECT_GE(rows[i].bits_tx, rows[i - 1].bits_tx);
      EXPECT_GE(rows[i].energy_j, rows[i - 1].energy_j);
    }
  }
}

TEST(Experiment, EveryFrameworkDeterministic) {
  for (auto kind : {fl::FrameworkKind::kSync, fl::FrameworkKind::kSequential,
                    fl::FrameworkKind::kAsyncThreshold, fl::FrameworkKind::kHierarchical,
                    fl::FrameworkKind::kHeterogeneous}) {
    auto cfg = small_config(kind);
    cfg.channel.packet_loss_rate = 0.2;
    const auto a = format_csv(run_experiment(cfg));
    EXPECT_EQ(a, format_csv(run_experiment(cfg))) << fl::to_string(kind);
    cfg.seed = 2;
    EXPECT_NE(a, format_csv(run_experiment(cfg))) << fl::to_string(kind);
  }
}

TEST(Experiment, RowsCarrySeedAndTag) {
  auto cfg = small_config(fl::FrameworkKind::kAsyncThreshold);
  cfg.seed = 17;
  for (const auto& r : run_experiment(cfg)) {
    EXPECT_EQ(r.seed, 17u);
    EXPECT_EQ(r.framework, "async");
    EXPECT_FALSE(r.axis_value.has_value());
  }
}

TEST(Experiment, TimeBudgetStopsRun) {
  auto cfg = small_config();
  const auto full = run_experiment_full(cfg);
  cfg.rounds.reset();
  cfg.time_budget_s = full.final_time_s / 2.0;
  const auto half = run_experiment_full(cfg);
  EXPECT_LE(half.final_time_s, full.final_time_s / 2.0 + 1e-12);
  EXPECT_LT(half.rows.back().round, full.rows.back().round);
}

TEST(Experiment, SyncBudgetCoversSyncRoundsExactly) {
  auto cfg = small_config();
  cfg.rounds.reset();
  cfg.budget_sync_rounds = 12;
  const auto r = run_experiment_full(cfg);
  EXPECT_EQ(r.rows.back().round, 12u);
}

TEST(Sweep, SingleValueSingleSeedMatchesRun) {
  auto cfg = small_config();
  const auto direct = run_experiment(cfg);
  const auto swept = sweep(cfg, {"", {}, {cfg.seed}});
  EXPECT_EQ(swept, direct);
  auto with_axis = sweep(cfg, {"/channel/packet_loss_rate", {0.0}, {cfg.seed}});
  for (auto& r : with_axis) {
    EXPECT_EQ(r.axis_value, 0.0);
    r.axis_value.reset();
  }
  EXPECT_EQ(with_axis, direct);
}

TEST(Sweep, CartesianProductTagged) {
  const auto cfg = small_config();
  const auto t = sweep(cfg, {"/channel/packet_loss_rate", {0.0, 0.3}, {1, 2, 3}});
  std::set<std::pair<double, std::uint64_t>> cells;
  for (const auto& r : t) cells.insert({*r.axis_value, r.seed});
  EXPECT_EQ(cells.size(), 6u);
  EXPECT_THROW(sweep(cfg, {"/channel/bogus", {0.1}, {1}}), ValidationError);
  EXPECT_THROW(sweep(cfg, {"", {}, {}}), ValidationError);
}

TEST(Sweep, ExecutionOrderInvariant) {
  const auto cfg = small_config(fl::FrameworkKind::kAsyncThreshold);
  const SweepSpec spec{"/channel/packet_loss_rate", {0.0, 0.1, 0.3}, {1, 2}};
  std::vector<std::optional<double>> values;
  auto configs = sweep_configs(cfg, spec, &values);
  const auto forward = format_csv(run_all(configs, values));
  std::vector<std::size_t> order(configs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937 g(99);
  std::shuffle(order.begin(), order.end(), g);
  std::vector<ExperimentConfig> c2;
  std::vector<std::optional<double>> v2;
  for (auto i : order) {
    c2.push_back(configs[i]);
    v2.push_back(values[i]);
  }
  EXPECT_EQ(format_csv(run_all(c2, v2)), forward);
  // One run at a time, in reverse.
  MetricsTable serial;
  for (std::size_t i = configs.size(); i-- > 0;) {
    auto rows = run_experiment(configs[i]);
    for (auto& r : rows) r.axis_value = values[i];
    serial.insert(serial.end(), rows.begin(), rows.end());
  }
  EXPECT_EQ(format_csv(serial), forward);
}

// ------------------------------------------------------------------ cli

int cli(const std::string& args) {
  const std::string cmd = std::string(FEDSL_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string small_config_file(const fs::path& dir) {
  const auto path = dir / "small.json";
  std::ofstream(path) << serialize_config(small_config());
  return path.string();
}

TEST(Cli, RunTwiceByteIdentical) {
  const auto dir = scratch("cli_run");
  const auto cfg = small_config_file(dir);
  ASSERT_EQ(cli("run --config " + cfg + " --out " + (dir / "a").string() + " --seed 4"), 0);
  ASSERT_EQ(cli("run --config " + cfg + " --out " + (dir / "b").string() + " --seed 4"), 0);
  const auto a = slurp(dir / "a/metrics.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b/metrics.csv"));
  auto expect = small_config();
  expect.seed = 4;
  EXPECT_EQ(a, format_csv(run_experiment(expect)));
  EXPECT_FALSE(fs::exists(dir / "a/trace.csv"));
}

TEST(Cli, SweepTwiceByteIdentical) {
  const auto dir = scratch("cli_sweep");
  const auto cfg = small_config_file(dir);
  const std::string args =
      "sweep --config " + cfg + " --axis /channel/packet_loss_rate=0,0.2 --seeds 2 --out ";
  ASSERT_EQ(cli(args + (dir / "a").string()), 0);
  ASSERT_EQ(cli(args + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a/metrics.csv"), slurp(dir / "b/metrics.csv"));
  EXPECT_EQ(parse_csv(slurp(dir / "a/metrics.csv")),
            sweep(small_config(), {"/channel/packet_loss_rate", {0.0, 0.2}, {1, 2}}));
}

TEST(Cli, TraceEnvVarWritesTrace) {
  const auto dir = scratch("cli_trace");
  const auto cfg = small_config_file(dir);
  ASSERT_EQ(cli("run --config " + cfg + " --out " + (dir / "t").string()), 0);
  const std::string cmd = "FEDSL_TRACE=1 " + std::string(FEDSL_CLI) + " run --config " + cfg +
                          " --out " + (dir / "u").string() + " >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_GT(fs::file_size(dir / "u/trace.csv"), 0u);
  EXPECT_EQ(slurp(dir / "t/metrics.csv"), slurp(dir / "u/metrics.csv"));
}

TEST(Cli, ExitCodes) {
  const auto invalid = kSource / "tests/fixtures/invalid";
  EXPECT_EQ(cli("validate --config " + (kSource / "configs/sync.json").string()), 0);
  EXPECT_EQ(cli("validate --config " + (invalid / "k_exceeds_clients.json").string()), 1);
  EXPECT_EQ(cli("validate --config /nonexistent.json"), 1);
  EXPECT_EQ(cli("run --config " + (invalid / "unknown_kind.json").string() + " --out /tmp/x"),
            1);
  EXPECT_EQ(cli("grad-check --trials 3"), 0);
  EXPECT_EQ(cli("optimize-split --config " + (kSource / "configs/sync.json").string()), 0);
  EXPECT_NE(cli("no-such-command"), 0);
}

// ---------------------------------------------------------- statistical

ExperimentConfig shipped(const std::string& name, std::uint64_t seed, std::uint64_t rounds) {
  auto cfg = load_config((kSource / "configs" / (name + ".json")).string());
  cfg.seed = seed;
  cfg.rounds = rounds;
  return cfg;
}

TEST(Statistical, HierarchicalMatchesSyncAtZeroLoss) {
  double hier = 0.0, sync = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto h = shipped("hierarchical", seed, 60);
    auto s = shipped("sync", seed, 60);
    s.model.cuts = {h.model.cuts.front()};  // same federated device segment
    hier += run_experiment(h).back().test_acc;
    sync += run_experiment(s).back().test_acc;
  }
  EXPECT_NEAR(hier / 5.0, sync / 5.0, 0.01);
}

TEST(Statistical, DistillationNotHarmfulOnSharedTask) {
  std::vector<double> with_mean, without_mean;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto with = shipped("heterogeneous", seed, 200);
    auto without = with;
    with.framework.distill.weight = 0.5;
    without.framework.distill.weight = 0.0;
    const auto a = run_experiment_full(with);
    const auto b = run_experiment_full(without);
    ASSERT_EQ(a.groups.size(), b.groups.size());
    with_mean.resize(a.groups.size());
    without_mean.resize(a.groups.size());
    for (std::size_t g = 0; g < a.groups.size(); ++g) {
      with_mean[g] += a.groups[g].final_accuracy / 5.0;
      without_mean[g] += b.groups[g].final_accuracy / 5.0;
    }
  }
  for (std::size_t g = 0; g < with_mean.size(); ++g) {
    EXPECT_GE(with_mean[g], without_mean[g] - 0.01) << "cluster " << g;
  }
}

TEST(Statistical, AsyncLossTraceIsVolatile) {
  auto cfg = shipped("async", 1, 200);
  cfg.eval_every = 1;
  const auto r = run_experiment_full(cfg);
  const auto& rounds = r.groups.at(0).rounds;
  bool increase = false;
  for (std::size_t i = 1; i < rounds.size(); ++i) {
    increase = increase || rounds[i].mean_loss > rounds[i - 1].mean_loss;
  }
  EXPECT_TRUE(increase);
}

}  // namespace
}  // namespace fedsl::workbench
