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

// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedsl/adapt.h"
#include "fedsl/config.h"
#include "fedsl/data.h"
#include "fedsl/error.h"
#include "fedsl/experiment.h"
#include "fedsl/frameworks.h"
#include "fedsl/gradcheck.h"
#include "fedsl/metrics.h"
#include "fedsl/netphys.h"
#include "oracles.h"

namespace fedsl {
namespace {

using Clock = std::chrono::steady_clock;
namespace wb = workbench;

const std::string kSource = FEDSL_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

wb::ExperimentConfig shipped(const std::string& name) {
  return wb::load_config(kSource + "/configs/" + name + ".json");
}

// ---------------------------------------------------------------- 1

Outcome split_equivalence() {
  sim::RngStream rng(2026, "acceptance.split");
  double worst = 0.0;
  int n = 0;
  for (int i = 0; i < 150; ++i, ++n) {
    worst = std::max(worst, testing::split_equivalence_trial(rng, i % 3 == 2).max_rel_error);
  }
  return {worst <= 1e-12, std::to_string(n) + " triples, max rel error " + fmt("%.3g", worst)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_exactness() {
  const auto report = check::grad_check(25, 7);
  std::size_t checked = 0;
  for (const auto& c : report.cases) checked += c.checked;
  return {report.passed(1e-6), std::to_string(report.cases.size()) + " cases (25 MLPs, 25 distill), " +
                                   std::to_string(checked) + " derivatives, worst " +
                                   fmt("%.3g", report.worst())};
}

// ---------------------------------------------------------------- 3

fl::Environment ladder_env(std::size_t n, std::uint64_t seed) {
  fl::Environment env;
  env.seed = seed;
  env.edge.cpu_freq_hz = env.edge.f_max_hz = 1e10;
  env.cloud.cpu_freq_hz = env.cloud.f_max_hz = 1e11;
  const auto train = wb::gen_blobs(seed, 80 * n, 8, 4, 0.4);
  const auto shards = wb::partition_uniform(train, n, seed);
  for (std::size_t i = 0; i < n; ++i) {
    fl::ClientSetup c;
    c.id = static_cast<int>(i);
    c.shard = shards[i];
    c.distance_m = 15.0;
    env.clients.push_back(c);
  }
  env.test = wb::gen_blobs(seed + 1, 200, 8, 4, 0.4);
  env.public_set = wb::gen_blobs(seed + 2, 64, 8, 4, 0.4);
  return env;
}

fl::ModelSetup ladder_model(std::vector<std::size_t> hidden, std::size_t cut, std::uint64_t seed) {
  fl::ModelSetup m;
  m.spec = nn::make_mlp(8, hidden, 4);
  m.plan.cuts = {cut};
  m.init = nn::init_params(m.spec, seed);
  return m;
}

fl::FrameworkConfig ladder_cfg(fl::FrameworkKind kind, std::size_t n) {
  fl::FrameworkConfig f;
  f.kind = kind;
  f.num_clients = n;
  f.k = std::min<std::size_t>(n, 2);
  f.aggregation_period_rounds = 3;
  f.local_iters = 3;
  f.batch_size = 8;
  f.lr = 0.05;
  return f;
}

fl::RunLimits ladder_rounds(std::uint64_t r) {
  fl::RunLimits l;
  l.max_rounds = r;
  return l;
}

Outcome degeneracy_ladder() {
  std::ostringstream d;
  bool ok = true;

  // (a) one client, sync: plain SGD on its shard with the same batch stream.
  {
    const auto env = ladder_env(1, 4);
    const auto m = ladder_model({16, 12}, 2, 6);
    const auto cfg = ladder_cfg(fl::FrameworkKind::kSync, 1);
    const auto r = fl::run_sync(cfg, env, m, ladder_rounds(10));
    auto p = m.init;
    sim::RngStream rng(env.seed, "batch.client0");
    std::vector<double> losses;
    for (std::size_t i = 0; i < 10 * cfg.local_iters; ++i) {
      const auto b = wb::sample_batch(env.clients[0].shard, cfg.batch_size, rng);
      const auto lg = nn::loss_and_grad(m.spec, p, b.features, b.labels);
      losses.push_back(lg.loss);
      p = nn::sgd_step(p, nn::backward(m.spec, p, lg.cache, lg.logit_grad).grads, cfg.lr);
    }
    const bool a = r.groups[0].iteration_losses == losses && r.groups[0].final_model == p;
    ok = ok && a;
    d << "(a) " << (a ? "bitwise" : "MISMATCH");
  }

  // (b) async with k = N, uniform speeds, p = 0 against sync with period 1.
  {
    const auto env = ladder_env(4, 5);
    const auto m = ladder_model({16, 12}, 2, 7);
    auto s = ladder_cfg(fl::FrameworkKind::kSync, 4);
    s.aggregation_period_rounds = 1;
    auto a = ladder_cfg(fl::FrameworkKind::kAsyncThreshold, 4);
    a.k = 4;
    const fl::RunOptions opts{false, true};
    const auto rs = fl::run_sync(s, env, m, ladder_rounds(8), opts);
    const auto ra = fl::run_async(a, env, m, ladder_rounds(8), opts);
    const auto& sa = rs.groups[0].aggregations;
    const auto& aa = ra.groups[0].aggregations;
    double worst = sa.size() == aa.size() && !sa.empty() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(sa.size(), aa.size()); ++i) {
      worst = std::max(worst, testing::max_abs_diff(sa[i].model, aa[i].model));
    }
    worst = std::max(worst, testing::max_abs_diff(rs.groups[0].final_model, ra.groups[0].final_model));
    ok = ok && worst <= 1e-12;
    d << ", (b) " << sa.size() << " aggregations, max diff " << fmt("%.3g", worst);
  }

  // (c) heterogeneous with lambda = 0 against two independent sync runs.
  {
    const auto env = ladder_env(5, 6);
    std::vector<fl::ClusterSetup> clusters(2);
    clusters[0].members = {0, 1, 2};
    clusters[0].model = ladder_model({16, 12}, 2, 8);
    clusters[1].members = {3, 4};
    clusters[1].model = ladder_model({10}, 2, 9);
    auto h = ladder_cfg(fl::FrameworkKind::kHeterogeneous, 5);
    h.distill.weight = 0.0;
    h.distill.period = 3;
    const auto rh = fl::run_heterogeneous(h, env, clusters, ladder_rounds(9));
    double worst = 0.0;
    for (std::size_t g = 0; g < 2; ++g) {
      fl::Environment sub = env;
      sub.clients.clear();
      for (auto ci : clusters[g].members) sub.clients.push_back(env.clients[ci]);
      const auto rs = fl::run_sync(ladder_cfg(fl::FrameworkKind::kSync, sub.clients.size()), sub,
                                   clusters[g].model, ladder_rounds(9));
      worst = std::max(worst, testing::max_abs_diff(rh.groups[g].final_model,
                                                    rs.groups[0].final_model));
    }
    ok = ok && worst <= 1e-12;
    d << ", (c) max diff " << fmt("%.3g", worst);
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 4

Outcome convergence() {
  const auto rows = wb::run_experiment(shipped("sync"));
  const auto& last = rows.back();
  return {last.round <= 200 && last.test_acc >= 0.95,
          "round " + std::to_string(last.round) + ", test acc " + fmt("%.4f", last.test_acc)};
}

// ---------------------------------------------------------------- 5, 6

// framework -> loss rate -> seed-mean final accuracy
using AccuracyGrid = std::map<std::string, std::map<double, double>>;

AccuracyGrid fixed_budget_sweep() {
  const wb::SweepSpec spec{"/channel/packet_loss_rate", {0.0, 0.1, 0.2, 0.3}, {1, 2, 3, 4, 5}};
  std::vector<wb::ExperimentConfig> runs;
  std::vector<std::optional<double>> values;
  for (const char* name : {"sync_budget", "async_budget", "hierarchical_budget",
                           "heterogeneous_budget"}) {
    std::vector<std::optional<double>> v;
    const auto c = wb::sweep_configs(shipped(name), spec, &v);
    runs.insert(runs.end(), c.begin(), c.end());
    values.insert(values.end(), v.begin(), v.end());
  }
  const auto table = wb::run_all(runs, values);
  std::map<std::tuple<std::string, double, std::uint64_t>, double> final_acc;
  for (const auto& r : table) final_acc[{r.framework, *r.axis_value, r.seed}] = r.test_acc;
  AccuracyGrid grid;
  for (const auto& [key, acc] : final_acc) {
    grid[std::get<0>(key)][std::get<1>(key)] += acc / 5.0;
  }
  std::printf("  fixed-budget sweep: %zu runs, %zu final rows\n", runs.size(), final_acc.size());
  for (const auto& [fw, byp] : grid) {
    std::printf("    %-14s", fw.c_str());
    for (const auto& [p, acc] : byp) std::printf("  p=%.1f %.4f", p, acc);
    std::printf("\n");
  }
  return grid;
}

Outcome ordering(const AccuracyGrid& g) {
  const double sync = g.at("sync").at(0.3), async = g.at("async").at(0.3);
  const double hier = g.at("hierarchical").at(0.3), het = g.at("heterogeneous").at(0.3);
  bool ok = het >= async && hier >= async && async >= sync;
  const double sync_drop = g.at("sync").at(0.0) - sync;
  for (const char* fw : {"async", "hierarchical", "heterogeneous"}) {
    ok = ok && sync_drop > g.at(fw).at(0.0) - g.at(fw).at(0.3);
  }
  return {ok, "p=0.3: heterogeneous " + fmt("%.4f", het) + ", hierarchical " + fmt("%.4f", hier) +
                  ", async " + fmt("%.4f", async) + ", sync " + fmt("%.4f", sync) +
                  "; sync drop " + fmt("%.4f", sync_drop)};
}

Outcome monotone(const AccuracyGrid& g) {
  bool ok = true;
  std::string d;
  for (const auto& [fw, byp] : g) {
    const double delta = byp.at(0.3) - byp.at(0.0);
    ok = ok && delta <= 0.02;
    d += (d.empty() ? "" : ", ") + fw + " " + fmt("%+.4f", delta);
  }
  return {ok, "acc(0.3) - acc(0): " + d};
}

// ---------------------------------------------------------------- 7

Outcome channel_math() {
  const netphys::ChannelParams ch;
  const double pl = netphys::path_loss_db(ch, 10.0);
  const double rate = netphys::link_rate_bps(ch, 10.0);
  const auto cost = netphys::tx_time_energy(ch, 10.0, 1e6);
  auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  const double worst = std::max({rel(pl, 70.0), rel(rate, 1.2624e8), rel(cost.seconds, 7.921e-3),
                                 rel(cost.joules, 1.580e-3)});
  return {worst <= 1e-3, "path loss " + fmt("%.4f", pl) + " dB, rate " + fmt("%.5g", rate) +
                             " bps, time " + fmt("%.5g", cost.seconds) + " s, energy " +
                             fmt("%.5g", cost.joules) + " J; worst rel " + fmt("%.2g", worst)};
}

// ---------------------------------------------------------------- 8

Outcome optimizer_oracles() {
  sim::RngStream rng(77, "acceptance.opt");
  int argmin_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    adapt::CostProfile profile;
    const std::size_t n = 2 + rng.uniform_int(10);
    double dev = 0.0;
    for (std::size_t c = 1; c <= n; ++c) {
      dev += rng.uniform(0.0, 4e6);
      const double bits = std::floor(rng.uniform(1, 9)) * 2048;
      profile.cuts.push_back({c, dev, rng.uniform(0, 3e8), bits, bits});
    }
    netphys::DeviceProfile device;
    device.cpu_freq_hz = rng.uniform(1e8, 1e9);
    netphys::DeviceProfile server;
    server.cpu_freq_hz = server.f_max_hz = 1e10;
    const netphys::ChannelParams ch;
    const double dist = rng.uniform(1, 70);
    const auto obj = static_cast<adapt::Objective>(rng.uniform_int(3));
    const auto choice = adapt::select_split_layer(profile, device, server, ch, dist, obj, 0.4);
    const double r = netphys::link_rate_bps(ch, dist);
    std::size_t best = 0;
    double best_score = INFINITY;
    for (const auto& c : profile.cuts) {
      const double t = c.device_flops / device.cpu_freq_hz + c.up_bits / r + c.down_bits / r +
                       c.server_flops / server.cpu_freq_hz;
      const double e = device.kappa * c.device_flops * device.cpu_freq_hz * device.cpu_freq_hz +
                       netphys::tx_power_watts(ch) * c.up_bits / r;
      const double s = obj == adapt::Objective::kLatency  ? t
                       : obj == adapt::Objective::kEnergy ? e
                                                          : 0.4 * t + 0.6 * e;
      if (s < best_score) {
        best_score = s;
        best = c.cut;
      }
    }
    argmin_ok += choice.cut == best;
  }

  double bw_spread = 0.0;
  bool bw_sum = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<adapt::BandwidthDemand> d(1 + rng.uniform_int(16));
    for (auto& c : d) c = {rng.uniform(1e3, 1e7), rng.uniform(0.1, 15.0)};
    const double total = rng.uniform(1e5, 1e8);
    const auto s = adapt::allocate_bandwidth(d, total);
    bw_sum = bw_sum && std::accumulate(s.begin(), s.end(), 0.0) == total;
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double t = d[i].payload_bits / (s[i] * d[i].spectral_efficiency);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    bw_spread = std::max(bw_spread, (hi - lo) / hi);
  }

  int freq_ok = 0, infeasible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    netphys::DeviceProfile dev;
    dev.f_min_hz = rng.uniform(1e7, 1e8);
    dev.f_max_hz = dev.cpu_freq_hz = rng.uniform(1e9, 3e9);
    const double cycles = rng.uniform(1e7, 5e9);
    const double deadline = rng.uniform(0.01, 5.0);
    if (cycles / dev.f_max_hz > deadline) {
      ++infeasible;
      try {
        adapt::allocate_frequency(cycles, deadline, dev);
      } catch (const InfeasibleError&) {
        ++freq_ok;
      }
      continue;
    }
    const double want = std::clamp(cycles / deadline, dev.f_min_hz, dev.f_max_hz);
    freq_ok += adapt::allocate_frequency(cycles, deadline, dev) == want;
  }
  const bool ok = argmin_ok == 100 && bw_sum && bw_spread <= 1e-9 && freq_ok == 100 &&
                  infeasible > 0;
  return {ok, "split argmin " + std::to_string(argmin_ok) + "/100, bandwidth spread " +
                  fmt("%.2g", bw_spread) + (bw_sum ? " exact sum" : " SUM MISMATCH") +
                  ", frequency " + std::to_string(freq_ok) + "/100 (" +
                  std::to_string(infeasible) + " infeasible)"};
}

// ---------------------------------------------------------------- 9

Outcome quantizer() {
  std::string d;
  bool ok = true;
  for (unsigned b : {4u, 8u}) {
    sim::RngStream rng(b, "acceptance.quant");
    Tensor t({100000});
    for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
    const auto q = adapt::quantize_uniform(t, adapt::QuantizerConfig{b, 1.0});
    double se = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) se += std::pow(q.dequantized[i] - t[i], 2);
    const double rmse = std::sqrt(se / static_cast<double>(t.size()));
    const double want = 2.0 / (std::pow(2.0, b) - 1.0) / std::sqrt(12.0);
    ok = ok && std::abs(rmse / want - 1.0) <= 0.1;
    d += "b=" + std::to_string(b) + " rmse/theory " + fmt("%.4f", rmse / want) + ", ";
  }
  double lossless = 0.0, quant = 0.0;
  std::uint64_t bits_full = 0, bits_q = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto full = shipped("sync");
    auto q = shipped("quantized_sync");
    full.seed = q.seed = seed;
    const auto rf = wb::run_experiment_full(full);
    const auto rq = wb::run_experiment_full(q);
    lossless += rf.rows.back().test_acc / 5.0;
    quant += rq.rows.back().test_acc / 5.0;
    bits_full += rf.traffic.smashed_up_bits;
    bits_q += rq.traffic.smashed_up_bits;
  }
  ok = ok && quant >= lossless - 0.02 && bits_full == 8 * bits_q;
  d += "8-bit acc " + fmt("%.4f", quant) + " vs lossless " + fmt("%.4f", lossless) +
       ", uplink smashed bits ratio " +
       fmt("%.3f", static_cast<double>(bits_full) / static_cast<double>(bits_q));
  return {ok, d};
}

// ---------------------------------------------------------------- 10

Outcome determinism() {
  auto cfg = shipped("async_budget");
  cfg.budget_sync_rounds = 40;
  const std::string run_a = format_csv(wb::run_experiment(cfg));
  const std::string run_b = format_csv(wb::run_experiment(cfg));

  const wb::SweepSpec spec{"/channel/packet_loss_rate", {0.0, 0.2}, {1, 2, 3}};
  std::vector<std::optional<double>> values;
  const auto configs = wb::sweep_configs(cfg, spec, &values);
  const std::string sweep_a = format_csv(wb::run_all(configs, values));
  const std::string sweep_b = format_csv(wb::sweep(cfg, spec));
  std::vector<std::size_t> order(configs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937 g(5);
  std::shuffle(order.begin(), order.end(), g);
  std::vector<wb::ExperimentConfig> c2;
  std::vector<std::optional<double>> v2;
  for (auto i : order) {
    c2.push_back(configs[i]);
    v2.push_back(values[i]);
  }
  const std::string sweep_shuffled = format_csv(wb::run_all(c2, v2));
  const bool ok = run_a == run_b && sweep_a == sweep_b && sweep_a == sweep_shuffled;
  return {ok, std::string("run repeat ") + (run_a == run_b ? "identical" : "DIFFERS") +
                  ", sweep repeat " + (sweep_a == sweep_b ? "identical" : "DIFFERS") +
                  ", shuffled order " + (sweep_a == sweep_shuffled ? "identical" : "DIFFERS") +
                  " (" + std::to_string(sweep_a.size()) + " bytes)"};
}

// ---------------------------------------------------------------- 11

Outcome async_volatility() {
  auto cfg = shipped("async");
  const auto built = wb::build_experiment(cfg);
  double lo = INFINITY, hi = 0.0;
  for (const auto& c : built.env.clients) {
    lo = std::min(lo, c.device.cpu_freq_hz);
    hi = std::max(hi, c.device.cpu_freq_hz);
  }
  const auto r = wb::run_experiment_full(cfg);
  const auto& rounds = r.groups.at(0).rounds;
  std::size_t increases = 0;
  for (std::size_t i = 1; i < rounds.size(); ++i) {
    increases += rounds[i].mean_loss > rounds[i - 1].mean_loss;
  }
  return {hi > lo && increases > 0,
          "device speed ratio " + fmt("%.2f", hi / lo) + ", " + std::to_string(increases) +
              " round-over-round loss increases in " + std::to_string(rounds.size()) +
              " rounds, max staleness " + fmt("%.0f", r.groups[0].max_staleness)};
}

}  // namespace
}  // namespace fedsl

int main() {
  using namespace fedsl;
  int failed = 0;
  auto report = [&](int id, const char* name, double limit_s, const std::function<Outcome()>& f) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = limit_s <= 0.0 || secs < limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s  %s: %s [%.1f s%s]\n", id, pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), secs,
                limit_s > 0.0 ? (in_time ? " within limit" : " OVER LIMIT") : "");
    std::fflush(stdout);
  };

  report(1, "split equivalence", 10.0, split_equivalence);
  report(2, "gradient exactness", 30.0, gradient_exactness);
  report(3, "degeneracy ladder", 0.0, degeneracy_ladder);
  report(4, "sync convergence", 120.0, convergence);

  AccuracyGrid grid;
  std::string sweep_error;
  report(5, "fixed-budget ordering", 900.0, [&] {
    try {
      grid = fixed_budget_sweep();
    } catch (const std::exception& e) {
      sweep_error = e.what();
      throw;
    }
    return ordering(grid);
  });
  report(6, "monotone degradation", 0.0, [&] {
    if (!sweep_error.empty()) throw Error(sweep_error);
    return monotone(grid);
  });

  report(7, "channel math", 0.0, channel_math);
  report(8, "optimizer oracles", 0.0, optimizer_oracles);
  report(9, "quantizer", 0.0, quantizer);
  report(10, "determinism", 0.0, determinism);
  report(11, "async volatility", 0.0, async_volatility);

  std::printf("%s: %d of 11 criteria failed\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}
