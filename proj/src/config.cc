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

#include "fedsl/config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "fedsl/error.h"
#include "fedsl/nn.h"
#include "fedsl/split.h"

namespace fedsl::workbench {

using nlohmann::json;

netphys::DeviceProfile ServerConfig::profile() const {
  netphys::DeviceProfile p;
  p.cpu_freq_hz = cpu_freq_hz;
  p.cycles_per_flop = cycles_per_flop;
  p.kappa = kappa;
  p.f_min_hz = cpu_freq_hz;
  p.f_max_hz = cpu_freq_hz;
  return p;
}

namespace {

[[noreturn]] void fail(const std::string& ptr, const std::string& msg) {
  throw ConfigError(ptr.empty() ? "/" : ptr, msg);
}

void read(const json& j, const std::string& ptr, double& out) {
  if (!j.is_number()) fail(ptr, "expected a number");
  out = j.get<double>();
  if (!std::isfinite(out)) fail(ptr, "expected a finite number");
}

template <typename T>
  requires std::is_unsigned_v<T>
void read(const json& j, const std::string& ptr, T& out) {
  if (j.is_number_unsigned()) {
    out = j.get<T>();
    return;
  }
  if (j.is_number_integer()) fail(ptr, "expected a non-negative integer");
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= 0.0 && v == std::floor(v) && v < 1.8e19) {
      out = static_cast<T>(v);
      return;
    }
  }
  fail(ptr, "expected a non-negative integer");
}

void read(const json& j, const std::string& ptr, bool& out) {
  if (!j.is_boolean()) fail(ptr, "expected a boolean");
  out = j.get<bool>();
}

void read(const json& j, const std::string& ptr, std::string& out) {
  if (!j.is_string()) fail(ptr, "expected a string");
  out = j.get<std::string>();
}

void read(const json& j, const std::string& ptr, ModelConfig& m);
void read(const json& j, const std::string& ptr, ClusterConfig& c);
void read(const json& j, const std::string& ptr, DeviceOverride& d);

template <typename T>
void read(const json& j, const std::string& ptr, std::optional<T>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, ptr, v);
  out = v;
}

template <typename T>
void read(const json& j, const std::string& ptr, std::vector<T>& out) {
  if (!j.is_array()) fail(ptr, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    read(j[i], ptr + "/" + std::to_string(i), v);
    out.push_back(std::move(v));
  }
}

// Object reader that remembers which keys were consumed.
class Obj {
 public:
  Obj(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) fail(ptr_, "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it != j_.end()) read(*it, at(key), out);
  }

  const json* child(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> used_;
};

void read(const json& j, const std::string& ptr, ModelConfig& m) {
  Obj o(j, ptr);
  o.get("hidden", m.hidden);
  o.get("cuts", m.cuts);
  o.finish();
}

void read(const json& j, const std::string& ptr, ClusterConfig& c) {
  Obj o(j, ptr);
  o.get("size", c.size);
  if (const json* m = o.child("model")) read(*m, o.at("model"), c.model);
  o.finish();
}

void read(const json& j, const std::string& ptr, DeviceOverride& d) {
  Obj o(j, ptr);
  o.get("client", d.client);
  o.get("cpu_freq_hz", d.cpu_freq_hz);
  o.get("packet_loss_rate", d.packet_loss_rate);
  o.get("x_m", d.x_m);
  o.get("y_m", d.y_m);
  o.finish();
}

void read(const json& j, const std::string& ptr, ServerConfig& s) {
  Obj o(j, ptr);
  o.get("cpu_freq_hz", s.cpu_freq_hz);
  o.get("cycles_per_flop", s.cycles_per_flop);
  o.get("kappa", s.kappa);
  o.finish();
}

void read_framework(const json& j, const std::string& ptr, fl::FrameworkConfig& f) {
  Obj o(j, ptr);
  std::string kind(fl::to_string(f.kind));
  o.get("kind", kind);
  auto parsed = fl::parse_framework_kind(kind);
  if (!parsed) fail(o.at("kind"), "unknown framework '" + kind + "'");
  f.kind = *parsed;
  o.get("num_clients", f.num_clients);
  o.get("k", f.k);
  o.get("aggregation_period_rounds", f.aggregation_period_rounds);
  o.get("local_iters", f.local_iters);
  o.get("batch_size", f.batch_size);
  o.get("lr", f.lr);
  o.get("staleness_exponent", f.staleness_exponent);
  o.get("max_retransmissions", f.max_retransmissions);
  o.get("sequential_timeout_factor", f.sequential_timeout_factor);
  if (const json* d = o.child("distill")) {
    Obj od(*d, o.at("distill"));
    od.get("period", f.distill.period);
    od.get("temperature", f.distill.temperature);
    od.get("weight", f.distill.weight);
    od.get("public_size", f.distill.public_size);
    od.get("steps", f.distill.steps);
    od.get("batch", f.distill.batch);
    od.get("lr", f.distill.lr);
    od.finish();
  }
  if (const json* q = o.child("quantization")) {
    Obj oq(*q, o.at("quantization"));
    oq.get("enabled", f.quantization.enabled);
    oq.get("bits", f.quantization.bits);
    oq.finish();
  }
  o.finish();
}

std::string noise_name(netphys::NoiseModel m) {
  return m == netphys::NoiseModel::kPerHz ? "per_hz" : "total";
}

std::string partition_name(Partition p) {
  return p == Partition::kDirichlet ? "dirichlet" : "uniform";
}

ExperimentConfig from_json(const json& root) {
  ExperimentConfig cfg;
  Obj o(root, "");
  if (const json* f = o.child("framework")) read_framework(*f, "/framework", cfg.framework);
  if (const json* m = o.child("model")) read(*m, "/model", cfg.model);
  o.get("clusters", cfg.clusters);
  if (const json* c = o.child("channel")) {
    Obj oc(*c, "/channel");
    oc.get("bandwidth_hz", cfg.channel.bandwidth_hz);
    oc.get("tx_power_dbm", cfg.channel.tx_power_dbm);
    oc.get("noise_dbm", cfg.channel.noise_dbm);
    std::string noise = noise_name(cfg.channel.noise_model);
    oc.get("noise_model", noise);
    if (noise == "total") {
      cfg.channel.noise_model = netphys::NoiseModel::kTotalPower;
    } else if (noise == "per_hz") {
      cfg.channel.noise_model = netphys::NoiseModel::kPerHz;
    } else {
      fail("/channel/noise_model", "expected \"total\" or \"per_hz\"");
    }
    oc.get("pl0_db", cfg.channel.pl0_db);
    oc.get("ref_distance_m", cfg.channel.ref_dist_m);
    oc.get("path_loss_exponent", cfg.channel.pl_exponent);
    oc.get("packet_loss_rate", cfg.channel.packet_loss_rate);
    oc.finish();
  }
  if (const json* d = o.child("devices")) {
    Obj od(*d, "/devices");
    od.get("cpu_freq_hz", cfg.devices.cpu_freq_hz);
    od.get("heterogeneity", cfg.devices.heterogeneity);
    od.get("cycles_per_flop", cfg.devices.cycles_per_flop);
    od.get("kappa", cfg.devices.kappa);
    od.get("f_min_hz", cfg.devices.f_min_hz);
    od.get("f_max_hz", cfg.devices.f_max_hz);
    od.get("min_distance_m", cfg.devices.min_distance_m);
    od.get("overrides", cfg.devices.overrides);
    od.finish();
  }
  if (const json* e = o.child("edge")) read(*e, "/edge", cfg.edge);
  if (const json* c = o.child("cloud")) read(*c, "/cloud", cfg.cloud);
  if (const json* w = o.child("wired")) {
    Obj ow(*w, "/wired");
    ow.get("rate_bps", cfg.wired.rate_bps);
    ow.get("latency_s", cfg.wired.latency_s);
    ow.finish();
  }
  if (const json* a = o.child("arena")) {
    Obj oa(*a, "/arena");
    oa.get("width_m", cfg.arena.width_m);
    oa.get("height_m", cfg.arena.height_m);
    oa.get("server_x_m", cfg.arena.server.x);
    oa.get("server_y_m", cfg.arena.server.y);
    oa.finish();
  }
  if (const json* d = o.child("data")) {
    Obj od(*d, "/data");
    od.get("n_train", cfg.data.n_train);
    od.get("n_test", cfg.data.n_test);
    od.get("dims", cfg.data.dims);
    od.get("classes", cfg.data.classes);
    od.get("spread", cfg.data.spread);
    std::string part = partition_name(cfg.data.partition);
    od.get("partition", part);
    if (part == "uniform") {
      cfg.data.partition = Partition::kUniform;
    } else if (part == "dirichlet") {
      cfg.data.partition = Partition::kDirichlet;
    } else {
      fail("/data/partition", "expected \"uniform\" or \"dirichlet\"");
    }
    od.get("dirichlet_alpha", cfg.data.dirichlet_alpha);
    od.finish();
  }
  o.get("seed", cfg.seed);
  o.get("rounds", cfg.rounds);
  o.get("time_budget_s", cfg.time_budget_s);
  o.get("budget_sync_rounds", cfg.budget_sync_rounds);
  o.get("eval_every", cfg.eval_every);
  o.finish();
  finalize(cfg);
  return cfg;
}

json model_json(const ModelConfig& m) {
  return json{{"hidden", m.hidden}, {"cuts", m.cuts}};
}

json server_json(const ServerConfig& s) {
  return json{{"cpu_freq_hz", s.cpu_freq_hz},
              {"cycles_per_flop", s.cycles_per_flop},
              {"kappa", s.kappa}};
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json to_json(const ExperimentConfig& cfg) {
  const auto& f = cfg.framework;
  json j;
  j["framework"] = {
      {"kind", std::string(fl::to_string(f.kind))},
      {"num_clients", f.num_clients},
      {"k", f.k},
      {"aggregation_period_rounds", f.aggregation_period_rounds},
      {"local_iters", f.local_iters},
      {"batch_size", f.batch_size},
      {"lr", f.lr},
      {"staleness_exponent", f.staleness_exponent},
      {"max_retransmissions", opt_json(f.max_retransmissions)},
      {"sequential_timeout_factor", f.sequential_timeout_factor},
      {"distill",
       {{"period", f.distill.period},
        {"temperature", f.distill.temperature},
        {"weight", f.distill.weight},
        {"public_size", f.distill.public_size},
        {"steps", f.distill.steps},
        {"batch", f.distill.batch},
        {"lr", f.distill.lr}}},
      {"quantization", {{"enabled", f.quantization.enabled}, {"bits", f.quantization.bits}}},
  };
  j["model"] = model_json(cfg.model);
  j["clusters"] = json::array();
  for (const auto& c : cfg.clusters) {
    j["clusters"].push_back({{"size", c.size}, {"model", model_json(c.model)}});
  }
  const auto& ch = cfg.channel;
  j["channel"] = {{"bandwidth_hz", ch.bandwidth_hz},
                  {"tx_power_dbm", ch.tx_power_dbm},
                  {"noise_dbm", ch.noise_dbm},
                  {"noise_model", noise_name(ch.noise_model)},
                  {"pl0_db", ch.pl0_db},
                  {"ref_distance_m", ch.ref_dist_m},
                  {"path_loss_exponent", ch.pl_exponent},
                  {"packet_loss_rate", ch.packet_loss_rate}};
  json overrides = json::array();
  for (const auto& o : cfg.devices.overrides) {
    overrides.push_back({{"client", o.client},
                         {"cpu_freq_hz", opt_json(o.cpu_freq_hz)},
                         {"packet_loss_rate", opt_json(o.packet_loss_rate)},
                         {"x_m", opt_json(o.x_m)},
                         {"y_m", opt_json(o.y_m)}});
  }
  const auto& d = cfg.devices;
  j["devices"] = {{"cpu_freq_hz", d.cpu_freq_hz},
                  {"heterogeneity", d.heterogeneity},
                  {"cycles_per_flop", d.cycles_per_flop},
                  {"kappa", d.kappa},
                  {"f_min_hz", d.f_min_hz},
                  {"f_max_hz", d.f_max_hz},
                  {"min_distance_m", d.min_distance_m},
                  {"overrides", overrides}};
  j["edge"] = server_json(cfg.edge);
  j["cloud"] = server_json(cfg.cloud);
  j["wired"] = {{"rate_bps", cfg.wired.rate_bps}, {"latency_s", cfg.wired.latency_s}};
  j["arena"] = {{"width_m", cfg.arena.width_m},
                {"height_m", cfg.arena.height_m},
                {"server_x_m", cfg.arena.server.x},
                {"server_y_m", cfg.arena.server.y}};
  j["data"] = {{"n_train", cfg.data.n_train},
               {"n_test", cfg.data.n_test},
               {"dims", cfg.data.dims},
               {"classes", cfg.data.classes},
               {"spread", cfg.data.spread},
               {"partition", partition_name(cfg.data.partition)},
               {"dirichlet_alpha", cfg.data.dirichlet_alpha}};
  j["seed"] = cfg.seed;
  j["rounds"] = opt_json(cfg.rounds);
  j["time_budget_s"] = opt_json(cfg.time_budget_s);
  j["budget_sync_rounds"] = opt_json(cfg.budget_sync_rounds);
  j["eval_every"] = cfg.eval_every;
  return j;
}

void check_model(const ModelConfig& m, const DataConfig& data, const std::string& ptr,
                 std::size_t required_cuts) {
  if (m.hidden.empty()) fail(ptr + "/hidden", "at least one hidden layer is required");
  for (std::size_t i = 0; i < m.hidden.size(); ++i) {
    if (m.hidden[i] == 0) fail(ptr + "/hidden/" + std::to_string(i), "width must be >= 1");
  }
  if (m.cuts.size() != required_cuts) {
    fail(ptr + "/cuts", "expected " + std::to_string(required_cuts) + " cut(s)");
  }
  try {
    const auto spec = nn::make_mlp(data.dims, m.hidden, data.classes);
    split::SplitPlan{m.cuts}.validate(spec);
  } catch (const ValidationError& e) {
    fail(ptr + "/cuts", e.what());
  }
}

void require(bool ok, const std::string& ptr, const std::string& msg) {
  if (!ok) fail(ptr, msg);
}

}  // namespace

void finalize(ExperimentConfig& cfg) {
  auto& f = cfg.framework;
  const bool hier = f.kind == fl::FrameworkKind::kHierarchical;
  const bool hetero = f.kind == fl::FrameworkKind::kHeterogeneous;

  require(f.num_clients >= 1, "/framework/num_clients", "must be >= 1");
  require(f.k >= 1 && f.k <= f.num_clients, "/framework/k", "must satisfy 1 <= k <= num_clients");
  if (f.kind == fl::FrameworkKind::kAsyncThreshold) {
    require(f.k > 1, "/framework/k", "threshold aggregation needs k > 1");
  }
  require(f.aggregation_period_rounds >= 1, "/framework/aggregation_period_rounds",
          "must be >= 1");
  require(f.local_iters >= 1, "/framework/local_iters", "must be >= 1");
  require(f.batch_size >= 1, "/framework/batch_size", "must be >= 1");
  require(f.lr >= 0.0, "/framework/lr", "must be >= 0");
  require(f.staleness_exponent >= 0.0, "/framework/staleness_exponent", "must be >= 0");
  require(f.sequential_timeout_factor > 0.0, "/framework/sequential_timeout_factor",
          "must be > 0");
  require(f.distill.period >= 1, "/framework/distill/period", "must be >= 1");
  if (hetero) {
    require(f.distill.period % f.aggregation_period_rounds == 0, "/framework/distill/period",
            "must be a multiple of aggregation_period_rounds");
  }
  require(f.distill.temperature > 0.0, "/framework/distill/temperature", "must be > 0");
  require(f.distill.weight >= 0.0 && f.distill.weight <= 1.0, "/framework/distill/weight",
          "must lie in [0, 1]");
  require(f.distill.public_size >= 1, "/framework/distill/public_size", "must be >= 1");
  require(f.distill.batch >= 1, "/framework/distill/batch", "must be >= 1");
  require(f.distill.lr >= 0.0, "/framework/distill/lr", "must be >= 0");
  require(f.quantization.bits >= 1 && f.quantization.bits <= 16,
          "/framework/quantization/bits", "must lie in [1, 16]");

  const auto& d = cfg.data;
  require(d.dims >= 2, "/data/dims", "must be >= 2");
  require(d.classes >= 2, "/data/classes", "must be >= 2");
  require(d.classes <= d.dims, "/data/classes", "must not exceed dims");
  require(d.n_train >= f.num_clients, "/data/n_train", "must be >= num_clients");
  require(d.n_test >= 1, "/data/n_test", "must be >= 1");
  require(d.spread >= 0.0, "/data/spread", "must be >= 0");
  require(d.dirichlet_alpha > 0.0, "/data/dirichlet_alpha", "must be > 0");

  if (cfg.model.cuts.empty()) {
    cfg.model.cuts = hier ? std::vector<std::size_t>{2, 6} : std::vector<std::size_t>{4};
  }
  check_model(cfg.model, d, "/model", hier ? 2 : 1);

  if (hetero) {
    if (cfg.clusters.empty()) {
      const std::size_t half = f.num_clients / 2;
      cfg.clusters.push_back({half, cfg.model});
      cfg.clusters.push_back({f.num_clients - half, ModelConfig{{32, 48, 32}, {2}}});
    }
    require(cfg.clusters.size() >= 2, "/clusters", "needs at least two clusters");
    std::size_t total = 0;
    for (std::size_t i = 0; i < cfg.clusters.size(); ++i) {
      const std::string ptr = "/clusters/" + std::to_string(i);
      auto& c = cfg.clusters[i];
      require(c.size >= 1, ptr + "/size", "must be >= 1");
      if (c.model.cuts.empty()) c.model.cuts = {4};
      check_model(c.model, d, ptr + "/model", 1);
      total += c.size;
    }
    require(total == f.num_clients, "/clusters", "cluster sizes must sum to num_clients");
  } else {
    require(cfg.clusters.empty(), "/clusters", "only the heterogeneous framework uses clusters");
  }

  const auto& ch = cfg.channel;
  require(ch.bandwidth_hz > 0.0, "/channel/bandwidth_hz", "must be > 0");
  require(ch.ref_dist_m > 0.0, "/channel/ref_distance_m", "must be > 0");
  require(ch.pl_exponent >= 0.0, "/channel/path_loss_exponent", "must be >= 0");
  require(ch.packet_loss_rate >= 0.0 && ch.packet_loss_rate <= 1.0,
          "/channel/packet_loss_rate", "must lie in [0, 1]");

  const auto& dev = cfg.devices;
  require(dev.f_min_hz > 0.0, "/devices/f_min_hz", "must be > 0");
  require(dev.f_max_hz >= dev.f_min_hz, "/devices/f_max_hz", "must be >= f_min_hz");
  require(dev.cpu_freq_hz >= dev.f_min_hz && dev.cpu_freq_hz <= dev.f_max_hz,
          "/devices/cpu_freq_hz", "must lie in [f_min_hz, f_max_hz]");
  require(dev.heterogeneity >= 1.0, "/devices/heterogeneity", "must be >= 1");
  require(dev.cpu_freq_hz / dev.heterogeneity >= dev.f_min_hz, "/devices/heterogeneity",
          "slowest device would fall below f_min_hz");
  require(dev.cycles_per_flop > 0.0, "/devices/cycles_per_flop", "must be > 0");
  require(dev.kappa > 0.0, "/devices/kappa", "must be > 0");
  require(dev.min_distance_m > 0.0, "/devices/min_distance_m", "must be > 0");

  const auto& a = cfg.arena;
  require(a.width_m > 0.0, "/arena/width_m", "must be > 0");
  require(a.height_m > 0.0, "/arena/height_m", "must be > 0");
  require(a.server.x >= 0.0 && a.server.x <= a.width_m, "/arena/server_x_m",
          "must lie inside the arena");
  require(a.server.y >= 0.0 && a.server.y <= a.height_m, "/arena/server_y_m",
          "must lie inside the arena");

  for (std::size_t i = 0; i < dev.overrides.size(); ++i) {
    const std::string ptr = "/devices/overrides/" + std::to_string(i);
    const auto& o = dev.overrides[i];
    require(o.client < f.num_clients, ptr + "/client", "no such client");
    if (o.cpu_freq_hz) {
      require(*o.cpu_freq_hz >= dev.f_min_hz && *o.cpu_freq_hz <= dev.f_max_hz,
              ptr + "/cpu_freq_hz", "must lie in [f_min_hz, f_max_hz]");
    }
    if (o.packet_loss_rate) {
      require(*o.packet_loss_rate >= 0.0 && *o.packet_loss_rate <= 1.0,
              ptr + "/packet_loss_rate", "must lie in [0, 1]");
    }
    if (o.x_m) require(*o.x_m >= 0.0 && *o.x_m <= a.width_m, ptr + "/x_m", "outside arena");
    if (o.y_m) require(*o.y_m >= 0.0 && *o.y_m <= a.height_m, ptr + "/y_m", "outside arena");
  }

  for (const auto* s : {&cfg.edge, &cfg.cloud}) {
    const std::string ptr = s == &cfg.edge ? "/edge" : "/cloud";
    require(s->cpu_freq_hz > 0.0, ptr + "/cpu_freq_hz", "must be > 0");
    require(s->cycles_per_flop > 0.0, ptr + "/cycles_per_flop", "must be > 0");
    require(s->kappa > 0.0, ptr + "/kappa", "must be > 0");
  }
  require(cfg.wired.rate_bps > 0.0, "/wired/rate_bps", "must be > 0");
  require(cfg.wired.latency_s >= 0.0, "/wired/latency_s", "must be >= 0");

  if (cfg.rounds) {
    require(*cfg.rounds >= 1, "/rounds", "must be >= 1");
  } else {
    require(cfg.time_budget_s || cfg.budget_sync_rounds, "/rounds",
            "may only be null when a time budget is set");
  }
  if (cfg.time_budget_s) require(*cfg.time_budget_s > 0.0, "/time_budget_s", "must be > 0");
  if (cfg.budget_sync_rounds) {
    require(*cfg.budget_sync_rounds >= 1, "/budget_sync_rounds", "must be >= 1");
    require(!cfg.time_budget_s, "/budget_sync_rounds",
            "cannot be combined with an explicit time_budget_s");
  }
  require(cfg.eval_every >= 1, "/eval_every", "must be >= 1");

  try {
    f.validate();
  } catch (const ValidationError& e) {
    fail("/framework", e.what());
  }
}

ExperimentConfig config_from_json_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string detail = e.what();
    if (const auto pos = detail.find(": "); pos != std::string::npos) detail.erase(0, pos + 2);
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "parse error at line " + std::to_string(line) + ", column " +
                              std::to_string(col) + ": " + detail);
  }
  return from_json(root);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("", "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return config_from_json_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.pointer(), e.message(), path);
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

ExperimentConfig with_value(const ExperimentConfig& cfg, const std::string& pointer,
                            double value) {
  json j = to_json(cfg);
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(pointer);
  } catch (const json::exception&) {
    throw ValidationError("malformed axis path '" + pointer + "'");
  }
  if (!j.contains(ptr)) throw ValidationError("unknown axis path '" + pointer + "'");
  json& leaf = j[ptr];
  if (leaf.is_number_unsigned() || leaf.is_number_integer()) {
    if (value < 0.0 || value != std::floor(value)) {
      throw ValidationError("axis '" + pointer + "' takes non-negative integers");
    }
    leaf = static_cast<std::uint64_t>(value);
  } else if (leaf.is_number() || leaf.is_null()) {
    leaf = value;
  } else {
    throw ValidationError("axis path '" + pointer + "' is not a numeric leaf");
  }
  return from_json(j);
}

}  // namespace fedsl::workbench
