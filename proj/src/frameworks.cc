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

#include "fedsl/frameworks.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>

#include "fedsl/adapt.h"
#include "fedsl/data.h"
#include "fedsl/error.h"

namespace fedsl::fl {

std::string_view to_string(FrameworkKind kind) {
  switch (kind) {
    case FrameworkKind::kSync:
      return "sync";
    case FrameworkKind::kSequential:
      return "sequential";
    case FrameworkKind::kAsyncThreshold:
      return "async";
    case FrameworkKind::kHierarchical:
      return "hierarchical";
    case FrameworkKind::kHeterogeneous:
      return "heterogeneous";
  }
  return "unknown";
}

std::optional<FrameworkKind> parse_framework_kind(std::string_view name) {
  for (auto k : {FrameworkKind::kSync, FrameworkKind::kSequential,
                 FrameworkKind::kAsyncThreshold, FrameworkKind::kHierarchical,
                 FrameworkKind::kHeterogeneous}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void FrameworkConfig::validate() const {
  if (num_clients < 1) throw ValidationError("num_clients must be >= 1");
  if (k < 1 || k > num_clients) throw ValidationError("k must satisfy 1 <= k <= N");
  if (local_iters < 1) throw ValidationError("local_iters must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (aggregation_period_rounds < 1) {
    throw ValidationError("aggregation_period_rounds must be >= 1");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be >= 0");
  if (!(staleness_exponent >= 0.0)) {
    throw ValidationError("staleness_exponent must be >= 0");
  }
  if (!(sequential_timeout_factor > 0.0)) {
    throw ValidationError("sequential_timeout_factor must be positive");
  }
  if (!(distill.temperature > 0.0)) throw ValidationError("distill temperature must be > 0");
  if (!(distill.weight >= 0.0 && distill.weight <= 1.0)) {
    throw ValidationError("distill weight must lie in [0, 1]");
  }
  if (distill.period < 1 || distill.public_size < 1 || distill.batch < 1) {
    throw ValidationError("distill period, public_size and batch must be >= 1");
  }
  if (!(distill.lr >= 0.0)) throw ValidationError("distill lr must be >= 0");
  if (kind == FrameworkKind::kHeterogeneous &&
      distill.period % aggregation_period_rounds != 0) {
    throw ValidationError("distill period must be a multiple of the aggregation period");
  }
  if (quantization.bits < 1 || quantization.bits > 16) {
    throw ValidationError("quantization bits must be in [1, 16]");
  }
}

double staleness_weight(double tau, double a) {
  if (!(tau >= 0.0) || !(a >= 0.0)) {
    throw ValidationError("staleness weight needs tau >= 0 and a >= 0");
  }
  return std::pow(1.0 + tau, -a);
}

nn::ParamSet fedavg(std::span<const Update> updates, double staleness_exponent) {
  if (updates.empty()) throw ValidationError("fedavg: no updates");
  std::vector<double> w(updates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    if (updates[i].sample_count == 0) {
      throw ValidationError("fedavg: update with zero samples");
    }
    if (!updates[i].params.congruent(updates[0].params)) {
      throw DimensionError("fedavg: updates are not shape-congruent");
    }
    w[i] = static_cast<double>(updates[i].sample_count) *
           staleness_weight(static_cast<double>(updates[i].staleness),
                            staleness_exponent);
    total += w[i];
  }
  for (double& v : w) v /= total;
  nn::ParamSet out = updates[0].params;
  auto blend = [&](auto member) {
    for (std::size_t t = 0; t < (out.*member).size(); ++t) {
      auto dst = (out.*member)[t].data();
      const auto anchor = (updates[0].params.*member)[t].data();
      for (std::size_t j = 0; j < dst.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 1; i < updates.size(); ++i) {
          acc += w[i] * ((updates[i].params.*member)[t][j] - anchor[j]);
        }
        dst[j] = anchor[j] + acc;
      }
    }
  };
  blend(&nn::ParamSet::weights);
  blend(&nn::ParamSet::biases);
  return out;
}

namespace {

std::vector<double> log_softmax_row(const Tensor& z, std::size_t n, double t) {
  const std::size_t classes = z.cols();
  double m = z.at(n, 0) / t;
  for (std::size_t c = 1; c < classes; ++c) m = std::max(m, z.at(n, c) / t);
  double s = 0.0;
  for (std::size_t c = 0; c < classes; ++c) s += std::exp(z.at(n, c) / t - m);
  const double lse = m + std::log(s);
  std::vector<double> out(classes);
  for (std::size_t c = 0; c < classes; ++c) out[c] = z.at(n, c) / t - lse;
  return out;
}

// Shared by both distillation entry points. `log_q` may be empty, in which
// case log(q) is used.
nn::LossResult distill_core(const Tensor& student, const Tensor& q,
                            const std::vector<std::vector<double>>& log_q,
                            std::span<const int> labels, double temperature,
                            double lambda) {
  if (!(temperature > 0.0)) throw ValidationError("distillation temperature must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError("distillation weight must lie in [0, 1]");
  }
  if (student.rank() != 2 || !student.same_shape(q)) {
    throw DimensionError("distillation: student/teacher shape mismatch");
  }
  const std::size_t batch = student.rows();
  const std::size_t classes = student.cols();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const Tensor p = nn::softmax(student, temperature);
  nn::LossResult r{0.0, Tensor({batch, classes})};
  double kl_total = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const auto log_p = log_softmax_row(student, n, temperature);
    double kl = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double qc = q.at(n, c);
      if (qc > 0.0) {
        const double lq = log_q.empty() ? std::log(qc) : log_q[n][c];
        kl += qc * (lq - log_p[c]);
      }
      r.logit_grad.at(n, c) =
          lambda * temperature * (p.at(n, c) - qc) * inv_batch;
    }
    kl_total += kl;
  }
  r.loss = lambda * temperature * temperature * kl_total * inv_batch;
  if (!labels.empty() && lambda < 1.0) {
    const auto ce = nn::softmax_cross_entropy(student, labels);
    r.loss += (1.0 - lambda) * ce.loss;
    for (std::size_t i = 0; i < r.logit_grad.size(); ++i) {
      r.logit_grad[i] += (1.0 - lambda) * ce.logit_grad[i];
    }
  }
  return r;
}

}  // namespace

nn::LossResult distill_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                            std::span<const int> labels, double temperature,
                            double lambda) {
  if (!(temperature > 0.0)) throw ValidationError("distillation temperature must be > 0");
  if (!student_logits.same_shape(teacher_logits)) {
    throw DimensionError("distillation: class dimensions differ");
  }
  const Tensor q = nn::softmax(teacher_logits, temperature);
  std::vector<std::vector<double>> log_q;
  for (std::size_t n = 0; n < teacher_logits.rows(); ++n) {
    log_q.push_back(log_softmax_row(teacher_logits, n, temperature));
  }
  return distill_core(student_logits, q, log_q, labels, temperature, lambda);
}

nn::LossResult distill_loss_soft(const Tensor& student_logits,
                                 const Tensor& teacher_probs,
                                 std::span<const int> labels, double temperature,
                                 double lambda) {
  return distill_core(student_logits, teacher_probs, {}, labels, temperature, lambda);
}

double RunResult::final_accuracy() const {
  if (groups.empty()) return 0.0;
  double s = 0.0;
  for (const auto& g : groups) s += g.final_accuracy;
  return s / static_cast<double>(groups.size());
}

namespace {

enum Phase : std::int64_t {
  kDeviceFwd = 1,
  kSmashedUp,
  kServerDone,
  kGradDown,
  kDeviceBwd,
  kModelUp,
  kModelDown,
  kTurnTimeout,
  kAggregate,
  kDistillStart,
  kDistillDone,
};

enum class Mode { kLockstep, kThreshold, kSequential };

constexpr unsigned kFullPrecision = 64;

double flops_of(const std::vector<nn::LayerSpec>& layers, bool fwd, bool bwd) {
  double f = 0.0;
  for (const auto& l : layers) {
    if (fwd) f += static_cast<double>(l.flops_fwd());
    if (bwd) f += static_cast<double>(l.flops_bwd());
  }
  return f;
}

std::uint64_t param_bits(const nn::ParamSet& p) {
  return static_cast<std::uint64_t>(p.scalar_count()) * kFullPrecision;
}

// Static per-model quantities shared by the simulator and the timing oracle.
struct ModelCosts {
  std::vector<nn::LayerSpec> device_layers;
  std::vector<std::vector<nn::LayerSpec>> upper_layers;
  double device_fwd_flops = 0.0;  // per sample
  double device_bwd_flops = 0.0;
  std::vector<double> upper_flops;  // fwd + bwd per sample, per upper tier
  std::size_t hop_width = 0;        // activation width on the wireless hop
  std::size_t wired_width = 0;      // activation width between edge and cloud
  std::uint64_t model_bits = 0;     // device-side parameters at full precision

  ModelCosts(const ModelSetup& m) {
    m.spec.validate();
    m.plan.validate(m.spec);
    if (m.plan.cuts.empty()) throw ValidationError("split training needs a cut");
    device_layers = split::tier_layers(m.spec, m.plan, 0);
    for (std::size_t t = 1; t < m.plan.tier_count(); ++t) {
      upper_layers.push_back(split::tier_layers(m.spec, m.plan, t));
      upper_flops.push_back(flops_of(upper_layers.back(), true, true));
    }
    device_fwd_flops = flops_of(device_layers, true, false);
    device_bwd_flops = flops_of(device_layers, false, true);
    hop_width = device_layers.back().out_dim;
    if (upper_layers.size() > 1) wired_width = upper_layers[0].back().out_dim;
    model_bits = param_bits(nn::zero_params(device_layers));
  }

  unsigned hop_precision(const FrameworkConfig& cfg) const {
    return cfg.quantization.enabled ? cfg.quantization.bits : kFullPrecision;
  }

  double hop_bits(const FrameworkConfig& cfg) const {
    return static_cast<double>(cfg.batch_size * hop_width * hop_precision(cfg));
  }

  double wired_bits(const FrameworkConfig& cfg) const {
    return static_cast<double>(cfg.batch_size * wired_width * kFullPrecision);
  }

  double server_time(const FrameworkConfig& cfg, const Environment& env) const {
    const double b = static_cast<double>(cfg.batch_size);
    double t = netphys::compute_time(env.edge, upper_flops[0] * b);
    if (upper_flops.size() > 1) {
      t += 2.0 * env.wired.transfer_time(wired_bits(cfg));
      t += netphys::compute_time(env.cloud, upper_flops[1] * b);
    }
    return t;
  }
};

double client_rate(const Environment& env, const ClientSetup& c) {
  const double r = netphys::link_rate_bps(env.channel, c.distance_m);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw InfeasibleError("client " + std::to_string(c.id) + " has a zero-rate link");
  }
  return r;
}

ClientTiming timing_for(const FrameworkConfig& cfg, const Environment& env,
                        const ModelCosts& costs, const ClientSetup& c) {
  const double b = static_cast<double>(cfg.batch_size);
  const double rate = client_rate(env, c);
  ClientTiming t;
  t.device_fwd_s = netphys::compute_time(c.device, costs.device_fwd_flops * b);
  t.device_bwd_s = netphys::compute_time(c.device, costs.device_bwd_flops * b);
  t.uplink_s = costs.hop_bits(cfg) / rate;
  t.downlink_s = t.uplink_s;
  t.server_s = costs.server_time(cfg, env);
  t.model_up_s = static_cast<double>(costs.model_bits) / rate;
  t.model_down_s = t.model_up_s;
  return t;
}

struct Group {
  std::size_t id = 0;
  ModelSetup model;
  ModelCosts costs;
  std::vector<nn::ParamSet> upper_params;
  std::vector<std::size_t> members;  // client indices
  nn::ParamSet global_device;
  std::uint64_t round = 0;
  bool done = false;
  double round_start = 0.0;
  double round_loss = 0.0;
  std::size_t round_batches = 0;
  double window_loss = 0.0;
  std::size_t window_batches = 0;
  std::size_t arrived = 0;
  std::vector<double> ready_times;
  std::vector<std::size_t> buffer;
  bool aggregation_pending = false;
  bool waiting_distill = false;
  std::uint64_t version = 0;
  std::size_t turn = 0;
  GroupResult result;

  Group(std::size_t gid, ModelSetup m) : id(gid), model(std::move(m)), costs(model) {}
};

struct Client {
  std::size_t index = 0;
  const ClientSetup* setup = nullptr;
  std::size_t group = 0;
  std::size_t slot = 0;
  nn::ParamSet device;
  std::uint64_t base_round = 0;
  sim::RngStream batch_rng;
  sim::RngStream up_rng;
  sim::RngStream down_rng;
  double rate_bps = 0.0;
  ClientTiming timing;
  std::uint64_t gen = 0;
  std::size_t iter = 0;
  nn::ForwardCache cache;
  Tensor smashed;
  std::vector<int> labels;
  Tensor cut_grad;
  std::uint64_t attempts = 0;
  nn::ParamSet incoming;
  std::uint64_t incoming_round = 0;
  std::uint64_t synced_version = 0;
  bool dirty = false;
  bool failed = false;

  Client(const ClientSetup& s)
      : setup(&s),
        batch_rng(0, "batch.client" + std::to_string(s.id)),
        up_rng(0, "loss.up.client" + std::to_string(s.id)),
        down_rng(0, "loss.down.client" + std::to_string(s.id)) {}
};

class Orchestrator {
 public:
  Orchestrator(const FrameworkConfig& cfg, const Environment& env,
               const std::vector<ClusterSetup>& clusters, Mode mode, const RunLimits& limits,
               const RunOptions& options, std::uint64_t stream_seed)
      : cfg_(cfg), env_(env), mode_(mode), limits_(limits), options_(options) {
    cfg_.validate();
    env_.channel.validate();
    if (limits_.eval_every < 1) throw ValidationError("eval_every must be >= 1");
    std::unordered_map<int, std::size_t> seen;
    for (std::size_t i = 0; i < env_.clients.size(); ++i) {
      const auto& s = env_.clients[i];
      if (!seen.emplace(s.id, i).second) {
        throw ValidationError("duplicate client id " + std::to_string(s.id));
      }
      s.device.validate();
      if (s.shard.size() == 0) {
        throw ValidationError("client " + std::to_string(s.id) + " has an empty shard");
      }
      if (!(s.loss_rate >= 0.0 && s.loss_rate <= 1.0)) {
        throw ValidationError("client loss rate must lie in [0, 1]");
      }
    }
    for (const auto& s : env_.clients) {
      clients_.emplace_back(s);
      Client& c = clients_.back();
      c.index = clients_.size() - 1;
      c.batch_rng = sim::RngStream(stream_seed, c.batch_rng.label());
      c.up_rng = sim::RngStream(stream_seed, c.up_rng.label());
      c.down_rng = sim::RngStream(stream_seed, c.down_rng.label());
      id_to_index_[s.id] = c.index;
    }
    std::vector<bool> assigned(clients_.size(), false);
    for (std::size_t g = 0; g < clusters.size(); ++g) {
      const auto& cl = clusters[g];
      if (cl.members.empty()) throw ValidationError("cluster without members");
      groups_.emplace_back(g, cl.model);
      Group& grp = groups_.back();
      auto segs = split::partition(grp.model.spec, grp.model.init, grp.model.plan);
      grp.global_device = segs[0].params;
      for (std::size_t t = 1; t < segs.size(); ++t) {
        grp.upper_params.push_back(std::move(segs[t].params));
      }
      grp.members = cl.members;
      grp.ready_times.assign(cl.members.size(), 0.0);
      for (std::size_t slot = 0; slot < cl.members.size(); ++slot) {
        const std::size_t ci = cl.members[slot];
        if (ci >= clients_.size() || assigned[ci]) {
          throw ValidationError("cluster members must partition the clients");
        }
        assigned[ci] = true;
        Client& c = clients_[ci];
        c.group = g;
        c.slot = slot;
        c.device = grp.global_device;
        c.rate_bps = client_rate(env_, *c.setup);
        c.timing = timing_for(cfg_, env_, grp.costs, *c.setup);
      }
    }
    engine_.enable_trace(options_.trace);
  }

  RunResult run() {
    for (auto& g : groups_) {
      if (limits_.max_rounds && *limits_.max_rounds == 0) {
        g.done = true;
        continue;
      }
      if (mode_ == Mode::kSequential) {
        start_turn(g);
      } else {
        for (std::size_t ci : g.members) start_round(clients_[ci]);
      }
    }
    if (!all_done()) {
      sim::StopCondition stop;
      stop.time_limit_s = limits_.time_budget_s;
      engine_.run_until(stop, [this](const sim::Event& e, sim::Engine&) { handle(e); });
    }
    return finish();
  }

 private:
  // ---- event dispatch -------------------------------------------------

  void handle(const sim::Event& e) {
    switch (e.kind) {
      case sim::EventKind::kAggregationDue:
        on_aggregation(groups_[static_cast<std::size_t>(e.subject)]);
        return;
      case sim::EventKind::kDistillDue:
        if (e.payload.tag == kDistillStart) {
          on_distill_start();
        } else {
          finish_lockstep_aggregation(groups_[static_cast<std::size_t>(e.subject)]);
        }
        return;
      case sim::EventKind::kEvalDue:
        return;
      default:
        break;
    }
    Client& c = clients_[id_to_index_.at(e.subject)];
    if (e.payload.generation != c.gen) return;  // superseded (sequential timeout)
    switch (e.payload.tag) {
      case kDeviceFwd:
        transmit(c, kSmashedUp);
        break;
      case kSmashedUp:
        if (delivered(c, true)) {
          server_step(c);
        } else {
          retransmit(c, kSmashedUp);
        }
        break;
      case kServerDone:
        transmit(c, kGradDown);
        break;
      case kGradDown:
        if (delivered(c, false)) {
          const double b = static_cast<double>(cfg_.batch_size);
          const auto& costs = groups_[c.group].costs;
          charge_compute(c, costs.device_bwd_flops * b);
          schedule(c, sim::EventKind::kComputeDone, c.timing.device_bwd_s, kDeviceBwd);
        } else {
          retransmit(c, kGradDown);
        }
        break;
      case kDeviceBwd:
        device_step(c);
        break;
      case kModelUp:
        if (delivered(c, true)) {
          on_model_uploaded(c);
        } else {
          retransmit(c, kModelUp);
        }
        break;
      case kModelDown:
        if (delivered(c, false)) {
          c.device = c.incoming;
          c.base_round = c.incoming_round;
          if (mode_ == Mode::kSequential) {
            c.synced_version = groups_[c.group].version;
            c.dirty = false;
          }
          start_round(c);
        } else {
          retransmit(c, kModelDown);
        }
        break;
      case kTurnTimeout:
        on_turn_timeout(c);
        break;
      default:
        throw InternalError("unknown event phase");
    }
  }

  void schedule(Client& c, sim::EventKind kind, double delay, Phase phase) {
    engine_.schedule_in(delay, kind, c.setup->id,
                        sim::EventPayload{phase, 0, c.gen});
  }

  // ---- per-iteration pipeline -----------------------------------------

  void start_round(Client& c) {
    c.iter = 0;
    c.failed = false;
    start_iteration(c);
  }

  void start_iteration(Client& c) {
    Group& g = groups_[c.group];
    auto batch = workbench::sample_batch(c.setup->shard, cfg_.batch_size, c.batch_rng);
    auto fwd = nn::forward_layers(g.costs.device_layers, c.device, batch.features);
    c.cache = std::move(fwd.cache);
    c.smashed = std::move(fwd.output);
    c.labels = std::move(batch.labels);
    charge_compute(c, g.costs.device_fwd_flops * static_cast<double>(cfg_.batch_size));
    schedule(c, sim::EventKind::kComputeDone, c.timing.device_fwd_s, kDeviceFwd);
  }

  Tensor maybe_quantize(const Tensor& t) const {
    if (!cfg_.quantization.enabled) return t;
    adapt::QuantizerConfig q{cfg_.quantization.bits, adapt::calibrate_clip_range(t)};
    return adapt::quantize_uniform(t, q).dequantized;
  }

  double payload_bits(const Client& c, Phase phase) const {
    const auto& costs = groups_[c.group].costs;
    switch (phase) {
      case kSmashedUp:
      case kGradDown:
        return costs.hop_bits(cfg_);
      default:
        return static_cast<double>(costs.model_bits);
    }
  }

  void transmit(Client& c, Phase phase) {
    c.attempts = 0;
    if (phase == kSmashedUp) c.smashed = maybe_quantize(c.smashed);
    if (phase == kGradDown) c.cut_grad = maybe_quantize(c.cut_grad);
    send_attempt(c, phase);
  }

  void send_attempt(Client& c, Phase phase) {
    ++c.attempts;
    Group& g = groups_[c.group];
    const double bits = payload_bits(c, phase);
    const double airtime = bits / c.rate_bps;
    const bool up = phase == kSmashedUp || phase == kModelUp;
    const auto ubits = static_cast<std::uint64_t>(bits);
    switch (phase) {
      case kSmashedUp:
        traffic_.smashed_up_bits += ubits;
        break;
      case kGradDown:
        traffic_.grad_down_bits += ubits;
        break;
      case kModelUp:
        traffic_.model_up_bits += ubits;
        break;
      default:
        traffic_.model_down_bits += ubits;
        break;
    }
    g.result.bits_tx += ubits;
    if (up) {
      ++traffic_.uplink_attempts;
      g.result.energy_j += netphys::tx_power_watts(env_.channel) * airtime;
    } else {
      ++traffic_.downlink_attempts;
    }
    schedule(c, up ? sim::EventKind::kUplinkDone : sim::EventKind::kDownlinkDone,
             airtime, phase);
  }

  bool delivered(Client& c, bool up) {
    const bool ok =
        netphys::packet_delivered(up ? c.up_rng : c.down_rng, c.setup->loss_rate);
    if (ok) ++(up ? traffic_.uplink_packets : traffic_.downlink_packets);
    return ok;
  }

  void retransmit(Client& c, Phase phase) {
    if (cfg_.max_retransmissions && c.attempts > *cfg_.max_retransmissions) {
      if (phase == kModelDown && mode_ != Mode::kSequential) {
        ++timeouts_;
        start_round(c);  // keeps its previous base
      } else {
        fail_round(c);
      }
      return;
    }
    send_attempt(c, phase);
  }

  void charge_compute(Client& c, double flops) {
    groups_[c.group].result.energy_j += netphys::compute_energy(c.setup->device, flops);
  }

  void server_step(Client& c) {
    Group& g = groups_[c.group];
    const auto& costs = g.costs;
    Tensor grad;
    double loss = 0.0;
    if (costs.upper_layers.size() == 1) {
      auto fwd = nn::forward_layers(costs.upper_layers[0], g.upper_params[0], c.smashed);
      auto ce = nn::softmax_cross_entropy(fwd.output, c.labels);
      auto bwd = nn::backward_layers(costs.upper_layers[0], g.upper_params[0], fwd.cache,
                                     ce.logit_grad);
      g.upper_params[0] = nn::sgd_step(g.upper_params[0], bwd.grads, cfg_.lr);
      grad = std::move(bwd.input_grad);
      loss = ce.loss;
    } else {
      auto edge = nn::forward_layers(costs.upper_layers[0], g.upper_params[0], c.smashed);
      auto cloud =
          nn::forward_layers(costs.upper_layers[1], g.upper_params[1], edge.output);
      auto ce = nn::softmax_cross_entropy(cloud.output, c.labels);
      auto cloud_bwd = nn::backward_layers(costs.upper_layers[1], g.upper_params[1],
                                           cloud.cache, ce.logit_grad);
      auto edge_bwd = nn::backward_layers(costs.upper_layers[0], g.upper_params[0],
                                          edge.cache, cloud_bwd.input_grad);
      g.upper_params[1] = nn::sgd_step(g.upper_params[1], cloud_bwd.grads, cfg_.lr);
      g.upper_params[0] = nn::sgd_step(g.upper_params[0], edge_bwd.grads, cfg_.lr);
      grad = std::move(edge_bwd.input_grad);
      loss = ce.loss;
      traffic_.wired_bits += 2 * static_cast<std::uint64_t>(costs.wired_bits(cfg_));
    }
    c.cut_grad = std::move(grad);
    g.round_loss += loss;
    ++g.round_batches;
    g.window_loss += loss;
    ++g.window_batches;
    g.result.iteration_losses.push_back(loss);
    schedule(c, sim::EventKind::kComputeDone, c.timing.server_s, kServerDone);
  }

  void device_step(Client& c) {
    Group& g = groups_[c.group];
    auto bwd = nn::backward_layers(g.costs.device_layers, c.device, c.cache, c.cut_grad);
    c.device = nn::sgd_step(c.device, bwd.grads, cfg_.lr);
    c.cache = {};
    if (++c.iter < cfg_.local_iters) {
      start_iteration(c);
      return;
    }
    on_local_round_done(c);
  }

  // ---- round completion policies --------------------------------------

  bool aggregation_round(const Group& g) const {
    return (g.round + 1) % cfg_.aggregation_period_rounds == 0;
  }

  void on_local_round_done(Client& c) {
    Group& g = groups_[c.group];
    switch (mode_) {
      case Mode::kLockstep:
        if (aggregation_round(g)) {
          transmit(c, kModelUp);
        } else {
          arrive(g, c);
        }
        break;
      case Mode::kThreshold:
        transmit(c, kModelUp);
        break;
      case Mode::kSequential:
        if (g.members.size() == 1) {
          accept_turn(g, c);
        } else {
          transmit(c, kModelUp);
        }
        break;
    }
  }

  void on_model_uploaded(Client& c) {
    Group& g = groups_[c.group];
    switch (mode_) {
      case Mode::kLockstep:
        arrive(g, c);
        break;
      case Mode::kThreshold:
        std::erase(g.buffer, c.index);  // keep-latest
        g.buffer.push_back(c.index);
        if (g.buffer.size() >= cfg_.k && !g.aggregation_pending) {
          g.aggregation_pending = true;
          engine_.schedule_in(0.0, sim::EventKind::kAggregationDue,
                              static_cast<int>(g.id), {kAggregate, 0, 0});
        }
        break;
      case Mode::kSequential:
        accept_turn(g, c);
        break;
    }
  }

  void fail_round(Client& c) {
    Group& g = groups_[c.group];
    c.failed = true;
    ++timeouts_;
    switch (mode_) {
      case Mode::kLockstep:
        arrive(g, c);
        break;
      case Mode::kThreshold:
        start_round(c);
        break;
      case Mode::kSequential:
        on_turn_timeout(c);
        break;
    }
  }

  void arrive(Group& g, Client& c) {
    g.ready_times[c.slot] = engine_.now();
    if (++g.arrived < g.members.size()) return;
    g.arrived = 0;
    if (aggregation_round(g)) {
      engine_.schedule_in(0.0, sim::EventKind::kAggregationDue, static_cast<int>(g.id),
                          {kAggregate, 0, 0});
      return;
    }
    complete_round(g);
    if (g.done) return;
    for (std::size_t ci : g.members) start_round(clients_[ci]);
  }

  void record_aggregation(Group& g, const std::vector<Update>& updates) {
    AggregationRecord rec;
    rec.round = g.round + 1;
    rec.time_s = engine_.now();
    double total = 0.0;
    for (const auto& u : updates) {
      rec.clients.push_back(u.client);
      rec.staleness.push_back(u.staleness);
      const double w = static_cast<double>(u.sample_count) *
                       staleness_weight(static_cast<double>(u.staleness),
                                        cfg_.staleness_exponent);
      rec.weights.push_back(w);
      total += w;
      g.result.max_staleness =
          std::max(g.result.max_staleness, static_cast<double>(u.staleness));
    }
    for (double& w : rec.weights) w /= total;
    if (options_.record_aggregates) rec.model = g.global_device;
    g.result.aggregations.push_back(std::move(rec));
  }

  Update make_update(const Group& g, const Client& c) const {
    const std::uint64_t tau = mode_ == Mode::kThreshold ? g.round - c.base_round : 0;
    return Update{c.setup->id, c.device, c.setup->shard.size(), tau};
  }

  void on_aggregation(Group& g) {
    std::vector<Update> updates;
    if (mode_ == Mode::kThreshold) {
      g.aggregation_pending = false;
      std::sort(g.buffer.begin(), g.buffer.end(), [this](std::size_t a, std::size_t b) {
        return clients_[a].slot < clients_[b].slot;
      });
      for (std::size_t ci : g.buffer) updates.push_back(make_update(g, clients_[ci]));
    } else {
      for (std::size_t ci : g.members) {
        if (!clients_[ci].failed) updates.push_back(make_update(g, clients_[ci]));
      }
    }
    if (!updates.empty()) {
      g.global_device = fedavg(updates, cfg_.staleness_exponent);
      record_aggregation(g, updates);
    }
    if (mode_ == Mode::kThreshold) {
      auto contributors = std::move(g.buffer);
      g.buffer.clear();
      complete_round(g);
      if (g.done) return;
      for (std::size_t ci : contributors) send_model(g, clients_[ci]);
      return;
    }
    if (distill_round(g)) {
      g.waiting_distill = true;
      const bool all_waiting = std::all_of(groups_.begin(), groups_.end(),
                                           [](const Group& x) { return x.waiting_distill; });
      if (all_waiting) {
        engine_.schedule_in(0.0, sim::EventKind::kDistillDue, -1, {kDistillStart, 0, 0});
      }
      return;
    }
    finish_lockstep_aggregation(g);
  }

  void send_model(Group& g, Client& c) {
    c.incoming = g.global_device;
    c.incoming_round = g.round;
    transmit(c, kModelDown);
  }

  void finish_lockstep_aggregation(Group& g) {
    g.waiting_distill = false;
    complete_round(g);
    if (g.done) return;
    for (std::size_t ci : g.members) send_model(g, clients_[ci]);
  }

  // ---- sequential turns -----------------------------------------------

  double turn_timeout(const Client& c) const {
    const auto& t = c.timing;
    const double expected = t.model_down_s +
                            static_cast<double>(cfg_.local_iters) * t.iteration_s() +
                            t.model_up_s;
    return cfg_.sequential_timeout_factor * expected;
  }

  void start_turn(Group& g) {
    Client& c = clients_[g.members[g.turn]];
    ++c.gen;
    schedule(c, sim::EventKind::kTimeout, turn_timeout(c), kTurnTimeout);
    if (c.dirty || c.synced_version != g.version) {
      send_model(g, c);
    } else {
      start_round(c);
    }
  }

  void accept_turn(Group& g, Client& c) {
    g.global_device = c.device;
    ++g.version;
    c.synced_version = g.version;
    c.dirty = false;
    ++c.gen;  // cancels the pending timeout
    record_aggregation(g, {Update{c.setup->id, c.device, c.setup->shard.size(), 0}});
    next_turn(g);
  }

  void on_turn_timeout(Client& c) {
    Group& g = groups_[c.group];
    if (!c.failed) ++timeouts_;
    ++c.gen;
    c.dirty = true;
    next_turn(g);
  }

  void next_turn(Group& g) {
    if (++g.turn == g.members.size()) {
      g.turn = 0;
      complete_round(g);
      if (g.done) return;
    }
    start_turn(g);
  }

  // ---- heterogeneous distillation -------------------------------------

  bool distill_round(const Group& g) const {
    return groups_.size() > 1 && cfg_.distill.weight > 0.0 &&
           (g.round + 1) % cfg_.distill.period == 0;
  }

  nn::ModelParams full_model(const Group& g, const nn::ParamSet& device) const {
    std::vector<const nn::ParamSet*> parts{&device};
    for (const auto& p : g.upper_params) parts.push_back(&p);
    return split::join_params(parts);
  }

  void on_distill_start() {
    const auto& pub = env_.public_set;
    if (pub.size() == 0) throw ValidationError("distillation needs a public set");
    const double t = cfg_.distill.temperature;
    std::vector<nn::ModelParams> full;
    std::vector<Tensor> soft;
    for (const auto& g : groups_) {
      full.push_back(full_model(g, g.global_device));
      soft.push_back(nn::softmax(nn::forward(g.model.spec, full.back(), pub.features).output, t));
    }
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      Group& g = groups_[gi];
      Tensor teacher({pub.size(), g.model.spec.num_classes});
      std::size_t others = 0;
      for (std::size_t h = 0; h < groups_.size(); ++h) {
        if (h == gi) continue;
        if (!soft[h].same_shape(teacher)) {
          throw DimensionError("clusters must share the class dimension to distill");
        }
        for (std::size_t i = 0; i < teacher.size(); ++i) teacher[i] += soft[h][i];
        ++others;
      }
      for (double& v : teacher.data()) v /= static_cast<double>(others);
      nn::ModelParams params = std::move(full[gi]);
      const std::size_t bsz = std::min(cfg_.distill.batch, pub.size());
      std::vector<std::size_t> rows(bsz);
      for (std::size_t s = 0; s < cfg_.distill.steps; ++s) {
        for (std::size_t j = 0; j < bsz; ++j) rows[j] = (s * bsz + j) % pub.size();
        const Tensor x = pub.features.gather_rows(rows);
        const Tensor q = teacher.gather_rows(rows);
        auto fwd = nn::forward(g.model.spec, params, x);
        auto kd = distill_loss_soft(fwd.output, q, {}, t, cfg_.distill.weight);
        auto bwd = nn::backward(g.model.spec, params, fwd.cache, kd.logit_grad);
        params = nn::sgd_step(params, bwd.grads, cfg_.distill.lr);
      }
      auto segs = split::partition(g.model.spec, params, g.model.plan);
      g.global_device = std::move(segs[0].params);
      for (std::size_t k = 1; k < segs.size(); ++k) {
        g.upper_params[k - 1] = std::move(segs[k].params);
      }
      // Edge ships the model to the cloud and back; the cloud computes
      // public-set logits and the distillation steps.
      double flops = 0.0;
      for (const auto& l : g.model.spec.layers) {
        flops += static_cast<double>(l.flops_fwd()) * static_cast<double>(pub.size()) +
                 static_cast<double>(l.flops_fwd() + l.flops_bwd()) *
                     static_cast<double>(bsz * cfg_.distill.steps);
      }
      const double bits = static_cast<double>(param_bits(params));
      traffic_.wired_bits += 2 * static_cast<std::uint64_t>(bits);
      const double delay = 2.0 * env_.wired.transfer_time(bits) +
                           netphys::compute_time(env_.cloud, flops);
      engine_.schedule_in(delay, sim::EventKind::kDistillDue, static_cast<int>(g.id),
                          {kDistillDone, 0, 0});
    }
  }

  // ---- bookkeeping ----------------------------------------------------

  nn::ParamSet eval_device(const Group& g) const {
    if (mode_ != Mode::kLockstep) return g.global_device;
    std::vector<Update> current;
    for (std::size_t ci : g.members) {
      const auto& c = clients_[ci];
      current.push_back(Update{c.setup->id, c.device, c.setup->shard.size(), 0});
    }
    return fedavg(current, 0.0);
  }

  void evaluate(Group& g) {
    const auto model = full_model(g, eval_device(g));
    EvalPoint p;
    p.round = g.round;
    p.time_s = engine_.now();
    p.train_loss = g.window_batches ? g.window_loss / static_cast<double>(g.window_batches)
                                    : std::numeric_limits<double>::quiet_NaN();
    p.test_acc = nn::evaluate(g.model.spec, model, env_.test);
    p.bits_tx = g.result.bits_tx;
    p.energy_j = g.result.energy_j;
    p.max_staleness = g.result.max_staleness;
    g.window_loss = 0.0;
    g.window_batches = 0;
    g.result.evals.push_back(p);
    g.result.final_model = model;
    g.result.final_accuracy = p.test_acc;
  }

  void complete_round(Group& g) {
    RoundRecord rec;
    rec.round = g.round + 1;
    rec.start_s = g.round_start;
    rec.end_s = engine_.now();
    rec.mean_loss = g.round_batches
                        ? g.round_loss / static_cast<double>(g.round_batches)
                        : std::numeric_limits<double>::quiet_NaN();
    if (mode_ == Mode::kLockstep) rec.member_ready_s = g.ready_times;
    g.result.rounds.push_back(std::move(rec));
    ++g.round;
    g.round_start = engine_.now();
    g.round_loss = 0.0;
    g.round_batches = 0;
    if (g.round % limits_.eval_every == 0) evaluate(g);
    if (limits_.max_rounds && g.round >= *limits_.max_rounds) {
      g.done = true;
      if (all_done()) engine_.request_stop();
    }
  }

  bool all_done() const {
    return std::all_of(groups_.begin(), groups_.end(),
                       [](const Group& g) { return g.done; });
  }

  RunResult finish() {
    RunResult r;
    for (auto& g : groups_) {
      if (g.result.evals.empty() || g.result.evals.back().round != g.round) evaluate(g);
      r.groups.push_back(std::move(g.result));
    }
    r.traffic = traffic_;
    r.final_time_s = engine_.now();
    r.rounds_completed = std::numeric_limits<std::uint64_t>::max();
    for (const auto& g : groups_) r.rounds_completed = std::min(r.rounds_completed, g.round);
    r.timeouts = timeouts_;
    r.trace = engine_.trace();
    return r;
  }

  FrameworkConfig cfg_;
  const Environment& env_;
  Mode mode_;
  RunLimits limits_;
  RunOptions options_;
  sim::Engine engine_;
  std::vector<Client> clients_;
  std::vector<Group> groups_;
  std::unordered_map<int, std::size_t> id_to_index_;
  Traffic traffic_;
  std::uint64_t timeouts_ = 0;
};

MetricsRow to_row(FrameworkKind kind, const EvalPoint& p) {
  MetricsRow row;
  row.framework = std::string(to_string(kind));
  row.round = p.round;
  row.sim_time_s = p.time_s;
  row.train_loss = p.train_loss;
  row.test_acc = p.test_acc;
  row.bits_tx = p.bits_tx;
  row.energy_j = p.energy_j;
  row.max_staleness = p.max_staleness;
  return row;
}

std::vector<ClusterSetup> single_cluster(const Environment& env, const ModelSetup& model) {
  ClusterSetup cl;
  cl.members.resize(env.clients.size());
  std::iota(cl.members.begin(), cl.members.end(), std::size_t{0});
  cl.model = model;
  return {cl};
}

void check_kind(const FrameworkConfig& cfg, FrameworkKind expected) {
  if (cfg.kind != expected) {
    throw ValidationError("config kind '" + std::string(to_string(cfg.kind)) +
                          "' passed to the " + std::string(to_string(expected)) +
                          " runner");
  }
}

void check_clients(const FrameworkConfig& cfg, const Environment& env) {
  if (env.clients.size() != cfg.num_clients) {
    throw ValidationError("environment has " + std::to_string(env.clients.size()) +
                          " clients but the config asks for " +
                          std::to_string(cfg.num_clients));
  }
}

RunResult run_single(FrameworkKind kind, Mode mode, const FrameworkConfig& cfg,
                     const Environment& env, const ModelSetup& model,
                     const RunLimits& limits, const RunOptions& options) {
  Orchestrator orch(cfg, env, single_cluster(env, model), mode, limits, options,
                    env.seed);
  RunResult r = orch.run();
  for (const auto& p : r.groups[0].evals) r.rows.push_back(to_row(kind, p));
  return r;
}

}  // namespace

RunResult run_sync(const FrameworkConfig& cfg, const Environment& env,
                   const ModelSetup& model, const RunLimits& limits,
                   const RunOptions& options) {
  check_kind(cfg, FrameworkKind::kSync);
  check_clients(cfg, env);
  if (model.plan.cuts.size() != 1) throw ValidationError("sync FedSL needs one cut");
  return run_single(cfg.kind, Mode::kLockstep, cfg, env, model, limits, options);
}

RunResult run_sequential(const FrameworkConfig& cfg, const Environment& env,
                         const ModelSetup& model, const RunLimits& limits,
                         const RunOptions& options) {
  check_kind(cfg, FrameworkKind::kSequential);
  check_clients(cfg, env);
  if (model.plan.cuts.size() != 1) throw ValidationError("sequential FedSL needs one cut");
  return run_single(cfg.kind, Mode::kSequential, cfg, env, model, limits, options);
}

RunResult run_async(const FrameworkConfig& cfg, const Environment& env,
                    const ModelSetup& model, const RunLimits& limits,
                    const RunOptions& options) {
  check_kind(cfg, FrameworkKind::kAsyncThreshold);
  check_clients(cfg, env);
  if (cfg.k <= 1 || cfg.k > cfg.num_clients) {
    throw ValidationError("threshold aggregation needs 1 < k <= N");
  }
  if (model.plan.cuts.size() != 1) throw ValidationError("async FedSL needs one cut");
  return run_single(cfg.kind, Mode::kThreshold, cfg, env, model, limits, options);
}

RunResult run_hierarchical(const FrameworkConfig& cfg, const Environment& env,
                           const ModelSetup& model, const RunLimits& limits,
                           const RunOptions& options) {
  check_kind(cfg, FrameworkKind::kHierarchical);
  check_clients(cfg, env);
  if (model.plan.cuts.size() != 2) {
    throw ValidationError("hierarchical FedSL needs a plan with exactly two cuts");
  }
  return run_single(cfg.kind, Mode::kLockstep, cfg, env, model, limits, options);
}

RunResult run_heterogeneous(const FrameworkConfig& cfg, const Environment& env,
                            const std::vector<ClusterSetup>& clusters,
                            const RunLimits& limits, const RunOptions& options) {
  check_kind(cfg, FrameworkKind::kHeterogeneous);
  check_clients(cfg, env);
  if (clusters.size() < 2) throw ValidationError("heterogeneous FedSL needs >= 2 clusters");
  for (const auto& cl : clusters) {
    if (cl.model.plan.cuts.size() != 1) {
      throw ValidationError("each cluster needs a single-cut plan");
    }
  }
  Orchestrator orch(cfg, env, clusters, Mode::kLockstep, limits, options,
                    env.seed);
  RunResult r = orch.run();

  // Combined rows: one per round every cluster evaluated at, plus a final
  // row from each cluster's last evaluation.
  const auto& first = r.groups[0].evals;
  auto combine = [&](const std::vector<const EvalPoint*>& pts) {
    EvalPoint p;
    double loss = 0.0;
    for (const auto* e : pts) {
      p.round = std::max(p.round, e->round);
      p.time_s = std::max(p.time_s, e->time_s);
      loss += e->train_loss;
      p.test_acc += e->test_acc;
      p.bits_tx += e->bits_tx;
      p.energy_j += e->energy_j;
    }
    p.train_loss = loss / static_cast<double>(pts.size());
    p.test_acc /= static_cast<double>(pts.size());
    return p;
  };
  std::uint64_t last_round = 0;
  bool any = false;
  for (const auto& e : first) {
    std::vector<const EvalPoint*> pts{&e};
    for (std::size_t g = 1; g < r.groups.size(); ++g) {
      const auto& ev = r.groups[g].evals;
      auto it = std::find_if(ev.begin(), ev.end(),
                             [&](const EvalPoint& x) { return x.round == e.round; });
      if (it == ev.end() || it->round % limits.eval_every != 0) break;
      pts.push_back(&*it);
    }
    if (pts.size() != r.groups.size() || e.round % limits.eval_every != 0) continue;
    r.rows.push_back(to_row(cfg.kind, combine(pts)));
    last_round = e.round;
    any = true;
  }
  std::vector<const EvalPoint*> finals;
  bool need_final = !any;
  for (const auto& g : r.groups) {
    finals.push_back(&g.evals.back());
    if (g.evals.back().round != last_round) need_final = true;
  }
  if (need_final) r.rows.push_back(to_row(cfg.kind, combine(finals)));
  return r;
}

ClientTiming client_timing(const FrameworkConfig& cfg, const Environment& env,
                           const ModelSetup& model, std::size_t client_index) {
  if (client_index >= env.clients.size()) throw ValidationError("no such client");
  return timing_for(cfg, env, ModelCosts(model), env.clients[client_index]);
}

double sync_reference_duration(const FrameworkConfig& cfg, const Environment& env,
                               const ModelSetup& model, std::uint64_t rounds) {
  const ModelCosts costs(model);
  std::vector<ClientTiming> t;
  for (const auto& c : env.clients) t.push_back(timing_for(cfg, env, costs, c));
  const std::uint64_t period = cfg.aggregation_period_rounds;
  const double iters = static_cast<double>(cfg.local_iters);
  double total = 0.0;
  for (std::uint64_t r = 1; r <= rounds; ++r) {
    double slowest = 0.0;
    for (const auto& ct : t) {
      double d = iters * ct.iteration_s();
      if (r > 1 && (r - 1) % period == 0) d += ct.model_down_s;
      if (r % period == 0) d += ct.model_up_s;
      slowest = std::max(slowest, d);
    }
    total += slowest;
  }
  return total;
}

LocalRoundReport local_round(const FrameworkConfig& cfg, const Environment& env,
                             const ModelSetup& model, std::size_t client_index,
                             std::optional<double> time_budget_s) {
  if (client_index >= env.clients.size()) throw ValidationError("no such client");
  Environment solo = env;
  solo.clients = {env.clients[client_index]};
  FrameworkConfig one = cfg;
  one.kind = FrameworkKind::kSync;
  one.num_clients = 1;
  one.k = 1;
  one.aggregation_period_rounds = std::numeric_limits<std::size_t>::max();
  RunLimits limits;
  limits.max_rounds = 1;
  limits.time_budget_s = time_budget_s;
  limits.eval_every = 1;
  const RunResult r = run_single(FrameworkKind::kSync, Mode::kLockstep, one, solo, model,
                                 limits, {});
  const auto& g = r.groups[0];
  LocalRoundReport rep;
  rep.timed_out = r.rounds_completed == 0;
  rep.latency_s = rep.timed_out ? r.final_time_s : g.rounds.front().end_s;
  rep.losses = g.iteration_losses;
  rep.uplink_attempts = r.traffic.uplink_attempts;
  rep.downlink_attempts = r.traffic.downlink_attempts;
  auto segs = split::partition(model.spec, g.final_model, model.plan);
  rep.update = Update{solo.clients[0].id, std::move(segs[0].params),
                      solo.clients[0].shard.size(), 0};
  return rep;
}

}  // namespace fedsl::fl
