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

#ifndef FEDSL_FRAMEWORKS_H_
#define FEDSL_FRAMEWORKS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedsl/metrics.h"
#include "fedsl/netphys.h"
#include "fedsl/nn.h"
#include "fedsl/sim.h"
#include "fedsl/split.h"

// Federated split learning orchestrations on top of the event engine.
//
// Every run shares one per-iteration pipeline: device forward, smashed-data
// uplink (retransmitted until delivered), server-side forward/loss/backward
// and SGD on the shared upper segment(s), cut-gradient downlink, device
// backward and SGD. The variants differ only in how local rounds are
// synchronized and when device-side models are averaged.
namespace fedsl::fl {

enum class FrameworkKind {
  kSync,
  kSequential,
  kAsyncThreshold,
  kHierarchical,
  kHeterogeneous,
};

std::string_view to_string(FrameworkKind kind);
std::optional<FrameworkKind> parse_framework_kind(std::string_view name);

struct DistillConfig {
  std::size_t period = 25;     // rounds; a multiple of the aggregation period
  double temperature = 2.0;
  double weight = 0.5;         // lambda
  std::size_t public_size = 512;
  std::size_t steps = 30;      // gradient steps per distillation
  std::size_t batch = 128;
  double lr = 0.03;

  bool operator==(const DistillConfig&) const = default;
};

struct QuantizationConfig {
  bool enabled = false;
  unsigned bits = 8;

  bool operator==(const QuantizationConfig&) const = default;
};

struct FrameworkConfig {
  FrameworkKind kind = FrameworkKind::kSync;
  std::size_t num_clients = 10;
  std::size_t k = 5;
  std::size_t aggregation_period_rounds = 25;
  std::size_t local_iters = 5;
  std::size_t batch_size = 32;
  double lr = 0.001;
  double staleness_exponent = 0.5;
  std::optional<std::uint64_t> max_retransmissions;  // unset: unlimited
  double sequential_timeout_factor = 5.0;
  DistillConfig distill;
  QuantizationConfig quantization;

  void validate() const;
  bool operator==(const FrameworkConfig&) const = default;
};

// s(tau) = (1 + tau)^(-a)
double staleness_weight(double tau, double a);

struct Update {
  int client = 0;
  nn::ParamSet params;
  std::size_t sample_count = 0;
  std::uint64_t staleness = 0;
};

// Weighted average with w_i proportional to n_i * s(tau_i). Computed as
// x_0 + sum_i w_i (x_i - x_0), so averaging identical models is exact.
nn::ParamSet fedavg(std::span<const Update> updates, double staleness_exponent = 0.5);

// (1 - lambda) * CE(student, labels) + lambda * T^2 * KL(p_teacher || p_student)
// with p = softmax(z / T). The CE term is dropped when labels are empty.
nn::LossResult distill_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                            std::span<const int> labels, double temperature,
                            double lambda);
// Same, with the teacher already given as temperature-softened probabilities.
nn::LossResult distill_loss_soft(const Tensor& student_logits,
                                 const Tensor& teacher_probs,
                                 std::span<const int> labels, double temperature,
                                 double lambda);

struct ClientSetup {
  int id = 0;
  nn::Dataset shard;
  netphys::DeviceProfile device;
  double distance_m = 10.0;
  double loss_rate = 0.0;
};

struct Environment {
  std::uint64_t seed = 0;  // root of the batch and packet-loss streams
  netphys::ChannelParams channel;
  netphys::DeviceProfile edge;
  netphys::DeviceProfile cloud;
  netphys::WiredLink wired;
  std::vector<ClientSetup> clients;
  nn::Dataset test;
  nn::Dataset public_set;  // unlabeled use only; for distillation
};

struct ModelSetup {
  nn::ModelSpec spec;
  split::SplitPlan plan;
  nn::ModelParams init;
};

// A cluster trains its own model with a subset of the clients.
struct ClusterSetup {
  std::vector<std::size_t> members;  // indices into Environment::clients
  ModelSetup model;
};

struct RunLimits {
  std::optional<std::uint64_t> max_rounds;
  std::optional<double> time_budget_s;
  std::size_t eval_every = 5;
};

struct RunOptions {
  bool trace = false;
  bool record_aggregates = false;
};

struct Traffic {
  std::uint64_t smashed_up_bits = 0;
  std::uint64_t grad_down_bits = 0;
  std::uint64_t model_up_bits = 0;
  std::uint64_t model_down_bits = 0;
  std::uint64_t wired_bits = 0;
  std::uint64_t uplink_attempts = 0;
  std::uint64_t uplink_packets = 0;  // delivered
  std::uint64_t downlink_attempts = 0;
  std::uint64_t downlink_packets = 0;

  std::uint64_t wireless_bits() const {
    return smashed_up_bits + grad_down_bits + model_up_bits + model_down_bits;
  }
};

struct AggregationRecord {
  std::uint64_t round = 0;  // round index after the aggregation
  double time_s = 0.0;
  std::vector<int> clients;
  std::vector<std::uint64_t> staleness;
  std::vector<double> weights;
  nn::ParamSet model;  // only with RunOptions::record_aggregates
};

struct RoundRecord {
  std::uint64_t round = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double mean_loss = 0.0;
  // Lockstep variants: per-member time at which the member was ready for the
  // barrier, in member order.
  std::vector<double> member_ready_s;
};

struct EvalPoint {
  std::uint64_t round = 0;
  double time_s = 0.0;
  double train_loss = 0.0;
  double test_acc = 0.0;
  std::uint64_t bits_tx = 0;
  double energy_j = 0.0;
  double max_staleness = 0.0;
};

// Per-model (per-cluster) outcome.
struct GroupResult {
  std::vector<RoundRecord> rounds;
  std::vector<AggregationRecord> aggregations;
  std::vector<EvalPoint> evals;
  std::vector<double> iteration_losses;  // server-side loss of every batch
  nn::ModelParams final_model;           // evaluated (stitched) model at stop
  double final_accuracy = 0.0;
  std::uint64_t bits_tx = 0;
  double energy_j = 0.0;
  double max_staleness = 0.0;
};

struct RunResult {
  MetricsTable rows;  // framework tag set, seed/axis left for the caller
  std::vector<GroupResult> groups;
  Traffic traffic;
  double final_time_s = 0.0;
  std::uint64_t rounds_completed = 0;
  std::uint64_t timeouts = 0;
  std::vector<sim::TraceEntry> trace;

  double final_accuracy() const;
};

RunResult run_sync(const FrameworkConfig& cfg, const Environment& env,
                   const ModelSetup& model, const RunLimits& limits,
                   const RunOptions& options = {});
RunResult run_sequential(const FrameworkConfig& cfg, const Environment& env,
                         const ModelSetup& model, const RunLimits& limits,
                         const RunOptions& options = {});
RunResult run_async(const FrameworkConfig& cfg, const Environment& env,
                    const ModelSetup& model, const RunLimits& limits,
                    const RunOptions& options = {});
RunResult run_hierarchical(const FrameworkConfig& cfg, const Environment& env,
                           const ModelSetup& model, const RunLimits& limits,
                           const RunOptions& options = {});
RunResult run_heterogeneous(const FrameworkConfig& cfg, const Environment& env,
                            const std::vector<ClusterSetup>& clusters,
                            const RunLimits& limits, const RunOptions& options = {});

// One client's single local round, run in isolation.
struct LocalRoundReport {
  Update update;
  double latency_s = 0.0;
  std::vector<double> losses;
  std::uint64_t uplink_attempts = 0;
  std::uint64_t downlink_attempts = 0;
  bool timed_out = false;
};

LocalRoundReport local_round(const FrameworkConfig& cfg, const Environment& env,
                             const ModelSetup& model, std::size_t client_index,
                             std::optional<double> time_budget_s = std::nullopt);

// Zero-loss timing of one local iteration and of model transfers for a client.
struct ClientTiming {
  double device_fwd_s = 0.0;
  double uplink_s = 0.0;
  double server_s = 0.0;
  double downlink_s = 0.0;
  double device_bwd_s = 0.0;
  double model_up_s = 0.0;
  double model_down_s = 0.0;

  double iteration_s() const {
    return device_fwd_s + uplink_s + server_s + downlink_s + device_bwd_s;
  }
};

ClientTiming client_timing(const FrameworkConfig& cfg, const Environment& env,
                           const ModelSetup& model, std::size_t client_index);

// Simulated duration of `rounds` lockstep rounds with every packet delivered
// on the first attempt: the sum over rounds of the slowest client's round.
double sync_reference_duration(const FrameworkConfig& cfg, const Environment& env,
                               const ModelSetup& model, std::uint64_t rounds);

}  // namespace fedsl::fl

#endif  // FEDSL_FRAMEWORKS_H_
