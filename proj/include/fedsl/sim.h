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

#ifndef FEDSL_SIM_H_
#define FEDSL_SIM_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "fedsl/error.h"

// Single-threaded discrete-event engine with a virtual clock.
namespace fedsl::sim {

enum class EventKind {
  kComputeDone,
  kUplinkDone,
  kDownlinkDone,
  kAggregationDue,
  kDistillDue,
  kEvalDue,
  kTimeout,
};

std::string_view to_string(EventKind kind);

// Opaque to the engine; interpreted by whoever scheduled the event.
struct EventPayload {
  std::int64_t tag = 0;
  std::int64_t aux = 0;
  std::uint64_t generation = 0;
};

struct Event {
  double time_s = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kComputeDone;
  int subject = 0;
  EventPayload payload;
};

// Min-queue on (time_s, seq). seq is assigned on push, so events at equal
// times come out in insertion order.
class EventQueue {
 public:
  void push(Event e);
  Event pop();
  const Event& top() const { return heap_.top(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  std::uint64_t next_seq() const { return next_seq_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time_s != b.time_s) return a.time_s > b.time_s;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

struct TraceEntry {
  double time_s = 0.0;
  EventKind kind = EventKind::kComputeDone;
  int subject = 0;

  bool operator==(const TraceEntry&) const = default;
};

// `time_s,kind,subject`, one event per line, LF endings.
std::string format_trace(const std::vector<TraceEntry>& trace);

// Any limit left unset is not applied; the run also ends when the queue
// drains or a handler calls request_stop().
struct StopCondition {
  std::optional<double> time_limit_s;
  std::optional<std::uint64_t> max_rounds;
};

// A handler exception, rethrown with the event that triggered it.
class SimulationAborted : public Error {
 public:
  SimulationAborted(const Event& event, const std::string& what);
  const Event& event() const { return event_; }

 private:
  Event event_;
};

class Engine {
 public:
  using Handler = std::function<void(const Event&, Engine&)>;

  double now() const { return clock_; }

  // Throws SchedulingError for events dated before now().
  void schedule(double time_s, EventKind kind, int subject, EventPayload payload = {});
  void schedule_in(double delay_s, EventKind kind, int subject,
                   EventPayload payload = {}) {
    schedule(clock_ + delay_s, kind, subject, payload);
  }

  // Round bookkeeping for StopCondition::max_rounds.
  void complete_round() { ++rounds_; }
  std::uint64_t rounds() const { return rounds_; }
  void request_stop() { stop_requested_ = true; }

  // Processes events in (time, seq) order until a stop condition holds.
  // Events later than time_limit_s stay queued. Returns the clock, which is
  // the time of the last processed event.
  double run_until(const StopCondition& stop, const Handler& handler);

  void enable_trace(bool on) { tracing_ = on; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  std::uint64_t processed() const { return processed_; }
  std::size_t pending() const { return queue_.size(); }

 private:
  EventQueue queue_;
  double clock_ = 0.0;
  std::uint64_t rounds_ = 0;
  std::uint64_t processed_ = 0;
  bool stop_requested_ = false;
  bool tracing_ = false;
  std::vector<TraceEntry> trace_;
  // Key of the last processed event, for the ordering monitor.
  double last_time_ = 0.0;
  std::uint64_t last_seq_ = 0;
};

}  // namespace fedsl::sim

#endif  // FEDSL_SIM_H_
