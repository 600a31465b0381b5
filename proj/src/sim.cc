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

#include "fedsl/sim.h"

#include <charconv>
#include <cmath>
#include <exception>

namespace fedsl::sim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kComputeDone:
      return "compute_done";
    case EventKind::kUplinkDone:
      return "uplink_done";
    case EventKind::kDownlinkDone:
      return "downlink_done";
    case EventKind::kAggregationDue:
      return "aggregation_due";
    case EventKind::kDistillDue:
      return "distill_due";
    case EventKind::kEvalDue:
      return "eval_due";
    case EventKind::kTimeout:
      return "timeout";
  }
  return "unknown";
}

void EventQueue::push(Event e) {
  e.seq = next_seq_++;
  heap_.push(e);
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
  std::string out;
  char buf[64];
  for (const auto& t : trace) {
    auto r = std::to_chars(buf, buf + sizeof buf, t.time_s);
    out.append(buf, r.ptr);
    out += ',';
    out += to_string(t.kind);
    out += ',';
    out += std::to_string(t.subject);
    out += '\n';
  }
  return out;
}

namespace {

std::string describe(const Event& e, const std::string& what) {
  return "event t=" + std::to_string(e.time_s) + " kind=" +
         std::string(to_string(e.kind)) + " subject=" + std::to_string(e.subject) +
         ": " + what;
}

}  // namespace

SimulationAborted::SimulationAborted(const Event& event, const std::string& what)
    : Error(describe(event, what)), event_(event) {}

void Engine::schedule(double time_s, EventKind kind, int subject,
                      EventPayload payload) {
  if (!std::isfinite(time_s) || time_s < clock_) {
    throw SchedulingError("event at t=" + std::to_string(time_s) +
                          " is before the clock t=" + std::to_string(clock_));
  }
  queue_.push(Event{time_s, 0, kind, subject, payload});
}

double Engine::run_until(const StopCondition& stop, const Handler& handler) {
  while (!queue_.empty() && !stop_requested_) {
    if (stop.max_rounds && rounds_ >= *stop.max_rounds) break;
    if (stop.time_limit_s && queue_.top().time_s > *stop.time_limit_s) break;
    const Event e = queue_.pop();
    if (processed_ > 0 &&
        (e.time_s < last_time_ || (e.time_s == last_time_ && e.seq < last_seq_))) {
      throw InternalError("event processed out of (time, seq) order");
    }
    last_time_ = e.time_s;
    last_seq_ = e.seq;
    clock_ = e.time_s;
    ++processed_;
    if (tracing_) trace_.push_back({e.time_s, e.kind, e.subject});
    try {
      handler(e, *this);
    } catch (const SimulationAborted&) {
      throw;
    } catch (const std::exception& ex) {
      throw SimulationAborted(e, ex.what());
    }
  }
  return clock_;
}

}  // namespace fedsl::sim
