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
#include <stdexcept>

#include "fedsl/error.h"
#include "fedsl/rng.h"
#include "fedsl/sim.h"

namespace fedsl::sim {
namespace {

TEST(EventQueue, FifoAtEqualTimes) {
  EventQueue q;
  q.push({1.0, 0, EventKind::kComputeDone, 1, {}});
  q.push({1.0, 0, EventKind::kComputeDone, 2, {}});
  EXPECT_EQ(q.pop().subject, 1);
  EXPECT_EQ(q.pop().subject, 2);
}

TEST(EventQueue, TimeOrder) {
  EventQueue q;
  q.push({2.0, 0, EventKind::kComputeDone, 2, {}});
  q.push({1.0, 0, EventKind::kComputeDone, 1, {}});
  EXPECT_EQ(q.pop().subject, 1);
  EXPECT_EQ(q.pop().subject, 2);
}

TEST(EventQueue, RandomEventsPopSorted) {
  RngStream rng(4, "events");
  EventQueue q;
  std::vector<double> times;
  for (int i = 0; i < 10000; ++i) {
    const double t = std::floor(rng.uniform() * 500.0) / 10.0;  // many ties
    times.push_back(t);
    q.push({t, 0, EventKind::kComputeDone, i, {}});
  }
  std::vector<std::pair<double, int>> expected;
  for (int i = 0; i < 10000; ++i) expected.emplace_back(times[i], i);
  std::stable_sort(expected.begin(), expected.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t, subject] : expected) {
    const Event e = q.pop();
    ASSERT_EQ(e.time_s, t);
    ASSERT_EQ(e.subject, subject);
  }
}

TEST(Engine, EmptyQueue) {
  Engine engine;
  int calls = 0;
  EXPECT_EQ(engine.run_until({}, [&](const Event&, Engine&) { ++calls; }), 0.0);
  EXPECT_EQ(calls, 0);
}

TEST(Engine, TimeLimitBoundary) {
  Engine engine;
  engine.schedule(9.9, EventKind::kComputeDone, 1);
  engine.schedule(10.1, EventKind::kComputeDone, 2);
  std::vector<int> seen;
  const double clock = engine.run_until(
      StopCondition{10.0, std::nullopt}, [&](const Event& e, Engine&) { seen.push_back(e.subject); });
  EXPECT_EQ(seen, std::vector<int>{1});
  EXPECT_EQ(clock, 9.9);
  EXPECT_EQ(engine.pending(), 1u);
}

TEST(Engine, PastEventRejected) {
  Engine engine;
  engine.schedule(5.0, EventKind::kComputeDone, 0);
  engine.run_until({}, [](const Event& e, Engine& eng) {
    if (e.subject == 0) {
      EXPECT_THROW(eng.schedule(4.0, EventKind::kTimeout, 1), SchedulingError);
    }
  });
}

TEST(Engine, MaxRoundsAndStopRequest) {
  Engine engine;
  for (int i = 0; i < 10; ++i) engine.schedule(i, EventKind::kAggregationDue, i);
  engine.run_until(StopCondition{std::nullopt, 3}, [](const Event&, Engine& eng) {
    eng.complete_round();
  });
  EXPECT_EQ(engine.rounds(), 3u);
  EXPECT_EQ(engine.processed(), 3u);

  Engine other;
  for (int i = 0; i < 10; ++i) other.schedule(i, EventKind::kComputeDone, i);
  other.run_until({}, [](const Event& e, Engine& eng) {
    if (e.subject == 4) eng.request_stop();
  });
  EXPECT_EQ(other.processed(), 5u);
}

TEST(Engine, HandlerErrorCarriesEvent) {
  Engine engine;
  engine.schedule(2.5, EventKind::kUplinkDone, 7);
  try {
    engine.run_until({}, [](const Event&, Engine&) { throw std::runtime_error("boom"); });
    FAIL() << "expected SimulationAborted";
  } catch (const SimulationAborted& e) {
    EXPECT_EQ(e.event().subject, 7);
    EXPECT_EQ(e.event().time_s, 2.5);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

// A small randomized process: each event spawns up to two successors.
std::vector<TraceEntry> random_process(std::uint64_t seed) {
  Engine engine;
  engine.enable_trace(true);
  RngStream rng(seed, "process");
  for (int i = 0; i < 5; ++i) engine.schedule(rng.uniform(), EventKind::kComputeDone, i);
  engine.run_until(StopCondition{50.0, std::nullopt}, [&](const Event& e, Engine& eng) {
    const auto n = rng.uniform_int(3);
    for (std::uint64_t k = 0; k < n && eng.pending() < 64; ++k) {
      eng.schedule_in(rng.uniform(0.0, 2.0), static_cast<EventKind>(rng.uniform_int(7)),
                      e.subject);
    }
  });
  return engine.trace();
}

TEST(Engine, TraceIsPureFunctionOfSeed) {
  const auto a = random_process(3);
  EXPECT_GT(a.size(), 50u);
  EXPECT_EQ(a, random_process(3));
  EXPECT_NE(a, random_process(4));
  for (std::size_t i = 1; i < a.size(); ++i) ASSERT_LE(a[i - 1].time_s, a[i].time_s);
}

TEST(Trace, Format) {
  const std::vector<TraceEntry> t{{0.5, EventKind::kUplinkDone, 3},
                                  {1.25, EventKind::kTimeout, 0}};
  EXPECT_EQ(format_trace(t), "0.5,uplink_done,3\n1.25,timeout,0\n");
}

}  // namespace
}  // namespace fedsl::sim
