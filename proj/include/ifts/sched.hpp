// Copyright 2026 The IFTS Emulator Authors
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

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ifts/clock.hpp"
#include "ifts/lifecycle.hpp"
#include "ifts/types.hpp"

namespace ifts {

struct SchedulerConfig {
  double lt_ms = 160.0;
  double ut_ms = 200.0;
  SimDuration window{10'000'000};
  double percentile = 0.99;
  SubOSId service;
  SubOSId batch;
  std::uint32_t min_cores_each = 1;

  // Throws SpecViolation.
  void validate() const;
};

struct Action {
  enum class Kind { MoveCpuToService, MoveCpuToBatch, Hold };
  enum class HoldReason { None, InBand, NoData, Floor, ApplyFailed };

  Kind kind = Kind::Hold;
  HoldReason reason = HoldReason::None;

  static Action to_service() { return {Kind::MoveCpuToService, HoldReason::None}; }
  static Action to_batch() { return {Kind::MoveCpuToBatch, HoldReason::None}; }
  static Action hold(HoldReason why) { return {Kind::Hold, why}; }

  bool operator==(const Action&) const = default;
  // "MoveCpuToService", "MoveCpuToBatch", "Hold(InBand)", ...
  std::string to_string() const;
};

struct CoreCounts {
  std::uint32_t service = 0;
  std::uint32_t batch = 0;
  bool operator==(const CoreCounts&) const = default;
};

// Tail of the window at config.percentile; empty for an empty window.
std::optional<double> window_tail(const SchedulerConfig& config,
                                  std::span<const double> samples);

// Hysteresis rule: above ut moves a CPU to the service, below lt moves one
// to the batch, inside [lt, ut] holds. A move that would take either side
// below min_cores_each becomes Hold(Floor).
Action decide(const SchedulerConfig& config, std::span<const double> samples,
              CoreCounts cores);

// Collects latency samples into tumbling windows aligned at
// start + k * window.
class SchedulerState {
 public:
  SchedulerState(SimDuration start, SimDuration window);

  // Rejects (and counts) negative samples. Samples stamped inside an
  // already-closed window go to the open one.
  bool observe(double latency_ms, SimDuration time);
  // Returns the open window's samples and opens the next window.
  std::vector<double> close_window();

  SimDuration window_start() const { return start_ + window_ * static_cast<std::int64_t>(index_); }
  SimDuration window_end() const { return window_start() + window_; }
  std::size_t current_size() const;
  std::uint64_t harness_bugs() const { return harness_bugs_; }

 private:
  SimDuration start_;
  SimDuration window_;
  std::uint64_t index_ = 0;
  std::map<std::uint64_t, std::vector<double>> buckets_;
  std::uint64_t harness_bugs_ = 0;
};

struct DecisionRecord {
  SimDuration window_end{0};
  std::optional<double> p_tail_ms;
  Action action;
  CoreCounts cores;  // after the action was applied

  bool operator==(const DecisionRecord&) const = default;
};

// window_end_time,p_tail_ms,action,service_cores,batch_cores
void write_decisions_csv(std::ostream& out, std::span<const DecisionRecord> history);

// Source of per-window latency samples. Returning nullopt ends the loop.
class WorkloadFeed {
 public:
  virtual ~WorkloadFeed() = default;
  virtual std::optional<std::vector<double>> next_window(SimDuration start, SimDuration end,
                                                         CoreCounts cores) = 0;
  // Told about every applied move. `removed_at` is when the donor lost the
  // core, `effective_at` when the receiver can use it.
  virtual void on_move(Action, SimDuration /*removed_at*/, SimDuration /*effective_at*/) {}
};

// Feed built from a callable (window index, current cores) -> samples.
class FunctionFeed : public WorkloadFeed {
 public:
  using Fn = std::function<std::optional<std::vector<double>>(std::size_t, CoreCounts)>;
  explicit FunctionFeed(Fn fn) : fn_(std::move(fn)) {}

  std::optional<std::vector<double>> next_window(SimDuration, SimDuration,
                                                 CoreCounts cores) override {
    return fn_(index_++, cores);
  }

 private:
  Fn fn_;
  std::size_t index_ = 0;
};

// Drives one decision per window until the feed runs dry. Moves go through
// lifecycle.resize_cpu, so hot-remove and hot-add are charged to the clock
// inside the window that decided them.
std::vector<DecisionRecord> run_loop(const SchedulerConfig& config, VirtualClock& clock,
                                     Lifecycle& lifecycle, WorkloadFeed& feed);

}  // namespace ifts
