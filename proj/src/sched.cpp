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

#include "ifts/sched.hpp"

#include <cstdio>

#include "ifts/error.hpp"
#include "ifts/workloads.hpp"

namespace ifts {

void SchedulerConfig::validate() const {
  if (!(lt_ms > 0 && lt_ms < ut_ms)) {
    throw Error(Errc::SpecViolation, "thresholds must satisfy 0 < lt < ut");
  }
  if (window.count() <= 0) throw Error(Errc::SpecViolation, "window must be > 0");
  if (!(percentile > 0 && percentile <= 1)) {
    throw Error(Errc::SpecViolation, "percentile must be in (0, 1]");
  }
  if (service == batch) {
    throw Error(Errc::SpecViolation, "service and batch must be different subOSes");
  }
  if (min_cores_each == 0) throw Error(Errc::SpecViolation, "min_cores_each must be >= 1");
}

std::string Action::to_string() const {
  switch (kind) {
    case Kind::MoveCpuToService: return "MoveCpuToService";
    case Kind::MoveCpuToBatch: return "MoveCpuToBatch";
    case Kind::Hold: break;
  }
  switch (reason) {
    case HoldReason::InBand: return "Hold(InBand)";
    case HoldReason::NoData: return "Hold(NoData)";
    case HoldReason::Floor: return "Hold(Floor)";
    case HoldReason::ApplyFailed: return "Hold(ApplyFailed)";
    case HoldReason::None: break;
  }
  return "Hold";
}

std::optional<double> window_tail(const SchedulerConfig& config,
                                  std::span<const double> samples) {
  if (samples.empty()) return std::nullopt;
  return percentile(samples, config.percentile);
}

Action decide(const SchedulerConfig& config, std::span<const double> samples,
              CoreCounts cores) {
  const auto tail = window_tail(config, samples);
  if (!tail) return Action::hold(Action::HoldReason::NoData);
  if (*tail > config.ut_ms) {
    if (cores.batch <= config.min_cores_each) return Action::hold(Action::HoldReason::Floor);
    return Action::to_service();
  }
  if (*tail < config.lt_ms) {
    if (cores.service <= config.min_cores_each) return Action::hold(Action::HoldReason::Floor);
    return Action::to_batch();
  }
  return Action::hold(Action::HoldReason::InBand);
}

SchedulerState::SchedulerState(SimDuration start, SimDuration window)
    : start_(start), window_(window) {
  if (window.count() <= 0) throw Error(Errc::SpecViolation, "window must be > 0");
}

bool SchedulerState::observe(double latency_ms, SimDuration time) {
  if (!(latency_ms >= 0)) {
    ++harness_bugs_;
    return false;
  }
  std::uint64_t idx = index_;
  if (time > start_) {
    idx = std::max<std::uint64_t>(index_, static_cast<std::uint64_t>((time - start_) / window_));
  }
  buckets_[idx].push_back(latency_ms);
  return true;
}

std::vector<double> SchedulerState::close_window() {
  std::vector<double> out;
  if (auto it = buckets_.find(index_); it != buckets_.end()) {
    out = std::move(it->second);
    buckets_.erase(it);
  }
  ++index_;
  return out;
}

std::size_t SchedulerState::current_size() const {
  auto it = buckets_.find(index_);
  return it == buckets_.end() ? 0 : it->second.size();
}

void write_decisions_csv(std::ostream& out, std::span<const DecisionRecord> history) {
  out << "window_end_time,p_tail_ms,action,service_cores,batch_cores\n";
  char tail[64];
  for (const auto& r : history) {
    tail[0] = '\0';
    if (r.p_tail_ms) std::snprintf(tail, sizeof(tail), "%.6f", *r.p_tail_ms);
    out << format_seconds(r.window_end) << ',' << tail << ',' << r.action.to_string()
        << ',' << r.cores.service << ',' << r.cores.batch << '\n';
  }
}

namespace {

CoreCounts counts(const Lifecycle& lc, const SchedulerConfig& cfg) {
  return {static_cast<std::uint32_t>(lc.descriptor(cfg.service).grant.cores.size()),
          static_cast<std::uint32_t>(lc.descriptor(cfg.batch).grant.cores.size())};
}

}  // namespace

std::vector<DecisionRecord> run_loop(const SchedulerConfig& config, VirtualClock& clock,
                                     Lifecycle& lifecycle, WorkloadFeed& feed) {
  config.validate();
  for (auto id : {config.service, config.batch}) {
    if (lifecycle.descriptor(id).state != SubOSState::Running) {
      throw Error(Errc::DeadSubOS, "scheduler needs subos " + std::to_string(id.value) +
                                       " running");
    }
  }
  std::vector<DecisionRecord> history;
  const SimDuration start = clock.now();
  for (std::int64_t k = 0;; ++k) {
    const SimDuration w_start = start + config.window * k;
    const SimDuration w_end = w_start + config.window;
    auto samples = feed.next_window(w_start, w_end, counts(lifecycle, config));
    if (!samples) break;
    clock.advance_to(w_end);

    DecisionRecord rec;
    rec.window_end = w_end;
    rec.p_tail_ms = window_tail(config, *samples);
    rec.action = decide(config, *samples, counts(lifecycle, config));

    if (rec.action.kind != Action::Kind::Hold) {
      const bool to_service = rec.action.kind == Action::Kind::MoveCpuToService;
      const SubOSId donor = to_service ? config.batch : config.service;
      const SubOSId receiver = to_service ? config.service : config.batch;
      const SimDuration removed_at = clock.now();
      try {
        lifecycle.resize_cpu(donor, -1);
        try {
          lifecycle.resize_cpu(receiver, +1);
        } catch (const Error&) {
          lifecycle.resize_cpu(donor, +1);
          throw;
        }
        feed.on_move(rec.action, removed_at, clock.now());
      } catch (const Error&) {
        rec.action = Action::hold(Action::HoldReason::ApplyFailed);
      }
    }
    rec.cores = counts(lifecycle, config);
    history.push_back(rec);
  }
  return history;
}

}  // namespace ifts
