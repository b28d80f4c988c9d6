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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ifts/spinlock.hpp"

namespace ifts {

// ---------------------------------------------------------------------------
// Arrivals

struct UniformSource {
  double rate = 0;
};
struct PoissonSource {
  double rate = 0;
  std::uint64_t seed = 0;
};
struct TraceSource {
  std::string name;
};
using ArrivalSource = std::variant<UniformSource, PoissonSource, TraceSource>;

// Arrival instants in seconds, non-decreasing.
struct ArrivalSchedule {
  std::vector<double> times;
  ArrivalSource source;
};

// floor(rate * duration) arrivals at start + i / rate. Throws BadRate.
ArrivalSchedule gen_uniform(double rate, double duration_s, double start_s = 0.0);
ArrivalSchedule gen_poisson(double rate, double duration_s, std::uint64_t seed,
                            double start_s = 0.0);
// Built-in replay traces; throws Validation for an unknown name.
ArrivalSchedule gen_trace(const std::string& name, double start_s = 0.0);
std::vector<std::string> builtin_traces();

// ---------------------------------------------------------------------------
// Statistics

// Nearest-rank percentile: the sorted sample at rank ceil(p * n).
// Throws EmptySamples, or SpecViolation unless 0 < p <= 1.
double percentile(std::span<const double> samples, double p);

struct LatencySummary {
  std::size_t count = 0;
  double mean = 0, p50 = 0, p95 = 0, p99 = 0, max = 0;
};

class LatencyHistogram {
 public:
  void add(double value) { samples_.push_back(value); }
  void merge(const LatencyHistogram& other);

  const std::vector<double>& samples() const { return samples_; }
  std::size_t count() const { return samples_.size(); }
  double mean() const;
  double percentile(double p) const { return ifts::percentile(samples_, p); }
  LatencySummary summary() const;

  // index,value
  void write_csv(std::ostream& out, const std::string& value_column) const;
  // count=... mean=... p50=... p95=... p99=... max=...
  std::string summary_line() const;

 private:
  std::vector<double> samples_;
};

// ---------------------------------------------------------------------------
// Service model

enum class ContentionMode { Isolated, SharedKernel };

// Multiplicative service-time factor for n concurrently active contenders in
// one sharing domain: 1 + alpha * max(0, n - 1).
struct ContentionCurve {
  ContentionMode mode = ContentionMode::Isolated;
  double alpha = 0.05;

  double slowdown(std::uint32_t n) const;
};

struct ServiceTimeDist {
  enum class Kind { Deterministic, Exponential, Empirical };
  Kind kind = Kind::Deterministic;
  double ms = 10.0;               // value, or mean for Exponential
  std::vector<double> empirical;  // sampled uniformly for Empirical
};

struct ServiceModel {
  std::uint32_t cores = 1;
  ServiceTimeDist service_time;
  ContentionCurve contention;
  // Active processes of co-located work that share the kernel with the
  // service. Counted only in SharedKernel mode.
  std::uint32_t external_contenders = 0;
  std::uint64_t seed = 1;
};

struct Completion {
  double arrival = 0;     // s
  double start = 0;       // s
  double completion = 0;  // s
  std::uint32_t core = 0;
  double latency_ms = 0;
};

// Event-ordered service simulation with per-core FIFO queues. Each arrival
// joins the queue that lets it start earliest (least outstanding work), ties
// to the lowest core index. Arrivals must be submitted in time order.
class ServiceSimulator {
 public:
  explicit ServiceSimulator(const ServiceModel& model);

  Completion submit(double arrival_s);

  // Core becomes eligible for new requests at `available_at`.
  void add_core(double available_at);
  // Highest-index core stops accepting work; its queue still drains.
  void remove_core();
  void set_external_contenders(std::uint32_t n) { external_ = n; }

  std::uint32_t active_cores() const;

 private:
  struct Core {
    double available_at = 0;
    double free_at = 0;
    bool active = true;
  };

  double sample_service_ms();

  ServiceModel model_;
  std::vector<Core> cores_;
  std::uint32_t external_ = 0;
  std::mt19937_64 rng_;
};

// Fixed core count, whole schedule. Throws SpecViolation if cores == 0.
LatencyHistogram simulate_service(const ServiceModel& model, const ArrivalSchedule& schedule);

// ---------------------------------------------------------------------------
// Batch progress

struct CoreStep {
  double start = 0;  // s
  double cores = 0;
};

// Earliest t with the integral of cores over [timeline[0].start, t] reaching
// total_work core-seconds. The last step extends forever. Throws
// NeverCompletes, or SpecViolation for non-positive work or a malformed
// timeline.
double simulate_batch(double total_work, std::span<const CoreStep> timeline);

// ---------------------------------------------------------------------------
// Per-worker batched counter

enum class CounterResult { Local, Flushed };

// Sloppy counter: each worker accumulates locally and folds into the global
// count under a lock once its local value reaches the batch threshold.
class DomainCounter {
 public:
  DomainCounter(std::size_t workers, std::int64_t batch);

  // Only `worker`'s own context may call this for that worker.
  CounterResult add(std::size_t worker, std::int64_t delta);
  // Folds every local into the global count. Call at quiescence.
  void fold_all();

  std::int64_t global() const;
  std::int64_t local(std::size_t worker) const;
  std::int64_t sum_locals() const;
  std::uint64_t lock_acquisitions() const;
  std::uint64_t acquisitions(std::size_t worker) const;
  std::size_t workers() const { return locals_.size(); }
  std::int64_t batch() const { return batch_; }

 private:
  struct alignas(64) Local {
    std::atomic<std::int64_t> count{0};
    std::atomic<std::uint64_t> flushes{0};
  };

  std::int64_t batch_;
  std::unique_ptr<Local[]> locals_storage_;
  std::span<Local> locals_;
  mutable SpinLock lock_;
  alignas(64) std::int64_t global_ = 0;
  std::atomic<std::uint64_t> acquisitions_{0};
};

struct ContentionConfig {
  std::size_t workers = 6;
  std::size_t domains = 1;  // 1: everything shared; k: workers split over k counters
  std::int64_t increments = 100'000;  // per worker
  std::int64_t batch = 32;
  bool real_concurrency = false;
  // Interleaved model costs, in ticks.
  std::uint32_t local_cost = 1;
  std::uint32_t lock_hold = 20;
};

struct ContentionReport {
  // Per-op latency: nanoseconds with real concurrency, ticks otherwise.
  LatencyHistogram op_latency;
  std::uint64_t lock_acquisitions = 0;
  std::vector<std::uint64_t> per_worker_acquisitions;
  std::vector<std::size_t> worker_domain;
  // Counters touched by workers of more than one domain. Zero by construction.
  std::size_t cross_domain_sharing = 0;
  std::int64_t total_issued = 0;
  std::int64_t total_counted = 0;  // sum over domains of global + locals
};

ContentionReport contention_experiment(const ContentionConfig& config);

}  // namespace ifts
