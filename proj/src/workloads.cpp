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

#include "ifts/workloads.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <queue>
#include <set>
#include <thread>

#include "ifts/error.hpp"

namespace ifts {

namespace {

void check_rate(double rate, double duration_s) {
  if (!(rate > 0) || !std::isfinite(rate)) {
    throw Error(Errc::BadRate, "arrival rate must be a positive finite number");
  }
  if (!(duration_s >= 0) || !std::isfinite(duration_s)) {
    throw Error(Errc::SpecViolation, "duration must be >= 0");
  }
}

// Builds a replay stand-in: `counts[k]` arrivals spread uniformly over the
// k-th segment of `segment_s` seconds.
std::vector<double> piecewise_uniform(const std::vector<std::uint64_t>& counts,
                                      double segment_s, double start_s) {
  std::vector<double> times;
  times.reserve(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double seg_start = start_s + segment_s * static_cast<double>(k);
    const double spacing = segment_s / static_cast<double>(counts[k]);
    for (std::uint64_t i = 0; i < counts[k]; ++i) {
      times.push_back(seg_start + spacing * static_cast<double>(i));
    }
  }
  return times;
}

// 482400 requests over 37.5 minutes in 30 segments of 75 s whose rate follows
// one diurnal-like swing around the mean of 214.4 req/s.
std::vector<std::uint64_t> search_trace_counts() {
  constexpr std::uint64_t kTotal = 482'400;
  constexpr int kSegments = 30;
  constexpr std::uint64_t kMean = kTotal / kSegments;  // 16080
  std::vector<std::uint64_t> counts(kSegments);
  std::uint64_t sum = 0;
  for (int k = 0; k < kSegments; ++k) {
    const double swing = 5000.0 * std::sin(2.0 * std::numbers::pi * k / kSegments);
    counts[k] = static_cast<std::uint64_t>(static_cast<double>(kMean) + std::round(swing));
    sum += counts[k];
  }
  counts.back() = counts.back() + kTotal - sum;
  return counts;
}

}  // namespace

ArrivalSchedule gen_uniform(double rate, double duration_s, double start_s) {
  check_rate(rate, duration_s);
  // Guard against products like 0.29 * 100 landing just below an integer.
  const auto n = static_cast<std::uint64_t>(std::floor(rate * duration_s + 1e-9));
  ArrivalSchedule s{{}, UniformSource{rate}};
  s.times.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    s.times.push_back(start_s + static_cast<double>(i) / rate);
  }
  return s;
}

ArrivalSchedule gen_poisson(double rate, double duration_s, std::uint64_t seed,
                            double start_s) {
  check_rate(rate, duration_s);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(rate);
  ArrivalSchedule s{{}, PoissonSource{rate, seed}};
  for (double t = gap(rng); t < duration_s; t += gap(rng)) s.times.push_back(start_s + t);
  return s;
}

std::vector<std::string> builtin_traces() { return {"search-2250s"}; }

ArrivalSchedule gen_trace(const std::string& name, double start_s) {
  if (name == "search-2250s") {
    return {piecewise_uniform(search_trace_counts(), 75.0, start_s), TraceSource{name}};
  }
  throw Error(Errc::Validation, "unknown trace '" + name + "'");
}

double percentile(std::span<const double> samples, double p) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "percentile of no samples");
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(Errc::SpecViolation, "percentile must be in (0, 1]");
  }
  const auto n = samples.size();
  const double exact = p * static_cast<double>(n);
  double rank = std::ceil(exact);
  if (const double nearest = std::round(exact);
      std::abs(exact - nearest) <= 1e-9 * std::max(1.0, nearest)) {
    rank = nearest;
  }
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(n))) - 1;
  std::vector<double> copy(samples.begin(), samples.end());
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(idx), copy.end());
  return copy[idx];
}

void LatencyHistogram::merge(const LatencyHistogram& other) {
  samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
}

double LatencyHistogram::mean() const {
  if (samples_.empty()) return 0.0;
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) /
         static_cast<double>(samples_.size());
}

LatencySummary LatencyHistogram::summary() const {
  LatencySummary s;
  s.count = samples_.size();
  if (s.count == 0) return s;
  s.mean = mean();
  s.p50 = percentile(0.50);
  s.p95 = percentile(0.95);
  s.p99 = percentile(0.99);
  s.max = *std::max_element(samples_.begin(), samples_.end());
  return s;
}

void LatencyHistogram::write_csv(std::ostream& out, const std::string& value_column) const {
  out << "index," << value_column << '\n';
  char buf[64];
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", i, samples_[i]);
    out << buf;
  }
}

std::string LatencyHistogram::summary_line() const {
  const auto s = summary();
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "count=%zu mean=%.6f p50=%.6f p95=%.6f p99=%.6f max=%.6f", s.count,
                s.mean, s.p50, s.p95, s.p99, s.max);
  return buf;
}

double ContentionCurve::slowdown(std::uint32_t n) const {
  return 1.0 + alpha * static_cast<double>(n > 1 ? n - 1 : 0);
}

ServiceSimulator::ServiceSimulator(const ServiceModel& model)
    : model_(model), external_(model.external_contenders), rng_(model.seed) {
  if (model.cores == 0) throw Error(Errc::SpecViolation, "service needs at least one core");
  if (model.contention.alpha < 0) throw Error(Errc::SpecViolation, "alpha must be >= 0");
  const auto& st = model.service_time;
  if (st.kind == ServiceTimeDist::Kind::Empirical ? st.empirical.empty() : !(st.ms > 0)) {
    throw Error(Errc::SpecViolation, "service time distribution is empty or non-positive");
  }
  cores_.resize(model.cores);
}

double ServiceSimulator::sample_service_ms() {
  const auto& st = model_.service_time;
  switch (st.kind) {
    case ServiceTimeDist::Kind::Deterministic:
      return st.ms;
    case ServiceTimeDist::Kind::Exponential:
      return std::exponential_distribution<double>(1.0 / st.ms)(rng_);
    case ServiceTimeDist::Kind::Empirical: {
      std::uniform_int_distribution<std::size_t> pick(0, st.empirical.size() - 1);
      return st.empirical[pick(rng_)];
    }
  }
  return st.ms;
}

std::uint32_t ServiceSimulator::active_cores() const {
  return static_cast<std::uint32_t>(
      std::count_if(cores_.begin(), cores_.end(), [](const Core& c) { return c.active; }));
}

Completion ServiceSimulator::submit(double arrival) {
  std::size_t best = cores_.size();
  double best_start = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    const Core& c = cores_[i];
    if (!c.active) continue;
    const double start = std::max({arrival, c.free_at, c.available_at});
    if (start < best_start) {
      best_start = start;
      best = i;
    }
  }
  if (best == cores_.size()) {
    throw Error(Errc::SpecViolation, "service has no active core");
  }
  // An isolated subOS runs its own kernel instance, so only a shared kernel
  // makes concurrently busy cores and external processes contend.
  std::uint32_t n = 1;
  if (model_.contention.mode == ContentionMode::SharedKernel) {
    for (std::size_t i = 0; i < cores_.size(); ++i) {
      if (i != best && cores_[i].free_at > best_start && cores_[i].available_at <= best_start) ++n;
    }
    n += external_;
  }
  const double service_ms = sample_service_ms() * model_.contention.slowdown(n);
  Core& c = cores_[best];
  c.free_at = best_start + service_ms / 1000.0;
  return {arrival, best_start, c.free_at, static_cast<std::uint32_t>(best),
          (c.free_at - arrival) * 1000.0};
}

void ServiceSimulator::add_core(double available_at) {
  for (auto& c : cores_) {
    if (!c.active && c.free_at <= available_at) {
      c.active = true;
      c.available_at = available_at;
      return;
    }
  }
  cores_.push_back(Core{available_at, available_at, true});
}

void ServiceSimulator::remove_core() {
  if (active_cores() <= 1) {
    throw Error(Errc::WouldEmptySubOS, "service would lose its last core");
  }
  for (auto it = cores_.rbegin(); it != cores_.rend(); ++it) {
    if (it->active) {
      it->active = false;
      return;
    }
  }
}

LatencyHistogram simulate_service(const ServiceModel& model, const ArrivalSchedule& schedule) {
  ServiceSimulator sim(model);
  LatencyHistogram h;
  for (double t : schedule.times) h.add(sim.submit(t).latency_ms);
  return h;
}

double simulate_batch(double total_work, std::span<const CoreStep> timeline) {
  if (!(total_work > 0)) throw Error(Errc::SpecViolation, "batch work must be > 0");
  if (timeline.empty()) throw Error(Errc::SpecViolation, "empty core timeline");
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    if (timeline[i].cores < 0 || (i > 0 && timeline[i].start < timeline[i - 1].start)) {
      throw Error(Errc::SpecViolation, "malformed core timeline");
    }
  }
  double done = 0.0;
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    const CoreStep& step = timeline[i];
    const double remaining = total_work - done;
    if (i + 1 == timeline.size()) {
      if (step.cores <= 0) break;
      return step.start + remaining / step.cores;
    }
    const double span_work = step.cores * (timeline[i + 1].start - step.start);
    if (span_work >= remaining && step.cores > 0) {
      return step.start + remaining / step.cores;
    }
    done += span_work;
  }
  throw Error(Errc::NeverCompletes, "core timeline never supplies the batch work");
}

DomainCounter::DomainCounter(std::size_t workers, std::int64_t batch)
    : batch_(batch),
      locals_storage_(std::make_unique<Local[]>(workers)),
      locals_(locals_storage_.get(), workers) {
  if (workers == 0) throw Error(Errc::SpecViolation, "counter needs a worker");
  if (batch <= 0) throw Error(Errc::SpecViolation, "batch must be > 0");
}

CounterResult DomainCounter::add(std::size_t worker, std::int64_t delta) {
  if (delta < 0) throw Error(Errc::SpecViolation, "counter takes increments only");
  Local& l = locals_[worker];
  const std::int64_t v = l.count.load(std::memory_order_relaxed) + delta;
  if (v < batch_) {
    l.count.store(v, std::memory_order_relaxed);
    return CounterResult::Local;
  }
  {
    std::lock_guard<SpinLock> guard(lock_);
    global_ += v;
  }
  l.count.store(0, std::memory_order_relaxed);
  l.flushes.fetch_add(1, std::memory_order_relaxed);
  acquisitions_.fetch_add(1, std::memory_order_relaxed);
  return CounterResult::Flushed;
}

void DomainCounter::fold_all() {
  std::lock_guard<SpinLock> guard(lock_);
  for (auto& l : locals_) {
    global_ += l.count.exchange(0, std::memory_order_relaxed);
  }
}

std::int64_t DomainCounter::global() const {
  std::lock_guard<SpinLock> guard(lock_);
  return global_;
}

std::int64_t DomainCounter::local(std::size_t worker) const {
  return locals_[worker].count.load(std::memory_order_relaxed);
}

std::int64_t DomainCounter::sum_locals() const {
  std::int64_t s = 0;
  for (const auto& l : locals_) s += l.count.load(std::memory_order_relaxed);
  return s;
}

std::uint64_t DomainCounter::lock_acquisitions() const {
  return acquisitions_.load(std::memory_order_relaxed);
}

std::uint64_t DomainCounter::acquisitions(std::size_t worker) const {
  return locals_[worker].flushes.load(std::memory_order_relaxed);
}

namespace {

struct Assignment {
  std::vector<std::size_t> domain_of;  // worker -> domain
  std::vector<std::size_t> slot_of;    // worker -> index within its domain
  std::vector<std::size_t> domain_size;
};

Assignment assign(const ContentionConfig& cfg) {
  Assignment a;
  a.domain_size.assign(cfg.domains, 0);
  for (std::size_t w = 0; w < cfg.workers; ++w) {
    const std::size_t d = w % cfg.domains;
    a.domain_of.push_back(d);
    a.slot_of.push_back(a.domain_size[d]++);
  }
  return a;
}

// `used[w]` records the counter worker w actually incremented.
void run_real(const ContentionConfig& cfg, const Assignment& a,
              std::vector<std::unique_ptr<DomainCounter>>& counters,
              std::vector<const DomainCounter*>& used, ContentionReport& report) {
  std::vector<std::vector<double>> lat(cfg.workers);
  std::atomic<bool> go{false};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < cfg.workers; ++w) {
    threads.emplace_back([&, w] {
      DomainCounter& c = *counters[a.domain_of[w]];
      used[w] = &c;
      const std::size_t slot = a.slot_of[w];
      auto& out = lat[w];
      out.reserve(static_cast<std::size_t>(cfg.increments));
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      for (std::int64_t i = 0; i < cfg.increments; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        c.add(slot, 1);
        const auto t1 = std::chrono::steady_clock::now();
        out.push_back(static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
      }
    });
  }
  go.store(true, std::memory_order_release);
  for (auto& t : threads) t.join();
  for (const auto& v : lat) {
    for (double x : v) report.op_latency.add(x);
  }
}

void run_interleaved(const ContentionConfig& cfg, const Assignment& a,
                     std::vector<std::unique_ptr<DomainCounter>>& counters,
                     std::vector<const DomainCounter*>& used, ContentionReport& report) {
  using Entry = std::pair<std::uint64_t, std::size_t>;  // (time, worker)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> ready;
  std::vector<std::int64_t> remaining(cfg.workers, cfg.increments);
  std::vector<std::uint64_t> lock_free_at(cfg.domains, 0);
  for (std::size_t w = 0; w < cfg.workers; ++w) {
    if (cfg.increments > 0) ready.push({0, w});
  }
  while (!ready.empty()) {
    const auto [t, w] = ready.top();
    ready.pop();
    const std::size_t d = a.domain_of[w];
    used[w] = counters[d].get();
    std::uint64_t done_at = t + cfg.local_cost;
    if (counters[d]->add(a.slot_of[w], 1) == CounterResult::Flushed) {
      const std::uint64_t acquire = std::max(done_at, lock_free_at[d]);
      lock_free_at[d] = acquire + cfg.lock_hold;
      done_at = lock_free_at[d];
    }
    report.op_latency.add(static_cast<double>(done_at - t));
    if (--remaining[w] > 0) ready.push({done_at, w});
  }
}

}  // namespace

ContentionReport contention_experiment(const ContentionConfig& cfg) {
  if (cfg.workers == 0) throw Error(Errc::SpecViolation, "experiment needs a worker");
  if (cfg.domains == 0 || cfg.domains > cfg.workers) {
    throw Error(Errc::SpecViolation, "domains must be in [1, workers]");
  }
  if (cfg.increments < 0) throw Error(Errc::SpecViolation, "increments must be >= 0");
  const Assignment a = assign(cfg);
  std::vector<std::unique_ptr<DomainCounter>> counters;
  for (std::size_t d = 0; d < cfg.domains; ++d) {
    counters.push_back(std::make_unique<DomainCounter>(a.domain_size[d], cfg.batch));
  }

  ContentionReport report;
  std::vector<const DomainCounter*> used(cfg.workers, nullptr);
  if (cfg.real_concurrency) {
    run_real(cfg, a, counters, used, report);
  } else {
    run_interleaved(cfg, a, counters, used, report);
  }

  report.worker_domain = a.domain_of;
  std::map<const DomainCounter*, std::set<std::size_t>> touched_by;
  for (std::size_t w = 0; w < cfg.workers; ++w) {
    const std::size_t d = a.domain_of[w];
    if (used[w] != nullptr) touched_by[used[w]].insert(d);
    report.per_worker_acquisitions.push_back(counters[d]->acquisitions(a.slot_of[w]));
  }
  for (const auto& [counter, s] : touched_by) {
    if (s.size() > 1) ++report.cross_domain_sharing;
  }
  for (const auto& c : counters) {
    report.lock_acquisitions += c->lock_acquisitions();
    report.total_counted += c->global() + c->sum_locals();
  }
  report.total_issued = cfg.increments * static_cast<std::int64_t>(cfg.workers);
  return report;
}

}  // namespace ifts
