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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ifts/error.hpp"
#include "ifts/workloads.hpp"

using namespace ifts;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::SpecViolation;
}

// Nearest rank with p = m / 10000, in integer arithmetic.
double sorted_rank_oracle(std::vector<double> v, std::uint64_t m) {
  std::sort(v.begin(), v.end());
  const std::uint64_t n = v.size();
  const std::uint64_t rank = (m * n + 9999) / 10000;
  return v[std::max<std::uint64_t>(rank, 1) - 1];
}

// Independent reference for deterministic, contention-free service: every
// request goes to the core that can start it earliest, ties to lowest index.
std::vector<double> reference_latencies(const std::vector<double>& arrivals, std::uint32_t cores,
                                        double service_ms) {
  std::vector<double> free_at(cores, 0.0);
  std::vector<double> out;
  for (double a : arrivals) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cores; ++c) {
      if (std::max(free_at[c], a) < std::max(free_at[best], a)) best = c;
    }
    const double start = std::max(free_at[best], a);
    free_at[best] = start + service_ms / 1000.0;
    out.push_back((free_at[best] - a) * 1000.0);
  }
  return out;
}

ServiceModel deterministic(std::uint32_t cores, double ms) {
  ServiceModel m;
  m.cores = cores;
  m.service_time = {ServiceTimeDist::Kind::Deterministic, ms, {}};
  return m;
}

}  // namespace

TEST(Arrivals, UniformExamples) {
  const auto s = gen_uniform(300, 10);
  ASSERT_EQ(s.times.size(), 3000u);
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    ASSERT_EQ(s.times[i], static_cast<double>(i) / 300.0);
  }
  EXPECT_TRUE(gen_uniform(300, 0).times.empty());
  const auto shifted = gen_uniform(2, 1.0, 5.0);
  EXPECT_EQ(shifted.times, (std::vector<double>{5.0, 5.5}));
  EXPECT_EQ(code_of([] { gen_uniform(0, 1); }), Errc::BadRate);
  EXPECT_EQ(code_of([] { gen_uniform(-3, 1); }), Errc::BadRate);
  EXPECT_EQ(code_of([] { gen_uniform(std::nan(""), 1); }), Errc::BadRate);
}

TEST(Arrivals, PoissonIsSeededAndSorted) {
  const auto a = gen_poisson(300, 100, 7);
  const auto b = gen_poisson(300, 100, 7);
  const auto c = gen_poisson(300, 100, 8);
  EXPECT_EQ(a.times, b.times);
  EXPECT_NE(a.times, c.times);
  EXPECT_TRUE(std::is_sorted(a.times.begin(), a.times.end()));
  EXPECT_NEAR(static_cast<double>(a.times.size()), 30000.0, 600.0);
  EXPECT_LT(a.times.back(), 100.0);
}

TEST(Arrivals, BuiltinSearchTrace) {
  const auto t = gen_trace("search-2250s");
  ASSERT_EQ(t.times.size(), 482400u);
  EXPECT_DOUBLE_EQ(static_cast<double>(t.times.size()) / 2250.0, 214.4);
  EXPECT_TRUE(std::is_sorted(t.times.begin(), t.times.end()));
  EXPECT_GE(t.times.front(), 0.0);
  EXPECT_LT(t.times.back(), 2250.0);
  EXPECT_EQ(code_of([] { gen_trace("nope"); }), Errc::Validation);
}

TEST(Percentile, Examples) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(1));
  EXPECT_EQ(percentile(v, 0.99), 99.0);
  EXPECT_EQ(percentile(v, 1.0), 100.0);
  EXPECT_EQ(percentile(v, 0.5), 50.0);
  EXPECT_EQ(percentile(v, 0.001), 1.0);
  const std::vector<double> one{4.2};
  EXPECT_EQ(percentile(one, 0.01), 4.2);
  EXPECT_EQ(percentile(one, 1.0), 4.2);
  EXPECT_EQ(code_of([] { percentile({}, 0.5); }), Errc::EmptySamples);
  EXPECT_EQ(code_of([&] { percentile(v, 0.0); }), Errc::SpecViolation);
  EXPECT_EQ(code_of([&] { percentile(v, 1.01); }), Errc::SpecViolation);
}

TEST(Percentile, MatchesSortOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> v(1 + rng() % 300);
    for (auto& x : v) x = static_cast<double>(rng() % 1000) / 7.0;
    const std::uint64_t m = 1 + rng() % 10000;
    ASSERT_EQ(percentile(v, static_cast<double>(m) / 10000.0), sorted_rank_oracle(v, m))
        << "n=" << v.size() << " m=" << m;
  }
}

TEST(Histogram, SummaryAndCsv) {
  LatencyHistogram h;
  for (int i = 1; i <= 100; ++i) h.add(i);
  const auto before = h.samples();
  const auto s = h.summary();
  EXPECT_EQ(s.count, 100u);
  EXPECT_DOUBLE_EQ(s.mean, 50.5);
  EXPECT_EQ(s.p50, 50);
  EXPECT_EQ(s.p95, 95);
  EXPECT_EQ(s.p99, 99);
  EXPECT_EQ(s.max, 100);
  EXPECT_EQ(h.samples(), before);
  EXPECT_EQ(h.summary_line(),
            "count=100 mean=50.500000 p50=50.000000 p95=95.000000 p99=99.000000 max=100.000000");
  LatencyHistogram small;
  small.add(1.5);
  small.add(2);
  std::ostringstream out;
  small.write_csv(out, "latency_ms");
  EXPECT_EQ(out.str(), "index,latency_ms\n0,1.500000\n1,2.000000\n");
  h.merge(small);
  EXPECT_EQ(h.count(), 102u);
}

TEST(Contention, CurveShape) {
  ContentionCurve c{ContentionMode::SharedKernel, 0.05};
  EXPECT_EQ(c.slowdown(0), 1.0);
  EXPECT_EQ(c.slowdown(1), 1.0);
  EXPECT_DOUBLE_EQ(c.slowdown(3), 1.10);
  for (std::uint32_t n = 1; n < 50; ++n) EXPECT_LE(c.slowdown(n), c.slowdown(n + 1));
}

TEST(Service, SpecExamples) {
  auto one = [](std::vector<double> arrivals, std::uint32_t cores) {
    return simulate_service(deterministic(cores, 10), {arrivals, UniformSource{1}}).samples();
  };
  EXPECT_EQ(one({0.0}, 1), (std::vector<double>{10.0}));
  EXPECT_EQ(one({0.0, 0.0}, 1), (std::vector<double>{10.0, 20.0}));
  EXPECT_EQ(one({0.0, 0.0}, 2), (std::vector<double>{10.0, 10.0}));
  EXPECT_EQ(code_of([] { simulate_service(deterministic(0, 1), {}); }), Errc::SpecViolation);
}

TEST(Service, MatchesReferenceDispatch) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> arrivals(1 + rng() % 200);
    double t = 0;
    for (auto& a : arrivals) a = (t += static_cast<double>(rng() % 20) / 1000.0);
    const std::uint32_t cores = 1 + static_cast<std::uint32_t>(rng() % 6);
    const auto got = simulate_service(deterministic(cores, 15), {arrivals, UniformSource{1}});
    const auto want = reference_latencies(arrivals, cores, 15);
    ASSERT_EQ(got.count(), arrivals.size());
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got.samples()[i], want[i], 1e-9);
  }
}

TEST(Service, AddingACoreNeverHurts) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> arrivals(1 + rng() % 150);
    double t = 0;
    for (auto& a : arrivals) a = (t += static_cast<double>(rng() % 10) / 1000.0);
    const std::uint32_t cores = 1 + static_cast<std::uint32_t>(rng() % 5);
    const double ms = 1 + static_cast<double>(rng() % 30);
    const auto a = simulate_service(deterministic(cores, ms), {arrivals, UniformSource{1}});
    const auto b = simulate_service(deterministic(cores + 1, ms), {arrivals, UniformSource{1}});
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
      ASSERT_LE(b.samples()[i], a.samples()[i] + 1e-9) << "trial " << trial << " req " << i;
    }
  }
}

TEST(Service, SeededDistributionsAreDeterministic) {
  auto m = deterministic(4, 10);
  m.service_time = {ServiceTimeDist::Kind::Exponential, 10, {}};
  m.seed = 3;
  const auto arr = gen_uniform(300, 20);
  EXPECT_EQ(simulate_service(m, arr).samples(), simulate_service(m, arr).samples());
  m.service_time = {ServiceTimeDist::Kind::Empirical, 0, {5, 10, 40}};
  const auto h = simulate_service(m, arr);
  EXPECT_EQ(h.count(), arr.times.size());
  for (double x : h.samples()) EXPECT_GE(x, 5.0 - 1e-9);
}

TEST(Service, SharedKernelContentionSlowsService) {
  auto iso = deterministic(2, 10);
  iso.external_contenders = 4;
  auto shared = iso;
  shared.contention = {ContentionMode::SharedKernel, 0.05};
  ArrivalSchedule one{{0.0}, UniformSource{1}};
  EXPECT_DOUBLE_EQ(simulate_service(iso, one).samples()[0], 10.0);
  EXPECT_DOUBLE_EQ(simulate_service(shared, one).samples()[0], 10.0 * 1.2);
}

TEST(Service, CoreChangesTakeEffect) {
  ServiceSimulator sim(deterministic(1, 100));
  EXPECT_DOUBLE_EQ(sim.submit(0.0).latency_ms, 100.0);
  sim.add_core(0.05);
  const auto c = sim.submit(0.0);
  EXPECT_EQ(c.core, 1u);
  EXPECT_DOUBLE_EQ(c.latency_ms, 150.0);  // waits for availability, no slowdown
  EXPECT_EQ(sim.active_cores(), 2u);
  sim.remove_core();
  EXPECT_EQ(sim.active_cores(), 1u);
  EXPECT_EQ(sim.submit(0.2).core, 0u);
  EXPECT_EQ(code_of([&] { sim.remove_core(); }), Errc::WouldEmptySubOS);
}

TEST(Batch, Examples) {
  const std::vector<CoreStep> four{{0, 4}};
  EXPECT_EQ(simulate_batch(100, four), 25.0);
  const std::vector<CoreStep> step{{0, 2}, {10, 4}};
  EXPECT_EQ(simulate_batch(100, step), 30.0);
  const std::vector<CoreStep> none{{0, 0}};
  EXPECT_EQ(code_of([&] { simulate_batch(10, none); }), Errc::NeverCompletes);
  const std::vector<CoreStep> stall{{0, 1}, {5, 0}};
  EXPECT_EQ(code_of([&] { simulate_batch(10, stall); }), Errc::NeverCompletes);
  EXPECT_EQ(code_of([&] { simulate_batch(0, four); }), Errc::SpecViolation);
  const std::vector<CoreStep> backwards{{5, 1}, {2, 1}};
  EXPECT_EQ(code_of([&] { simulate_batch(1, backwards); }), Errc::SpecViolation);
}

TEST(Batch, ClosedFormOnRandomTimelines) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<CoreStep> tl;
    std::int64_t t = static_cast<std::int64_t>(rng() % 10);
    const int steps = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < steps; ++i) {
      tl.push_back({static_cast<double>(t), static_cast<double>(rng() % 7)});
      t += 1 + static_cast<std::int64_t>(rng() % 20);
    }
    tl.back().cores = 1 + static_cast<double>(rng() % 6);
    const std::int64_t work = 1 + static_cast<std::int64_t>(rng() % 400);
    // Integer prefix sums, then one division inside the completing step.
    std::int64_t cum = 0;
    double want = -1;
    for (std::size_t i = 0; i < tl.size(); ++i) {
      const auto c = static_cast<std::int64_t>(tl[i].cores);
      if (i + 1 == tl.size()) {
        want = tl[i].start + static_cast<double>(work - cum) / static_cast<double>(c);
        break;
      }
      const auto span = static_cast<std::int64_t>(tl[i + 1].start - tl[i].start) * c;
      if (c > 0 && cum + span >= work) {
        want = tl[i].start + static_cast<double>(work - cum) / static_cast<double>(c);
        break;
      }
      cum += span;
    }
    ASSERT_EQ(simulate_batch(static_cast<double>(work), tl), want) << "trial " << trial;
  }
}

TEST(Counter, Examples) {
  DomainCounter c(1, 32);
  for (int i = 0; i < 31; ++i) ASSERT_EQ(c.add(0, 1), CounterResult::Local);
  EXPECT_EQ(c.lock_acquisitions(), 0u);
  EXPECT_EQ(c.add(0, 1), CounterResult::Flushed);
  EXPECT_EQ(c.lock_acquisitions(), 1u);
  EXPECT_EQ(c.global(), 32);
  EXPECT_EQ(c.local(0), 0);

  DomainCounter d(1, 32);
  for (int i = 0; i < 100; ++i) d.add(0, 1);
  EXPECT_EQ(d.global() + d.sum_locals(), 100);
  d.fold_all();
  EXPECT_EQ(d.global(), 100);
  EXPECT_EQ(d.sum_locals(), 0);
  EXPECT_EQ(code_of([&] { d.add(0, -1); }), Errc::SpecViolation);
}

TEST(Counter, ConservationAndFlushBound) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t workers = 1 + rng() % 6;
    const std::int64_t batch = 1 + static_cast<std::int64_t>(rng() % 64);
    DomainCounter c(workers, batch);
    std::vector<std::int64_t> issued(workers);
    for (int i = 0; i < 2000; ++i) {
      const auto w = rng() % workers;
      c.add(w, 1);
      ++issued[w];
      ASSERT_EQ(c.global() + c.sum_locals(), std::accumulate(issued.begin(), issued.end(), std::int64_t{0}));
    }
    for (std::size_t w = 0; w < workers; ++w) {
      const auto bound = static_cast<std::uint64_t>((issued[w] + batch - 1) / batch) + 1;
      ASSERT_LE(c.acquisitions(w), bound);
    }
  }
}

TEST(ContentionLab, IsolatedDomainsShareNothing) {
  ContentionConfig cfg;
  cfg.workers = 6;
  cfg.domains = 6;
  cfg.increments = 1000;
  const auto r = contention_experiment(cfg);
  EXPECT_EQ(r.cross_domain_sharing, 0u);
  EXPECT_EQ(r.total_counted, r.total_issued);
  EXPECT_EQ(r.total_issued, 6000);
  for (std::size_t w = 0; w < 6; ++w) EXPECT_EQ(r.worker_domain[w], w);
}

TEST(ContentionLab, InterleavedModelIsDeterministicAndOrdered) {
  ContentionConfig shared;
  shared.increments = 5000;
  auto isolated = shared;
  isolated.domains = 6;
  const auto a = contention_experiment(shared);
  const auto b = contention_experiment(shared);
  EXPECT_EQ(a.op_latency.samples(), b.op_latency.samples());
  const auto iso = contention_experiment(isolated);
  EXPECT_LT(iso.op_latency.percentile(0.99) , a.op_latency.percentile(0.99) + 1e-9);
  EXPECT_LE(iso.op_latency.percentile(0.999), a.op_latency.percentile(0.999));
  for (std::size_t w = 0; w < 6; ++w) {
    EXPECT_LE(a.per_worker_acquisitions[w], (5000u + 31u) / 32u + 1u);
  }
}

TEST(ContentionLab, RealThreadsConserveCounts) {
  ContentionConfig cfg;
  cfg.increments = 20000;
  cfg.real_concurrency = true;
  const auto r = contention_experiment(cfg);
  EXPECT_EQ(r.total_counted, r.total_issued);
  EXPECT_EQ(r.op_latency.count(), 6u * 20000u);
  for (auto acq : r.per_worker_acquisitions) EXPECT_LE(acq, (20000u + 31u) / 32u + 1u);
}
