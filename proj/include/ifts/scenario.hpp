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
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifts/ledger.hpp"
#include "ifts/lifecycle.hpp"
#include "ifts/types.hpp"
#include "ifts/workloads.hpp"

namespace ifts {

struct ScenarioSubOS {
  std::string name;
  std::uint32_t cores = 0;
  Bytes memory = 0;
  std::vector<DeviceId> devices;
  std::vector<MacAddr> macs;
};

struct ServiceBinding {
  std::string subos;
  ArrivalSource arrivals;
  ServiceTimeDist service_time;
  ContentionCurve contention;
};

struct BatchBinding {
  std::string subos;
  double work_core_s = 0;  // one job; jobs repeat back to back
};

struct SchedulerBinding {
  double lt_ms = 160.0;
  double ut_ms = 200.0;
  double window_s = 10.0;
  double percentile = 0.99;
  std::string service;
  std::string batch;
  std::uint32_t min_cores_each = 1;
};

struct FicmTraffic {
  std::string from, to;
  std::size_t capacity = 256;
  std::size_t messages = 0;
  std::size_t budget = 64;
};

struct RfcomTraffic {
  std::string from, to;
  std::size_t capacity = 64 * 1024;
  std::size_t bytes = 0;
  std::size_t chunk = 4096;
};

struct RfloopTraffic {
  std::string from;
  std::string to;  // subOS name, "broadcast", or a MAC literal
  std::size_t frames = 0;
  std::size_t payload_bytes = 64;
  std::size_t burst = 32;  // frames injected between receiver polls
};

inline const std::vector<std::string> kAllReports = {
    "decisions", "latencies", "adjustments", "fabric_stats", "summary", "frames", "ledger"};
inline const std::vector<std::string> kDefaultReports = {
    "decisions", "latencies", "adjustments", "fabric_stats", "summary"};

struct Scenario {
  NodeSpec node;
  std::uint32_t supervisor_cores = 1;
  Bytes supervisor_memory = kGiB;
  LatencyModel latency;
  std::vector<ScenarioSubOS> subos;
  std::optional<ServiceBinding> service;
  std::optional<BatchBinding> batch;
  std::optional<SchedulerBinding> scheduler;
  std::vector<FicmTraffic> ficm;
  std::vector<RfcomTraffic> rfcom;
  std::vector<RfloopTraffic> rfloop;
  std::optional<std::uint64_t> seed;
  double duration_s = 0;
  std::vector<std::string> outputs = kDefaultReports;

  // Poisson arrivals or a random service-time distribution.
  bool stochastic() const;
};

// Throws Error(Validation) whose message starts with the offending field path,
// e.g. "workloads.service.subos: unknown subOS 'web'".
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

// Report file name -> contents.
struct RunReport {
  std::map<std::string, std::string> files;
};

// Deterministic for a given scenario and seed. Throws Validation when a
// stochastic scenario has no seed; other Errors are runtime failures.
RunReport run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed_override = {});
void write_report(const RunReport& report, const std::filesystem::path& out_dir);

// Parse, run, write. Returns 0 on success, 2 on validation error, 3 on
// runtime error; diagnostics go to `err`.
int run_scenario_file(const std::filesystem::path& scenario_path,
                      const std::filesystem::path& out_dir,
                      std::optional<std::uint64_t> seed_override, std::ostream& err);

}  // namespace ifts
