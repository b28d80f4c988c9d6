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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ifts/clock.hpp"
#include "ifts/ledger.hpp"
#include "ifts/types.hpp"

namespace ifts {

enum class SubOSState { Preparing, Running, Draining, Destroyed };
std::string_view subos_state_name(SubOSState state);

// Firmware-style description handed to a booting subOS. Mirrors its grant.
struct BootInfo {
  std::vector<CoreId> smp_table;
  std::vector<std::pair<MemRegionId, Bytes>> memory_map;
  std::map<std::string, std::string> boot_params;

  bool operator==(const BootInfo&) const = default;
};

struct SubOSDescriptor {
  SubOSId id;
  std::string name;
  SubOSState state = SubOSState::Preparing;
  ResourceGrant grant;
  BootInfo boot_info;
  std::optional<CoreId> comm_core;
  SimDuration created_at{0};
  std::optional<SimDuration> destroyed_at;

  bool operator==(const SubOSDescriptor&) const = default;
};

// Cost of each adjustment, charged to the virtual clock. Defaults are the
// measured create/destroy/hot-plug costs of the partitioned kernel.
struct LatencyModel {
  SimDuration create{6'100'000};
  SimDuration destroy{0};
  SimDuration cpu_online{66'000};
  SimDuration cpu_offline{54'000};
  SimDuration mem_online_per_512m{20'000};
  SimDuration mem_offline_per_512m{60'000};

  void validate() const;
  bool operator==(const LatencyModel&) const = default;
};

enum class AdjustmentOp { Create, Destroy, CpuOnline, CpuOffline, MemOnline, MemOffline };
std::string_view adjustment_op_name(AdjustmentOp op);

struct AdjustmentRecord {
  SimDuration time{0};  // clock value when the adjustment began
  SubOSId subos;
  AdjustmentOp op = AdjustmentOp::Create;
  ResourceGrant delta;
  SimDuration charged{0};

  bool operator==(const AdjustmentRecord&) const = default;
};

struct CreateRequest {
  std::string name;  // empty: "subos<id>"
  std::uint32_t cores = 0;
  Bytes memory = 0;  // rounded up to whole regions
  std::vector<DeviceId> devices;
};

struct ReclaimReport {
  SubOSId id;
  ResourceGrant reclaimed;
  SimDuration charged{0};
};

// Notified after a subOS becomes Running and while it is Draining, so the
// communication fabric can add or invalidate its endpoints.
class LifecycleObserver {
 public:
  virtual ~LifecycleObserver() = default;
  virtual void on_created(SubOSId) {}
  virtual void on_destroyed(SubOSId) {}
};

class Lifecycle {
 public:
  struct State {
    LatencyModel latency;
    std::map<SubOSId, SubOSDescriptor> subos;
    std::vector<AdjustmentRecord> log;
    std::uint32_t next_id = 1;

    bool operator==(const State&) const = default;
  };

  Lifecycle(Ledger& ledger, VirtualClock& clock, LatencyModel latency = {});

  SubOSDescriptor create_subos(const CreateRequest& request);
  ReclaimReport destroy_subos(SubOSId id);

  // Positive delta hot-adds the lowest free cores; negative delta removes the
  // highest-numbered cores other than the communication core. Returns the
  // subOS's core set afterwards; the change itself is in the log record.
  std::set<CoreId> resize_cpu(SubOSId id, int delta);
  // Removes exactly `cores`; fails with CommCoreInUse if the communication
  // core is among them.
  std::set<CoreId> offline_cores(SubOSId id, const std::set<CoreId>& cores);
  // Moves the communication core to another core the subOS owns. No charge.
  void set_comm_core(SubOSId id, CoreId core);

  // Same shape as resize_cpu; removal takes the highest-numbered regions.
  std::set<MemRegionId> resize_memory(SubOSId id, int delta_regions);

  const std::vector<AdjustmentRecord>& adjustment_log() const { return state_.log; }

  // Throws UnknownSubOS.
  const SubOSDescriptor& descriptor(SubOSId id) const;
  std::vector<SubOSDescriptor> subos_list() const;
  std::optional<SubOSId> find_live(std::string_view name) const;

  void add_observer(LifecycleObserver* observer) { observers_.push_back(observer); }

  Ledger& ledger() { return ledger_; }
  const Ledger& ledger() const { return ledger_; }
  VirtualClock& clock() { return clock_; }
  const LatencyModel& latency() const { return state_.latency; }

  SimDuration memory_charge(Bytes bytes, bool online) const;

  const State& snapshot() const { return state_; }
  // Replaces the bookkeeping; the caller restores the matching ledger.
  void restore(State state) { state_ = std::move(state); }

 private:
  SubOSDescriptor& running(SubOSId id);
  void refresh_boot_info(SubOSDescriptor& d) const;
  void charge_and_record(SubOSId id, AdjustmentOp op, ResourceGrant delta,
                         SimDuration cost);
  void remove_cores(SubOSDescriptor& d, const std::set<CoreId>& cores);

  Ledger& ledger_;
  VirtualClock& clock_;
  State state_;
  std::vector<LifecycleObserver*> observers_;
};

}  // namespace ifts
