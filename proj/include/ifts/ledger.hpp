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

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ifts/clock.hpp"
#include "ifts/spinlock.hpp"
#include "ifts/types.hpp"

namespace ifts {

struct NodeSpec {
  std::uint32_t total_cores = 0;
  Bytes total_memory = 0;
  Bytes region_granularity = 128 * kMiB;
  std::vector<DeviceId> devices;

  std::uint32_t region_count() const {
    return static_cast<std::uint32_t>(total_memory / region_granularity);
  }

  // Throws SpecViolation.
  void validate() const;

  bool operator==(const NodeSpec&) const = default;
};

struct ResourceGrant {
  std::set<CoreId> cores;
  std::set<MemRegionId> regions;
  std::set<DeviceId> devices;

  bool empty() const {
    return cores.empty() && regions.empty() && devices.empty();
  }
  bool operator==(const ResourceGrant&) const = default;
};

class OwnerRef {
 public:
  enum class Kind { Free, Supervisor, SubOS };

  static OwnerRef free() { return OwnerRef(Kind::Free, {}); }
  static OwnerRef supervisor() { return OwnerRef(Kind::Supervisor, {}); }
  static OwnerRef subos(SubOSId id) { return OwnerRef(Kind::SubOS, id); }

  Kind kind() const { return kind_; }
  // Meaningful only for Kind::SubOS.
  SubOSId id() const { return id_; }

  bool operator==(const OwnerRef&) const = default;
  std::string to_string() const;

 private:
  OwnerRef(Kind kind, SubOSId id) : kind_(kind), id_(id) {}

  Kind kind_;
  SubOSId id_;
};

struct SharedStateTable {
  std::map<SubOSId, CoreId> comm_cores;
  std::map<MacAddr, SubOSId> macs;
  std::uint64_t version = 0;

  bool operator==(const SharedStateTable&) const = default;
};

struct CommCoreChange {
  SubOSId subos;
  CoreId core;
};

struct MacChange {
  enum class Op { Add, Remove };
  MacAddr mac;
  SubOSId subos;
  Op op = Op::Add;
};

// Drops every shared-state entry of a subOS in one mutation.
struct PurgeSubOS {
  SubOSId subos;
};

using SharedStateMutation = std::variant<CommCoreChange, MacChange, PurgeSubOS>;

using BorrowableResource = std::variant<CoreId, MemRegionId>;

struct BorrowRecord {
  SubOSId lender;
  SubOSId borrower;
  BorrowableResource resource;
  SimDuration registered_at{0};

  bool operator==(const BorrowRecord&) const = default;
};

enum class ProtectedClass { LowMemory = 0, IoApic = 1, PciConfig = 2 };

std::string_view protected_class_name(ProtectedClass cls);

// The supervisor's ownership ledger. Every core, memory region and device has
// exactly one OwnerRef at all times. Mutations are all-or-nothing: a thrown
// Error leaves the state identical to what it was before the call.
//
// Mutations serialize through an exclusive lock; queries share it.
class Ledger {
 public:
  // Plain copyable snapshot of everything the ledger records.
  struct State {
    NodeSpec spec;
    std::vector<OwnerRef> core_owner;
    std::vector<OwnerRef> region_owner;
    std::map<DeviceId, OwnerRef> device_owner;
    std::set<SubOSId> live;
    SharedStateTable shared;
    std::vector<BorrowRecord> borrows;

    bool operator==(const State&) const = default;
  };

  // Supervisor takes the lowest-numbered cores and regions. Memory is rounded
  // up to whole regions.
  static Ledger init_node(const NodeSpec& spec, std::uint32_t supervisor_cores,
                          Bytes supervisor_memory);
  // Throws SpecViolation when `state` is not a consistent partition.
  static Ledger restore(State state);

  Ledger(Ledger&& other) noexcept;
  Ledger& operator=(Ledger&& other) noexcept;
  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  State snapshot() const;
  const NodeSpec& spec() const { return state_.spec; }

  // Liveness of subOS identities.
  void admit(SubOSId id);
  // Requires the subOS to hold nothing and to have no shared-state entries.
  void retire(SubOSId id);
  bool is_live(SubOSId id) const;
  std::vector<SubOSId> live_subos() const;

  ResourceGrant allocate(SubOSId subos, const ResourceGrant& request);
  void release(SubOSId subos, const ResourceGrant& grant);

  OwnerRef owner_of(const Resource& resource) const;
  ResourceGrant holdings(OwnerRef owner) const;
  ResourceGrant free_resources() const;

  // Lowest-numbered free cores/regions plus the named devices. Pure query;
  // throws Unavailable when the node cannot satisfy the shape.
  ResourceGrant pick_free(std::uint32_t cores, std::uint32_t regions,
                          const std::vector<DeviceId>& devices) const;

  BorrowRecord register_borrow(SubOSId lender, SubOSId borrower,
                               BorrowableResource resource, SimDuration at);
  std::vector<BorrowRecord> borrow_log() const;

  // Returns the new version.
  std::uint64_t update_shared_state(const SharedStateMutation& mutation);
  SharedStateTable shared_state() const;

  // Runs `action` holding the class's global spinlock. The lock is released
  // on return and on exception.
  template <typename F>
  decltype(auto) with_protected(ProtectedClass cls, F&& action) {
    std::lock_guard<SpinLock> guard(page_.locks[static_cast<int>(cls)]);
    return std::forward<F>(action)();
  }

  // Empty when the partition invariants hold, otherwise a description.
  std::optional<std::string> check_partition() const;

 private:
  struct SharedPage {
    std::array<SpinLock, 3> locks;
  };

  explicit Ledger(State state) : state_(std::move(state)) {}

  OwnerRef owner_unlocked(const Resource& resource) const;
  void require_live(SubOSId id) const;

  mutable std::shared_mutex mu_;
  State state_;
  SharedPage page_;
};

}  // namespace ifts
