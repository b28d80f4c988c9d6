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

#include "ifts/ledger.hpp"

#include <algorithm>

#include "ifts/error.hpp"

namespace ifts {

namespace {

std::string subos_name(SubOSId id) { return "subos " + std::to_string(id.value); }

}  // namespace

void NodeSpec::validate() const {
  if (total_cores < 2) {
    throw Error(Errc::SpecViolation, "node needs at least 2 cores");
  }
  if (region_granularity == 0 || total_memory == 0) {
    throw Error(Errc::SpecViolation, "memory and region granularity must be > 0");
  }
  if (total_memory % region_granularity != 0) {
    throw Error(Errc::SpecViolation,
                "region granularity must divide total memory");
  }
  std::set<DeviceId> seen;
  for (const auto& d : devices) {
    if (d.name.empty() || !seen.insert(d).second) {
      throw Error(Errc::SpecViolation, "device ids must be unique and non-empty");
    }
  }
}

std::string OwnerRef::to_string() const {
  switch (kind_) {
    case Kind::Free: return "free";
    case Kind::Supervisor: return "supervisor";
    case Kind::SubOS: return "subos:" + std::to_string(id_.value);
  }
  return "?";
}

std::string_view protected_class_name(ProtectedClass cls) {
  switch (cls) {
    case ProtectedClass::LowMemory: return "LowMemory";
    case ProtectedClass::IoApic: return "IoApic";
    case ProtectedClass::PciConfig: return "PciConfig";
  }
  return "?";
}

Ledger Ledger::init_node(const NodeSpec& spec, std::uint32_t supervisor_cores,
                         Bytes supervisor_memory) {
  spec.validate();
  if (supervisor_cores == 0) {
    throw Error(Errc::SpecViolation, "supervisor needs at least one core");
  }
  if (supervisor_cores > spec.total_cores) {
    throw Error(Errc::SpecViolation, "supervisor cores exceed node cores");
  }
  if (supervisor_memory < spec.region_granularity ||
      supervisor_memory > spec.total_memory) {
    throw Error(Errc::SpecViolation,
                "supervisor memory must be within [granularity, total]");
  }
  State state;
  state.spec = spec;
  state.core_owner.assign(spec.total_cores, OwnerRef::free());
  state.region_owner.assign(spec.region_count(), OwnerRef::free());
  for (std::uint32_t c = 0; c < supervisor_cores; ++c) {
    state.core_owner[c] = OwnerRef::supervisor();
  }
  const auto sup_regions = static_cast<std::uint32_t>(
      (supervisor_memory + spec.region_granularity - 1) / spec.region_granularity);
  for (std::uint32_t r = 0; r < sup_regions; ++r) {
    state.region_owner[r] = OwnerRef::supervisor();
  }
  for (const auto& d : spec.devices) {
    state.device_owner.emplace(d, OwnerRef::free());
  }
  return Ledger(std::move(state));
}

Ledger Ledger::restore(State state) {
  Ledger ledger(std::move(state));
  if (auto why = ledger.check_partition()) {
    throw Error(Errc::SpecViolation, "inconsistent ledger state: " + *why);
  }
  return ledger;
}

Ledger::Ledger(Ledger&& other) noexcept : state_(std::move(other.state_)) {}

Ledger& Ledger::operator=(Ledger&& other) noexcept {
  if (this != &other) state_ = std::move(other.state_);
  return *this;
}

Ledger::State Ledger::snapshot() const {
  std::shared_lock lock(mu_);
  return state_;
}

void Ledger::admit(SubOSId id) {
  std::unique_lock lock(mu_);
  if (!state_.live.insert(id).second) {
    throw Error(Errc::SpecViolation, subos_name(id) + " already live");
  }
}

void Ledger::retire(SubOSId id) {
  std::unique_lock lock(mu_);
  require_live(id);
  const OwnerRef me = OwnerRef::subos(id);
  const bool holds =
      std::find(state_.core_owner.begin(), state_.core_owner.end(), me) !=
          state_.core_owner.end() ||
      std::find(state_.region_owner.begin(), state_.region_owner.end(), me) !=
          state_.region_owner.end() ||
      std::any_of(state_.device_owner.begin(), state_.device_owner.end(),
                  [&](const auto& kv) { return kv.second == me; });
  if (holds) {
    throw Error(Errc::SpecViolation, subos_name(id) + " still holds resources");
  }
  if (state_.shared.comm_cores.contains(id)) {
    throw Error(Errc::SpecViolation, subos_name(id) + " still has a comm core");
  }
  state_.live.erase(id);
}

bool Ledger::is_live(SubOSId id) const {
  std::shared_lock lock(mu_);
  return state_.live.contains(id);
}

std::vector<SubOSId> Ledger::live_subos() const {
  std::shared_lock lock(mu_);
  return {state_.live.begin(), state_.live.end()};
}

void Ledger::require_live(SubOSId id) const {
  if (!state_.live.contains(id)) {
    throw Error(Errc::DeadSubOS, subos_name(id) + " is not live");
  }
}

OwnerRef Ledger::owner_unlocked(const Resource& resource) const {
  if (const auto* c = std::get_if<CoreId>(&resource)) {
    if (c->value >= state_.core_owner.size()) {
      throw Error(Errc::UnknownResource, to_string(resource));
    }
    return state_.core_owner[c->value];
  }
  if (const auto* r = std::get_if<MemRegionId>(&resource)) {
    if (r->value >= state_.region_owner.size()) {
      throw Error(Errc::UnknownResource, to_string(resource));
    }
    return state_.region_owner[r->value];
  }
  const auto& d = std::get<DeviceId>(resource);
  auto it = state_.device_owner.find(d);
  if (it == state_.device_owner.end()) {
    throw Error(Errc::UnknownResource, to_string(resource));
  }
  return it->second;
}

OwnerRef Ledger::owner_of(const Resource& resource) const {
  std::shared_lock lock(mu_);
  return owner_unlocked(resource);
}

ResourceGrant Ledger::allocate(SubOSId subos, const ResourceGrant& request) {
  std::unique_lock lock(mu_);
  require_live(subos);
  // Validate everything before touching state.
  auto check_free = [&](const Resource& r) {
    if (owner_unlocked(r) != OwnerRef::free()) {
      throw Error(Errc::Unavailable, to_string(r) + " is owned by " +
                                         owner_unlocked(r).to_string());
    }
  };
  for (auto c : request.cores) check_free(c);
  for (auto r : request.regions) check_free(r);
  for (const auto& d : request.devices) check_free(d);

  const OwnerRef me = OwnerRef::subos(subos);
  for (auto c : request.cores) state_.core_owner[c.value] = me;
  for (auto r : request.regions) state_.region_owner[r.value] = me;
  for (const auto& d : request.devices) state_.device_owner.at(d) = me;
  return request;
}

void Ledger::release(SubOSId subos, const ResourceGrant& grant) {
  std::unique_lock lock(mu_);
  const OwnerRef me = OwnerRef::subos(subos);
  auto check_owned = [&](const Resource& r) {
    if (owner_unlocked(r) != me) {
      throw Error(Errc::NotOwner,
                  to_string(r) + " is not owned by " + subos_name(subos));
    }
  };
  for (auto c : grant.cores) check_owned(c);
  for (auto r : grant.regions) check_owned(r);
  for (const auto& d : grant.devices) check_owned(d);
  if (auto it = state_.shared.comm_cores.find(subos);
      it != state_.shared.comm_cores.end() && grant.cores.contains(it->second)) {
    throw Error(Errc::CommCoreInUse,
                to_string(it->second) + " is the comm core of " + subos_name(subos));
  }

  for (auto c : grant.cores) state_.core_owner[c.value] = OwnerRef::free();
  for (auto r : grant.regions) state_.region_owner[r.value] = OwnerRef::free();
  for (const auto& d : grant.devices) state_.device_owner.at(d) = OwnerRef::free();
}

ResourceGrant Ledger::holdings(OwnerRef owner) const {
  std::shared_lock lock(mu_);
  ResourceGrant out;
  for (std::uint32_t i = 0; i < state_.core_owner.size(); ++i) {
    if (state_.core_owner[i] == owner) out.cores.insert(CoreId{i});
  }
  for (std::uint32_t i = 0; i < state_.region_owner.size(); ++i) {
    if (state_.region_owner[i] == owner) out.regions.insert(MemRegionId{i});
  }
  for (const auto& [d, o] : state_.device_owner) {
    if (o == owner) out.devices.insert(d);
  }
  return out;
}

ResourceGrant Ledger::free_resources() const { return holdings(OwnerRef::free()); }

ResourceGrant Ledger::pick_free(std::uint32_t cores, std::uint32_t regions,
                                const std::vector<DeviceId>& devices) const {
  std::shared_lock lock(mu_);
  ResourceGrant out;
  for (std::uint32_t i = 0; i < state_.core_owner.size() && out.cores.size() < cores; ++i) {
    if (state_.core_owner[i] == OwnerRef::free()) out.cores.insert(CoreId{i});
  }
  if (out.cores.size() < cores) {
    throw Error(Errc::Unavailable, "need " + std::to_string(cores) +
                                       " free cores, have " +
                                       std::to_string(out.cores.size()));
  }
  for (std::uint32_t i = 0;
       i < state_.region_owner.size() && out.regions.size() < regions; ++i) {
    if (state_.region_owner[i] == OwnerRef::free()) {
      out.regions.insert(MemRegionId{i});
    }
  }
  if (out.regions.size() < regions) {
    throw Error(Errc::Unavailable, "need " + std::to_string(regions) +
                                       " free memory regions, have " +
                                       std::to_string(out.regions.size()));
  }
  for (const auto& d : devices) {
    const OwnerRef o = owner_unlocked(d);
    if (o != OwnerRef::free()) {
      throw Error(Errc::Unavailable,
                  to_string(Resource{d}) + " is owned by " + o.to_string());
    }
    out.devices.insert(d);
  }
  return out;
}

BorrowRecord Ledger::register_borrow(SubOSId lender, SubOSId borrower,
                                     BorrowableResource resource, SimDuration at) {
  std::unique_lock lock(mu_);
  require_live(lender);
  require_live(borrower);
  if (lender == borrower) {
    throw Error(Errc::SpecViolation, "a subOS cannot borrow from itself");
  }
  const Resource r = std::visit([](auto v) { return Resource{v}; }, resource);
  if (owner_unlocked(r) != OwnerRef::subos(lender)) {
    throw Error(Errc::NotOwner,
                to_string(r) + " is not owned by " + subos_name(lender));
  }
  BorrowRecord rec{lender, borrower, resource, at};
  state_.borrows.push_back(rec);
  return rec;
}

std::vector<BorrowRecord> Ledger::borrow_log() const {
  std::shared_lock lock(mu_);
  return state_.borrows;
}

std::uint64_t Ledger::update_shared_state(const SharedStateMutation& mutation) {
  std::unique_lock lock(mu_);
  auto& table = state_.shared;
  if (const auto* cc = std::get_if<CommCoreChange>(&mutation)) {
    require_live(cc->subos);
    if (owner_unlocked(cc->core) != OwnerRef::subos(cc->subos)) {
      throw Error(Errc::InvalidCommCore, to_string(cc->core) +
                                             " is not owned by " +
                                             subos_name(cc->subos));
    }
    table.comm_cores[cc->subos] = cc->core;
  } else if (const auto* mc = std::get_if<MacChange>(&mutation)) {
    require_live(mc->subos);
    if (mc->op == MacChange::Op::Add) {
      if (mc->mac.is_broadcast() || mc->mac == MacAddr{}) {
        throw Error(Errc::SpecViolation,
                    "cannot register " + mc->mac.to_string());
      }
      if (table.macs.contains(mc->mac)) {
        throw Error(Errc::DuplicateMac, mc->mac.to_string() + " already registered");
      }
      table.macs.emplace(mc->mac, mc->subos);
    } else {
      auto it = table.macs.find(mc->mac);
      if (it == table.macs.end() || it->second != mc->subos) {
        throw Error(Errc::NotOwner, mc->mac.to_string() + " is not owned by " +
                                        subos_name(mc->subos));
      }
      table.macs.erase(it);
    }
  } else {
    const SubOSId id = std::get<PurgeSubOS>(mutation).subos;
    table.comm_cores.erase(id);
    std::erase_if(table.macs, [&](const auto& kv) { return kv.second == id; });
  }
  return ++table.version;
}

SharedStateTable Ledger::shared_state() const {
  std::shared_lock lock(mu_);
  return state_.shared;
}

std::optional<std::string> Ledger::check_partition() const {
  std::shared_lock lock(mu_);
  const auto& s = state_;
  if (s.core_owner.size() != s.spec.total_cores) return "core table size mismatch";
  if (s.region_owner.size() != s.spec.region_count()) {
    return "region table size mismatch";
  }
  if (s.device_owner.size() != s.spec.devices.size()) {
    return "device table size mismatch";
  }
  for (const auto& d : s.spec.devices) {
    if (!s.device_owner.contains(d)) return "device " + d.name + " missing";
  }
  auto owner_ok = [&](const OwnerRef& o) {
    return o.kind() != OwnerRef::Kind::SubOS || s.live.contains(o.id());
  };
  std::size_t sup_cores = 0;
  for (std::size_t i = 0; i < s.core_owner.size(); ++i) {
    if (!owner_ok(s.core_owner[i])) return "core" + std::to_string(i) + " owned by dead subOS";
    if (s.core_owner[i] == OwnerRef::supervisor()) ++sup_cores;
  }
  if (sup_cores < 1) return "supervisor has no core";
  for (std::size_t i = 0; i < s.region_owner.size(); ++i) {
    if (!owner_ok(s.region_owner[i])) return "region" + std::to_string(i) + " owned by dead subOS";
  }
  for (const auto& [d, o] : s.device_owner) {
    if (!owner_ok(o)) return "device " + d.name + " owned by dead subOS";
  }
  for (const auto& [id, core] : s.shared.comm_cores) {
    if (core.value >= s.core_owner.size() ||
        s.core_owner[core.value] != OwnerRef::subos(id)) {
      return "comm core of " + subos_name(id) + " not owned by it";
    }
  }
  for (const auto& [mac, id] : s.shared.macs) {
    if (!s.live.contains(id)) return "MAC " + mac.to_string() + " maps to dead subOS";
  }
  return std::nullopt;
}

}  // namespace ifts
