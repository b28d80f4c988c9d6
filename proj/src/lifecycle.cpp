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

#include "ifts/lifecycle.hpp"

#include <algorithm>

#include "ifts/error.hpp"

namespace ifts {

namespace {

constexpr Bytes k512M = 512 * kMiB;

std::string join_devices(const std::set<DeviceId>& devices) {
  std::string out;
  for (const auto& d : devices) {
    if (!out.empty()) out += ',';
    out += d.name;
  }
  return out;
}

}  // namespace

std::string_view subos_state_name(SubOSState state) {
  switch (state) {
    case SubOSState::Preparing: return "Preparing";
    case SubOSState::Running: return "Running";
    case SubOSState::Draining: return "Draining";
    case SubOSState::Destroyed: return "Destroyed";
  }
  return "?";
}

std::string_view adjustment_op_name(AdjustmentOp op) {
  switch (op) {
    case AdjustmentOp::Create: return "Create";
    case AdjustmentOp::Destroy: return "Destroy";
    case AdjustmentOp::CpuOnline: return "CpuOnline";
    case AdjustmentOp::CpuOffline: return "CpuOffline";
    case AdjustmentOp::MemOnline: return "MemOnline";
    case AdjustmentOp::MemOffline: return "MemOffline";
  }
  return "?";
}

void LatencyModel::validate() const {
  for (auto d : {create, destroy, cpu_online, cpu_offline, mem_online_per_512m,
                 mem_offline_per_512m}) {
    if (d.count() < 0) {
      throw Error(Errc::SpecViolation, "latency model entries must be >= 0");
    }
  }
}

Lifecycle::Lifecycle(Ledger& ledger, VirtualClock& clock, LatencyModel latency)
    : ledger_(ledger), clock_(clock) {
  latency.validate();
  state_.latency = latency;
}

SimDuration Lifecycle::memory_charge(Bytes bytes, bool online) const {
  const auto per = online ? state_.latency.mem_online_per_512m
                          : state_.latency.mem_offline_per_512m;
  const auto scaled = (static_cast<unsigned __int128>(per.count()) * bytes + k512M / 2) / k512M;
  return SimDuration{static_cast<std::int64_t>(scaled)};
}

const SubOSDescriptor& Lifecycle::descriptor(SubOSId id) const {
  auto it = state_.subos.find(id);
  if (it == state_.subos.end()) {
    throw Error(Errc::UnknownSubOS, "no subos " + std::to_string(id.value));
  }
  return it->second;
}

std::vector<SubOSDescriptor> Lifecycle::subos_list() const {
  std::vector<SubOSDescriptor> out;
  out.reserve(state_.subos.size());
  for (const auto& [id, d] : state_.subos) out.push_back(d);
  return out;
}

std::optional<SubOSId> Lifecycle::find_live(std::string_view name) const {
  for (const auto& [id, d] : state_.subos) {
    if (d.name == name && d.state != SubOSState::Destroyed) return id;
  }
  return std::nullopt;
}

SubOSDescriptor& Lifecycle::running(SubOSId id) {
  auto it = state_.subos.find(id);
  if (it == state_.subos.end()) {
    throw Error(Errc::UnknownSubOS, "no subos " + std::to_string(id.value));
  }
  if (it->second.state != SubOSState::Running) {
    throw Error(Errc::DeadSubOS, "subos " + std::to_string(id.value) + " is " +
                                     std::string(subos_state_name(it->second.state)));
  }
  return it->second;
}

void Lifecycle::refresh_boot_info(SubOSDescriptor& d) const {
  const Bytes granularity = ledger_.spec().region_granularity;
  d.boot_info.smp_table.assign(d.grant.cores.begin(), d.grant.cores.end());
  d.boot_info.memory_map.clear();
  for (auto r : d.grant.regions) d.boot_info.memory_map.emplace_back(r, granularity);
  d.boot_info.boot_params["passthrough"] = join_devices(d.grant.devices);
  d.boot_info.boot_params["mem"] =
      std::to_string(d.grant.regions.size() * granularity / kMiB) + "M";
  d.boot_info.boot_params["nr_cpus"] = std::to_string(d.grant.cores.size());
}

void Lifecycle::charge_and_record(SubOSId id, AdjustmentOp op, ResourceGrant delta,
                                  SimDuration cost) {
  AdjustmentRecord rec{clock_.now(), id, op, std::move(delta), cost};
  clock_.advance(cost);
  state_.log.push_back(std::move(rec));
}

SubOSDescriptor Lifecycle::create_subos(const CreateRequest& request) {
  if (request.cores == 0) {
    throw Error(Errc::SpecViolation, "a subOS needs at least one core");
  }
  if (request.memory == 0) {
    throw Error(Errc::SpecViolation, "a subOS needs at least one memory region");
  }
  const SubOSId id{state_.next_id};
  const std::string name =
      request.name.empty() ? "subos" + std::to_string(id.value) : request.name;
  if (find_live(name)) {
    throw Error(Errc::SpecViolation, "subOS name '" + name + "' already in use");
  }
  const Bytes granularity = ledger_.spec().region_granularity;
  const auto regions =
      static_cast<std::uint32_t>((request.memory + granularity - 1) / granularity);

  // Pure query first so a refusal never touches the ledger.
  const ResourceGrant shape = ledger_.pick_free(request.cores, regions, request.devices);

  ledger_.admit(id);
  SubOSDescriptor d;
  d.id = id;
  d.name = name;
  d.state = SubOSState::Preparing;
  d.grant = ledger_.allocate(id, shape);
  d.comm_core = *d.grant.cores.begin();
  ledger_.update_shared_state(CommCoreChange{id, *d.comm_core});
  refresh_boot_info(d);
  d.boot_info.boot_params["comm_core"] = std::to_string(d.comm_core->value);

  d.created_at = clock_.now();
  charge_and_record(id, AdjustmentOp::Create, d.grant, state_.latency.create);
  d.state = SubOSState::Running;
  ++state_.next_id;
  state_.subos[id] = d;
  for (auto* o : observers_) o->on_created(id);
  return d;
}

ReclaimReport Lifecycle::destroy_subos(SubOSId id) {
  auto it = state_.subos.find(id);
  if (it == state_.subos.end()) {
    throw Error(Errc::UnknownSubOS, "no subos " + std::to_string(id.value));
  }
  SubOSDescriptor& d = it->second;
  if (d.state == SubOSState::Destroyed) {
    throw Error(Errc::AlreadyDestroyed, "subos " + std::to_string(id.value));
  }
  d.state = SubOSState::Draining;
  ledger_.update_shared_state(PurgeSubOS{id});
  for (auto* o : observers_) o->on_destroyed(id);

  ReclaimReport report{id, d.grant, state_.latency.destroy};
  ledger_.release(id, d.grant);
  ledger_.retire(id);
  charge_and_record(id, AdjustmentOp::Destroy, d.grant, state_.latency.destroy);
  d.grant = {};
  d.comm_core.reset();
  d.boot_info = {};
  d.destroyed_at = clock_.now();
  d.state = SubOSState::Destroyed;
  return report;
}

void Lifecycle::remove_cores(SubOSDescriptor& d, const std::set<CoreId>& cores) {
  ResourceGrant delta;
  delta.cores = cores;
  ledger_.release(d.id, delta);
  for (auto c : cores) d.grant.cores.erase(c);
  refresh_boot_info(d);
  charge_and_record(d.id, AdjustmentOp::CpuOffline, std::move(delta),
                    state_.latency.cpu_offline * static_cast<std::int64_t>(cores.size()));
}

std::set<CoreId> Lifecycle::resize_cpu(SubOSId id, int delta) {
  SubOSDescriptor& d = running(id);
  if (delta == 0) return d.grant.cores;
  if (delta > 0) {
    ResourceGrant add =
        ledger_.pick_free(static_cast<std::uint32_t>(delta), 0, {});
    ledger_.allocate(id, add);
    d.grant.cores.insert(add.cores.begin(), add.cores.end());
    refresh_boot_info(d);
    charge_and_record(id, AdjustmentOp::CpuOnline, std::move(add),
                      state_.latency.cpu_online * delta);
    return d.grant.cores;
  }
  const auto k = static_cast<std::size_t>(-static_cast<long>(delta));
  if (k >= d.grant.cores.size()) {
    throw Error(Errc::WouldEmptySubOS, "subos " + std::to_string(id.value) +
                                           " would lose all cores");
  }
  std::set<CoreId> victims;
  for (auto it = d.grant.cores.rbegin(); it != d.grant.cores.rend() && victims.size() < k;
       ++it) {
    if (*it != d.comm_core) victims.insert(*it);
  }
  remove_cores(d, victims);
  return d.grant.cores;
}

std::set<CoreId> Lifecycle::offline_cores(SubOSId id, const std::set<CoreId>& cores) {
  SubOSDescriptor& d = running(id);
  if (cores.empty()) return d.grant.cores;
  for (auto c : cores) {
    if (!d.grant.cores.contains(c)) {
      throw Error(Errc::NotOwner, to_string(Resource{c}) + " is not owned by subos " +
                                      std::to_string(id.value));
    }
  }
  if (cores.size() >= d.grant.cores.size()) {
    throw Error(Errc::WouldEmptySubOS, "subos " + std::to_string(id.value) +
                                           " would lose all cores");
  }
  if (d.comm_core && cores.contains(*d.comm_core)) {
    throw Error(Errc::CommCoreInUse, to_string(Resource{*d.comm_core}) +
                                         " must be reassigned first");
  }
  remove_cores(d, cores);
  return d.grant.cores;
}

void Lifecycle::set_comm_core(SubOSId id, CoreId core) {
  SubOSDescriptor& d = running(id);
  ledger_.update_shared_state(CommCoreChange{id, core});
  d.comm_core = core;
  d.boot_info.boot_params["comm_core"] = std::to_string(core.value);
}

std::set<MemRegionId> Lifecycle::resize_memory(SubOSId id, int delta_regions) {
  SubOSDescriptor& d = running(id);
  if (delta_regions == 0) return d.grant.regions;
  const Bytes granularity = ledger_.spec().region_granularity;
  if (delta_regions > 0) {
    ResourceGrant add =
        ledger_.pick_free(0, static_cast<std::uint32_t>(delta_regions), {});
    ledger_.allocate(id, add);
    d.grant.regions.insert(add.regions.begin(), add.regions.end());
    refresh_boot_info(d);
    charge_and_record(id, AdjustmentOp::MemOnline, std::move(add),
                      memory_charge(granularity * delta_regions, true));
    return d.grant.regions;
  }
  const auto k = static_cast<std::size_t>(-static_cast<long>(delta_regions));
  if (k >= d.grant.regions.size()) {
    throw Error(Errc::WouldEmptySubOS, "subos " + std::to_string(id.value) +
                                           " would lose all memory");
  }
  ResourceGrant del;
  for (auto it = d.grant.regions.rbegin(); del.regions.size() < k; ++it) {
    del.regions.insert(*it);
  }
  ledger_.release(id, del);
  for (auto r : del.regions) d.grant.regions.erase(r);
  refresh_boot_info(d);
  charge_and_record(id, AdjustmentOp::MemOffline, std::move(del),
                    memory_charge(granularity * k, false));
  return d.grant.regions;
}

}  // namespace ifts
