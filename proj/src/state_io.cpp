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

#include "ifts/state_io.hpp"

#include <cctype>
#include <charconv>

#include "ifts/error.hpp"

namespace ifts {

using nlohmann::json;

namespace {

constexpr std::string_view kStateFormat = "ifts-node-state/1";

std::string owner_text(const OwnerRef& o) { return o.to_string(); }

OwnerRef owner_from_text(const std::string& s) {
  if (s == "free") return OwnerRef::free();
  if (s == "supervisor") return OwnerRef::supervisor();
  if (s.rfind("subos:", 0) == 0) {
    return OwnerRef::subos(SubOSId{static_cast<std::uint32_t>(std::stoul(s.substr(6)))});
  }
  throw Error(Errc::Validation, "bad owner '" + s + "'");
}

json grant_to_json(const ResourceGrant& g) {
  json j;
  j["cores"] = json::array();
  for (auto c : g.cores) j["cores"].push_back(c.value);
  j["regions"] = json::array();
  for (auto r : g.regions) j["regions"].push_back(r.value);
  j["devices"] = json::array();
  for (const auto& d : g.devices) j["devices"].push_back(d.name);
  return j;
}

ResourceGrant grant_from_json(const json& j) {
  ResourceGrant g;
  for (auto v : j.at("cores")) g.cores.insert(CoreId{v.get<std::uint32_t>()});
  for (auto v : j.at("regions")) g.regions.insert(MemRegionId{v.get<std::uint32_t>()});
  for (auto v : j.at("devices")) g.devices.insert(DeviceId{v.get<std::string>()});
  return g;
}

SubOSState subos_state_from(const std::string& s) {
  for (auto st : {SubOSState::Preparing, SubOSState::Running, SubOSState::Draining,
                  SubOSState::Destroyed}) {
    if (subos_state_name(st) == s) return st;
  }
  throw Error(Errc::Validation, "bad subOS state '" + s + "'");
}

AdjustmentOp op_from(const std::string& s) {
  for (auto op : {AdjustmentOp::Create, AdjustmentOp::Destroy, AdjustmentOp::CpuOnline,
                  AdjustmentOp::CpuOffline, AdjustmentOp::MemOnline, AdjustmentOp::MemOffline}) {
    if (adjustment_op_name(op) == s) return op;
  }
  throw Error(Errc::Validation, "bad adjustment op '" + s + "'");
}

}  // namespace

Bytes parse_bytes(std::string_view text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr == text.data()) {
    throw Error(Errc::Validation, "bad size '" + std::string(text) + "'");
  }
  std::string_view suffix(ptr, static_cast<std::size_t>(end - ptr));
  if (!suffix.empty() && (suffix.back() == 'B' || suffix.back() == 'b')) {
    suffix.remove_suffix(1);
  }
  if (suffix.size() == 2 && (suffix[1] == 'i' || suffix[1] == 'I')) suffix.remove_suffix(1);
  Bytes mult = 1;
  if (suffix.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(suffix[0]))) {
      case 'K': mult = Bytes{1} << 10; break;
      case 'M': mult = kMiB; break;
      case 'G': mult = kGiB; break;
      case 'T': mult = Bytes{1} << 40; break;
      default: throw Error(Errc::Validation, "bad size suffix in '" + std::string(text) + "'");
    }
  } else if (!suffix.empty()) {
    throw Error(Errc::Validation, "bad size suffix in '" + std::string(text) + "'");
  }
  return value * mult;
}

std::string format_bytes(Bytes bytes) {
  if (bytes != 0 && bytes % kGiB == 0) return std::to_string(bytes / kGiB) + "G";
  if (bytes != 0 && bytes % kMiB == 0) return std::to_string(bytes / kMiB) + "M";
  return std::to_string(bytes);
}

std::string grant_to_string(const ResourceGrant& g) {
  std::string out;
  // Consecutive ids collapse to "a-b"; runs are ';'-separated.
  auto ids = [&](std::string_view name, const auto& items) {
    if (items.empty()) return;
    if (!out.empty()) out += ' ';
    out += name;
    out += '=';
    bool first = true;
    for (auto it = items.begin(); it != items.end();) {
      const auto lo = it->value;
      auto hi = lo;
      for (++it; it != items.end() && it->value == hi + 1; ++it) hi = it->value;
      if (!first) out += ';';
      out += std::to_string(lo);
      if (hi != lo) out += "-" + std::to_string(hi);
      first = false;
    }
  };
  ids("cores", g.cores);
  ids("regions", g.regions);
  if (!g.devices.empty()) {
    if (!out.empty()) out += ' ';
    out += "devices=";
    bool first = true;
    for (const auto& d : g.devices) {
      if (!first) out += ';';
      out += d.name;
      first = false;
    }
  }
  return out;
}

json ledger_to_json(const Ledger::State& s) {
  json j;
  j["spec"] = {{"total_cores", s.spec.total_cores},
               {"total_memory", s.spec.total_memory},
               {"region_granularity", s.spec.region_granularity},
               {"devices", json::array()}};
  for (const auto& d : s.spec.devices) j["spec"]["devices"].push_back(d.name);
  json owners;
  owners["cores"] = json::array();
  for (const auto& o : s.core_owner) owners["cores"].push_back(owner_text(o));
  owners["regions"] = json::array();
  for (const auto& o : s.region_owner) owners["regions"].push_back(owner_text(o));
  owners["devices"] = json::object();
  for (const auto& [d, o] : s.device_owner) owners["devices"][d.name] = owner_text(o);
  j["owners"] = owners;
  j["live"] = json::array();
  for (auto id : s.live) j["live"].push_back(id.value);
  json shared;
  shared["version"] = s.shared.version;
  shared["comm_cores"] = json::object();
  for (const auto& [id, core] : s.shared.comm_cores) {
    shared["comm_cores"][std::to_string(id.value)] = core.value;
  }
  shared["macs"] = json::object();
  for (const auto& [mac, id] : s.shared.macs) shared["macs"][mac.to_string()] = id.value;
  j["shared_state"] = shared;
  j["borrows"] = json::array();
  for (const auto& b : s.borrows) {
    j["borrows"].push_back(
        {{"lender", b.lender.value},
         {"borrower", b.borrower.value},
         {"resource", std::visit([](auto r) { return to_string(Resource{r}); }, b.resource)},
         {"registered_at_us", b.registered_at.count()}});
  }
  j["adjustment_log"] = "lifecycle.log";
  return j;
}

Ledger::State ledger_state_from_json(const json& j) {
  Ledger::State s;
  const auto& spec = j.at("spec");
  s.spec.total_cores = spec.at("total_cores").get<std::uint32_t>();
  s.spec.total_memory = spec.at("total_memory").get<Bytes>();
  s.spec.region_granularity = spec.at("region_granularity").get<Bytes>();
  for (const auto& d : spec.at("devices")) s.spec.devices.push_back({d.get<std::string>()});
  for (const auto& o : j.at("owners").at("cores")) {
    s.core_owner.push_back(owner_from_text(o.get<std::string>()));
  }
  for (const auto& o : j.at("owners").at("regions")) {
    s.region_owner.push_back(owner_from_text(o.get<std::string>()));
  }
  for (const auto& [name, o] : j.at("owners").at("devices").items()) {
    s.device_owner.emplace(DeviceId{name}, owner_from_text(o.get<std::string>()));
  }
  for (const auto& id : j.at("live")) s.live.insert(SubOSId{id.get<std::uint32_t>()});
  const auto& shared = j.at("shared_state");
  s.shared.version = shared.at("version").get<std::uint64_t>();
  for (const auto& [id, core] : shared.at("comm_cores").items()) {
    s.shared.comm_cores[SubOSId{static_cast<std::uint32_t>(std::stoul(id))}] =
        CoreId{core.get<std::uint32_t>()};
  }
  for (const auto& [mac, id] : shared.at("macs").items()) {
    s.shared.macs[MacAddr::parse(mac)] = SubOSId{id.get<std::uint32_t>()};
  }
  for (const auto& b : j.at("borrows")) {
    const auto text = b.at("resource").get<std::string>();
    BorrowableResource r;
    if (text.rfind("core", 0) == 0) {
      r = CoreId{static_cast<std::uint32_t>(std::stoul(text.substr(4)))};
    } else if (text.rfind("region", 0) == 0) {
      r = MemRegionId{static_cast<std::uint32_t>(std::stoul(text.substr(6)))};
    } else {
      throw Error(Errc::Validation, "bad borrowed resource '" + text + "'");
    }
    s.borrows.push_back({SubOSId{b.at("lender").get<std::uint32_t>()},
                         SubOSId{b.at("borrower").get<std::uint32_t>()}, r,
                         SimDuration{b.at("registered_at_us").get<std::int64_t>()}});
  }
  return s;
}

json lifecycle_to_json(const Lifecycle::State& s) {
  json j;
  const auto& lm = s.latency;
  j["latency_us"] = {{"create", lm.create.count()},
                     {"destroy", lm.destroy.count()},
                     {"cpu_online", lm.cpu_online.count()},
                     {"cpu_offline", lm.cpu_offline.count()},
                     {"mem_online_per_512m", lm.mem_online_per_512m.count()},
                     {"mem_offline_per_512m", lm.mem_offline_per_512m.count()}};
  j["next_id"] = s.next_id;
  j["subos"] = json::array();
  for (const auto& [id, d] : s.subos) {
    json e;
    e["id"] = id.value;
    e["name"] = d.name;
    e["state"] = subos_state_name(d.state);
    e["grant"] = grant_to_json(d.grant);
    e["boot_info"]["smp_table"] = json::array();
    for (auto c : d.boot_info.smp_table) e["boot_info"]["smp_table"].push_back(c.value);
    e["boot_info"]["memory_map"] = json::array();
    for (const auto& [r, b] : d.boot_info.memory_map) {
      e["boot_info"]["memory_map"].push_back({r.value, b});
    }
    e["boot_info"]["boot_params"] = d.boot_info.boot_params;
    e["comm_core"] = d.comm_core ? json(d.comm_core->value) : json(nullptr);
    e["created_at_us"] = d.created_at.count();
    e["destroyed_at_us"] = d.destroyed_at ? json(d.destroyed_at->count()) : json(nullptr);
    j["subos"].push_back(e);
  }
  j["log"] = json::array();
  for (const auto& r : s.log) {
    j["log"].push_back({{"time_us", r.time.count()},
                        {"subos", r.subos.value},
                        {"op", adjustment_op_name(r.op)},
                        {"delta", grant_to_json(r.delta)},
                        {"charged_us", r.charged.count()}});
  }
  return j;
}

Lifecycle::State lifecycle_state_from_json(const json& j) {
  Lifecycle::State s;
  const auto& lm = j.at("latency_us");
  s.latency.create = SimDuration{lm.at("create").get<std::int64_t>()};
  s.latency.destroy = SimDuration{lm.at("destroy").get<std::int64_t>()};
  s.latency.cpu_online = SimDuration{lm.at("cpu_online").get<std::int64_t>()};
  s.latency.cpu_offline = SimDuration{lm.at("cpu_offline").get<std::int64_t>()};
  s.latency.mem_online_per_512m = SimDuration{lm.at("mem_online_per_512m").get<std::int64_t>()};
  s.latency.mem_offline_per_512m =
      SimDuration{lm.at("mem_offline_per_512m").get<std::int64_t>()};
  s.next_id = j.at("next_id").get<std::uint32_t>();
  for (const auto& e : j.at("subos")) {
    SubOSDescriptor d;
    d.id = SubOSId{e.at("id").get<std::uint32_t>()};
    d.name = e.at("name").get<std::string>();
    d.state = subos_state_from(e.at("state").get<std::string>());
    d.grant = grant_from_json(e.at("grant"));
    for (auto c : e.at("boot_info").at("smp_table")) {
      d.boot_info.smp_table.push_back(CoreId{c.get<std::uint32_t>()});
    }
    for (const auto& m : e.at("boot_info").at("memory_map")) {
      d.boot_info.memory_map.emplace_back(MemRegionId{m.at(0).get<std::uint32_t>()},
                                          m.at(1).get<Bytes>());
    }
    d.boot_info.boot_params =
        e.at("boot_info").at("boot_params").get<std::map<std::string, std::string>>();
    if (!e.at("comm_core").is_null()) d.comm_core = CoreId{e.at("comm_core").get<std::uint32_t>()};
    d.created_at = SimDuration{e.at("created_at_us").get<std::int64_t>()};
    if (!e.at("destroyed_at_us").is_null()) {
      d.destroyed_at = SimDuration{e.at("destroyed_at_us").get<std::int64_t>()};
    }
    s.subos[d.id] = d;
  }
  for (const auto& r : j.at("log")) {
    s.log.push_back({SimDuration{r.at("time_us").get<std::int64_t>()},
                     SubOSId{r.at("subos").get<std::uint32_t>()},
                     op_from(r.at("op").get<std::string>()), grant_from_json(r.at("delta")),
                     SimDuration{r.at("charged_us").get<std::int64_t>()}});
  }
  return s;
}

Node::Node(Ledger ledger, VirtualClock clock, LatencyModel latency)
    : ledger_(std::move(ledger)), clock_(clock), lifecycle_(ledger_, clock_, latency) {}

std::unique_ptr<Node> Node::init(const NodeSpec& spec, std::uint32_t supervisor_cores,
                                 Bytes supervisor_memory, LatencyModel latency) {
  return std::make_unique<Node>(Ledger::init_node(spec, supervisor_cores, supervisor_memory),
                                VirtualClock{}, latency);
}

std::unique_ptr<Node> Node::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kStateFormat) {
      throw Error(Errc::Validation, "unsupported state format");
    }
    auto lc_state = lifecycle_state_from_json(j.at("lifecycle"));
    auto node = std::make_unique<Node>(Ledger::restore(ledger_state_from_json(j.at("ledger"))),
                                       VirtualClock{SimDuration{j.at("clock_us").get<std::int64_t>()}},
                                       lc_state.latency);
    node->lifecycle_.restore(std::move(lc_state));
    return node;
  } catch (const json::exception& e) {
    throw Error(Errc::Validation, std::string("malformed node state: ") + e.what());
  }
}

json Node::to_json() const {
  json j;
  j["format"] = kStateFormat;
  j["clock_us"] = clock_.now().count();
  j["ledger"] = ledger_to_json(ledger_.snapshot());
  j["lifecycle"] = lifecycle_to_json(lifecycle_.snapshot());
  return j;
}

}  // namespace ifts
