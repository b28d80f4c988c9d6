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

#include "ifts/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <queue>
#include <set>
#include <sstream>

#include "ifts/error.hpp"
#include "ifts/ficm.hpp"
#include "ifts/rfcom.hpp"
#include "ifts/rfloop.hpp"
#include "ifts/sched.hpp"
#include "ifts/state_io.hpp"

namespace ifts {

using nlohmann::json;

namespace {

// JSON value plus the path it was reached by, for error messages.
class Field {
 public:
  Field(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::Validation, path_ + ": " + msg);
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Field at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!j_.contains(key)) Field(j_, join(key)).fail("required field missing");
    return Field(j_.at(key), join(key));
  }

  std::optional<Field> get(const char* key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }

  void only(std::initializer_list<const char*> keys) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [k, v] : j_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        Field(v, join(k)).fail("unknown field");
      }
    }
  }

  std::vector<Field> items() const {
    if (!j_.is_array()) fail("expected an array");
    std::vector<Field> out;
    for (std::size_t i = 0; i < j_.size(); ++i) {
      out.emplace_back(j_[i], path_ + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  std::string str() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  double num() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  double positive() const {
    const double v = num();
    if (v <= 0) fail("must be > 0");
    return v;
  }

  std::uint64_t u64() const {
    if (!j_.is_number_unsigned()) fail("expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }

  std::uint32_t u32() const {
    const auto v = u64();
    if (v > UINT32_MAX) fail("out of range");
    return static_cast<std::uint32_t>(v);
  }

  Bytes bytes() const {
    if (j_.is_number_unsigned()) return j_.get<Bytes>();
    if (!j_.is_string()) fail("expected a size such as \"512M\" or a byte count");
    try {
      return parse_bytes(j_.get<std::string>());
    } catch (const Error&) {
      fail("bad size '" + j_.get<std::string>() + "'");
    }
  }

  MacAddr mac() const {
    try {
      return MacAddr::parse(str());
    } catch (const Error&) {
      fail("bad MAC address '" + str() + "'");
    }
  }

 private:
  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& j_;
  std::string path_;
};

SimDuration seconds_field(const Field& f) {
  const double v = f.num();
  if (v < 0) f.fail("must be >= 0");
  return from_seconds(v);
}

void parse_node(const Field& f, Scenario& sc) {
  f.only({"cores", "memory", "region", "devices", "supervisor"});
  sc.node.total_cores = f.at("cores").u32();
  sc.node.total_memory = f.at("memory").bytes();
  if (auto r = f.get("region")) sc.node.region_granularity = r->bytes();
  if (auto d = f.get("devices")) {
    for (const auto& item : d->items()) sc.node.devices.push_back({item.str()});
  }
  if (auto s = f.get("supervisor")) {
    s->only({"cores", "memory"});
    if (auto c = s->get("cores")) sc.supervisor_cores = c->u32();
    if (auto m = s->get("memory")) sc.supervisor_memory = m->bytes();
  }
  try {
    sc.node.validate();
  } catch (const Error& e) {
    f.fail(e.what());
  }
  if (sc.supervisor_cores == 0) f.at("supervisor").at("cores").fail("supervisor needs >= 1 core");
  if (sc.supervisor_cores >= sc.node.total_cores) {
    f.fail("supervisor takes every core");
  }
}

void parse_latency(const Field& f, LatencyModel& lm) {
  f.only({"create_s", "destroy_s", "cpu_online_s", "cpu_offline_s", "mem_online_s_per_512M",
          "mem_offline_s_per_512M"});
  if (auto v = f.get("create_s")) lm.create = seconds_field(*v);
  if (auto v = f.get("destroy_s")) lm.destroy = seconds_field(*v);
  if (auto v = f.get("cpu_online_s")) lm.cpu_online = seconds_field(*v);
  if (auto v = f.get("cpu_offline_s")) lm.cpu_offline = seconds_field(*v);
  if (auto v = f.get("mem_online_s_per_512M")) lm.mem_online_per_512m = seconds_field(*v);
  if (auto v = f.get("mem_offline_s_per_512M")) lm.mem_offline_per_512m = seconds_field(*v);
}

ScenarioSubOS parse_subos(const Field& f) {
  f.only({"name", "cores", "memory", "devices", "macs"});
  ScenarioSubOS s;
  s.name = f.at("name").str();
  if (s.name.empty()) f.at("name").fail("must not be empty");
  s.cores = f.at("cores").u32();
  if (s.cores == 0) f.at("cores").fail("must be >= 1");
  s.memory = f.at("memory").bytes();
  if (s.memory == 0) f.at("memory").fail("must be > 0");
  if (auto d = f.get("devices")) {
    for (const auto& item : d->items()) s.devices.push_back({item.str()});
  }
  if (auto m = f.get("macs")) {
    for (const auto& item : m->items()) {
      const auto mac = item.mac();
      if (mac.is_broadcast()) item.fail("broadcast address cannot be owned");
      s.macs.push_back(mac);
    }
  }
  return s;
}

ArrivalSource parse_arrivals(const Field& f) {
  const auto kind = f.at("kind").str();
  if (kind == "uniform") {
    f.only({"kind", "rate"});
    return UniformSource{f.at("rate").positive()};
  }
  if (kind == "poisson") {
    f.only({"kind", "rate"});
    return PoissonSource{f.at("rate").positive(), 0};
  }
  if (kind == "trace") {
    f.only({"kind", "name"});
    auto name = f.at("name").str();
    const auto known = builtin_traces();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      f.at("name").fail("unknown trace '" + name + "'");
    }
    return TraceSource{name};
  }
  f.at("kind").fail("expected uniform, poisson or trace");
}

ServiceTimeDist parse_service_time(const Field& f) {
  ServiceTimeDist d;
  const auto kind = f.at("kind").str();
  if (kind == "deterministic") {
    f.only({"kind", "ms"});
    d.kind = ServiceTimeDist::Kind::Deterministic;
    d.ms = f.at("ms").positive();
  } else if (kind == "exponential") {
    f.only({"kind", "mean_ms"});
    d.kind = ServiceTimeDist::Kind::Exponential;
    d.ms = f.at("mean_ms").positive();
  } else if (kind == "empirical") {
    f.only({"kind", "samples_ms"});
    d.kind = ServiceTimeDist::Kind::Empirical;
    for (const auto& item : f.at("samples_ms").items()) d.empirical.push_back(item.positive());
    if (d.empirical.empty()) f.at("samples_ms").fail("must not be empty");
  } else {
    f.at("kind").fail("expected deterministic, exponential or empirical");
  }
  return d;
}

ContentionCurve parse_contention(const Field& f) {
  f.only({"mode", "alpha"});
  ContentionCurve c;
  const auto mode = f.at("mode").str();
  if (mode == "isolated") {
    c.mode = ContentionMode::Isolated;
  } else if (mode == "shared") {
    c.mode = ContentionMode::SharedKernel;
  } else {
    f.at("mode").fail("expected isolated or shared");
  }
  if (auto a = f.get("alpha")) {
    c.alpha = a->num();
    if (c.alpha < 0) a->fail("must be >= 0");
  }
  return c;
}

std::size_t positive_size(const Field& f) {
  const auto v = f.u64();
  if (v == 0) f.fail("must be >= 1");
  return static_cast<std::size_t>(v);
}

void parse_channels(const Field& f, Scenario& sc) {
  f.only({"ficm", "rfcom", "rfloop"});
  if (auto list = f.get("ficm")) {
    for (const auto& item : list->items()) {
      item.only({"from", "to", "capacity", "messages", "budget"});
      FicmTraffic t;
      t.from = item.at("from").str();
      t.to = item.at("to").str();
      if (auto v = item.get("capacity")) {
        t.capacity = positive_size(*v);
        if ((t.capacity & (t.capacity - 1)) != 0) v->fail("must be a power of two");
      }
      t.messages = static_cast<std::size_t>(item.at("messages").u64());
      if (auto v = item.get("budget")) t.budget = positive_size(*v);
      sc.ficm.push_back(t);
    }
  }
  if (auto list = f.get("rfcom")) {
    for (const auto& item : list->items()) {
      item.only({"from", "to", "capacity", "bytes", "chunk"});
      RfcomTraffic t;
      t.from = item.at("from").str();
      t.to = item.at("to").str();
      if (auto v = item.get("capacity")) t.capacity = positive_size(*v);
      t.bytes = static_cast<std::size_t>(item.at("bytes").u64());
      if (auto v = item.get("chunk")) t.chunk = positive_size(*v);
      sc.rfcom.push_back(t);
    }
  }
  if (auto list = f.get("rfloop")) {
    for (const auto& item : list->items()) {
      item.only({"from", "to", "frames", "payload_bytes", "burst"});
      RfloopTraffic t;
      t.from = item.at("from").str();
      t.to = item.at("to").str();
      t.frames = static_cast<std::size_t>(item.at("frames").u64());
      if (auto v = item.get("payload_bytes")) t.payload_bytes = static_cast<std::size_t>(v->u64());
      if (auto v = item.get("burst")) t.burst = positive_size(*v);
      sc.rfloop.push_back(t);
    }
  }
}

// Cross-field checks once everything is parsed.
void resolve(const Field& root, const Scenario& sc) {
  std::map<std::string, const ScenarioSubOS*> by_name;
  std::map<MacAddr, std::string> mac_owner;
  auto subos_items = root.at("subos").items();
  for (std::size_t i = 0; i < sc.subos.size(); ++i) {
    const auto& s = sc.subos[i];
    if (!by_name.emplace(s.name, &s).second) {
      subos_items[i].at("name").fail("duplicate subOS name '" + s.name + "'");
    }
    auto macs = subos_items[i].get("macs");
    for (std::size_t m = 0; m < s.macs.size(); ++m) {
      auto [it, fresh] = mac_owner.emplace(s.macs[m], s.name);
      if (!fresh) {
        macs->items()[m].fail("MAC " + s.macs[m].to_string() + " already used by '" +
                              it->second + "'");
      }
    }
  }
  auto known = [&](const Field& f) -> const ScenarioSubOS& {
    const auto name = f.str();
    auto it = by_name.find(name);
    if (it == by_name.end()) f.fail("unknown subOS '" + name + "'");
    return *it->second;
  };

  if (auto w = root.get("workloads")) {
    if (auto s = w->get("service")) known(s->at("subos"));
    if (auto b = w->get("batch")) known(b->at("subos"));
    if (sc.service && sc.batch && sc.service->subos == sc.batch->subos) {
      w->at("batch").at("subos").fail("service and batch must be different subOSes");
    }
  }
  if (auto s = root.get("scheduler")) {
    if (!sc.service) s->fail("requires workloads.service");
    known(s->at("service"));
    known(s->at("batch"));
    if (sc.scheduler->service == sc.scheduler->batch) {
      s->at("batch").fail("service and batch must be different subOSes");
    }
    if (sc.scheduler->service != sc.service->subos) {
      s->at("service").fail("must match workloads.service.subos");
    }
    if (sc.batch && sc.scheduler->batch != sc.batch->subos) {
      s->at("batch").fail("must match workloads.batch.subos");
    }
  }
  if (auto c = root.get("channels")) {
    if (auto list = c->get("ficm")) {
      for (const auto& item : list->items()) {
        known(item.at("from"));
        known(item.at("to"));
        if (item.at("from").str() == item.at("to").str()) item.at("to").fail("same as from");
      }
    }
    if (auto list = c->get("rfcom")) {
      for (const auto& item : list->items()) {
        known(item.at("from"));
        known(item.at("to"));
        if (item.at("from").str() == item.at("to").str()) item.at("to").fail("same as from");
      }
    }
    if (auto list = c->get("rfloop")) {
      for (const auto& item : list->items()) {
        if (known(item.at("from")).macs.empty()) item.at("from").fail("subOS has no MAC");
        const auto to = item.at("to").str();
        if (to == "broadcast") continue;
        if (by_name.count(to)) {
          if (by_name[to]->macs.empty()) item.at("to").fail("subOS has no MAC");
          continue;
        }
        try {
          MacAddr::parse(to);
        } catch (const Error&) {
          item.at("to").fail("expected a subOS name, \"broadcast\" or a MAC address");
        }
      }
    }
  }
  if (auto o = root.get("outputs")) {
    for (const auto& item : o->items()) {
      const auto name = item.str();
      if (std::find(kAllReports.begin(), kAllReports.end(), name) == kAllReports.end()) {
        item.fail("unknown report '" + name + "'");
      }
    }
  }
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

MacAddr first_mac(const Scenario& sc, const std::string& name) {
  for (const auto& s : sc.subos) {
    if (s.name == name) return s.macs.front();
  }
  throw Error(Errc::UnknownSubOS, name);
}

// Serves arrivals window by window and reports each window's completions.
class EngineFeed : public WorkloadFeed {
 public:
  EngineFeed(ServiceSimulator& sim, const std::vector<double>& arrivals, SimDuration start,
             SimDuration window, SimDuration horizon, bool shared_kernel, std::uint32_t batch_cores)
      : sim_(sim),
        arrivals_(arrivals),
        horizon_(horizon),
        state_(start, window),
        shared_kernel_(shared_kernel),
        batch_cores_(batch_cores) {}

  std::optional<std::vector<double>> next_window(SimDuration start, SimDuration end,
                                                 CoreCounts) override {
    if (start >= horizon_) return std::nullopt;
    const double end_s = to_seconds(end);
    while (next_ < arrivals_.size() && arrivals_[next_] < end_s) {
      const auto c = sim_.submit(arrivals_[next_++]);
      completions_.push_back(c);
      pending_.push({from_seconds(c.completion), completions_.size() - 1});
    }
    while (!pending_.empty() && pending_.top().at < end) {
      state_.observe(completions_[pending_.top().index].latency_ms, pending_.top().at);
      pending_.pop();
    }
    return state_.close_window();
  }

  void on_move(Action action, SimDuration removed_at, SimDuration effective_at) override {
    if (action.kind == Action::Kind::MoveCpuToService) {
      sim_.add_core(to_seconds(effective_at));
      batch_events_.push_back({to_seconds(removed_at), -1});
      --batch_cores_;
    } else {
      sim_.remove_core();
      batch_events_.push_back({to_seconds(effective_at), +1});
      ++batch_cores_;
    }
    if (shared_kernel_) sim_.set_external_contenders(batch_cores_);
  }

  // Arrivals the loop never reached (none when windows cover the horizon).
  void finish() {
    while (next_ < arrivals_.size()) completions_.push_back(sim_.submit(arrivals_[next_++]));
  }

  const std::vector<Completion>& completions() const { return completions_; }
  const std::vector<std::pair<double, int>>& batch_events() const { return batch_events_; }

 private:
  struct Pending {
    SimDuration at;
    std::size_t index;
    bool operator>(const Pending& o) const {
      return at != o.at ? at > o.at : index > o.index;
    }
  };

  ServiceSimulator& sim_;
  const std::vector<double>& arrivals_;
  SimDuration horizon_;
  SchedulerState state_;
  bool shared_kernel_;
  std::uint32_t batch_cores_;
  std::size_t next_ = 0;
  std::vector<Completion> completions_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending_;
  std::vector<std::pair<double, int>> batch_events_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

bool Scenario::stochastic() const {
  if (!service) return false;
  return std::holds_alternative<PoissonSource>(service->arrivals) ||
         service->service_time.kind != ServiceTimeDist::Kind::Deterministic;
}

Scenario parse_scenario(const json& j) {
  Field root(j, "");
  if (!j.is_object()) Field(j, "scenario").fail("expected an object");
  root.only({"seed", "duration_s", "node", "latency_model", "subos", "workloads", "scheduler",
             "channels", "outputs", "description"});
  Scenario sc;
  if (auto s = root.get("seed")) sc.seed = s->u64();
  sc.duration_s = root.at("duration_s").positive();
  parse_node(root.at("node"), sc);
  if (auto lm = root.get("latency_model")) parse_latency(*lm, sc.latency);
  for (const auto& item : root.at("subos").items()) sc.subos.push_back(parse_subos(item));

  if (auto w = root.get("workloads")) {
    w->only({"service", "batch"});
    if (auto s = w->get("service")) {
      s->only({"subos", "arrivals", "service_time", "contention"});
      ServiceBinding b;
      b.subos = s->at("subos").str();
      b.arrivals = parse_arrivals(s->at("arrivals"));
      b.service_time = parse_service_time(s->at("service_time"));
      if (auto c = s->get("contention")) b.contention = parse_contention(*c);
      sc.service = b;
    }
    if (auto s = w->get("batch")) {
      s->only({"subos", "work_core_s"});
      sc.batch = BatchBinding{s->at("subos").str(), s->at("work_core_s").positive()};
    }
  }
  if (auto s = root.get("scheduler")) {
    s->only({"lt_ms", "ut_ms", "window_s", "percentile", "service", "batch", "min_cores_each"});
    SchedulerBinding b;
    if (auto v = s->get("lt_ms")) b.lt_ms = v->num();
    if (auto v = s->get("ut_ms")) b.ut_ms = v->num();
    if (auto v = s->get("window_s")) b.window_s = v->positive();
    if (auto v = s->get("percentile")) {
      b.percentile = v->num();
      if (!(b.percentile > 0 && b.percentile <= 1)) v->fail("must be in (0, 1]");
    }
    if (b.lt_ms < 0) s->at("lt_ms").fail("must be >= 0");
    if (b.lt_ms > b.ut_ms) s->at("ut_ms").fail("must be >= lt_ms");
    if (from_seconds(b.window_s).count() <= 0) s->at("window_s").fail("below 1 microsecond");
    b.service = s->at("service").str();
    b.batch = s->at("batch").str();
    if (auto v = s->get("min_cores_each")) b.min_cores_each = v->u32();
    sc.scheduler = b;
  }
  if (auto c = root.get("channels")) parse_channels(*c, sc);
  if (auto o = root.get("outputs")) {
    sc.outputs.clear();
    for (const auto& item : o->items()) sc.outputs.push_back(item.str());
  }
  resolve(root, sc);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Validation, "scenario: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::Validation, std::string("scenario: ") + e.what());
  }
  return parse_scenario(j);
}

RunReport run_scenario(const Scenario& sc, std::optional<std::uint64_t> seed_override) {
  const auto seed_opt = seed_override ? seed_override : sc.seed;
  if (sc.stochastic() && !seed_opt) {
    throw Error(Errc::Validation, "seed: required for a stochastic workload");
  }
  const std::uint64_t seed = seed_opt.value_or(0);

  auto node = Node::init(sc.node, sc.supervisor_cores, sc.supervisor_memory, sc.latency);
  auto& lc = node->lifecycle();
  auto& clock = node->clock();
  Fabric fabric(node->ledger());
  RfCom rfcom(node->ledger());
  RfLoop loop(node->ledger(), &clock);
  lc.add_observer(&fabric);
  lc.add_observer(&rfcom);
  lc.add_observer(&loop);

  std::map<std::string, SubOSId> ids;
  for (const auto& s : sc.subos) {
    const auto d = lc.create_subos({s.name, s.cores, s.memory, s.devices});
    ids[s.name] = d.id;
    for (const auto& mac : s.macs) loop.register_mac(d.id, mac);
  }
  auto name_of = [&](SubOSId id) {
    for (const auto& [n, i] : ids) {
      if (i == id) return n;
    }
    return std::to_string(id.value);
  };

  // Fabric traffic. Receivers verify order and content as they drain.
  std::ostringstream fabric_csv;
  fabric_csv << "layer,channel,sent,drained,doorbells,full_events,bytes\n";
  std::uint64_t ficm_messages = 0;
  for (const auto& t : sc.ficm) {
    const auto a = ids.at(t.from), b = ids.at(t.to);
    auto ring = fabric.channel(a, b);
    if (!ring) ring = fabric.open_pair(a, b, t.capacity).forward;
    auto& rx = fabric.endpoint(b);
    std::uint64_t next_expected = 0;
    auto check = [&](const std::vector<CacheLineMsg>& batch) {
      for (const auto& m : batch) {
        if (m.src != a) continue;
        std::uint64_t tag = 0;
        std::memcpy(&tag, m.payload.data(), sizeof tag);
        if (tag != next_expected) {
          throw Error(Errc::SpecViolation, "ficm " + t.from + "->" + t.to + ": expected message " +
                                               std::to_string(next_expected) + ", got " +
                                               std::to_string(tag));
        }
        ++next_expected;
      }
    };
    Payload p{};
    for (std::uint64_t i = 0; i < t.messages; ++i) {
      std::memcpy(p.data(), &i, sizeof i);
      while (ring->send(p).status == SendResult::Status::Full) check(rx.drain(t.budget));
    }
    while (rx.pending() > 0) check(rx.drain(t.budget));
    if (next_expected != t.messages) {
      throw Error(Errc::SpecViolation, "ficm " + t.from + "->" + t.to + ": lost messages");
    }
    ficm_messages += t.messages;
  }
  for (const auto& r : fabric.rings()) {
    fabric_csv << "ficm," << name_of(r->src()) << "->" << name_of(r->dst()) << ',' << r->sent()
               << ',' << r->drained() << ',' << fabric.endpoint(r->dst()).doorbell_count() << ','
               << r->full_events() << ',' << r->sent() * kMessagePayload << '\n';
  }

  std::uint64_t rfcom_bytes = 0;
  for (const auto& t : sc.rfcom) {
    auto [ha, hb] = rfcom.rf_open(ids.at(t.from), ids.at(t.to), t.capacity);
    std::size_t written = 0, read = 0, short_writes = 0;
    std::vector<std::byte> chunk;
    auto verify = [&](const std::vector<std::byte>& got) {
      for (auto byte : got) {
        if (byte != static_cast<std::byte>(read * 131 % 251)) {
          throw Error(Errc::SpecViolation, "rfcom " + t.from + "->" + t.to +
                                               ": corrupt byte at " + std::to_string(read));
        }
        ++read;
      }
    };
    while (written < t.bytes) {
      chunk.resize(std::min(t.chunk, t.bytes - written));
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        chunk[i] = static_cast<std::byte>((written + i) * 131 % 251);
      }
      const auto n = rfcom.rf_write(ha, chunk);
      if (n < chunk.size()) ++short_writes;
      written += n;
      verify(rfcom.rf_read(hb, t.chunk));
    }
    while (read < written) verify(rfcom.rf_read(hb, t.chunk));
    rfcom.rf_close(ha);
    rfcom.rf_close(hb);
    fabric_csv << "rfcom," << t.from << "->" << t.to << ',' << written << ',' << read << ",0,"
               << short_writes << ',' << written << '\n';
    rfcom_bytes += written;
  }

  std::map<SubOSId, std::uint64_t> loop_received;
  for (const auto& t : sc.rfloop) {
    Frame f;
    f.src = first_mac(sc, t.from);
    if (t.to == "broadcast") {
      f.dst = MacAddr::broadcast();
    } else if (ids.count(t.to)) {
      f.dst = first_mac(sc, t.to);
    } else {
      f.dst = MacAddr::parse(t.to);
    }
    f.payload.resize(t.payload_bytes);
    auto poll_all = [&] {
      for (const auto& [n, id] : ids) loop_received[id] += loop.recv_batch(id, t.burst).size();
    };
    for (std::size_t i = 0; i < t.frames; ++i) {
      for (std::size_t k = 0; k < f.payload.size(); ++k) {
        f.payload[k] = static_cast<std::uint8_t>(i + k);
      }
      loop.inject(f);
      if ((i + 1) % t.burst == 0) poll_all();
    }
    for (const auto& [n, id] : ids) {
      while (loop.occupancy(id) > 0) loop_received[id] += loop.recv_batch(id, t.burst).size();
    }
  }
  if (!sc.rfloop.empty()) {
    for (const auto& [n, id] : ids) {
      fabric_csv << "rfloop," << n << ',' << loop_received[id] << ',' << loop_received[id] << ','
                 << loop.doorbell_count(id) << ",0,0\n";
    }
    const auto& st = loop.stats();
    fabric_csv << "rfloop,passthrough," << st.passthrough << ',' << loop.passthrough_sink().size()
               << ",0,0,0\n";
    fabric_csv << "rfloop,total," << st.injected << ',' << st.delivered << ",0," << st.ring_full
               << ",0\n";
  }

  // Workloads on the virtual clock, starting once every subOS has booted.
  const SimDuration t0 = clock.now();
  const SimDuration horizon = t0 + from_seconds(sc.duration_s);
  std::ostringstream summary;
  summary << "seed: " << seed << '\n';
  summary << "workload_start_s: " << format_seconds(t0) << '\n';

  std::vector<Completion> completions;
  std::vector<DecisionRecord> decisions;
  std::vector<std::pair<double, int>> batch_events;
  std::uint32_t batch_cores0 = 0;
  if (sc.batch) {
    batch_cores0 = static_cast<std::uint32_t>(lc.descriptor(ids.at(sc.batch->subos)).grant.cores.size());
  }
  if (sc.service) {
    const auto& sv = *sc.service;
    const double t0_s = to_seconds(t0);
    ArrivalSchedule schedule;
    if (const auto* u = std::get_if<UniformSource>(&sv.arrivals)) {
      schedule = gen_uniform(u->rate, sc.duration_s, t0_s);
    } else if (const auto* p = std::get_if<PoissonSource>(&sv.arrivals)) {
      schedule = gen_poisson(p->rate, sc.duration_s, mix(seed, 1), t0_s);
    } else {
      schedule = gen_trace(std::get<TraceSource>(sv.arrivals).name, t0_s);
      const double end_s = to_seconds(horizon);
      auto cut = std::lower_bound(schedule.times.begin(), schedule.times.end(), end_s);
      schedule.times.erase(cut, schedule.times.end());
    }
    ServiceModel model;
    model.cores = static_cast<std::uint32_t>(lc.descriptor(ids.at(sv.subos)).grant.cores.size());
    model.service_time = sv.service_time;
    model.contention = sv.contention;
    const bool shared = sv.contention.mode == ContentionMode::SharedKernel;
    model.external_contenders = shared ? batch_cores0 : 0;
    model.seed = mix(seed, 2);
    ServiceSimulator sim(model);

    const SimDuration window =
        sc.scheduler ? from_seconds(sc.scheduler->window_s) : from_seconds(sc.duration_s);
    EngineFeed feed(sim, schedule.times, t0, window, horizon, shared, batch_cores0);
    if (sc.scheduler) {
      SchedulerConfig cfg;
      cfg.lt_ms = sc.scheduler->lt_ms;
      cfg.ut_ms = sc.scheduler->ut_ms;
      cfg.window = window;
      cfg.percentile = sc.scheduler->percentile;
      cfg.service = ids.at(sc.scheduler->service);
      cfg.batch = ids.at(sc.scheduler->batch);
      cfg.min_cores_each = sc.scheduler->min_cores_each;
      decisions = run_loop(cfg, clock, lc, feed);
    }
    feed.finish();
    completions = feed.completions();
    batch_events = feed.batch_events();
  }
  clock.advance_to(horizon);

  RunReport report;
  {
    std::ostringstream out;
    write_decisions_csv(out, decisions);
    report.files["decisions.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "request,arrival_s,completion_s,latency_ms,core\n";
    for (std::size_t i = 0; i < completions.size(); ++i) {
      const auto& c = completions[i];
      out << i << ',' << fmt6(c.arrival) << ',' << fmt6(c.completion) << ','
          << fmt6(c.latency_ms) << ',' << c.core << '\n';
    }
    report.files["latencies.csv"] = out.str();
  }
  {
    std::ostringstream out;
    out << "time_s,subos,op,delta,charged_s\n";
    for (const auto& r : lc.adjustment_log()) {
      out << format_seconds(r.time) << ',' << name_of(r.subos) << ','
          << adjustment_op_name(r.op) << ',' << grant_to_string(r.delta) << ','
          << format_seconds(r.charged) << '\n';
    }
    report.files["adjustments.csv"] = out.str();
  }
  report.files["fabric_stats.csv"] = fabric_csv.str();
  {
    std::ostringstream out;
    loop.write_trace_csv(out);
    report.files["frames.csv"] = out.str();
  }
  report.files["ledger.json"] = ledger_to_json(node->ledger().snapshot()).dump(2) + "\n";

  for (const auto& d : lc.subos_list()) {
    summary << "subos " << d.name << ": id=" << d.id.value << " state=" << subos_state_name(d.state)
            << " cores=" << d.grant.cores.size() << " regions=" << d.grant.regions.size() << '\n';
  }
  if (sc.service) {
    LatencyHistogram h;
    for (const auto& c : completions) h.add(c.latency_ms);
    summary << "service " << sc.service->subos << ": requests=" << completions.size();
    if (h.count() > 0) summary << ' ' << h.summary_line();
    summary << '\n';
  }
  if (sc.scheduler) {
    std::size_t to_service = 0, to_batch = 0, holds = 0;
    for (const auto& d : decisions) {
      if (d.action.kind == Action::Kind::MoveCpuToService) {
        ++to_service;
      } else if (d.action.kind == Action::Kind::MoveCpuToBatch) {
        ++to_batch;
      } else {
        ++holds;
      }
    }
    summary << "scheduler: windows=" << decisions.size() << " to_service=" << to_service
            << " to_batch=" << to_batch << " holds=" << holds;
    if (!decisions.empty()) {
      summary << " final_service_cores=" << decisions.back().cores.service
              << " final_batch_cores=" << decisions.back().cores.batch;
    }
    summary << '\n';
  }
  if (sc.batch) {
    std::sort(batch_events.begin(), batch_events.end());
    std::vector<CoreStep> timeline{{to_seconds(t0), static_cast<double>(batch_cores0)}};
    for (const auto& [at, delta] : batch_events) {
      timeline.push_back({at, timeline.back().cores + delta});
    }
    const double end_s = to_seconds(horizon);
    double core_seconds = 0;
    for (std::size_t i = 0; i < timeline.size(); ++i) {
      const double a = std::min(timeline[i].start, end_s);
      const double b = i + 1 < timeline.size() ? std::min(timeline[i + 1].start, end_s) : end_s;
      core_seconds += timeline[i].cores * (b - a);
    }
    const auto jobs = static_cast<std::uint64_t>(std::floor(core_seconds / sc.batch->work_core_s + 1e-9));
    summary << "batch " << sc.batch->subos << ": core_seconds=" << fmt6(core_seconds)
            << " jobs_completed=" << jobs;
    if (jobs > 0) {
      summary << " first_job_s=" << fmt6(simulate_batch(sc.batch->work_core_s, timeline) - to_seconds(t0));
    }
    summary << '\n';
  }
  summary << "ficm: messages=" << ficm_messages << " rings=" << fabric.rings().size() << '\n';
  summary << "rfcom: bytes=" << rfcom_bytes << '\n';
  if (!sc.rfloop.empty()) {
    const auto& st = loop.stats();
    summary << "rfloop: injected=" << st.injected << " delivered=" << st.delivered
            << " passthrough=" << st.passthrough << " ring_full=" << st.ring_full
            << " dropped=" << st.dropped_oversize + st.dropped_peer_gone << '\n';
  }
  summary << "adjustments: " << lc.adjustment_log().size() << '\n';
  summary << "clock_end_s: " << format_seconds(clock.now()) << '\n';
  report.files["summary.txt"] = summary.str();

  // Keep only the selected reports.
  RunReport selected;
  for (const auto& sel : sc.outputs) {
    const std::string file = sel == "summary" ? "summary.txt"
                             : sel == "ledger" ? "ledger.json"
                                               : sel + ".csv";
    selected.files[file] = report.files.at(file);
  }
  return selected;
}

void write_report(const RunReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, contents] : report.files) {
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    out << contents;
    if (!out) throw Error(Errc::Unavailable, "cannot write " + (out_dir / name).string());
  }
}

int run_scenario_file(const std::filesystem::path& scenario_path,
                      const std::filesystem::path& out_dir,
                      std::optional<std::uint64_t> seed_override, std::ostream& err) {
  Scenario sc;
  try {
    sc = load_scenario(scenario_path);
    if (sc.stochastic() && !sc.seed && !seed_override) {
      throw Error(Errc::Validation, "seed: required for a stochastic workload");
    }
  } catch (const Error& e) {
    err << "rfm: " << e.what() << '\n';
    return 2;
  }
  try {
    write_report(run_scenario(sc, seed_override), out_dir);
  } catch (const std::exception& e) {
    err << "rfm: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace ifts
