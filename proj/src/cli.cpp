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

#include "ifts/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "ifts/error.hpp"
#include "ifts/scenario.hpp"
#include "ifts/state_io.hpp"

namespace ifts {

namespace {

namespace fs = std::filesystem;

std::unique_ptr<Node> load_node(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::Unavailable, "no node state at " + path.string() + " (run `rfm init` first)");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::Validation, path.string() + ": " + e.what());
  }
  return Node::from_json(j);
}

void save_node(const Node& node, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << node.to_json().dump(2) << '\n';
    if (!out) throw Error(Errc::Unavailable, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string record_line(const Lifecycle& lc, const AdjustmentRecord& r) {
  std::string name;
  try {
    name = lc.descriptor(r.subos).name;
  } catch (const Error&) {
  }
  return format_seconds(r.time) + " subos=" + std::to_string(r.subos.value) + " name=" + name +
         " op=" + std::string(adjustment_op_name(r.op)) + " charged=" +
         format_seconds(r.charged) + " delta=" + grant_to_string(r.delta);
}

SubOSId resolve_id(const Lifecycle& lc, const std::string& text) {
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc() && ptr == text.data() + text.size()) {
    const SubOSId id{value};
    lc.descriptor(id);  // UnknownSubOS
    return id;
  }
  if (auto id = lc.find_live(text)) return *id;
  throw Error(Errc::UnknownSubOS, "no subOS '" + text + "'");
}

int parse_delta(const std::string& text) {
  int value = 0;
  const char* begin = text.data() + (!text.empty() && text[0] == '+' ? 1 : 0);
  auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || begin == ptr) {
    throw Error(Errc::Validation, "bad delta '" + text + "'");
  }
  return value;
}

std::vector<DeviceId> device_list(const std::vector<std::string>& names) {
  std::vector<DeviceId> out;
  for (const auto& n : names) out.push_back({n});
  return out;
}

}  // namespace

int rfm_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             std::optional<std::string> env_state) {
  CLI::App app{"rfm: operator tool for the partitioned-node emulator", "rfm"};
  app.require_subcommand(1);
  std::string state_path = env_state.value_or("rfm-state.json");
  app.add_option("--state", state_path, "Node state file (default $RFM_STATE or ./rfm-state.json)");

  auto* run = app.add_subcommand("run", "Run a scenario file end to end");
  std::string scenario_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  run->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Report directory");
  run->add_option("--seed", seed, "Seed override");

  auto* init = app.add_subcommand("init", "Create a fresh node state");
  std::uint32_t cores = 0, sup_cores = 1;
  std::string mem, sup_mem = "1G", region = "128M";
  std::vector<std::string> devices;
  bool force = false;
  init->add_option("--cores", cores, "Total cores")->required();
  init->add_option("--mem", mem, "Total memory, e.g. 32G")->required();
  init->add_option("--sup-cores", sup_cores, "Supervisor cores");
  init->add_option("--sup-mem", sup_mem, "Supervisor memory");
  init->add_option("--region", region, "Memory region granularity");
  init->add_option("--devices", devices, "Device names")->delimiter(',');
  init->add_flag("--force", force, "Overwrite an existing state file");

  auto* create = app.add_subcommand("create", "Create a subOS");
  std::uint32_t cpus = 0;
  std::string create_mem, name;
  std::vector<std::string> create_devices;
  create->add_option("--cpus", cpus, "Cores")->required();
  create->add_option("--mem", create_mem, "Memory, e.g. 16G")->required();
  create->add_option("--name", name, "Name (default subos<id>)");
  create->add_option("--devices", create_devices, "Device names")->delimiter(',');

  std::string target, delta;
  auto* destroy = app.add_subcommand("destroy", "Destroy a subOS");
  destroy->add_option("id", target, "subOS id or name")->required();
  auto* resize_cpu = app.add_subcommand("resize-cpu", "Hot-add (+n) or hot-remove (-n) cores");
  resize_cpu->add_option("id", target, "subOS id or name")->required();
  resize_cpu->add_option("delta", delta, "+n or -n")->required();
  auto* resize_mem = app.add_subcommand("resize-mem", "Hot-add or hot-remove memory, e.g. +512M");
  resize_mem->add_option("id", target, "subOS id or name")->required();
  resize_mem->add_option("delta", delta, "+size or -size")->required();
  auto* log = app.add_subcommand("log", "Print the adjustment log");
  auto* show = app.add_subcommand("show", "Print the ledger dump");

  // Deltas like "-1" must reach the positional, not the option parser.
  std::vector<std::string> argv(args.rbegin(), args.rend());
  for (auto* sub : {resize_cpu, resize_mem}) {
    auto it = std::find(args.begin(), args.end(), sub->get_name());
    if (it != args.end() && args.end() - it == 3 && !it[2].empty() && it[2][0] == '-') {
      argv.insert(argv.begin() + 1, "--");
    }
  }
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*run) return run_scenario_file(scenario_path, out_dir, seed, err);

    if (*init) {
      if (fs::exists(state_path) && !force) {
        throw Error(Errc::Validation, state_path + " exists (use --force)");
      }
      NodeSpec spec{cores, parse_bytes(mem), parse_bytes(region), device_list(devices)};
      auto node = Node::init(spec, sup_cores, parse_bytes(sup_mem));
      save_node(*node, state_path);
      out << "initialized " << state_path << ": cores=" << cores << " memory=" << mem
          << " regions=" << spec.region_count() << " supervisor_cores=" << sup_cores << '\n';
      return 0;
    }

    auto node = load_node(state_path);
    auto& lc = node->lifecycle();
    const auto log_before = lc.adjustment_log().size();

    if (*create) {
      const auto d = lc.create_subos({name, cpus, parse_bytes(create_mem), device_list(create_devices)});
      out << "created subos " << d.id.value << " (" << d.name << ")\n";
    } else if (*destroy) {
      const auto r = lc.destroy_subos(resolve_id(lc, target));
      out << "destroyed subos " << r.id.value << '\n';
    } else if (*resize_cpu) {
      lc.resize_cpu(resolve_id(lc, target), parse_delta(delta));
    } else if (*resize_mem) {
      const auto id = resolve_id(lc, target);
      const bool negative = !delta.empty() && delta[0] == '-';
      const auto text = (!delta.empty() && (delta[0] == '-' || delta[0] == '+')) ? delta.substr(1) : delta;
      const Bytes bytes = parse_bytes(text);
      const Bytes gran = node->ledger().spec().region_granularity;
      if (bytes % gran != 0) {
        throw Error(Errc::Validation, "memory delta must be a multiple of the " +
                                          format_bytes(gran) + " region size");
      }
      const auto regions = static_cast<int>(bytes / gran);
      lc.resize_memory(id, negative ? -regions : regions);
    } else if (*log) {
      for (const auto& r : lc.adjustment_log()) out << record_line(lc, r) << '\n';
      return 0;
    } else if (*show) {
      out << ledger_to_json(node->ledger().snapshot()).dump(2) << '\n';
      return 0;
    }

    const auto& records = lc.adjustment_log();
    for (auto i = log_before; i < records.size(); ++i) out << record_line(lc, records[i]) << '\n';
    save_node(*node, state_path);
    return 0;
  } catch (const std::exception& e) {
    err << "rfm: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ifts
