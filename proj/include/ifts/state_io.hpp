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

#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ifts/clock.hpp"
#include "ifts/ledger.hpp"
#include "ifts/lifecycle.hpp"

namespace ifts {

// "512M", "16G", "1T", "4096" (bytes), binary multiples. Throws Validation.
Bytes parse_bytes(std::string_view text);
std::string format_bytes(Bytes bytes);

// Ledger dump: node spec, owner of every resource, shared-state table,
// borrow log, and where the adjustment log lives.
nlohmann::json ledger_to_json(const Ledger::State& state);
Ledger::State ledger_state_from_json(const nlohmann::json& j);

nlohmann::json lifecycle_to_json(const Lifecycle::State& state);
Lifecycle::State lifecycle_state_from_json(const nlohmann::json& j);

std::string grant_to_string(const ResourceGrant& grant);

// A supervisor's complete persisted world: ledger, virtual clock and
// lifecycle bookkeeping.
class Node {
 public:
  Node(Ledger ledger, VirtualClock clock, LatencyModel latency);

  static std::unique_ptr<Node> init(const NodeSpec& spec, std::uint32_t supervisor_cores,
                                    Bytes supervisor_memory, LatencyModel latency = {});
  // Throws Validation on malformed input.
  static std::unique_ptr<Node> from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  Ledger& ledger() { return ledger_; }
  VirtualClock& clock() { return clock_; }
  Lifecycle& lifecycle() { return lifecycle_; }

 private:
  Ledger ledger_;
  VirtualClock clock_;
  Lifecycle lifecycle_;
};

}  // namespace ifts
