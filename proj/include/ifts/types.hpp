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
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>

namespace ifts {

template <typename Tag>
struct Id {
  std::uint32_t value = 0;
  auto operator<=>(const Id&) const = default;
};

using SubOSId = Id<struct SubOSTag>;
using CoreId = Id<struct CoreTag>;
using MemRegionId = Id<struct MemRegionTag>;

struct DeviceId {
  std::string name;
  auto operator<=>(const DeviceId&) const = default;
};

using Resource = std::variant<CoreId, MemRegionId, DeviceId>;

std::string to_string(const Resource& resource);

using Bytes = std::uint64_t;

struct MacAddr {
  std::array<std::uint8_t, 6> octets{};

  auto operator<=>(const MacAddr&) const = default;

  // Accepts "aa:bb:cc:dd:ee:ff" (case-insensitive); throws Validation.
  static MacAddr parse(std::string_view text);
  static constexpr MacAddr broadcast() {
    return MacAddr{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
  }

  bool is_broadcast() const { return *this == broadcast(); }
  std::string to_string() const;
};

inline constexpr Bytes kMiB = Bytes{1} << 20;
inline constexpr Bytes kGiB = Bytes{1} << 30;

}  // namespace ifts

template <typename Tag>
struct std::hash<ifts::Id<Tag>> {
  std::size_t operator()(const ifts::Id<Tag>& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
