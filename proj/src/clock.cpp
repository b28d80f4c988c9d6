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

#include "ifts/clock.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "ifts/error.hpp"
#include "ifts/types.hpp"

namespace ifts {

SimDuration from_seconds(double seconds) {
  return SimDuration{std::llround(seconds * 1e6)};
}

double to_seconds(SimDuration d) { return static_cast<double>(d.count()) / 1e6; }

std::string format_seconds(SimDuration d) {
  const std::int64_t us = d.count();
  const std::int64_t mag = us < 0 ? -us : us;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", us < 0 ? "-" : "",
                static_cast<long long>(mag / 1000000),
                static_cast<long long>(mag % 1000000));
  return buf;
}

void VirtualClock::advance(SimDuration step) {
  if (step.count() < 0) {
    throw Error(Errc::SpecViolation, "virtual clock cannot move backwards");
  }
  now_ += step;
}

void VirtualClock::advance_to(SimDuration t) {
  if (t > now_) now_ = t;
}

std::string to_string(const Resource& resource) {
  struct Visitor {
    std::string operator()(CoreId c) const {
      return "core" + std::to_string(c.value);
    }
    std::string operator()(MemRegionId r) const {
      return "region" + std::to_string(r.value);
    }
    std::string operator()(const DeviceId& d) const { return "dev:" + d.name; }
  };
  return std::visit(Visitor{}, resource);
}

MacAddr MacAddr::parse(std::string_view text) {
  MacAddr mac;
  auto hex = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (text.size() != 17) {
    throw Error(Errc::Validation, "malformed MAC '" + std::string(text) + "'");
  }
  for (std::size_t i = 0; i < 6; ++i) {
    const int hi = hex(text[i * 3]);
    const int lo = hex(text[i * 3 + 1]);
    if (hi < 0 || lo < 0 || (i < 5 && text[i * 3 + 2] != ':')) {
      throw Error(Errc::Validation, "malformed MAC '" + std::string(text) + "'");
    }
    mac.octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return mac;
}

std::string MacAddr::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", octets[0],
                octets[1], octets[2], octets[3], octets[4], octets[5]);
  return buf;
}

}  // namespace ifts
