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

#include <chrono>
#include <cstdint>
#include <string>

namespace ifts {

// Virtual time at microsecond resolution. Integer ticks keep the adjustment
// charges exact when they accumulate.
using SimDuration = std::chrono::microseconds;

SimDuration from_seconds(double seconds);
double to_seconds(SimDuration d);

// Fixed six-decimal rendering, e.g. 6100000us -> "6.100000".
std::string format_seconds(SimDuration d);

class VirtualClock {
 public:
  VirtualClock() = default;
  explicit VirtualClock(SimDuration start) : now_(start) {}

  SimDuration now() const { return now_; }

  // Throws SpecViolation for a negative step.
  void advance(SimDuration step);

  // Moves forward to `t`; never moves backwards.
  void advance_to(SimDuration t);

 private:
  SimDuration now_{0};
};

}  // namespace ifts
