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

#include <stdexcept>
#include <string>
#include <string_view>

namespace ifts {

enum class Errc {
  SpecViolation,
  Unavailable,
  NotOwner,
  UnknownResource,
  UnknownSubOS,
  DeadSubOS,
  AlreadyDestroyed,
  InvalidCommCore,
  WouldEmptySubOS,
  CommCoreInUse,
  SelfChannel,
  AlreadyOpen,
  PayloadSize,
  PeerGone,
  ChannelClosed,
  AlreadyClosed,
  UnknownSegment,
  AlreadyMapped,
  NotMapped,
  DuplicateMac,
  BadRate,
  NeverCompletes,
  EmptySamples,
  Validation,
};

std::string_view errc_name(Errc code) noexcept;

// All operations report contract violations by throwing Error. The ledger and
// lifecycle guarantee that a thrown Error leaves their state untouched.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ifts
