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

#include "ifts/error.hpp"

namespace ifts {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::SpecViolation: return "SpecViolation";
    case Errc::Unavailable: return "Unavailable";
    case Errc::NotOwner: return "NotOwner";
    case Errc::UnknownResource: return "UnknownResource";
    case Errc::UnknownSubOS: return "UnknownSubOS";
    case Errc::DeadSubOS: return "DeadSubOS";
    case Errc::AlreadyDestroyed: return "AlreadyDestroyed";
    case Errc::InvalidCommCore: return "InvalidCommCore";
    case Errc::WouldEmptySubOS: return "WouldEmptySubOS";
    case Errc::CommCoreInUse: return "CommCoreInUse";
    case Errc::SelfChannel: return "SelfChannel";
    case Errc::AlreadyOpen: return "AlreadyOpen";
    case Errc::PayloadSize: return "PayloadSize";
    case Errc::PeerGone: return "PeerGone";
    case Errc::ChannelClosed: return "ChannelClosed";
    case Errc::AlreadyClosed: return "AlreadyClosed";
    case Errc::UnknownSegment: return "UnknownSegment";
    case Errc::AlreadyMapped: return "AlreadyMapped";
    case Errc::NotMapped: return "NotMapped";
    case Errc::DuplicateMac: return "DuplicateMac";
    case Errc::BadRate: return "BadRate";
    case Errc::NeverCompletes: return "NeverCompletes";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::Validation: return "Validation";
  }
  return "Unknown";
}

}  // namespace ifts
