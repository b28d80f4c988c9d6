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

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <vector>

#include "ifts/clock.hpp"
#include "ifts/ledger.hpp"
#include "ifts/lifecycle.hpp"
#include "ifts/napi.hpp"
#include "ifts/types.hpp"

namespace ifts {

inline constexpr std::size_t kMaxFramePayload = 1500;
inline constexpr std::size_t kDefaultLoopRingCapacity = 256;

struct Frame {
  MacAddr dst;
  MacAddr src;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

struct RouteDecision {
  enum class Kind { Loop, Broadcast, Passthrough, Drop };
  enum class DropReason { None, Oversize, PeerGone };

  Kind kind = Kind::Passthrough;
  SubOSId dst;  // Loop only
  DropReason reason = DropReason::None;
  std::uint64_t version = 0;  // MAC list version the decision was made against

  std::string to_string() const;
};

struct InjectResult {
  enum class Status { Delivered, Passthrough, RingFull, Dropped };

  Status status = Status::Passthrough;
  std::size_t delivered = 0;
  std::size_t ring_full = 0;
};

std::string_view inject_status_name(InjectResult::Status status);

struct LoopStats {
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t passthrough = 0;
  std::uint64_t ring_full = 0;
  std::uint64_t dropped_oversize = 0;
  std::uint64_t dropped_peer_gone = 0;
};

// Intra-node network loop. Frames for a MAC owned by a local subOS are
// intercepted and queued on that subOS's loop ring; everything else goes to
// the external network, modeled as a recording sink.
//
// inject() is the single producer of every loop ring; recv_batch(s) is the
// consumer of s's ring.
class RfLoop : public LifecycleObserver {
 public:
  struct TraceEntry {
    SimDuration time{0};
    MacAddr src;
    MacAddr dst;
    std::string decision;
  };

  explicit RfLoop(Ledger& ledger, const VirtualClock* clock = nullptr,
                  std::size_t ring_capacity = kDefaultLoopRingCapacity);

  // Both return the new MAC list version.
  std::uint64_t register_mac(SubOSId subos, MacAddr mac);
  std::uint64_t unregister_mac(SubOSId subos, MacAddr mac);

  // Pure; decided against one consistent MAC list snapshot.
  RouteDecision route(const Frame& frame) const;

  // Broadcast frames fan out to every registered subOS except the sender
  // (the owner of src). A full ring tail-drops the frame for that subOS.
  InjectResult inject(const Frame& frame);

  std::vector<Frame> recv_batch(SubOSId subos, std::size_t budget);

  NotifyMode mode(SubOSId subos) const;
  std::uint64_t doorbell_count(SubOSId subos) const;
  std::uint64_t idle_cycles(SubOSId subos) const;
  std::size_t occupancy(SubOSId subos) const;

  const LoopStats& stats() const { return stats_; }
  const std::vector<Frame>& passthrough_sink() const { return sink_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  // time,src_mac,dst_mac,decision
  void write_trace_csv(std::ostream& out) const;

  void on_created(SubOSId id) override;
  void on_destroyed(SubOSId id) override;

 private:
  struct LoopRing {
    explicit LoopRing(std::size_t capacity) : ring(capacity) {}
    SpscRing<Frame> ring;
    NotifyState notify;
  };

  LoopRing& ring_of(SubOSId subos) const;
  bool enqueue(SubOSId dst, const Frame& frame);
  void record(const Frame& frame, std::string decision);

  Ledger& ledger_;
  const VirtualClock* clock_;
  std::size_t ring_capacity_;
  std::map<SubOSId, std::unique_ptr<LoopRing>> rings_;
  LoopStats stats_;
  std::vector<Frame> sink_;
  std::vector<TraceEntry> trace_;
};

}  // namespace ifts
