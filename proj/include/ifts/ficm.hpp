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
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <vector>

#include "ifts/ledger.hpp"
#include "ifts/lifecycle.hpp"
#include "ifts/napi.hpp"
#include "ifts/types.hpp"

namespace ifts {

inline constexpr std::size_t kMessagePayload = 64;
inline constexpr std::size_t kDefaultRingCapacity = 256;
inline constexpr std::size_t kDefaultDrainBudget = 64;

using Payload = std::array<std::byte, kMessagePayload>;

struct CacheLineMsg {
  SubOSId src;
  SubOSId dst;
  std::uint64_t seq = 0;
  Payload payload{};
};

struct SendResult {
  enum class Status { Sent, Full, PeerGone };
  Status status = Status::Sent;
  std::uint64_t seq = 0;  // valid for Sent
};

std::string_view send_status_name(SendResult::Status status);

// One directed src->dst channel. send() belongs to the src context, the
// matching Endpoint::drain() to the dst context.
class MessageRing {
 public:
  MessageRing(SubOSId src, SubOSId dst, std::size_t capacity,
              std::shared_ptr<NotifyState> dst_notify);

  SubOSId src() const { return src_; }
  SubOSId dst() const { return dst_; }
  std::size_t capacity() const { return ring_.capacity(); }
  std::size_t occupancy() const { return ring_.size(); }
  bool peer_gone() const { return peer_gone_.load(std::memory_order_acquire); }

  // Throws PayloadSize unless payload is exactly 64 bytes and PeerGone once
  // either end has been destroyed. Full leaves the ring untouched.
  SendResult send(std::span<const std::byte> payload);

  std::uint64_t sent() const { return sent_.load(std::memory_order_relaxed); }
  std::uint64_t drained() const { return drained_.load(std::memory_order_relaxed); }
  std::uint64_t full_events() const { return full_.load(std::memory_order_relaxed); }

 private:
  friend class Endpoint;
  friend class Fabric;

  SubOSId src_;
  SubOSId dst_;
  SpscRing<CacheLineMsg> ring_;
  std::shared_ptr<NotifyState> dst_notify_;
  std::uint64_t next_seq_ = 0;  // producer-local
  std::atomic<bool> peer_gone_{false};
  std::atomic<std::uint64_t> sent_{0};
  std::atomic<std::uint64_t> drained_{0};
  std::atomic<std::uint64_t> full_{0};
};

// Receive side of one subOS: one inbound ring per peer, drained round-robin.
class Endpoint {
 public:
  explicit Endpoint(SubOSId owner);

  SubOSId owner() const { return owner_; }
  NotifyMode mode() const { return notify_->mode(); }
  std::uint64_t doorbell_count() const { return notify_->doorbells(); }
  std::uint64_t idle_cycles() const { return notify_->idle_cycles(); }
  bool alive() const { return alive_; }
  std::size_t pending() const;

  // Dequeues up to `budget` messages, one per non-empty ring in turn. Stays
  // Polling if anything is left; returns to Idle once every ring is empty.
  std::vector<CacheLineMsg> drain(std::size_t budget);

 private:
  friend class Fabric;

  SubOSId owner_;
  std::shared_ptr<NotifyState> notify_;
  std::vector<std::shared_ptr<MessageRing>> inbound_;
  std::size_t rr_next_ = 0;
  bool alive_ = true;
};

// Fabric-side mirror of the supervisor's communication-core list.
struct CommTopology {
  std::uint64_t version = 0;
  std::map<SubOSId, CoreId> comm_cores;
  std::set<SubOSId> members;
};

// Cache-line message fabric between live subOSes. Channels are created on
// demand per pair. Besides ring slots and endpoint modes, the only cross-subOS
// state is the topology snapshot.
//
// open_pair and lifecycle notifications must not run concurrently with a
// drain of an affected endpoint; send/drain on a pair may run concurrently.
class Fabric : public LifecycleObserver {
 public:
  struct Pair {
    std::shared_ptr<MessageRing> forward;   // a -> b
    std::shared_ptr<MessageRing> backward;  // b -> a
  };

  explicit Fabric(const Ledger& ledger, std::size_t default_capacity = kDefaultRingCapacity);

  Pair open_pair(SubOSId a, SubOSId b, std::size_t capacity);
  // Null when no channel exists.
  std::shared_ptr<MessageRing> channel(SubOSId from, SubOSId to) const;

  // Throws UnknownSubOS for an id that never had an endpoint.
  Endpoint& endpoint(SubOSId id);

  // Independent send to each member, opening channels as needed. No
  // all-or-nothing guarantee.
  std::map<SubOSId, SendResult::Status> multicast(SubOSId from,
                                                  const std::set<SubOSId>& group,
                                                  std::span<const std::byte> payload);
  std::map<SubOSId, SendResult::Status> broadcast(SubOSId from,
                                                  std::span<const std::byte> payload);

  const CommTopology& topology() const { return topology_; }
  std::vector<std::shared_ptr<MessageRing>> rings() const { return all_rings_; }
  std::vector<const Endpoint*> endpoints() const;

  void on_created(SubOSId id) override;
  void on_destroyed(SubOSId id) override;

 private:
  void refresh_topology();

  const Ledger& ledger_;
  std::size_t default_capacity_;
  CommTopology topology_;
  std::map<SubOSId, std::unique_ptr<Endpoint>> endpoints_;
  std::map<std::pair<SubOSId, SubOSId>, std::shared_ptr<MessageRing>> channels_;
  std::vector<std::shared_ptr<MessageRing>> all_rings_;
};

}  // namespace ifts
