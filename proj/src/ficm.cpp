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

#include "ifts/ficm.hpp"

#include <algorithm>
#include <cstring>

#include "ifts/error.hpp"

namespace ifts {

std::string_view notify_mode_name(NotifyMode mode) {
  switch (mode) {
    case NotifyMode::Idle: return "Idle";
    case NotifyMode::Notified: return "Notified";
    case NotifyMode::Polling: return "Polling";
  }
  return "?";
}

std::string_view send_status_name(SendResult::Status status) {
  switch (status) {
    case SendResult::Status::Sent: return "Sent";
    case SendResult::Status::Full: return "Full";
    case SendResult::Status::PeerGone: return "PeerGone";
  }
  return "?";
}

MessageRing::MessageRing(SubOSId src, SubOSId dst, std::size_t capacity,
                         std::shared_ptr<NotifyState> dst_notify)
    : src_(src), dst_(dst), ring_(capacity), dst_notify_(std::move(dst_notify)) {}

SendResult MessageRing::send(std::span<const std::byte> payload) {
  if (payload.size() != kMessagePayload) {
    throw Error(Errc::PayloadSize, "payload is " + std::to_string(payload.size()) +
                                       " bytes, expected 64");
  }
  if (peer_gone()) {
    throw Error(Errc::PeerGone, "channel " + std::to_string(src_.value) + "->" +
                                    std::to_string(dst_.value));
  }
  CacheLineMsg msg{src_, dst_, next_seq_, {}};
  std::memcpy(msg.payload.data(), payload.data(), kMessagePayload);
  if (!ring_.try_push(msg)) {
    full_.fetch_add(1, std::memory_order_relaxed);
    return {SendResult::Status::Full, 0};
  }
  sent_.fetch_add(1, std::memory_order_relaxed);
  dst_notify_->ring();
  return {SendResult::Status::Sent, next_seq_++};
}

Endpoint::Endpoint(SubOSId owner)
    : owner_(owner), notify_(std::make_shared<NotifyState>()) {}

std::size_t Endpoint::pending() const {
  std::size_t n = 0;
  for (const auto& r : inbound_) n += r->ring_.size();
  return n;
}

std::vector<CacheLineMsg> Endpoint::drain(std::size_t budget) {
  std::vector<CacheLineMsg> out;
  auto pop_batch = [&]() -> std::pair<std::size_t, bool> {
    const std::size_t n = inbound_.size();
    std::size_t idle_streak = 0;
    while (out.size() < budget && n > 0 && idle_streak < n) {
      auto& ring = *inbound_[rr_next_ % n];
      rr_next_ = (rr_next_ + 1) % n;
      if (auto msg = ring.ring_.try_pop()) {
        ring.drained_.fetch_add(1, std::memory_order_relaxed);
        out.push_back(*msg);
        idle_streak = 0;
      } else {
        ++idle_streak;
      }
    }
    // Residue from a destroyed sender is delivered first, then the ring goes.
    std::erase_if(inbound_, [](const auto& r) { return r->peer_gone() && r->ring_.empty(); });
    if (!inbound_.empty()) rr_next_ %= inbound_.size();
    return {out.size(), pending() == 0};
  };
  notify_->poll(pop_batch, [&] { return pending() > 0; });
  return out;
}

Fabric::Fabric(const Ledger& ledger, std::size_t default_capacity)
    : ledger_(ledger), default_capacity_(default_capacity) {
  refresh_topology();
  for (auto id : topology_.members) {
    endpoints_.emplace(id, std::make_unique<Endpoint>(id));
  }
}

void Fabric::refresh_topology() {
  const SharedStateTable table = ledger_.shared_state();
  topology_.version = table.version;
  topology_.comm_cores = table.comm_cores;
  topology_.members.clear();
  for (const auto& [id, core] : table.comm_cores) topology_.members.insert(id);
}

Fabric::Pair Fabric::open_pair(SubOSId a, SubOSId b, std::size_t capacity) {
  if (a == b) throw Error(Errc::SelfChannel, "subos " + std::to_string(a.value));
  for (auto id : {a, b}) {
    if (!topology_.members.contains(id)) {
      throw Error(Errc::DeadSubOS, "subos " + std::to_string(id.value) + " is not live");
    }
  }
  if (channels_.contains({a, b})) {
    throw Error(Errc::AlreadyOpen, "subos " + std::to_string(a.value) + " <-> " +
                                       std::to_string(b.value));
  }
  Endpoint& ea = *endpoints_.at(a);
  Endpoint& eb = *endpoints_.at(b);
  auto forward = std::make_shared<MessageRing>(a, b, capacity, eb.notify_);
  auto backward = std::make_shared<MessageRing>(b, a, capacity, ea.notify_);
  eb.inbound_.push_back(forward);
  ea.inbound_.push_back(backward);
  channels_[{a, b}] = forward;
  channels_[{b, a}] = backward;
  all_rings_.push_back(forward);
  all_rings_.push_back(backward);
  return {forward, backward};
}

std::shared_ptr<MessageRing> Fabric::channel(SubOSId from, SubOSId to) const {
  auto it = channels_.find({from, to});
  return it == channels_.end() ? nullptr : it->second;
}

Endpoint& Fabric::endpoint(SubOSId id) {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) {
    throw Error(Errc::UnknownSubOS, "no endpoint for subos " + std::to_string(id.value));
  }
  return *it->second;
}

std::vector<const Endpoint*> Fabric::endpoints() const {
  std::vector<const Endpoint*> out;
  for (const auto& [id, ep] : endpoints_) out.push_back(ep.get());
  return out;
}

std::map<SubOSId, SendResult::Status> Fabric::multicast(
    SubOSId from, const std::set<SubOSId>& group, std::span<const std::byte> payload) {
  if (group.empty()) throw Error(Errc::SpecViolation, "multicast group is empty");
  if (payload.size() != kMessagePayload) {
    throw Error(Errc::PayloadSize, "payload is " + std::to_string(payload.size()) +
                                       " bytes, expected 64");
  }
  if (!topology_.members.contains(from)) {
    throw Error(Errc::DeadSubOS, "sender subos " + std::to_string(from.value));
  }
  std::map<SubOSId, SendResult::Status> results;
  for (auto member : group) {
    if (member == from) continue;
    if (!topology_.members.contains(member)) {
      results[member] = SendResult::Status::PeerGone;
      continue;
    }
    auto ring = channel(from, member);
    if (!ring) ring = open_pair(from, member, default_capacity_).forward;
    results[member] = ring->send(payload).status;
  }
  return results;
}

std::map<SubOSId, SendResult::Status> Fabric::broadcast(SubOSId from,
                                                        std::span<const std::byte> payload) {
  std::set<SubOSId> others = topology_.members;
  others.erase(from);
  if (others.empty()) {
    if (!topology_.members.contains(from)) {
      throw Error(Errc::DeadSubOS, "sender subos " + std::to_string(from.value));
    }
    return {};
  }
  return multicast(from, others, payload);
}

void Fabric::on_created(SubOSId id) {
  refresh_topology();
  endpoints_[id] = std::make_unique<Endpoint>(id);
}

void Fabric::on_destroyed(SubOSId id) {
  refresh_topology();
  if (auto it = endpoints_.find(id); it != endpoints_.end()) it->second->alive_ = false;
  for (auto it = channels_.begin(); it != channels_.end();) {
    if (it->first.first == id || it->first.second == id) {
      it->second->peer_gone_.store(true, std::memory_order_release);
      it = channels_.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace ifts
