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

#include "ifts/rfloop.hpp"

#include <set>

#include "ifts/error.hpp"

namespace ifts {

std::string RouteDecision::to_string() const {
  switch (kind) {
    case Kind::Loop: return "Loop(" + std::to_string(dst.value) + ")";
    case Kind::Broadcast: return "Broadcast";
    case Kind::Passthrough: return "Passthrough";
    case Kind::Drop:
      return reason == DropReason::Oversize ? "Drop(Oversize)" : "Drop(PeerGone)";
  }
  return "?";
}

std::string_view inject_status_name(InjectResult::Status status) {
  switch (status) {
    case InjectResult::Status::Delivered: return "Delivered";
    case InjectResult::Status::Passthrough: return "Passthrough";
    case InjectResult::Status::RingFull: return "RingFull";
    case InjectResult::Status::Dropped: return "Dropped";
  }
  return "?";
}

RfLoop::RfLoop(Ledger& ledger, const VirtualClock* clock, std::size_t ring_capacity)
    : ledger_(ledger), clock_(clock), ring_capacity_(ring_capacity) {
  for (auto id : ledger_.live_subos()) {
    rings_.emplace(id, std::make_unique<LoopRing>(ring_capacity_));
  }
}

std::uint64_t RfLoop::register_mac(SubOSId subos, MacAddr mac) {
  return ledger_.update_shared_state(MacChange{mac, subos, MacChange::Op::Add});
}

std::uint64_t RfLoop::unregister_mac(SubOSId subos, MacAddr mac) {
  return ledger_.update_shared_state(MacChange{mac, subos, MacChange::Op::Remove});
}

RouteDecision RfLoop::route(const Frame& frame) const {
  const SharedStateTable table = ledger_.shared_state();
  RouteDecision d;
  d.version = table.version;
  if (frame.payload.size() > kMaxFramePayload) {
    d.kind = RouteDecision::Kind::Drop;
    d.reason = RouteDecision::DropReason::Oversize;
    return d;
  }
  if (frame.dst.is_broadcast()) {
    d.kind = RouteDecision::Kind::Broadcast;
    return d;
  }
  auto it = table.macs.find(frame.dst);
  if (it == table.macs.end()) {
    d.kind = RouteDecision::Kind::Passthrough;
    return d;
  }
  if (!rings_.contains(it->second)) {
    d.kind = RouteDecision::Kind::Drop;
    d.reason = RouteDecision::DropReason::PeerGone;
    return d;
  }
  d.kind = RouteDecision::Kind::Loop;
  d.dst = it->second;
  return d;
}

RfLoop::LoopRing& RfLoop::ring_of(SubOSId subos) const {
  auto it = rings_.find(subos);
  if (it == rings_.end()) {
    throw Error(Errc::DeadSubOS, "no loop ring for subos " + std::to_string(subos.value));
  }
  return *it->second;
}

bool RfLoop::enqueue(SubOSId dst, const Frame& frame) {
  LoopRing& r = ring_of(dst);
  if (!r.ring.try_push(frame)) {
    ++stats_.ring_full;
    return false;
  }
  ++stats_.delivered;
  r.notify.ring();
  return true;
}

void RfLoop::record(const Frame& frame, std::string decision) {
  trace_.push_back({clock_ ? clock_->now() : SimDuration{0}, frame.src, frame.dst,
                    std::move(decision)});
}

InjectResult RfLoop::inject(const Frame& frame) {
  ++stats_.injected;
  const RouteDecision d = route(frame);
  InjectResult result;
  switch (d.kind) {
    case RouteDecision::Kind::Passthrough:
      ++stats_.passthrough;
      sink_.push_back(frame);
      result.status = InjectResult::Status::Passthrough;
      break;
    case RouteDecision::Kind::Drop:
      ++(d.reason == RouteDecision::DropReason::Oversize ? stats_.dropped_oversize
                                                         : stats_.dropped_peer_gone);
      result.status = InjectResult::Status::Dropped;
      break;
    case RouteDecision::Kind::Loop:
      if (enqueue(d.dst, frame)) {
        result.delivered = 1;
        result.status = InjectResult::Status::Delivered;
      } else {
        result.ring_full = 1;
        result.status = InjectResult::Status::RingFull;
      }
      break;
    case RouteDecision::Kind::Broadcast: {
      const SharedStateTable table = ledger_.shared_state();
      std::optional<SubOSId> sender;
      if (auto it = table.macs.find(frame.src); it != table.macs.end()) sender = it->second;
      std::set<SubOSId> targets;
      for (const auto& [mac, owner] : table.macs) {
        if (owner != sender && rings_.contains(owner)) targets.insert(owner);
      }
      for (auto t : targets) {
        if (enqueue(t, frame)) {
          ++result.delivered;
        } else {
          ++result.ring_full;
        }
      }
      result.status = (result.delivered == 0 && result.ring_full > 0)
                          ? InjectResult::Status::RingFull
                          : InjectResult::Status::Delivered;
      break;
    }
  }
  record(frame, d.to_string() + ":" + std::string(inject_status_name(result.status)));
  return result;
}

std::vector<Frame> RfLoop::recv_batch(SubOSId subos, std::size_t budget) {
  LoopRing& r = ring_of(subos);
  std::vector<Frame> out;
  r.notify.poll(
      [&]() -> std::pair<std::size_t, bool> {
        while (out.size() < budget) {
          auto f = r.ring.try_pop();
          if (!f) break;
          out.push_back(std::move(*f));
        }
        return {out.size(), r.ring.empty()};
      },
      [&] { return !r.ring.empty(); });
  return out;
}

NotifyMode RfLoop::mode(SubOSId subos) const { return ring_of(subos).notify.mode(); }
std::uint64_t RfLoop::doorbell_count(SubOSId subos) const {
  return ring_of(subos).notify.doorbells();
}
std::uint64_t RfLoop::idle_cycles(SubOSId subos) const {
  return ring_of(subos).notify.idle_cycles();
}
std::size_t RfLoop::occupancy(SubOSId subos) const { return ring_of(subos).ring.size(); }

void RfLoop::write_trace_csv(std::ostream& out) const {
  out << "time,src_mac,dst_mac,decision\n";
  for (const auto& e : trace_) {
    out << format_seconds(e.time) << ',' << e.src.to_string() << ','
        << e.dst.to_string() << ',' << e.decision << '\n';
  }
}

void RfLoop::on_created(SubOSId id) {
  rings_[id] = std::make_unique<LoopRing>(ring_capacity_);
}

void RfLoop::on_destroyed(SubOSId id) { rings_.erase(id); }

}  // namespace ifts
