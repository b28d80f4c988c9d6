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

#include "ifts/rfcom.hpp"

#include <algorithm>
#include <cstring>

#include "ifts/error.hpp"

namespace ifts {

std::string_view handle_state_name(HandleState state) {
  switch (state) {
    case HandleState::Open: return "Open";
    case HandleState::Closed: return "Closed";
    case HandleState::PeerGone: return "PeerGone";
  }
  return "?";
}

namespace detail {

std::size_t ByteRing::write(std::span<const std::byte> data) {
  const std::size_t tail = tail_.load(std::memory_order_relaxed);
  const std::size_t head = head_.load(std::memory_order_acquire);
  const std::size_t n = std::min(data.size(), buf_.size() - (tail - head));
  for (std::size_t i = 0; i < n; ++i) buf_[(tail + i) % buf_.size()] = data[i];
  tail_.store(tail + n, std::memory_order_release);
  return n;
}

std::vector<std::byte> ByteRing::read(std::size_t max) {
  const std::size_t head = head_.load(std::memory_order_relaxed);
  const std::size_t tail = tail_.load(std::memory_order_acquire);
  const std::size_t n = std::min(max, tail - head);
  std::vector<std::byte> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf_[(head + i) % buf_.size()];
  head_.store(head + n, std::memory_order_release);
  return out;
}

}  // namespace detail

HandleState RfHandle::state() const {
  const int other = 1 - side_;
  if (core_->closed[side_].load() || core_->gone[side_].load()) return HandleState::Closed;
  if (core_->closed[other].load() || core_->gone[other].load()) return HandleState::PeerGone;
  return HandleState::Open;
}

std::pair<RfHandle, RfHandle> RfCom::rf_open(SubOSId a, SubOSId b,
                                             std::size_t byte_capacity) {
  for (auto id : {a, b}) {
    if (!ledger_.is_live(id)) {
      throw Error(Errc::DeadSubOS, "subos " + std::to_string(id.value) + " is not live");
    }
  }
  if (a == b) throw Error(Errc::SelfChannel, "subos " + std::to_string(a.value));
  if (byte_capacity == 0) throw Error(Errc::SpecViolation, "channel capacity must be > 0");
  std::lock_guard lock(mu_);
  auto core = std::make_shared<detail::ChannelCore>(next_channel_++, a, b, byte_capacity);
  channels_[core->id] = core;
  return {RfHandle(core, 0), RfHandle(core, 1)};
}

std::size_t RfCom::rf_write(const RfHandle& h, std::span<const std::byte> data) {
  auto& c = *h.core_;
  const int me = h.side_;
  const int other = 1 - me;
  if (c.closed[me].load(std::memory_order_acquire) || c.gone[me].load(std::memory_order_acquire)) {
    throw Error(Errc::ChannelClosed, "channel " + std::to_string(c.id));
  }
  if (c.closed[other].load(std::memory_order_acquire) ||
      c.gone[other].load(std::memory_order_acquire)) {
    throw Error(Errc::PeerGone, "channel " + std::to_string(c.id));
  }
  const std::size_t n = c.to[other].write(data);
  c.written[me].fetch_add(n, std::memory_order_relaxed);
  return n;
}

std::vector<std::byte> RfCom::rf_read(const RfHandle& h, std::size_t max) {
  auto& c = *h.core_;
  const int me = h.side_;
  const int other = 1 - me;
  if (c.closed[me].load(std::memory_order_acquire) || c.gone[me].load(std::memory_order_acquire)) {
    throw Error(Errc::ChannelClosed, "channel " + std::to_string(c.id));
  }
  // Observe the peer's departure before looking at the queue so that every
  // byte it wrote beforehand is visible.
  const bool peer_gone = c.closed[other].load(std::memory_order_acquire) ||
                         c.gone[other].load(std::memory_order_acquire);
  auto data = c.to[me].read(max);
  c.read[me].fetch_add(data.size(), std::memory_order_relaxed);
  if (data.empty() && peer_gone && max > 0) {
    throw Error(Errc::PeerGone, "channel " + std::to_string(c.id));
  }
  return data;
}

void RfCom::rf_close(const RfHandle& h) {
  auto& c = *h.core_;
  if (c.closed[h.side_].exchange(true, std::memory_order_acq_rel)) {
    throw Error(Errc::AlreadyClosed, "channel " + std::to_string(c.id));
  }
  const int other = 1 - h.side_;
  if (c.closed[other].load() || c.gone[other].load()) {
    std::lock_guard lock(mu_);
    if (auto it = channels_.find(c.id); it != channels_.end()) {
      retired_stats_.push_back({c.id, c.ends[0], c.ends[1], c.written[0].load(),
                                c.written[1].load()});
      channels_.erase(it);
    }
  }
}

std::size_t RfCom::open_channels() const {
  std::lock_guard lock(mu_);
  return channels_.size();
}

std::vector<ChannelStats> RfCom::channel_stats() const {
  std::lock_guard lock(mu_);
  std::vector<ChannelStats> out = retired_stats_;
  for (const auto& [id, c] : channels_) {
    out.push_back({id, c->ends[0], c->ends[1], c->written[0].load(), c->written[1].load()});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  return out;
}

SegmentId RfCom::create_segment(std::size_t size) {
  if (size == 0) throw Error(Errc::SpecViolation, "segment size must be > 0");
  std::lock_guard lock(mu_);
  const SegmentId id{next_segment_++};
  segments_[id] = std::make_shared<detail::SegmentCore>(size);
  return id;
}

std::shared_ptr<detail::SegmentCore> RfCom::segment(SegmentId id) const {
  std::lock_guard lock(mu_);
  auto it = segments_.find(id);
  if (it == segments_.end()) {
    throw Error(Errc::UnknownSegment, "segment " + std::to_string(id.value));
  }
  return it->second;
}

SegmentView RfCom::rf_map(SubOSId subos, SegmentId id) {
  auto core = segment(id);
  if (!ledger_.is_live(subos)) {
    throw Error(Errc::DeadSubOS, "subos " + std::to_string(subos.value) + " is not live");
  }
  std::lock_guard lock(core->mu);
  if (!core->mappers.insert(subos).second) {
    throw Error(Errc::AlreadyMapped, "segment " + std::to_string(id.value));
  }
  return SegmentView(id, subos, core);
}

void RfCom::rf_unmap(SubOSId subos, SegmentId id) {
  auto core = segment(id);
  std::lock_guard lock(core->mu);
  if (core->mappers.erase(subos) == 0) {
    throw Error(Errc::NotMapped, "segment " + std::to_string(id.value));
  }
}

void RfCom::on_destroyed(SubOSId id) {
  std::lock_guard lock(mu_);
  for (auto& [cid, c] : channels_) {
    for (int side = 0; side < 2; ++side) {
      if (c->ends[side] == id) c->gone[side].store(true, std::memory_order_release);
    }
  }
  for (auto& [sid, seg] : segments_) {
    std::lock_guard seg_lock(seg->mu);
    seg->mappers.erase(id);
  }
}

void SegmentView::check(std::size_t offset, std::size_t len) const {
  {
    std::lock_guard lock(core_->mu);
    if (!core_->mappers.contains(who_)) {
      throw Error(Errc::NotMapped, "segment " + std::to_string(id_.value) +
                                       " not mapped by subos " + std::to_string(who_.value));
    }
  }
  if (offset > core_->size || len > core_->size - offset) {
    throw Error(Errc::SpecViolation, "segment access out of bounds");
  }
}

std::byte SegmentView::load(std::size_t offset) const {
  check(offset, 1);
  return std::byte{core_->bytes[offset].load(std::memory_order_relaxed)};
}

void SegmentView::store(std::size_t offset, std::byte value) {
  check(offset, 1);
  core_->bytes[offset].store(static_cast<unsigned char>(value), std::memory_order_relaxed);
}

std::vector<std::byte> SegmentView::read(std::size_t offset, std::size_t len) const {
  check(offset, len);
  std::vector<std::byte> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    out[i] = std::byte{core_->bytes[offset + i].load(std::memory_order_relaxed)};
  }
  return out;
}

void SegmentView::write(std::size_t offset, std::span<const std::byte> data) {
  check(offset, data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    core_->bytes[offset + i].store(static_cast<unsigned char>(data[i]),
                                   std::memory_order_relaxed);
  }
}

}  // namespace ifts
