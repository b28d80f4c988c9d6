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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <vector>

#include "ifts/ledger.hpp"
#include "ifts/lifecycle.hpp"
#include "ifts/types.hpp"

namespace ifts {

inline constexpr std::size_t kDefaultChannelCapacity = 64 * 1024;

enum class HandleState { Open, Closed, PeerGone };
std::string_view handle_state_name(HandleState state);

namespace detail {

// Single-producer/single-consumer byte FIFO.
class ByteRing {
 public:
  explicit ByteRing(std::size_t capacity) : buf_(capacity) {}

  std::size_t capacity() const { return buf_.size(); }
  std::size_t size() const {
    return tail_.load(std::memory_order_acquire) - head_.load(std::memory_order_acquire);
  }

  std::size_t write(std::span<const std::byte> data);
  std::vector<std::byte> read(std::size_t max);

 private:
  std::vector<std::byte> buf_;
  alignas(64) std::atomic<std::size_t> head_{0};
  alignas(64) std::atomic<std::size_t> tail_{0};
};

struct ChannelCore {
  ChannelCore(std::uint64_t id, SubOSId a, SubOSId b, std::size_t capacity)
      : id(id), ends{a, b}, to{ByteRing(capacity), ByteRing(capacity)} {}

  const std::uint64_t id;
  const SubOSId ends[2];
  ByteRing to[2];  // to[i]: bytes travelling towards ends[i]
  std::atomic<bool> closed[2]{false, false};
  std::atomic<bool> gone[2]{false, false};  // end's subOS destroyed
  std::atomic<std::uint64_t> written[2]{0, 0};
  std::atomic<std::uint64_t> read[2]{0, 0};
};

struct SegmentCore {
  explicit SegmentCore(std::size_t size)
      : size(size), bytes(std::make_unique<std::atomic<unsigned char>[]>(size)) {}

  const std::size_t size;
  // Relaxed per-byte cells: writers interleave at byte granularity.
  std::unique_ptr<std::atomic<unsigned char>[]> bytes;
  mutable std::mutex mu;
  std::set<SubOSId> mappers;
};

}  // namespace detail

// One end of a duplex byte stream. Streams carry no framing.
class RfHandle {
 public:
  std::uint64_t channel_id() const { return core_->id; }
  SubOSId local() const { return core_->ends[side_]; }
  SubOSId peer() const { return core_->ends[1 - side_]; }
  HandleState state() const;

 private:
  friend class RfCom;
  RfHandle(std::shared_ptr<detail::ChannelCore> core, int side)
      : core_(std::move(core)), side_(side) {}

  std::shared_ptr<detail::ChannelCore> core_;
  int side_;
};

struct SegmentId {
  std::uint32_t value = 0;
  auto operator<=>(const SegmentId&) const = default;
};

// A subOS's mapping of a shared segment. Every access checks that the mapping
// is still in place; none of them synchronize with other mappers.
class SegmentView {
 public:
  SegmentId id() const { return id_; }
  SubOSId mapper() const { return who_; }
  std::size_t size() const { return core_->size; }

  std::byte load(std::size_t offset) const;
  void store(std::size_t offset, std::byte value);
  std::vector<std::byte> read(std::size_t offset, std::size_t len) const;
  void write(std::size_t offset, std::span<const std::byte> data);

 private:
  friend class RfCom;
  SegmentView(SegmentId id, SubOSId who, std::shared_ptr<detail::SegmentCore> core)
      : id_(id), who_(who), core_(std::move(core)) {}

  void check(std::size_t offset, std::size_t len) const;

  SegmentId id_;
  SubOSId who_;
  std::shared_ptr<detail::SegmentCore> core_;
};

struct ChannelStats {
  std::uint64_t id = 0;
  SubOSId a, b;
  std::uint64_t a_to_b_bytes = 0;
  std::uint64_t b_to_a_bytes = 0;
};

// Socket-like channels and shared segments between subOSes. Reads are
// non-blocking: an empty vector means no data yet.
class RfCom : public LifecycleObserver {
 public:
  explicit RfCom(const Ledger& ledger) : ledger_(ledger) {}

  std::pair<RfHandle, RfHandle> rf_open(SubOSId a, SubOSId b,
                                        std::size_t byte_capacity = kDefaultChannelCapacity);
  // Accepts up to the free capacity; a short (or zero) count is not an error.
  std::size_t rf_write(const RfHandle& handle, std::span<const std::byte> data);
  std::vector<std::byte> rf_read(const RfHandle& handle, std::size_t max);
  void rf_close(const RfHandle& handle);

  SegmentId create_segment(std::size_t size);
  SegmentView rf_map(SubOSId subos, SegmentId segment);
  void rf_unmap(SubOSId subos, SegmentId segment);

  std::size_t open_channels() const;
  std::vector<ChannelStats> channel_stats() const;

  void on_destroyed(SubOSId id) override;

 private:
  std::shared_ptr<detail::SegmentCore> segment(SegmentId id) const;

  const Ledger& ledger_;
  mutable std::mutex mu_;
  std::uint64_t next_channel_ = 1;
  std::uint32_t next_segment_ = 1;
  std::map<std::uint64_t, std::shared_ptr<detail::ChannelCore>> channels_;
  std::vector<ChannelStats> retired_stats_;
  std::map<SegmentId, std::shared_ptr<detail::SegmentCore>> segments_;
};

}  // namespace ifts
