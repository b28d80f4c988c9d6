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
#include <bit>
#include <cstddef>
#include <cstdint>
#include <new>
#include <optional>
#include <utility>
#include <vector>

#include "ifts/error.hpp"

namespace ifts {

inline constexpr std::size_t kCacheLineSize = 64;

// Bounded single-producer/single-consumer ring. push() may only be called from
// one context and pop() from one (possibly different) context. Indices grow
// monotonically and are masked into the slot array.
template <typename T>
class SpscRing {
 public:
  explicit SpscRing(std::size_t capacity) : slots_(capacity), mask_(capacity - 1) {
    if (capacity == 0 || !std::has_single_bit(capacity)) {
      throw Error(Errc::SpecViolation, "ring capacity must be a power of two");
    }
  }

  SpscRing(const SpscRing&) = delete;
  SpscRing& operator=(const SpscRing&) = delete;

  std::size_t capacity() const { return slots_.size(); }

  // Approximate when called concurrently with push/pop.
  std::size_t size() const {
    return tail_.load(std::memory_order_acquire) - head_.load(std::memory_order_acquire);
  }
  bool empty() const { return size() == 0; }

  bool try_push(T value) {
    const std::size_t tail = tail_.load(std::memory_order_relaxed);
    if (tail - cached_head_ == slots_.size()) {
      cached_head_ = head_.load(std::memory_order_acquire);
      if (tail - cached_head_ == slots_.size()) return false;
    }
    slots_[tail & mask_] = std::move(value);
    tail_.store(tail + 1, std::memory_order_release);
    return true;
  }

  std::optional<T> try_pop() {
    const std::size_t head = head_.load(std::memory_order_relaxed);
    if (head == cached_tail_) {
      cached_tail_ = tail_.load(std::memory_order_acquire);
      if (head == cached_tail_) return std::nullopt;
    }
    std::optional<T> out(std::move(slots_[head & mask_]));
    head_.store(head + 1, std::memory_order_release);
    return out;
  }

 private:
  std::vector<T> slots_;
  const std::size_t mask_;
  alignas(kCacheLineSize) std::atomic<std::size_t> head_{0};
  std::size_t cached_tail_ = 0;  // consumer-local
  alignas(kCacheLineSize) std::atomic<std::size_t> tail_{0};
  std::size_t cached_head_ = 0;  // producer-local
};

enum class NotifyMode : std::uint8_t { Idle, Notified, Polling };
std::string_view notify_mode_name(NotifyMode mode);

// Interrupt-then-poll notification for one consumer. A producer rings the
// doorbell only when the consumer is Idle; while the consumer is Notified or
// Polling, further sends are picked up by polling without another doorbell.
class NotifyState {
 public:
  NotifyMode mode() const { return mode_.load(std::memory_order_acquire); }
  std::uint64_t doorbells() const { return doorbells_.load(std::memory_order_relaxed); }
  // Number of times a drain pass ran the queues dry and returned to Idle.
  std::uint64_t idle_cycles() const { return idle_cycles_.load(std::memory_order_relaxed); }

  // Producer side, after a successful enqueue. True when this call rang.
  bool ring() {
    NotifyMode expected = NotifyMode::Idle;
    if (mode_.compare_exchange_strong(expected, NotifyMode::Notified,
                                      std::memory_order_acq_rel)) {
      doorbells_.fetch_add(1, std::memory_order_relaxed);
      return true;
    }
    return false;
  }

  // Consumer side. Drains via `pop_batch(budget) -> (count, queues_empty)` and
  // then settles the mode. `any_pending()` re-checks the queues after going
  // Idle so a send that raced with completion is never stranded.
  template <typename PopBatch, typename AnyPending>
  std::size_t poll(PopBatch&& pop_batch, AnyPending&& any_pending) {
    const NotifyMode prev = mode_.exchange(NotifyMode::Polling, std::memory_order_acq_rel);
    const auto [count, empty] = pop_batch();
    if (!empty) return count;
    mode_.store(NotifyMode::Idle, std::memory_order_release);
    const bool raced = any_pending();
    if (prev != NotifyMode::Idle || count > 0 || raced) {
      idle_cycles_.fetch_add(1, std::memory_order_relaxed);
    }
    if (raced) ring();
    return count;
  }

 private:
  std::atomic<NotifyMode> mode_{NotifyMode::Idle};
  std::atomic<std::uint64_t> doorbells_{0};
  std::atomic<std::uint64_t> idle_cycles_{0};
};

}  // namespace ifts
