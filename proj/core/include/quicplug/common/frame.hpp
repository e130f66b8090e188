/*
 * Copyright 2026 The quicplug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef QUICPLUG_COMMON_FRAME_HPP
#define QUICPLUG_COMMON_FRAME_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace quicplug {

class PluginVal;

// Core frame type values, following the RFC 9000 allocation. Everything in
// [0x00, 0x1e] is reserved for the core; extension frames live above it.
namespace frame_type {
inline constexpr std::uint64_t kPadding = 0x00;
inline constexpr std::uint64_t kPing = 0x01;
inline constexpr std::uint64_t kAck = 0x02;
inline constexpr std::uint64_t kStream = 0x08;  // canonical base of 0x08..0x0f
inline constexpr std::uint64_t kStreamMax = 0x0f;
inline constexpr std::uint64_t kMaxData = 0x10;
inline constexpr std::uint64_t kPathChallenge = 0x1a;
inline constexpr std::uint64_t kPathResponse = 0x1b;
inline constexpr std::uint64_t kConnectionClose = 0x1c;
inline constexpr std::uint64_t kCoreMax = 0x1e;

inline constexpr bool is_core(std::uint64_t t) { return t <= kCoreMax; }
}  // namespace frame_type

struct PaddingFrame {
  bool operator==(const PaddingFrame&) const = default;
};

struct PingFrame {
  bool operator==(const PingFrame&) const = default;
};

// One acknowledged block. ranges[0].gap must be 0; for later entries gap is
// the count of unacknowledged packet numbers separating it from the block
// above, and len is the count of acknowledged numbers in the block (>= 1).
// Blocks are ordered descending from largest_acked.
struct AckRange {
  std::uint64_t gap = 0;
  std::uint64_t len = 1;
  bool operator==(const AckRange&) const = default;
};

struct AckFrame {
  std::uint64_t largest_acked = 0;
  std::uint64_t ack_delay_us = 0;
  std::vector<AckRange> ranges;
  bool operator==(const AckFrame&) const = default;
};

struct MaxDataFrame {
  std::uint64_t maximum = 0;
  bool operator==(const MaxDataFrame&) const = default;
};

// Carries metadata only; stream payload octets stay on the host side and
// cross the boundary through byte capabilities when a plugin needs them.
struct StreamFrame {
  std::uint64_t stream_id = 0;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  bool fin = false;
  bool operator==(const StreamFrame&) const = default;
};

struct PathChallengeFrame {
  std::array<std::uint8_t, 8> data{};
  bool operator==(const PathChallengeFrame&) const = default;
};

struct PathResponseFrame {
  std::array<std::uint8_t, 8> data{};
  bool operator==(const PathResponseFrame&) const = default;
};

struct ConnectionCloseFrame {
  std::uint64_t error_code = 0;
  std::vector<std::uint8_t> reason;
  bool operator==(const ConnectionCloseFrame&) const = default;
};

// Plugin-defined frame: a type value outside the core range plus up to
// eight structured entries. The wire image of such a frame is owned by the
// defining plugin; this struct is only the boundary representation.
struct ExtensionFrame {
  std::uint64_t frame_type = 0;
  std::vector<PluginVal> payload;  // <= 8 entries
  ExtensionFrame();
  explicit ExtensionFrame(std::uint64_t t);
  ExtensionFrame(std::uint64_t t, std::vector<PluginVal> p);
  ExtensionFrame(const ExtensionFrame&);
  ExtensionFrame(ExtensionFrame&&) noexcept;
  ExtensionFrame& operator=(const ExtensionFrame&);
  ExtensionFrame& operator=(ExtensionFrame&&) noexcept;
  ~ExtensionFrame();
  bool operator==(const ExtensionFrame&) const;
};

class Frame {
 public:
  using Variant = std::variant<PaddingFrame, PingFrame, AckFrame, MaxDataFrame,
                               StreamFrame, PathChallengeFrame, PathResponseFrame,
                               ConnectionCloseFrame, ExtensionFrame>;

  Frame() : v_(PaddingFrame{}) {}
  template <typename T>
    requires std::is_constructible_v<Variant, T>
  Frame(T value) : v_(std::move(value)) {}

  // The frame's dispatch type: core value for core frames, the extension
  // value otherwise. Stream frames report the canonical base 0x08.
  std::uint64_t type() const;

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }
  template <typename T>
  T* get_if() {
    return std::get_if<T>(&v_);
  }
  const Variant& variant() const { return v_; }

  bool operator==(const Frame&) const = default;

  // Invariant checks used by codecs and tests: ack blocks must be
  // well-ordered and extension types must not collide with the core range.
  bool valid() const;

 private:
  Variant v_;
};

// Human-readable rendering used when no LogFrame plugin is attached.
std::string describe_frame(const Frame& f);

}  // namespace quicplug

#endif
