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
#ifndef QUICPLUG_COMMON_PLUGIN_VAL_HPP
#define QUICPLUG_COMMON_PLUGIN_VAL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "quicplug/common/frame.hpp"

namespace quicplug {

// IP endpoint in boundary form: version tag, address octets, port.
struct SocketAddr {
  std::uint8_t version = 4;  // 4 or 6
  std::array<std::uint8_t, 16> addr{};  // first 4 octets used for v4
  std::uint16_t port = 0;
  bool operator==(const SocketAddr&) const = default;
};

// Distinct wrapper: std::size_t aliases std::uint64_t on this platform.
struct UsizeVal {
  std::uint64_t v = 0;
  bool operator==(const UsizeVal&) const = default;
};

// Microsecond duration / instant wrappers so the variant tags stay distinct.
struct DurationUs {
  std::uint64_t us = 0;
  bool operator==(const DurationUs&) const = default;
};

struct InstantUs {
  std::uint64_t us = 0;  // since an arbitrary per-process epoch
  bool operator==(const InstantUs&) const = default;
};

// Type-length-value transport parameter; value length <= 256.
struct TransportParameter {
  std::uint64_t param_type = 0;
  std::vector<std::uint8_t> value;
  bool operator==(const TransportParameter&) const = default;
};

// Unforgeable handle to one host buffer, bounded in both directions.
// Tags are engine-issued and die with the routine invocation that staged
// them; a plugin holding a stale tag gets kInvalidCapability.
struct BytesCapability {
  std::uint64_t tag = 0;
  std::uint64_t max_read_len = 0;
  std::uint64_t max_write_len = 0;
  bool operator==(const BytesCapability&) const = default;
};

// Length-limited opaque octet string (<= 4096 octets).
struct RawBuffer {
  std::vector<std::uint8_t> data;
  bool operator==(const RawBuffer&) const = default;
};

inline constexpr std::size_t kRawBufferMax = 4096;
// Every encoded PluginVal fits in the raw payload cap plus framing.
inline constexpr std::size_t kMaxEncodedPluginVal = kRawBufferMax + 16;

// The single value type crossing the host/plugin boundary. Hosts map their
// internal structures into this representation; plugins never see anything
// else.
class PluginVal {
 public:
  using Variant =
      std::variant<bool, std::int32_t, std::int64_t, std::uint32_t, std::uint64_t,
                   UsizeVal, DurationUs, InstantUs, SocketAddr, Frame,
                   TransportParameter, BytesCapability, RawBuffer>;

  enum class Tag : std::uint8_t {
    kBool = 0x00,
    kI32 = 0x01,
    kI64 = 0x02,
    kU32 = 0x03,
    kU64 = 0x04,
    kUsize = 0x05,
    kDuration = 0x06,
    kInstant = 0x07,
    kSocketAddr = 0x08,
    kQuicFrame = 0x09,
    kTransportParam = 0x0a,
    kBytes = 0x0b,
    kRawBuffer = 0x0c,
  };

  PluginVal() : v_(false) {}
  template <typename T>
    requires std::is_constructible_v<Variant, T>
  PluginVal(T value) : v_(std::move(value)) {}

  Tag tag() const { return static_cast<Tag>(v_.index()); }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }
  const Variant& variant() const { return v_; }

  // Loose unsigned view: accepts any integer-like variant. Used where a
  // routine contract says "an unsigned integer" without pinning the width.
  std::optional<std::uint64_t> as_u64() const;
  std::optional<bool> as_bool() const;

  bool operator==(const PluginVal&) const = default;

 private:
  Variant v_;
};

}  // namespace quicplug

#endif
