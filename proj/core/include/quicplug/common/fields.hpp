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
#ifndef QUICPLUG_COMMON_FIELDS_HPP
#define QUICPLUG_COMMON_FIELDS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "quicplug/common/plugin_val.hpp"

namespace quicplug {

// Registry of host state a plugin may read or write, grouped by scope.
// Numeric values are the wire/ABI identifiers and must never be reordered;
// new fields are appended within their group's range.
enum class ConnectionField : std::uint32_t {
  // Connection-wide (0x00xx)
  kIsServer = 0x0000,
  kMaxTxData = 0x0001,
  kTxData = 0x0002,
  kMaxRxData = 0x0003,
  kRxData = 0x0004,
  kMtu = 0x0005,
  kPeerAddr = 0x0006,
  kLocalAddr = 0x0007,
  kIsEstablished = 0x0008,
  kIdleTimeout = 0x0009,
  // Packet number space (0x01xx)
  kNextPktNum = 0x0100,
  kLargestRxPktNum = 0x0101,
  kAckElicitingInFlight = 0x0102,
  // Recovery (0x02xx)
  kCwnd = 0x0200,
  kSsthresh = 0x0201,
  kBytesInFlight = 0x0202,
  kSmoothedRtt = 0x0203,
  kRttVar = 0x0204,
  kMinRtt = 0x0205,
  kLatestRtt = 0x0206,
  kLossCount = 0x0207,
  kPacingRate = 0x0208,
  kInSlowStart = 0x0209,
};

enum class FieldGroup : std::uint8_t { kConnection, kSpace, kRecovery };

struct FieldInfo {
  ConnectionField field;
  std::string_view name;
  FieldGroup group;
  PluginVal::Tag value_tag;  // the one PluginVal variant this field maps to
  bool writable;
};

// All fields in registry order.
std::span<const FieldInfo> field_registry();

std::optional<FieldInfo> field_info(ConnectionField f);
std::optional<ConnectionField> field_from_id(std::uint32_t id);
std::optional<ConnectionField> field_from_name(std::string_view name);

}  // namespace quicplug

#endif
