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
#ifndef QUICPLUG_COMMON_ROUTINE_HPP
#define QUICPLUG_COMMON_ROUTINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "quicplug/common/status.hpp"

namespace quicplug {

// The protocol routines every compliant host exposes. Frame- and
// transport-parameter-related kinds carry a 62-bit type parameter; Init,
// OnPluginTimeout and PluginControl carry none.
enum class RoutineKind : std::uint8_t {
  kInit,
  kWriteTransportParameter,
  kDecodeTransportParameter,
  kShouldSendFrame,
  kPrepareFrame,
  kFrameWireLen,
  kWriteFrame,
  kOnFrameReserved,
  kNotifyFrame,
  kParseFrame,
  kProcessFrame,
  kLogFrame,
  kOnPluginTimeout,
  kPluginControl,
};

bool routine_kind_has_param(RoutineKind k);
std::string_view routine_kind_name(RoutineKind k);  // snake_case export form

struct RoutineId {
  RoutineKind kind;
  std::optional<std::uint64_t> param;  // frame type or TP type, < 2^62

  static RoutineId plain(RoutineKind k) { return {k, std::nullopt}; }
  static RoutineId of(RoutineKind k, std::uint64_t p) { return {k, p}; }

  bool operator==(const RoutineId&) const = default;
};

// Attachment mode. Define replaces the routine behavior and is unique per
// RoutineId across a connection; Before/After observe only.
enum class Anchor : std::uint8_t { kBefore, kDefine, kAfter };

struct ParsedExport {
  RoutineId routine;
  Anchor anchor;
  bool operator==(const ParsedExport&) const = default;
};

enum class ExportNameError { kUnknownKind, kBadParam, kMissingParam, kUnexpectedParam };

// Parses a plugin's exported-function name: optional "before_"/"after_"
// prefix (none means Define), the snake_case routine kind, and for
// frame/TP kinds a "_<hex>" suffix in canonical lower-case hex (no 0x, no
// leading zeros) holding the 62-bit parameter.
Expected<ParsedExport, ExportNameError> parse_export_name(std::string_view name);

// Canonical inverse; render_export_name(parse_export_name(n)) == n for
// every accepted n.
std::string render_export_name(const ParsedExport& e);

struct RoutineIdHash {
  std::size_t operator()(const RoutineId& id) const {
    std::uint64_t p = id.param ? (*id.param + 1) : 0;
    return std::hash<std::uint64_t>{}((p << 8) ^ static_cast<std::uint64_t>(id.kind));
  }
};

}  // namespace quicplug

#endif
