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
#include "quicplug/common/routine.hpp"

#include <array>

#include "quicplug/common/varint.hpp"

namespace quicplug {

namespace {

struct KindEntry {
  RoutineKind kind;
  std::string_view name;
  bool has_param;
};

constexpr std::array<KindEntry, 14> kKinds{{
    {RoutineKind::kInit, "init", false},
    {RoutineKind::kWriteTransportParameter, "write_transport_parameter", true},
    {RoutineKind::kDecodeTransportParameter, "decode_transport_parameter", true},
    {RoutineKind::kShouldSendFrame, "should_send_frame", true},
    {RoutineKind::kPrepareFrame, "prepare_frame", true},
    {RoutineKind::kFrameWireLen, "frame_wire_len", true},
    {RoutineKind::kWriteFrame, "write_frame", true},
    {RoutineKind::kOnFrameReserved, "on_frame_reserved", true},
    {RoutineKind::kNotifyFrame, "notify_frame", true},
    {RoutineKind::kParseFrame, "parse_frame", true},
    {RoutineKind::kProcessFrame, "process_frame", true},
    {RoutineKind::kLogFrame, "log_frame", true},
    {RoutineKind::kOnPluginTimeout, "on_plugin_timeout", false},
    {RoutineKind::kPluginControl, "plugin_control", false},
}};

// Canonical lower-case hex without 0x prefix or leading zeros.
std::optional<std::uint64_t> parse_hex_suffix(std::string_view s) {
  if (s.empty() || s.size() > 16) return std::nullopt;
  if (s.size() > 1 && s[0] == '0') return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    std::uint64_t digit;
    if (c >= '0' && c <= '9')
      digit = static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      digit = static_cast<std::uint64_t>(c - 'a' + 10);
    else
      return std::nullopt;
    v = (v << 4) | digit;
  }
  if (v > varint::kMax) return std::nullopt;
  return v;
}

std::string render_hex(std::uint64_t v) {
  if (v == 0) return "0";
  char buf[17];
  int i = 16;
  while (v) {
    buf[--i] = "0123456789abcdef"[v & 0xf];
    v >>= 4;
  }
  return std::string(&buf[i], &buf[16]);
}

}  // namespace

bool routine_kind_has_param(RoutineKind k) {
  return kKinds[static_cast<std::size_t>(k)].has_param;
}

std::string_view routine_kind_name(RoutineKind k) {
  return kKinds[static_cast<std::size_t>(k)].name;
}

Expected<ParsedExport, ExportNameError> parse_export_name(std::string_view name) {
  Anchor anchor = Anchor::kDefine;
  if (name.starts_with("before_")) {
    anchor = Anchor::kBefore;
    name.remove_prefix(7);
  } else if (name.starts_with("after_")) {
    anchor = Anchor::kAfter;
    name.remove_prefix(6);
  }

  // Longest-match against the kind table; kinds are prefix-free except for
  // the trailing parameter, which always starts with '_'.
  for (const auto& entry : kKinds) {
    if (!name.starts_with(entry.name)) continue;
    std::string_view rest = name.substr(entry.name.size());
    if (rest.empty()) {
      if (entry.has_param) return ExportNameError::kMissingParam;
      return ParsedExport{RoutineId::plain(entry.kind), anchor};
    }
    if (rest[0] != '_') continue;  // e.g. "initialize" vs "init"
    if (!entry.has_param) return ExportNameError::kUnexpectedParam;
    auto param = parse_hex_suffix(rest.substr(1));
    if (!param) return ExportNameError::kBadParam;
    return ParsedExport{RoutineId::of(entry.kind, *param), anchor};
  }
  return ExportNameError::kUnknownKind;
}

std::string render_export_name(const ParsedExport& e) {
  std::string out;
  if (e.anchor == Anchor::kBefore)
    out += "before_";
  else if (e.anchor == Anchor::kAfter)
    out += "after_";
  out += routine_kind_name(e.routine.kind);
  if (e.routine.param) {
    out += '_';
    out += render_hex(*e.routine.param);
  }
  return out;
}

namespace status {
std::string_view name(std::int64_t code) {
  switch (code) {
    case kOk: return "Ok";
    case kHaltSending: return "HaltSending";
    case kPermissionError: return "PermissionError";
    case kInvalidCapability: return "InvalidCapability";
    case kRangeError: return "RangeError";
    case kNotAvailable: return "NotAvailable";
    case kRoutineAborted: return "RoutineAborted";
    case kInputMissing: return "InputMissing";
    case kDecodeError: return "DecodeError";
    case kUnknownField: return "UnknownField";
    case kInternalError: return "InternalError";
    default: return code < 0 ? "EngineError" : "PluginStatus";
  }
}
}  // namespace status

}  // namespace quicplug
