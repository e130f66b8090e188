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
#include "quicplug/common/plugin_val.hpp"

namespace quicplug {

std::optional<std::uint64_t> PluginVal::as_u64() const {
  switch (tag()) {
    case Tag::kI32: {
      auto v = *get_if<std::int32_t>();
      if (v < 0) return std::nullopt;
      return static_cast<std::uint64_t>(v);
    }
    case Tag::kI64: {
      auto v = *get_if<std::int64_t>();
      if (v < 0) return std::nullopt;
      return static_cast<std::uint64_t>(v);
    }
    case Tag::kU32:
      return *get_if<std::uint32_t>();
    case Tag::kU64:
      return *get_if<std::uint64_t>();
    case Tag::kUsize:
      return get_if<UsizeVal>()->v;
    case Tag::kDuration:
      return get_if<DurationUs>()->us;
    case Tag::kInstant:
      return get_if<InstantUs>()->us;
    default:
      return std::nullopt;
  }
}

std::optional<bool> PluginVal::as_bool() const {
  if (const auto* b = get_if<bool>()) return *b;
  return std::nullopt;
}

}  // namespace quicplug
