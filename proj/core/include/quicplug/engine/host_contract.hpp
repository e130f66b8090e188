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
#ifndef QUICPLUG_ENGINE_HOST_CONTRACT_HPP
#define QUICPLUG_ENGINE_HOST_CONTRACT_HPP

#include <optional>
#include <vector>

#include "quicplug/common/fields.hpp"
#include "quicplug/common/plugin_val.hpp"

namespace quicplug::engine {

enum class SetFieldResult { kOk, kUnsupported, kReadOnly, kBadType, kBadValue };

// The one interface a host implementation provides to the engine: getting
// and setting connection fields as serialized-value equivalents. A field
// absent from supported_fields() must return nullopt/kUnsupported.
class HostConnectionContract {
 public:
  virtual ~HostConnectionContract() = default;

  virtual std::optional<PluginVal> get_field(ConnectionField f) const = 0;
  virtual SetFieldResult set_field(ConnectionField f, const PluginVal& v) = 0;
  virtual std::vector<ConnectionField> supported_fields() const = 0;

  bool supports(ConnectionField f) const {
    for (ConnectionField s : supported_fields())
      if (s == f) return true;
    return false;
  }
};

}  // namespace quicplug::engine

#endif
