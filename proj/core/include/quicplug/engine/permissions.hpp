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
#ifndef QUICPLUG_ENGINE_PERMISSIONS_HPP
#define QUICPLUG_ENGINE_PERMISSIONS_HPP

#include <algorithm>
#include <vector>

#include "quicplug/common/fields.hpp"

namespace quicplug::engine {

// Capability grants for one plugin, decided by the host application.
// Default-deny: anything not granted returns kPermissionError to the
// plugin. write_fields implies read_fields. field_deny carves individual
// fields out of an otherwise granted read/write.
struct PermissionSet {
  bool read_fields = false;
  bool write_fields = false;
  bool registration = false;
  bool bytes_api = false;
  bool file_api = false;
  bool timer_api = false;
  bool control_api = false;
  std::vector<ConnectionField> field_deny;

  bool can_read_fields() const { return read_fields || write_fields; }
  bool field_denied(ConnectionField f) const {
    return std::find(field_deny.begin(), field_deny.end(), f) != field_deny.end();
  }

  static PermissionSet all() {
    PermissionSet p;
    p.read_fields = p.write_fields = p.registration = p.bytes_api = true;
    p.file_api = p.timer_api = p.control_api = true;
    return p;
  }
  static PermissionSet none() { return {}; }
  // The usual grant for untrusted extension plugins: everything except
  // host-state writes and the filesystem.
  static PermissionSet standard() {
    PermissionSet p;
    p.read_fields = p.registration = p.bytes_api = p.timer_api = p.control_api = true;
    return p;
  }
};

}  // namespace quicplug::engine

#endif
