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
#ifndef QUICPLUG_COMMON_CODEC_HPP
#define QUICPLUG_COMMON_CODEC_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "quicplug/common/plugin_val.hpp"

// Boundary serialization: the bit-exact octet format a PluginVal takes when
// crossing between a host and a plugin, identical on every compliant host.
// Layout (documented octet-by-octet in docs/wire-format.md): one tag octet,
// then the variant payload; fixed-width integers little-endian, u62 values
// and sequence lengths as RFC 9000 varints.
namespace quicplug::codec {

std::vector<std::uint8_t> encode_plugin_val(const PluginVal& v);
void encode_plugin_val(const PluginVal& v, std::vector<std::uint8_t>& out);

struct DecodedVal {
  PluginVal value;
  std::size_t consumed;
};

// Rejects unknown tags, truncation, out-of-bound lengths and over-deep
// extension-frame nesting. nullopt means the octets are not a PluginVal.
std::optional<DecodedVal> decode_plugin_val(std::span<const std::uint8_t> in);

// Frame boundary form without the PluginVal tag octet (used inside
// QuicFrame payloads and by hosts staging frames).
void encode_frame(const Frame& f, std::vector<std::uint8_t>& out);
std::optional<Frame> decode_frame(std::span<const std::uint8_t> in, std::size_t* consumed,
                                  int depth = 0);

}  // namespace quicplug::codec

#endif
