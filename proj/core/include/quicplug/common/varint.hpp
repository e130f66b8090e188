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
#ifndef QUICPLUG_COMMON_VARINT_HPP
#define QUICPLUG_COMMON_VARINT_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace quicplug::varint {

// RFC 9000 variable-length integers: a 2-bit length prefix selects a
// 1/2/4/8 octet big-endian encoding, leaving 62 usable bits.
inline constexpr std::uint64_t kMax = (std::uint64_t{1} << 62) - 1;

// Octets of the shortest encoding of v, or 0 if v > kMax.
std::size_t encoded_len(std::uint64_t v);

// Writes the shortest form into out (which must have room for
// encoded_len(v) octets); returns the octet count, 0 if v > kMax.
std::size_t encode(std::uint64_t v, std::span<std::uint8_t> out);

struct Decoded {
  std::uint64_t value;
  std::size_t consumed;  // one of 1, 2, 4, 8
};

// Returns nullopt on truncated input. Non-shortest encodings decode fine;
// encode() itself only ever produces the shortest form.
std::optional<Decoded> decode(std::span<const std::uint8_t> in);

}  // namespace quicplug::varint

#endif
