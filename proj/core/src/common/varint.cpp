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
#include "quicplug/common/varint.hpp"

#include "quicplug/common/bytes.hpp"

namespace quicplug::varint {

std::size_t encoded_len(std::uint64_t v) {
  if (v < (1u << 6)) return 1;
  if (v < (1u << 14)) return 2;
  if (v < (1u << 30)) return 4;
  if (v <= kMax) return 8;
  return 0;
}

std::size_t encode(std::uint64_t v, std::span<std::uint8_t> out) {
  const std::size_t len = encoded_len(v);
  if (len == 0 || out.size() < len) return 0;
  static constexpr std::uint8_t prefix[9] = {0, 0x00, 0x40, 0, 0x80, 0, 0, 0, 0xc0};
  for (std::size_t i = 0; i < len; ++i)
    out[i] = static_cast<std::uint8_t>(v >> (8 * (len - 1 - i)));
  // Shortest form leaves the two prefix bits of the first octet clear.
  out[0] = static_cast<std::uint8_t>(out[0] | prefix[len]);
  return len;
}

std::optional<Decoded> decode(std::span<const std::uint8_t> in) {
  if (in.empty()) return std::nullopt;
  const std::size_t len = std::size_t{1} << (in[0] >> 6);
  if (in.size() < len) return std::nullopt;
  std::uint64_t v = in[0] & 0x3f;
  for (std::size_t i = 1; i < len; ++i) v = (v << 8) | in[i];
  return Decoded{v, len};
}

}  // namespace quicplug::varint

namespace quicplug {

void ByteWriter::varint(std::uint64_t v) {
  std::uint8_t tmp[8];
  const std::size_t n = varint::encode(v, tmp);
  raw(std::span<const std::uint8_t>(tmp, n));
}

std::optional<std::uint64_t> ByteReader::varint() {
  auto d = varint::decode(rest());
  if (!d) return std::nullopt;
  pos_ += d->consumed;
  return d->value;
}

std::optional<std::pair<std::uint64_t, std::size_t>> ByteReader::peek_varint() const {
  auto d = varint::decode(data_.subspan(pos_));
  if (!d) return std::nullopt;
  return std::pair{d->value, d->consumed};
}

}  // namespace quicplug
