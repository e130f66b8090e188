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
#ifndef QUICPLUG_COMMON_BYTES_HPP
#define QUICPLUG_COMMON_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <vector>

namespace quicplug {

// Append-only octet builder used by every codec in the project.
// Fixed-width integers are little-endian; varints follow RFC 9000.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(&out) {}

  void u8(std::uint8_t v) { buf().push_back(v); }
  void u16le(std::uint16_t v) {
    buf().push_back(static_cast<std::uint8_t>(v));
    buf().push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf().push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf().push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(std::span<const std::uint8_t> bytes) {
    buf().insert(buf().end(), bytes.begin(), bytes.end());
  }
  // Shortest-form RFC 9000 variable-length integer; v must be < 2^62.
  void varint(std::uint64_t v);

  std::vector<std::uint8_t> take() { return std::move(own_); }
  const std::vector<std::uint8_t>& bytes() const { return out_ ? *out_ : own_; }
  std::size_t size() const { return bytes().size(); }

 private:
  std::vector<std::uint8_t>& buf() { return out_ ? *out_ : own_; }
  std::vector<std::uint8_t> own_;
  std::vector<std::uint8_t>* out_ = nullptr;
};

// Cursor over an octet span. Reads return nullopt on truncation and leave
// the cursor unspecified afterwards; callers bail out on the first miss.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t consumed() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool empty() const { return remaining() == 0; }
  std::span<const std::uint8_t> rest() const { return data_.subspan(pos_); }
  void skip(std::size_t n) { pos_ += n; }

  std::optional<std::uint8_t> u8() {
    if (remaining() < 1) return std::nullopt;
    return data_[pos_++];
  }
  std::optional<std::uint16_t> u16le() {
    auto b = take(2);
    if (!b) return std::nullopt;
    return static_cast<std::uint16_t>((*b)[0] | ((*b)[1] << 8));
  }
  std::optional<std::uint32_t> u32le() {
    auto b = take(4);
    if (!b) return std::nullopt;
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | (*b)[static_cast<std::size_t>(i)];
    return v;
  }
  std::optional<std::uint64_t> u64le() {
    auto b = take(8);
    if (!b) return std::nullopt;
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | (*b)[static_cast<std::size_t>(i)];
    return v;
  }
  std::optional<std::span<const std::uint8_t>> take(std::size_t n) {
    if (remaining() < n) return std::nullopt;
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::optional<std::uint64_t> varint();
  // Peeks a varint without advancing; also reports its encoded length.
  std::optional<std::pair<std::uint64_t, std::size_t>> peek_varint() const;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace quicplug

#endif
