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
#ifndef QUICPLUG_COMMON_WIRE_HPP
#define QUICPLUG_COMMON_WIRE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "quicplug/common/frame.hpp"
#include "quicplug/common/plugin_val.hpp"
#include "quicplug/common/status.hpp"

// Peer-level wire contract shared by every host: packet headers, the
// cleartext pseudo-handshake, transport-parameter TLVs and the core frame
// images following the RFC 9000 layout. Extension frame images are owned
// by the defining plugin and are opaque here.
namespace quicplug::wire {

enum class PacketKind : std::uint8_t { kInitial = 0x01, kOneRtt = 0x02 };

inline constexpr std::size_t kInitialMinSize = 1200;

struct PacketHeader {
  PacketKind kind;
  std::uint64_t pkt_num;
};

void encode_packet_header(const PacketHeader& h, std::vector<std::uint8_t>& out);
std::optional<PacketHeader> decode_packet_header(std::span<const std::uint8_t> in,
                                                 std::size_t* consumed);

// Core frame images. Returns false for frames whose wire form is
// plugin-owned (extensions) or invalid.
bool encode_core_frame(const Frame& f, std::vector<std::uint8_t>& out);
std::size_t core_frame_wire_len(const Frame& f);

enum class ParseError { kTruncated, kMalformed, kNotCore };

// Parses one core frame from the front of `in`. A run of PADDING octets
// collapses into a single PaddingFrame. Stream types 0x08..0x0f all decode
// into StreamFrame (payload octets are consumed and returned via `data`).
struct ParsedFrame {
  Frame frame;
  std::size_t consumed;
  std::span<const std::uint8_t> stream_data;  // valid when frame is Stream
};
Expected<ParsedFrame, ParseError> parse_core_frame(std::span<const std::uint8_t> in);

// Transport parameter TLV: type (varint) || length (varint) || value.
void encode_tp(const TransportParameter& tp, std::vector<std::uint8_t>& out);
std::optional<TransportParameter> decode_tp(std::span<const std::uint8_t> in,
                                            std::size_t* consumed);

// Handshake message: count (varint) || TLVs. Trailing octets are padding.
void encode_handshake(std::span<const TransportParameter> tps,
                      std::vector<std::uint8_t>& out);
std::optional<std::vector<TransportParameter>> decode_handshake(
    std::span<const std::uint8_t> in);

}  // namespace quicplug::wire

#endif
