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
#include "quicplug/common/wire.hpp"

#include "quicplug/common/bytes.hpp"
#include "quicplug/common/varint.hpp"

namespace quicplug::wire {

void encode_packet_header(const PacketHeader& h, std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(h.kind));
  w.varint(h.pkt_num);
}

std::optional<PacketHeader> decode_packet_header(std::span<const std::uint8_t> in,
                                                 std::size_t* consumed) {
  ByteReader r(in);
  auto kind = r.u8();
  if (!kind) return std::nullopt;
  if (*kind != static_cast<std::uint8_t>(PacketKind::kInitial) &&
      *kind != static_cast<std::uint8_t>(PacketKind::kOneRtt))
    return std::nullopt;
  auto pn = r.varint();
  if (!pn) return std::nullopt;
  if (consumed) *consumed = r.consumed();
  return PacketHeader{static_cast<PacketKind>(*kind), *pn};
}

bool encode_core_frame(const Frame& f, std::vector<std::uint8_t>& out) {
  if (!f.valid()) return false;
  ByteWriter w(out);
  struct Visitor {
    ByteWriter& w;
    bool ok = true;
    void operator()(const PaddingFrame&) { w.u8(0x00); }
    void operator()(const PingFrame&) { w.u8(0x01); }
    void operator()(const AckFrame& a) {
      // type || largest || delay || range count || first len || (gap||len)*
      w.varint(frame_type::kAck);
      w.varint(a.largest_acked);
      w.varint(a.ack_delay_us);
      w.varint(a.ranges.size());
      for (std::size_t i = 0; i < a.ranges.size(); ++i) {
        if (i > 0) w.varint(a.ranges[i].gap);
        w.varint(a.ranges[i].len);
      }
    }
    void operator()(const MaxDataFrame& m) {
      w.varint(frame_type::kMaxData);
      w.varint(m.maximum);
    }
    void operator()(const StreamFrame& s) {
      // Always emitted in the explicit-offset, explicit-length form.
      std::uint64_t t = 0x08 | 0x04 | 0x02 | (s.fin ? 0x01 : 0);
      w.varint(t);
      w.varint(s.stream_id);
      w.varint(s.offset);
      w.varint(s.length);
      // Payload octets follow; the host appends them after this call.
    }
    void operator()(const PathChallengeFrame& p) {
      w.varint(frame_type::kPathChallenge);
      w.raw(p.data);
    }
    void operator()(const PathResponseFrame& p) {
      w.varint(frame_type::kPathResponse);
      w.raw(p.data);
    }
    void operator()(const ConnectionCloseFrame& c) {
      w.varint(frame_type::kConnectionClose);
      w.varint(c.error_code);
      w.varint(c.reason.size());
      w.raw(c.reason);
    }
    void operator()(const ExtensionFrame&) { ok = false; }
  };
  Visitor v{w};
  std::visit(v, f.variant());
  return v.ok;
}

std::size_t core_frame_wire_len(const Frame& f) {
  struct Visitor {
    std::size_t operator()(const PaddingFrame&) const { return 1; }
    std::size_t operator()(const PingFrame&) const { return 1; }
    std::size_t operator()(const AckFrame& a) const {
      std::size_t n = 1 + varint::encoded_len(a.largest_acked) +
                      varint::encoded_len(a.ack_delay_us) +
                      varint::encoded_len(a.ranges.size());
      for (std::size_t i = 0; i < a.ranges.size(); ++i) {
        if (i > 0) n += varint::encoded_len(a.ranges[i].gap);
        n += varint::encoded_len(a.ranges[i].len);
      }
      return n;
    }
    std::size_t operator()(const MaxDataFrame& m) const {
      return 1 + varint::encoded_len(m.maximum);
    }
    std::size_t operator()(const StreamFrame& s) const {
      return 1 + varint::encoded_len(s.stream_id) + varint::encoded_len(s.offset) +
             varint::encoded_len(s.length) + s.length;
    }
    std::size_t operator()(const PathChallengeFrame&) const { return 9; }
    std::size_t operator()(const PathResponseFrame&) const { return 9; }
    std::size_t operator()(const ConnectionCloseFrame& c) const {
      return 1 + varint::encoded_len(c.error_code) +
             varint::encoded_len(c.reason.size()) + c.reason.size();
    }
    std::size_t operator()(const ExtensionFrame&) const { return 0; }
  };
  return std::visit(Visitor{}, f.variant());
}

Expected<ParsedFrame, ParseError> parse_core_frame(std::span<const std::uint8_t> in) {
  ByteReader r(in);
  auto peek = r.peek_varint();
  if (!peek) return ParseError::kTruncated;
  std::uint64_t type = peek->first;
  if (!frame_type::is_core(type)) return ParseError::kNotCore;

  if (type == frame_type::kPadding) {
    std::size_t n = 0;
    auto rest = r.rest();
    while (n < rest.size() && rest[n] == 0x00) ++n;
    return ParsedFrame{Frame(PaddingFrame{}), n, {}};
  }

  r.skip(peek->second);
  switch (type) {
    case frame_type::kPing:
      return ParsedFrame{Frame(PingFrame{}), r.consumed(), {}};
    case frame_type::kAck: {
      AckFrame a;
      auto largest = r.varint();
      auto delay = r.varint();
      auto count = r.varint();
      if (!largest || !delay || !count) return ParseError::kTruncated;
      if (*count == 0 || *count > 1024) return ParseError::kMalformed;
      a.largest_acked = *largest;
      a.ack_delay_us = *delay;
      for (std::uint64_t i = 0; i < *count; ++i) {
        AckRange range;
        if (i > 0) {
          auto gap = r.varint();
          if (!gap) return ParseError::kTruncated;
          range.gap = *gap;
        }
        auto len = r.varint();
        if (!len) return ParseError::kTruncated;
        range.len = *len;
        a.ranges.push_back(range);
      }
      Frame f(a);
      if (!f.valid()) return ParseError::kMalformed;
      return ParsedFrame{std::move(f), r.consumed(), {}};
    }
    case frame_type::kMaxData: {
      auto m = r.varint();
      if (!m) return ParseError::kTruncated;
      return ParsedFrame{Frame(MaxDataFrame{*m}), r.consumed(), {}};
    }
    case frame_type::kPathChallenge:
    case frame_type::kPathResponse: {
      auto b = r.take(8);
      if (!b) return ParseError::kTruncated;
      if (type == frame_type::kPathChallenge) {
        PathChallengeFrame p;
        std::copy(b->begin(), b->end(), p.data.begin());
        return ParsedFrame{Frame(p), r.consumed(), {}};
      }
      PathResponseFrame p;
      std::copy(b->begin(), b->end(), p.data.begin());
      return ParsedFrame{Frame(p), r.consumed(), {}};
    }
    case frame_type::kConnectionClose: {
      ConnectionCloseFrame c;
      auto code = r.varint();
      auto len = r.varint();
      if (!code || !len) return ParseError::kTruncated;
      if (*len > kRawBufferMax) return ParseError::kMalformed;
      auto reason = r.take(*len);
      if (!reason) return ParseError::kTruncated;
      c.error_code = *code;
      c.reason.assign(reason->begin(), reason->end());
      return ParsedFrame{Frame(std::move(c)), r.consumed(), {}};
    }
    default:
      break;
  }

  if (type >= frame_type::kStream && type <= frame_type::kStreamMax) {
    StreamFrame s;
    s.fin = (type & 0x01) != 0;
    const bool has_off = (type & 0x04) != 0;
    const bool has_len = (type & 0x02) != 0;
    auto id = r.varint();
    if (!id) return ParseError::kTruncated;
    s.stream_id = *id;
    if (has_off) {
      auto off = r.varint();
      if (!off) return ParseError::kTruncated;
      s.offset = *off;
    }
    std::uint64_t len = r.remaining();
    if (has_len) {
      auto l = r.varint();
      if (!l) return ParseError::kTruncated;
      len = *l;
    }
    if (len > r.remaining()) return ParseError::kTruncated;
    auto data = r.take(len);
    s.length = len;
    return ParsedFrame{Frame(s), r.consumed(), *data};
  }

  return ParseError::kMalformed;  // unassigned value inside the core range
}

void encode_tp(const TransportParameter& tp, std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.varint(tp.param_type);
  w.varint(tp.value.size());
  w.raw(tp.value);
}

std::optional<TransportParameter> decode_tp(std::span<const std::uint8_t> in,
                                            std::size_t* consumed) {
  ByteReader r(in);
  auto type = r.varint();
  auto len = r.varint();
  if (!type || !len || *len > 256) return std::nullopt;
  auto val = r.take(*len);
  if (!val) return std::nullopt;
  if (consumed) *consumed = r.consumed();
  TransportParameter tp;
  tp.param_type = *type;
  tp.value.assign(val->begin(), val->end());
  return tp;
}

void encode_handshake(std::span<const TransportParameter> tps,
                      std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.varint(tps.size());
  for (const auto& tp : tps) encode_tp(tp, out);
}

std::optional<std::vector<TransportParameter>> decode_handshake(
    std::span<const std::uint8_t> in) {
  ByteReader r(in);
  auto count = r.varint();
  if (!count || *count > 256) return std::nullopt;
  std::vector<TransportParameter> tps;
  tps.reserve(*count);
  for (std::uint64_t i = 0; i < *count; ++i) {
    std::size_t used = 0;
    auto tp = decode_tp(r.rest(), &used);
    if (!tp) return std::nullopt;
    r.skip(used);
    tps.push_back(std::move(*tp));
  }
  return tps;
}

}  // namespace quicplug::wire
