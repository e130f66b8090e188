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
#include "quicplug/common/codec.hpp"

#include "quicplug/common/bytes.hpp"
#include "quicplug/common/varint.hpp"

namespace quicplug::codec {

namespace {

constexpr int kMaxFrameNesting = 4;

// Frame boundary tags reuse the frame type value itself (varint), so the
// encoding is self-describing without a second tag space.

void encode_val(const PluginVal& v, std::vector<std::uint8_t>& out, int depth);

void encode_frame_inner(const Frame& f, std::vector<std::uint8_t>& out, int depth) {
  ByteWriter w(out);
  w.varint(f.type());
  struct Visitor {
    ByteWriter& w;
    std::vector<std::uint8_t>& out;
    int depth;
    void operator()(const PaddingFrame&) {}
    void operator()(const PingFrame&) {}
    void operator()(const AckFrame& a) {
      w.varint(a.largest_acked);
      w.varint(a.ack_delay_us);
      w.varint(a.ranges.size());
      for (const auto& r : a.ranges) {
        w.varint(r.gap);
        w.varint(r.len);
      }
    }
    void operator()(const MaxDataFrame& m) { w.varint(m.maximum); }
    void operator()(const StreamFrame& s) {
      w.varint(s.stream_id);
      w.varint(s.offset);
      w.varint(s.length);
      w.u8(s.fin ? 1 : 0);
    }
    void operator()(const PathChallengeFrame& p) { w.raw(p.data); }
    void operator()(const PathResponseFrame& p) { w.raw(p.data); }
    void operator()(const ConnectionCloseFrame& c) {
      w.varint(c.error_code);
      w.varint(c.reason.size());
      w.raw(c.reason);
    }
    void operator()(const ExtensionFrame& e) {
      w.u8(static_cast<std::uint8_t>(e.payload.size()));
      for (const auto& p : e.payload) encode_val(p, out, depth + 1);
    }
  };
  std::visit(Visitor{w, out, depth}, f.variant());
}

void encode_val(const PluginVal& v, std::vector<std::uint8_t>& out, int depth) {
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(v.tag()));
  switch (v.tag()) {
    case PluginVal::Tag::kBool:
      w.u8(*v.get_if<bool>() ? 1 : 0);
      break;
    case PluginVal::Tag::kI32:
      w.u32le(static_cast<std::uint32_t>(*v.get_if<std::int32_t>()));
      break;
    case PluginVal::Tag::kI64:
      w.u64le(static_cast<std::uint64_t>(*v.get_if<std::int64_t>()));
      break;
    case PluginVal::Tag::kU32:
      w.u32le(*v.get_if<std::uint32_t>());
      break;
    case PluginVal::Tag::kU64:
      w.u64le(*v.get_if<std::uint64_t>());
      break;
    case PluginVal::Tag::kUsize:
      w.u64le(v.get_if<UsizeVal>()->v);
      break;
    case PluginVal::Tag::kDuration:
      w.u64le(v.get_if<DurationUs>()->us);
      break;
    case PluginVal::Tag::kInstant:
      w.u64le(v.get_if<InstantUs>()->us);
      break;
    case PluginVal::Tag::kSocketAddr: {
      const auto& sa = *v.get_if<SocketAddr>();
      w.u8(sa.version);
      w.raw(std::span<const std::uint8_t>(sa.addr.data(), sa.version == 4 ? 4 : 16));
      w.u16le(sa.port);
      break;
    }
    case PluginVal::Tag::kQuicFrame:
      encode_frame_inner(*v.get_if<Frame>(), out, depth);
      break;
    case PluginVal::Tag::kTransportParam: {
      const auto& tp = *v.get_if<TransportParameter>();
      w.varint(tp.param_type);
      w.varint(tp.value.size());
      w.raw(tp.value);
      break;
    }
    case PluginVal::Tag::kBytes: {
      const auto& b = *v.get_if<BytesCapability>();
      w.u64le(b.tag);
      w.u64le(b.max_read_len);
      w.u64le(b.max_write_len);
      break;
    }
    case PluginVal::Tag::kRawBuffer: {
      const auto& rb = *v.get_if<RawBuffer>();
      w.varint(rb.data.size());
      w.raw(rb.data);
      break;
    }
  }
}

std::optional<PluginVal> decode_val(ByteReader& r, int depth);

std::optional<Frame> decode_frame_inner(ByteReader& r, int depth) {
  if (depth > kMaxFrameNesting) return std::nullopt;
  auto type = r.varint();
  if (!type) return std::nullopt;
  switch (*type) {
    case frame_type::kPadding:
      return Frame(PaddingFrame{});
    case frame_type::kPing:
      return Frame(PingFrame{});
    case frame_type::kAck: {
      AckFrame a;
      auto largest = r.varint();
      auto delay = r.varint();
      auto count = r.varint();
      if (!largest || !delay || !count || *count > 1024) return std::nullopt;
      a.largest_acked = *largest;
      a.ack_delay_us = *delay;
      for (std::uint64_t i = 0; i < *count; ++i) {
        auto gap = r.varint();
        auto len = r.varint();
        if (!gap || !len) return std::nullopt;
        a.ranges.push_back({*gap, *len});
      }
      Frame f(a);
      if (!f.valid()) return std::nullopt;
      return f;
    }
    case frame_type::kMaxData: {
      auto m = r.varint();
      if (!m) return std::nullopt;
      return Frame(MaxDataFrame{*m});
    }
    case frame_type::kStream: {
      StreamFrame s;
      auto id = r.varint();
      auto off = r.varint();
      auto len = r.varint();
      auto fin = r.u8();
      if (!id || !off || !len || !fin || *fin > 1) return std::nullopt;
      s.stream_id = *id;
      s.offset = *off;
      s.length = *len;
      s.fin = *fin == 1;
      return Frame(s);
    }
    case frame_type::kPathChallenge: {
      auto b = r.take(8);
      if (!b) return std::nullopt;
      PathChallengeFrame p;
      std::copy(b->begin(), b->end(), p.data.begin());
      return Frame(p);
    }
    case frame_type::kPathResponse: {
      auto b = r.take(8);
      if (!b) return std::nullopt;
      PathResponseFrame p;
      std::copy(b->begin(), b->end(), p.data.begin());
      return Frame(p);
    }
    case frame_type::kConnectionClose: {
      ConnectionCloseFrame c;
      auto code = r.varint();
      auto len = r.varint();
      if (!code || !len || *len > kRawBufferMax) return std::nullopt;
      auto reason = r.take(*len);
      if (!reason) return std::nullopt;
      c.error_code = *code;
      c.reason.assign(reason->begin(), reason->end());
      return Frame(c);
    }
    default: {
      if (frame_type::is_core(*type)) return std::nullopt;  // unassigned core value
      auto count = r.u8();
      if (!count || *count > 8) return std::nullopt;
      ExtensionFrame e(*type);
      for (std::uint8_t i = 0; i < *count; ++i) {
        auto v = decode_val(r, depth + 1);
        if (!v) return std::nullopt;
        e.payload.push_back(std::move(*v));
      }
      return Frame(std::move(e));
    }
  }
}

std::optional<PluginVal> decode_val(ByteReader& r, int depth) {
  if (depth > kMaxFrameNesting + 1) return std::nullopt;
  auto tag = r.u8();
  if (!tag) return std::nullopt;
  switch (static_cast<PluginVal::Tag>(*tag)) {
    case PluginVal::Tag::kBool: {
      auto b = r.u8();
      if (!b || *b > 1) return std::nullopt;
      return PluginVal(*b == 1);
    }
    case PluginVal::Tag::kI32: {
      auto v = r.u32le();
      if (!v) return std::nullopt;
      return PluginVal(static_cast<std::int32_t>(*v));
    }
    case PluginVal::Tag::kI64: {
      auto v = r.u64le();
      if (!v) return std::nullopt;
      return PluginVal(static_cast<std::int64_t>(*v));
    }
    case PluginVal::Tag::kU32: {
      auto v = r.u32le();
      if (!v) return std::nullopt;
      return PluginVal(*v);
    }
    case PluginVal::Tag::kU64: {
      auto v = r.u64le();
      if (!v) return std::nullopt;
      return PluginVal(*v);
    }
    case PluginVal::Tag::kUsize: {
      auto v = r.u64le();
      if (!v) return std::nullopt;
      return PluginVal(UsizeVal{*v});
    }
    case PluginVal::Tag::kDuration: {
      auto v = r.u64le();
      if (!v) return std::nullopt;
      return PluginVal(DurationUs{*v});
    }
    case PluginVal::Tag::kInstant: {
      auto v = r.u64le();
      if (!v) return std::nullopt;
      return PluginVal(InstantUs{*v});
    }
    case PluginVal::Tag::kSocketAddr: {
      auto ver = r.u8();
      if (!ver || (*ver != 4 && *ver != 6)) return std::nullopt;
      auto addr = r.take(*ver == 4 ? 4 : 16);
      auto port = r.u16le();
      if (!addr || !port) return std::nullopt;
      SocketAddr sa;
      sa.version = *ver;
      std::copy(addr->begin(), addr->end(), sa.addr.begin());
      sa.port = *port;
      return PluginVal(sa);
    }
    case PluginVal::Tag::kQuicFrame: {
      auto f = decode_frame_inner(r, depth);
      if (!f) return std::nullopt;
      return PluginVal(std::move(*f));
    }
    case PluginVal::Tag::kTransportParam: {
      auto type = r.varint();
      auto len = r.varint();
      if (!type || !len || *len > 256) return std::nullopt;
      auto val = r.take(*len);
      if (!val) return std::nullopt;
      TransportParameter tp;
      tp.param_type = *type;
      tp.value.assign(val->begin(), val->end());
      return PluginVal(std::move(tp));
    }
    case PluginVal::Tag::kBytes: {
      auto t = r.u64le();
      auto mr = r.u64le();
      auto mw = r.u64le();
      if (!t || !mr || !mw) return std::nullopt;
      return PluginVal(BytesCapability{*t, *mr, *mw});
    }
    case PluginVal::Tag::kRawBuffer: {
      auto len = r.varint();
      if (!len || *len > kRawBufferMax) return std::nullopt;
      auto data = r.take(*len);
      if (!data) return std::nullopt;
      RawBuffer rb;
      rb.data.assign(data->begin(), data->end());
      return PluginVal(std::move(rb));
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

std::vector<std::uint8_t> encode_plugin_val(const PluginVal& v) {
  std::vector<std::uint8_t> out;
  encode_val(v, out, 0);
  return out;
}

void encode_plugin_val(const PluginVal& v, std::vector<std::uint8_t>& out) {
  encode_val(v, out, 0);
}

std::optional<DecodedVal> decode_plugin_val(std::span<const std::uint8_t> in) {
  ByteReader r(in);
  auto v = decode_val(r, 0);
  if (!v) return std::nullopt;
  // Size invariant: no boundary value exceeds the raw-buffer cap plus framing.
  if (r.consumed() > kMaxEncodedPluginVal) return std::nullopt;
  return DecodedVal{std::move(*v), r.consumed()};
}

void encode_frame(const Frame& f, std::vector<std::uint8_t>& out) {
  encode_frame_inner(f, out, 0);
}

std::optional<Frame> decode_frame(std::span<const std::uint8_t> in, std::size_t* consumed,
                                  int depth) {
  ByteReader r(in);
  auto f = decode_frame_inner(r, depth);
  if (!f) return std::nullopt;
  if (consumed) *consumed = r.consumed();
  return f;
}

}  // namespace quicplug::codec
