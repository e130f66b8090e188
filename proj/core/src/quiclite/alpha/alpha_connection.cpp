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
#include "alpha_connection.hpp"

#include <algorithm>
#include <cstring>

#include "quicplug/common/bytes.hpp"
#include "quicplug/common/codec.hpp"
#include "quicplug/common/varint.hpp"

namespace quicplug::quiclite::alpha {

namespace {

constexpr std::uint64_t kTpIdleTimeout = 0x01;
constexpr std::uint64_t kTpMaxPacketSize = 0x03;
constexpr std::uint64_t kTpInitialMaxData = 0x04;
constexpr std::uint64_t kFrameEncodingError = 0x07;
constexpr std::uint64_t kMaxAckDelayCapUs = 25'000;
constexpr std::size_t kMaxAckRanges = 32;
constexpr int kMaxPacketsPerPoll = 64;
constexpr std::uint64_t kInitialPtoUs = 1'000'000;

std::vector<std::uint8_t> encode_tp_u64(std::uint64_t type, std::uint64_t value) {
  TransportParameter tp;
  tp.param_type = type;
  std::uint8_t tmp[8];
  std::size_t n = varint::encode(value, tmp);
  tp.value.assign(tmp, tmp + n);
  std::vector<std::uint8_t> out;
  wire::encode_tp(tp, out);
  return out;
}

std::optional<std::uint64_t> tp_value_u64(const TransportParameter& tp) {
  auto d = varint::decode(tp.value);
  if (!d || d->consumed != tp.value.size()) return std::nullopt;
  return d->value;
}

}  // namespace

AlphaConnection::AlphaConnection(const ConnConfig& cfg) : cfg_(cfg) {
  engine::EngineConfig ecfg;
  ecfg.now_us = cfg_.now_us;
  ecfg.sandbox_root = cfg_.sandbox_dir;
  ecfg.fuel_per_call = cfg_.fuel_per_call;
  ecfg.log_sink = cfg_.log_sink;
  engine_ = std::make_unique<engine::Engine>(*this, std::move(ecfg));

  cwnd_ = std::uint64_t{10} * cfg_.mtu;
  advertised_limit_ = cfg_.flow_window;
  idle_timeout_us_ = cfg_.idle_timeout_ms * 1000;
  last_activity_us_ = cfg_.now_us ? cfg_.now_us() : 0;
}

Expected<engine::PluginId, engine::LoadDenied> AlphaConnection::load_plugin(
    std::span<const std::uint8_t> bytecode, const engine::PermissionSet& perms,
    std::string name) {
  return engine_->load_plugin(bytecode, perms, std::move(name));
}

engine::RoutineResult AlphaConnection::plugin_control(std::string_view plugin,
                                                      std::uint64_t op,
                                                      std::span<const PluginVal> args) {
  return engine_->plugin_control(plugin, op, args);
}

std::uint8_t AlphaConnection::payload_byte(std::uint64_t i) const {
  return static_cast<std::uint8_t>((i + (i >> 8) + cfg_.seed) & 0xff);
}

// ---------------- transport parameters / handshake ----------------

std::vector<TransportParameter> AlphaConnection::build_tp_list() {
  std::vector<TransportParameter> tps;
  auto push_u64 = [&tps](std::uint64_t type, std::uint64_t value) {
    TransportParameter tp;
    tp.param_type = type;
    std::uint8_t tmp[8];
    std::size_t n = varint::encode(value, tmp);
    tp.value.assign(tmp, tmp + n);
    tps.push_back(std::move(tp));
  };
  push_u64(kTpIdleTimeout, cfg_.idle_timeout_ms);
  push_u64(kTpMaxPacketSize, cfg_.mtu);
  push_u64(kTpInitialMaxData, cfg_.flow_window);

  // Plugin-registered transport parameters are appended by the plugins
  // themselves through a write capability.
  for (const auto& [type, plugin] : engine_->registrations().tp_types) {
    const RoutineId rid = RoutineId::of(RoutineKind::kWriteTransportParameter, type);
    if (!engine_->provides(rid, Anchor::kDefine)) continue;
    std::array<std::uint8_t, 512> buf{};
    auto cap = engine_->stage_bytes(buf, 0, buf.size());
    std::array<PluginVal, 1> inputs{PluginVal(cap)};
    auto res = engine_->call_routine(rid, inputs);
    const std::uint64_t written = engine_->bytes_written(cap.tag);
    if (res.status != status::kOk || written == 0) continue;
    std::size_t used = 0;
    auto tp = wire::decode_tp(std::span(buf.data(), written), &used);
    if (!tp || used != written || tp->param_type != type) {
      if (auto owner = engine_->define_owner(rid)) engine_->poison_plugin(*owner);
      continue;
    }
    tps.push_back(std::move(*tp));
  }
  return tps;
}

std::vector<std::uint8_t> AlphaConnection::build_initial(std::uint64_t now) {
  std::vector<std::uint8_t> pkt;
  wire::encode_packet_header({wire::PacketKind::kInitial, initial_pn_++}, pkt);
  auto tps = build_tp_list();
  wire::encode_handshake(tps, pkt);
  if (pkt.size() < wire::kInitialMinSize) pkt.resize(wire::kInitialMinSize, 0);
  stats_.tx_packets++;
  stats_.tx_bytes += pkt.size();
  if (tx_cb_)
    tx_cb_({wire::PacketKind::kInitial, initial_pn_ - 1, pkt.size(), {}, false});
  last_activity_us_ = now;
  return pkt;
}

void AlphaConnection::handle_initial(std::span<const std::uint8_t> payload,
                                     std::uint64_t now) {
  auto tps = wire::decode_handshake(payload);
  if (!tps) {
    close_with(kFrameEncodingError, "bad handshake");
    return;
  }
  const auto regs = engine_->registrations();
  for (const auto& tp : *tps) {
    switch (tp.param_type) {
      case kTpIdleTimeout:
        peer_idle_ms_ = tp_value_u64(tp).value_or(0);
        break;
      case kTpMaxPacketSize:
        peer_mtu_ = tp_value_u64(tp).value_or(0);
        break;
      case kTpInitialMaxData:
        peer_max_data_ = tp_value_u64(tp).value_or(0);
        break;
      default: {
        bool registered = false;
        for (const auto& [type, plugin] : regs.tp_types)
          if (type == tp.param_type) registered = true;
        if (!registered) break;  // unknown TPs are ignored
        const RoutineId rid =
            RoutineId::of(RoutineKind::kDecodeTransportParameter, tp.param_type);
        if (engine_->provides(rid, Anchor::kDefine)) {
          std::array<PluginVal, 1> inputs{PluginVal(tp)};
          engine_->call_routine(rid, inputs);
        }
        break;
      }
    }
  }
  if (cfg_.role == Role::kServer) {
    hs_reply_due_ = true;
    handshake_done_ = true;
  } else {
    handshake_done_ = true;
  }
  stats_.handshake_done = handshake_done_;
  last_activity_us_ = now;
}

// ---------------- pipeline ----------------

AlphaConnection::StageOutcome AlphaConnection::stage(
    std::uint64_t t, Packet& pkt,
    const std::function<bool(std::size_t)>& native_should,
    const std::function<std::optional<Frame>()>& native_prepare,
    const std::function<std::size_t(const Frame&)>& native_len,
    const std::function<void(const Frame&, std::span<std::uint8_t>)>& native_write,
    const std::function<void(const Frame&, std::uint64_t)>& native_reserved) {
  StageOutcome out;
  const std::size_t remaining = cfg_.mtu - pkt.buf.size();
  if (remaining == 0) return out;

  // ShouldSendFrame
  const RoutineId sid = RoutineId::of(RoutineKind::kShouldSendFrame, t);
  bool should = false;
  if (engine_->provides(sid, Anchor::kDefine)) {
    auto r = engine_->call_routine(sid, {});
    should = r.status == status::kOk && !r.outputs.empty() &&
             r.outputs[0].as_bool().value_or(false);
  } else if (native_should) {
    engine_->observe(sid, Anchor::kBefore, {});
    should = native_should(remaining);
    engine_->observe(sid, Anchor::kAfter, {});
  }
  if (!should) return out;

  // PrepareFrame
  const RoutineId pid = RoutineId::of(RoutineKind::kPrepareFrame, t);
  std::optional<Frame> frame;
  if (engine_->provides(pid, Anchor::kDefine)) {
    auto r = engine_->call_routine(pid, {});
    if (r.status == status::kHaltSending) {
      out.halt = true;
      return out;
    }
    if (r.status != status::kOk || r.outputs.empty()) return out;
    if (const Frame* f = r.outputs[0].get_if<Frame>()) frame = *f;
    if (!frame) return out;
  } else if (native_prepare) {
    engine_->observe(pid, Anchor::kBefore, {});
    frame = native_prepare();
    engine_->observe(pid, Anchor::kAfter, {});
    if (!frame) return out;
  } else {
    return out;
  }

  // FrameWireLen
  const RoutineId lid = RoutineId::of(RoutineKind::kFrameWireLen, t);
  std::size_t len = 0;
  {
    std::array<PluginVal, 2> inputs{PluginVal(*frame), PluginVal(UsizeVal{remaining})};
    if (engine_->provides(lid, Anchor::kDefine)) {
      auto r = engine_->call_routine(lid, inputs);
      if (r.status != status::kOk || r.outputs.empty()) return out;
      len = static_cast<std::size_t>(r.outputs[0].as_u64().value_or(0));
    } else if (native_len) {
      engine_->observe(lid, Anchor::kBefore, inputs);
      len = native_len(*frame);
      engine_->observe(lid, Anchor::kAfter, inputs);
    }
  }
  if (len == 0 || len > remaining) return out;

  // WriteFrame
  const RoutineId wid = RoutineId::of(RoutineKind::kWriteFrame, t);
  const std::size_t pos = pkt.buf.size();
  pkt.buf.resize(pos + len);
  std::span<std::uint8_t> seg(pkt.buf.data() + pos, len);
  if (engine_->provides(wid, Anchor::kDefine)) {
    auto cap = engine_->stage_bytes(seg, len, len);
    std::array<PluginVal, 2> inputs{PluginVal(*frame), PluginVal(cap)};
    auto r = engine_->call_routine(wid, inputs);
    const std::uint64_t written = engine_->bytes_written(cap.tag);
    if (r.status != status::kOk || written != len) {
      pkt.buf.resize(pos);
      if (auto owner = engine_->define_owner(wid)) engine_->poison_plugin(*owner);
      return out;
    }
  } else if (native_write) {
    std::array<PluginVal, 1> inputs{PluginVal(*frame)};
    engine_->observe(wid, Anchor::kBefore, inputs);
    native_write(*frame, seg);
    engine_->observe(wid, Anchor::kAfter, inputs);
    if (frame->type() == frame_type::kAck) stats_.acks_written++;
  } else {
    pkt.buf.resize(pos);
    return out;
  }

  const std::uint64_t ft = frame->type();
  pkt.frame_types.push_back(ft);
  if (ft != frame_type::kAck && ft != frame_type::kPadding) pkt.eliciting = true;

  // OnFrameReserved
  const RoutineId rid = RoutineId::of(RoutineKind::kOnFrameReserved, t);
  std::array<PluginVal, 2> inputs{PluginVal(*frame), PluginVal(pkt.pn)};
  if (engine_->provides(rid, Anchor::kDefine)) {
    engine_->call_routine(rid, inputs);
  } else {
    engine_->observe(rid, Anchor::kBefore, inputs);
    if (native_reserved) native_reserved(*frame, pkt.pn);
    engine_->observe(rid, Anchor::kAfter, inputs);
  }

  // Frames a plugin may want NotifyFrame for: anything that is not pure
  // core bookkeeping handled natively.
  if (!frame_type::is_core(ft) || ft == frame_type::kPathChallenge)
    pkt.meta.notify_frames.push_back(*frame);

  out.wrote = true;
  return out;
}

AckFrame AlphaConnection::build_ack(std::uint64_t now, std::size_t remaining) const {
  AckFrame ack;
  ack.largest_acked = largest_rx_pn_;
  ack.ack_delay_us = now >= largest_rx_time_ ? now - largest_rx_time_ : 0;
  // rx_pn_ranges_ is kept merged and sorted ascending; emit descending.
  std::uint64_t prev_lo = 0;
  bool first = true;
  for (auto it = rx_pn_ranges_.rbegin();
       it != rx_pn_ranges_.rend() && ack.ranges.size() < kMaxAckRanges; ++it) {
    AckRange r;
    if (first) {
      r.gap = 0;
      first = false;
    } else {
      r.gap = prev_lo - it->second - 1;
    }
    r.len = it->second - it->first + 1;
    prev_lo = it->first;
    ack.ranges.push_back(r);
  }
  // Trim until the frame fits the remaining space.
  while (ack.ranges.size() > 1 &&
         wire::core_frame_wire_len(Frame(ack)) > remaining)
    ack.ranges.pop_back();
  return ack;
}

bool AlphaConnection::assemble_one(std::uint64_t now, Packet& pkt) {
  pkt.pn = next_pn_;
  wire::encode_packet_header({wire::PacketKind::kOneRtt, pkt.pn}, pkt.buf);
  const std::size_t header_len = pkt.buf.size();
  const bool cwnd_open = bytes_in_flight_ < cwnd_;

  auto native_len = [](const Frame& f) { return wire::core_frame_wire_len(f); };
  auto native_write = [](const Frame& f, std::span<std::uint8_t> seg) {
    std::vector<std::uint8_t> tmp;
    wire::encode_core_frame(f, tmp);
    std::memcpy(seg.data(), tmp.data(), tmp.size());
  };

  // 1. ACK
  {
    auto outcome = stage(
        frame_type::kAck, pkt,
        [&](std::size_t remaining) {
          return ack_pending_ && any_rx_ &&
                 wire::core_frame_wire_len(Frame(build_ack(now, remaining))) <=
                     remaining;
        },
        [&]() -> std::optional<Frame> {
          return Frame(build_ack(now, cfg_.mtu - pkt.buf.size()));
        },
        native_len, native_write,
        [&](const Frame&, std::uint64_t) { ack_pending_ = false; });
    if (outcome.halt) return false;
  }

  // 2. CONNECTION_CLOSE
  {
    auto outcome = stage(
        frame_type::kConnectionClose, pkt,
        [&](std::size_t) { return stats_.recv_complete && !close_sent_; },
        [&]() -> std::optional<Frame> {
          ConnectionCloseFrame f;
          f.error_code = 0;
          f.reason = {'d', 'o', 'n', 'e'};
          return Frame(std::move(f));
        },
        native_len, native_write,
        [&](const Frame&, std::uint64_t) {
          close_sent_ = true;
          stats_.closed = true;
        });
    if (outcome.halt) return false;
  }

  // 3. PATH_RESPONSE (all queued)
  while (!path_response_queue_.empty()) {
    auto outcome = stage(
        frame_type::kPathResponse, pkt, [&](std::size_t) { return true; },
        [&]() -> std::optional<Frame> {
          PathResponseFrame f;
          f.data = path_response_queue_.front();
          return Frame(f);
        },
        native_len, native_write,
        [&](const Frame&, std::uint64_t) { path_response_queue_.pop_front(); });
    if (outcome.halt) return false;
    if (!outcome.wrote) break;
  }

  // 4. PATH_CHALLENGE (plugin-driven; native never sends)
  if (cwnd_open) {
    auto outcome = stage(frame_type::kPathChallenge, pkt, nullptr, nullptr, native_len,
                         native_write, nullptr);
    if (outcome.halt) return false;
  }

  // 5. MAX_DATA
  {
    auto outcome = stage(
        frame_type::kMaxData, pkt,
        [&](std::size_t) {
          return handshake_done_ &&
                 advertised_limit_ - rx_data_ < cfg_.flow_window / 2;
        },
        [&]() -> std::optional<Frame> {
          return Frame(MaxDataFrame{rx_data_ + cfg_.flow_window});
        },
        native_len, native_write,
        [&](const Frame& f, std::uint64_t) {
          advertised_limit_ = f.get_if<MaxDataFrame>()->maximum;
        });
    if (outcome.halt) return false;
  }

  // 6. plugin frame registrations
  if (cwnd_open) {
    for (const auto& [type, plugin] : engine_->registrations().frame_types) {
      auto outcome = stage(type, pkt, nullptr, nullptr, nullptr, nullptr, nullptr);
      if (outcome.halt) return false;
    }
  }

  // 7. STREAM
  if (cwnd_open) {
    std::uint64_t off = 0, want = 0;
    bool from_retx = false;
    auto outcome = stage(
        frame_type::kStream, pkt,
        [&](std::size_t remaining) {
          if (remaining < 5) return false;
          if (!retx_queue_.empty()) {
            from_retx = true;
            off = retx_queue_.front().first;
            want = retx_queue_.front().second;
            return true;
          }
          if (send_cursor_ < cfg_.send_size && tx_data_ < peer_max_data_) {
            off = send_cursor_;
            want = std::min(cfg_.send_size - send_cursor_,
                            peer_max_data_ - tx_data_);
            return true;
          }
          return false;
        },
        [&]() -> std::optional<Frame> {
          const std::size_t remaining = cfg_.mtu - pkt.buf.size();
          // Header: type(1) + id(1) + offset(<=8) + length(<=2).
          std::size_t overhead = 2 + varint::encoded_len(off) + 2;
          if (remaining <= overhead) return std::nullopt;
          std::uint64_t len = std::min<std::uint64_t>(want, remaining - overhead);
          if (len < 64 && overhead > 4) {
            overhead -= 1;  // 1-octet length form
            len = std::min<std::uint64_t>(want, remaining - overhead);
          }
          if (len == 0) return std::nullopt;
          StreamFrame s;
          s.stream_id = 0;
          s.offset = off;
          s.length = len;
          s.fin = (off + len == cfg_.send_size);
          return Frame(s);
        },
        [&](const Frame& f) {
          const auto* s = f.get_if<StreamFrame>();
          return wire::core_frame_wire_len(f) > s->length
                     ? wire::core_frame_wire_len(f)
                     : 0;
        },
        [&](const Frame& f, std::span<std::uint8_t> seg) {
          const auto* s = f.get_if<StreamFrame>();
          std::vector<std::uint8_t> hdr;
          wire::encode_core_frame(f, hdr);
          std::memcpy(seg.data(), hdr.data(), hdr.size());
          for (std::uint64_t i = 0; i < s->length; ++i)
            seg[hdr.size() + i] = payload_byte(s->offset + i);
        },
        [&](const Frame& f, std::uint64_t) {
          const auto* s = f.get_if<StreamFrame>();
          pkt.meta.stream_ranges.emplace_back(s->offset, s->length);
          pkt.meta.fin |= s->fin;
          if (from_retx) {
            auto& front = retx_queue_.front();
            if (s->length >= front.second) {
              retx_queue_.pop_front();
            } else {
              front.first += s->length;
              front.second -= s->length;
            }
            pkt.retransmission = true;
            stats_.retx_packets++;
          } else {
            send_cursor_ = s->offset + s->length;
            tx_data_ += s->length;
            unacked_tx_[s->offset] = s->length;
            if (s->fin) fin_sent_ = true;
          }
        });
    if (outcome.halt) return false;
  }

  // 8. PADDING (plugin-defined shaping; native leaves OneRtt unpadded)
  {
    auto outcome = stage(frame_type::kPadding, pkt, nullptr, nullptr, nullptr,
                         nullptr, nullptr);
    if (outcome.halt) return false;
  }

  return pkt.buf.size() > header_len;
}

std::vector<std::vector<std::uint8_t>> AlphaConnection::poll(std::uint64_t now) {
  std::vector<std::vector<std::uint8_t>> out;
  if (stats_.closed && close_sent_) return out;

  if (cfg_.role == Role::kClient && !initial_sent_) {
    out.push_back(build_initial(now));
    initial_sent_ = true;
    hs_deadline_us_ = now + kInitialPtoUs;
    return out;
  }
  if (hs_reply_due_) {
    out.push_back(build_initial(now));
    hs_reply_due_ = false;
  }
  if (!handshake_done_) return out;

  for (int i = 0; i < kMaxPacketsPerPoll; ++i) {
    if (close_sent_) break;
    Packet pkt;
    if (!assemble_one(now, pkt)) break;

    pkt.meta.pn = pkt.pn;
    pkt.meta.sent_us = now;
    pkt.meta.size = static_cast<std::uint32_t>(pkt.buf.size());
    next_pn_++;
    if (pkt.eliciting) {
      bytes_in_flight_ += pkt.buf.size();
      sent_.emplace(pkt.pn, std::move(pkt.meta));
    }
    stats_.tx_packets++;
    stats_.tx_bytes += pkt.buf.size();
    last_activity_us_ = now;
    if (tx_cb_)
      tx_cb_({wire::PacketKind::kOneRtt, pkt.pn, pkt.buf.size(), pkt.frame_types,
              pkt.retransmission});
    out.push_back(std::move(pkt.buf));
  }
  return out;
}

// ---------------- receive ----------------

void AlphaConnection::record_rx_pn(std::uint64_t pn) {
  // merged ascending interval list
  for (std::size_t i = 0; i <= rx_pn_ranges_.size(); ++i) {
    if (i == rx_pn_ranges_.size()) {
      rx_pn_ranges_.push_back({pn, pn});
      break;
    }
    auto& [lo, hi] = rx_pn_ranges_[i];
    if (pn + 1 < lo) {
      rx_pn_ranges_.insert(rx_pn_ranges_.begin() + static_cast<long>(i), {pn, pn});
      break;
    }
    if (pn >= lo && pn <= hi) return;
    if (pn + 1 == lo) {
      lo = pn;
      break;
    }
    if (pn == hi + 1) {
      hi = pn;
      if (i + 1 < rx_pn_ranges_.size() && rx_pn_ranges_[i + 1].first == pn + 1) {
        rx_pn_ranges_[i].second = rx_pn_ranges_[i + 1].second;
        rx_pn_ranges_.erase(rx_pn_ranges_.begin() + static_cast<long>(i) + 1);
      }
      break;
    }
  }
  if (rx_pn_ranges_.size() > 64)
    rx_pn_ranges_.erase(rx_pn_ranges_.begin());
}

void AlphaConnection::on_datagram(std::span<const std::uint8_t> data,
                                  std::uint64_t now) {
  if (stats_.closed) return;
  std::size_t used = 0;
  auto hdr = wire::decode_packet_header(data, &used);
  if (!hdr) return;
  stats_.rx_packets++;
  stats_.rx_bytes += data.size();
  last_activity_us_ = now;

  if (hdr->kind == wire::PacketKind::kInitial) {
    handle_initial(data.subspan(used), now);
    return;
  }
  if (!handshake_done_) return;

  const bool duplicate = [&] {
    for (const auto& [lo, hi] : rx_pn_ranges_)
      if (hdr->pkt_num >= lo && hdr->pkt_num <= hi) return true;
    return false;
  }();
  if (duplicate) return;

  process_frames(data.subspan(used), now);
  if (stats_.closed) return;

  record_rx_pn(hdr->pkt_num);
  if (hdr->pkt_num >= largest_rx_pn_ || !any_rx_) {
    largest_rx_pn_ = hdr->pkt_num;
    largest_rx_time_ = now;
  }
  any_rx_ = true;
}

void AlphaConnection::process_frames(std::span<const std::uint8_t> payload,
                                     std::uint64_t now) {
  ByteReader r(payload);
  const auto regs = engine_->registrations();
  bool eliciting = false;

  while (!r.empty()) {
    auto peek = r.peek_varint();
    if (!peek) {
      close_with(kFrameEncodingError, "truncated frame type");
      return;
    }
    std::uint64_t t = peek->first;
    if (t >= frame_type::kStream && t <= frame_type::kStreamMax)
      t = frame_type::kStream;

    Frame frame;
    std::span<const std::uint8_t> stream_data;
    const RoutineId parse_id = RoutineId::of(RoutineKind::kParseFrame, t);
    if (engine_->provides(parse_id, Anchor::kDefine)) {
      auto cap = engine_->stage_bytes_readonly(r.rest());
      std::array<PluginVal, 1> inputs{PluginVal(cap)};
      auto res = engine_->call_routine(parse_id, inputs);
      if (res.status != status::kOk || res.outputs.size() < 2) {
        close_with(kFrameEncodingError, "plugin parse failed");
        return;
      }
      const Frame* f = res.outputs[0].get_if<Frame>();
      auto consumed = res.outputs[1].as_u64();
      if (!f || !consumed || *consumed == 0 || *consumed > r.remaining()) {
        close_with(kFrameEncodingError, "plugin parse bounds");
        return;
      }
      frame = *f;
      r.skip(static_cast<std::size_t>(*consumed));
    } else if (frame_type::is_core(t)) {
      engine_->observe(parse_id, Anchor::kBefore, {});
      auto parsed = wire::parse_core_frame(r.rest());
      if (!parsed.ok()) {
        close_with(kFrameEncodingError, "malformed frame");
        return;
      }
      frame = std::move(parsed->frame);
      stream_data = parsed->stream_data;
      r.skip(parsed->consumed);
      engine_->observe(parse_id, Anchor::kAfter, {});
    } else {
      bool registered = false;
      for (const auto& [type, plugin] : regs.frame_types)
        if (type == t) registered = true;
      close_with(kFrameEncodingError,
                 registered ? "registered type without parser" : "unknown frame type");
      return;
    }

    stats_.frames_received++;
    const std::uint64_t ft = frame.type();
    if (ft != frame_type::kAck && ft != frame_type::kPadding) eliciting = true;

    const RoutineId proc_id = RoutineId::of(RoutineKind::kProcessFrame, ft);
    if (engine_->provides(proc_id, Anchor::kDefine)) {
      std::array<PluginVal, 1> inputs{PluginVal(frame)};
      engine_->call_routine(proc_id, inputs);
    } else {
      std::array<PluginVal, 1> inputs{PluginVal(frame)};
      engine_->observe(proc_id, Anchor::kBefore, inputs);
      native_process(frame, stream_data, now);
      engine_->observe(proc_id, Anchor::kAfter, inputs);
    }
    if (stats_.closed) return;
  }
  if (eliciting) ack_pending_ = true;
}

void AlphaConnection::native_process(const Frame& f,
                                     std::span<const std::uint8_t> stream_data,
                                     std::uint64_t now) {
  switch (f.type()) {
    case frame_type::kAck:
      stats_.acks_processed++;
      process_ack(*f.get_if<AckFrame>(), now);
      break;
    case frame_type::kMaxData: {
      const auto m = f.get_if<MaxDataFrame>()->maximum;
      if (m > peer_max_data_) peer_max_data_ = m;
      break;
    }
    case frame_type::kStream: {
      const auto* s = f.get_if<StreamFrame>();
      for (std::uint64_t i = 0; i < s->length && i < stream_data.size(); ++i)
        if (stream_data[i] != payload_byte(s->offset + i)) stats_.payload_errors++;
      auto it = rx_ranges_.emplace(s->offset, s->length).first;
      if (it->second < s->length) it->second = s->length;
      // merge
      auto cur = rx_ranges_.begin();
      while (cur != rx_ranges_.end()) {
        auto next = std::next(cur);
        if (next != rx_ranges_.end() && next->first <= cur->first + cur->second) {
          const std::uint64_t end =
              std::max(cur->first + cur->second, next->first + next->second);
          cur->second = end - cur->first;
          rx_ranges_.erase(next);
        } else {
          ++cur;
        }
      }
      if (!rx_ranges_.empty() && rx_ranges_.begin()->first == 0)
        rx_contiguous_ = rx_ranges_.begin()->second;
      const std::uint64_t high = s->offset + s->length;
      if (high > rx_data_) {
        stats_.stream_bytes_received += high - rx_data_;
        rx_data_ = high;
      }
      if (s->fin) fin_offset_ = s->offset + s->length;
      if (fin_offset_ && rx_contiguous_ >= *fin_offset_ && !stats_.recv_complete) {
        stats_.recv_complete = true;
        stats_.recv_complete_at_us = now;
      }
      break;
    }
    case frame_type::kPathChallenge:
      path_response_queue_.push_back(f.get_if<PathChallengeFrame>()->data);
      break;
    case frame_type::kPathResponse:
      break;  // no native challenges outstanding
    case frame_type::kConnectionClose:
      stats_.closed = true;
      stats_.close_code = f.get_if<ConnectionCloseFrame>()->error_code;
      break;
    default:
      break;  // PADDING, PING, extension frames with plugin processing
  }
}

void AlphaConnection::process_ack(const AckFrame& ack, std::uint64_t now) {
  if (!Frame(ack).valid()) {
    close_with(kFrameEncodingError, "bad ack");
    return;
  }
  std::uint64_t acked_bytes = 0;
  bool progressed = false;

  std::uint64_t hi = ack.largest_acked;
  for (std::size_t i = 0; i < ack.ranges.size(); ++i) {
    if (i > 0) {
      const std::uint64_t gap = ack.ranges[i].gap;
      if (hi < gap + 1) break;
      hi = hi - gap - 1;
    }
    const std::uint64_t len = ack.ranges[i].len;
    if (hi + 1 < len) break;
    const std::uint64_t lo = hi - (len - 1);
    for (auto it = sent_.lower_bound(lo); it != sent_.end() && it->first <= hi;) {
      SentPacket& p = it->second;
      progressed = true;
      acked_bytes += p.size;
      bytes_in_flight_ -= std::min<std::uint64_t>(bytes_in_flight_, p.size);
      if (p.pn == ack.largest_acked)
        rtt_sample(now >= p.sent_us ? now - p.sent_us : 0, ack.ack_delay_us);
      for (const auto& [off, len2] : p.stream_ranges) {
        unacked_tx_.erase(off);
        if (off + len2 > send_acked_high_) send_acked_high_ = off + len2;
      }
      if (p.fin) fin_acked_ = true;
      notify_frames(p, 0);
      it = sent_.erase(it);
    }
    if (lo == 0) break;
    hi = lo - 1;
  }

  if (ack.largest_acked > largest_acked_ || !any_acked_) {
    largest_acked_ = std::max(largest_acked_, ack.largest_acked);
    any_acked_ = true;
  }
  if (progressed) {
    pto_count_ = 0;
    cc_on_ack(acked_bytes);
  }
  if (fin_sent_ && fin_acked_ && unacked_tx_.empty() && retx_queue_.empty())
    stats_.send_complete = true;

  detect_losses(now, largest_acked_);
}

void AlphaConnection::detect_losses(std::uint64_t now, std::uint64_t largest_acked) {
  if (!any_acked_) return;
  const std::uint64_t base = std::max(srtt_, latest_rtt_);
  const std::uint64_t loss_delay = base + base / 8;
  std::vector<std::uint64_t> lost;
  for (auto& [pn, p] : sent_) {
    if (pn >= largest_acked) break;
    const bool pkt_thresh = largest_acked >= pn + 3;
    const bool time_thresh = rtt_valid_ && p.sent_us + loss_delay <= now;
    if (pkt_thresh || time_thresh) lost.push_back(pn);
  }
  for (std::uint64_t pn : lost) {
    auto it = sent_.find(pn);
    if (it == sent_.end()) continue;
    SentPacket p = std::move(it->second);
    sent_.erase(it);
    bytes_in_flight_ -= std::min<std::uint64_t>(bytes_in_flight_, p.size);
    loss_count_++;
    on_packet_lost(p);
    cc_on_loss(pn);
  }
}

void AlphaConnection::on_packet_lost(SentPacket& p) {
  for (const auto& [off, len] : p.stream_ranges) {
    unacked_tx_.erase(off);
    queue_stream_retx(off, len, p.fin);
  }
  notify_frames(p, 1);
}

void AlphaConnection::queue_stream_retx(std::uint64_t off, std::uint64_t len, bool) {
  if (off + len <= send_acked_high_) return;
  retx_queue_.emplace_back(off, len);
}

void AlphaConnection::notify_frames(const SentPacket& p, std::uint64_t kind) {
  for (const Frame& f : p.notify_frames) {
    const RoutineId rid = RoutineId::of(RoutineKind::kNotifyFrame, f.type());
    std::array<PluginVal, 3> inputs{PluginVal(kind), PluginVal(f), PluginVal(p.pn)};
    if (engine_->provides(rid, Anchor::kDefine))
      engine_->call_routine(rid, inputs);
    else
      engine_->observe(rid, Anchor::kAfter, inputs);
  }
}

void AlphaConnection::cc_on_ack(std::uint64_t acked_bytes) {
  if (cwnd_ < ssthresh_) {
    cwnd_ += acked_bytes;  // slow start
  } else {
    cwnd_ += std::max<std::uint64_t>(1, cfg_.mtu * acked_bytes / cwnd_);
  }
  pacing_rate_ = cwnd_ * 1'000'000 / std::max<std::uint64_t>(srtt_, 1);
}

void AlphaConnection::cc_on_loss(std::uint64_t pn) {
  if (pn < recovery_start_pn_) return;  // one reduction per episode
  recovery_start_pn_ = next_pn_;
  ssthresh_ = std::max<std::uint64_t>(cwnd_ / 2, std::uint64_t{2} * cfg_.mtu);
  cwnd_ = ssthresh_;
}

void AlphaConnection::rtt_sample(std::uint64_t sample_us, std::uint64_t ack_delay_us) {
  const std::uint64_t delay = std::min(ack_delay_us, kMaxAckDelayCapUs);
  std::uint64_t adj = sample_us > delay ? sample_us - delay : sample_us;
  if (adj == 0) adj = 1;
  latest_rtt_ = adj;
  if (!rtt_valid_) {
    srtt_ = adj;
    rttvar_ = adj / 2;
    min_rtt_ = adj;
    rtt_valid_ = true;
  } else {
    min_rtt_ = std::min(min_rtt_, adj);
    const std::uint64_t diff = srtt_ > adj ? srtt_ - adj : adj - srtt_;
    rttvar_ = (3 * rttvar_ + diff) / 4;
    srtt_ = (7 * srtt_ + adj) / 8;
  }
}

// ---------------- timers ----------------

std::uint64_t AlphaConnection::pto_interval() const {
  if (!rtt_valid_) return kInitialPtoUs;
  return srtt_ + std::max<std::uint64_t>(4 * rttvar_, 1000);
}

std::optional<std::uint64_t> AlphaConnection::next_timeout_us() const {
  std::optional<std::uint64_t> best;
  auto consider = [&best](std::optional<std::uint64_t> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  if (cfg_.role == Role::kClient && initial_sent_ && !handshake_done_)
    consider(hs_deadline_us_);
  if (!sent_.empty()) {
    // PTO from the oldest outstanding ack-eliciting packet.
    const std::uint64_t oldest = sent_.begin()->second.sent_us;
    consider(oldest + (pto_interval() << pto_count_));
    if (rtt_valid_ && any_acked_) {
      const std::uint64_t base = std::max(srtt_, latest_rtt_);
      for (const auto& [pn, p] : sent_) {
        if (pn >= largest_acked_) break;
        consider(p.sent_us + base + base / 8);
        break;  // earliest is enough
      }
    }
  }
  consider(engine_->next_deadline_us());
  if (!stats_.closed && last_activity_us_ > 0)
    consider(last_activity_us_ + idle_timeout_us_);
  return best;
}

void AlphaConnection::on_timer(std::uint64_t now) {
  if (stats_.closed && close_sent_) return;

  if (cfg_.role == Role::kClient && initial_sent_ && !handshake_done_ &&
      now >= hs_deadline_us_) {
    initial_sent_ = false;  // poll() re-sends the Initial
    hs_backoff_ *= 2;
    hs_deadline_us_ = now + kInitialPtoUs * hs_backoff_;
  }

  detect_losses(now, largest_acked_);

  if (!sent_.empty()) {
    const std::uint64_t oldest = sent_.begin()->second.sent_us;
    if (now >= oldest + (pto_interval() << pto_count_)) {
      // Probe: re-queue the oldest outstanding stream range (or rely on a
      // later poll to send fresh data); cwnd is left untouched.
      pto_count_ = std::min<std::uint32_t>(pto_count_ + 1, 10);
      const SentPacket& p = sent_.begin()->second;
      if (!p.stream_ranges.empty()) {
        for (const auto& [off, len] : p.stream_ranges)
          queue_stream_retx(off, len, p.fin);
      }
    }
  }

  engine_->fire_due_timers(now);

  if (idle_timeout_us_ > 0 && now >= last_activity_us_ + idle_timeout_us_ &&
      !stats_.closed) {
    stats_.closed = true;
    close_sent_ = true;  // silent idle close
  }
}

void AlphaConnection::close_with(std::uint64_t code, std::string_view) {
  stats_.closed = true;
  stats_.close_code = code;
  close_sent_ = true;
}

std::string AlphaConnection::log_frame(const Frame& f) {
  const RoutineId rid = RoutineId::of(RoutineKind::kLogFrame, f.type());
  if (engine_->provides(rid, Anchor::kDefine)) {
    std::array<PluginVal, 1> inputs{PluginVal(f)};
    auto res = engine_->call_routine(rid, inputs);
    if (res.status == status::kOk && !res.outputs.empty()) {
      if (const auto* raw = res.outputs[0].get_if<RawBuffer>())
        return std::string(raw->data.begin(), raw->data.end());
    }
  }
  return describe_frame(f);
}

// ---------------- field registry ----------------

std::vector<ConnectionField> AlphaConnection::supported_fields() const {
  std::vector<ConnectionField> out;
  for (const auto& info : field_registry()) {
    if (cfg_.profile == HostProfile::kMinimal && info.group != FieldGroup::kConnection)
      continue;
    out.push_back(info.field);
  }
  return out;
}

std::optional<PluginVal> AlphaConnection::get_field(ConnectionField f) const {
  if (cfg_.profile == HostProfile::kMinimal &&
      field_info(f)->group != FieldGroup::kConnection)
    return std::nullopt;
  switch (f) {
    case ConnectionField::kIsServer:
      return PluginVal(cfg_.role == Role::kServer);
    case ConnectionField::kMaxTxData:
      return PluginVal(peer_max_data_);
    case ConnectionField::kTxData:
      return PluginVal(tx_data_);
    case ConnectionField::kMaxRxData:
      return PluginVal(advertised_limit_);
    case ConnectionField::kRxData:
      return PluginVal(rx_data_);
    case ConnectionField::kMtu:
      return PluginVal(UsizeVal{cfg_.mtu});
    case ConnectionField::kPeerAddr:
      return PluginVal(cfg_.peer_addr);
    case ConnectionField::kLocalAddr:
      return PluginVal(cfg_.local_addr);
    case ConnectionField::kIsEstablished:
      return PluginVal(handshake_done_);
    case ConnectionField::kIdleTimeout:
      return PluginVal(DurationUs{idle_timeout_us_});
    case ConnectionField::kNextPktNum:
      return PluginVal(next_pn_);
    case ConnectionField::kLargestRxPktNum:
      return PluginVal(largest_rx_pn_);
    case ConnectionField::kAckElicitingInFlight:
      return PluginVal(static_cast<std::uint64_t>(sent_.size()));
    case ConnectionField::kCwnd:
      return PluginVal(cwnd_);
    case ConnectionField::kSsthresh:
      return PluginVal(ssthresh_);
    case ConnectionField::kBytesInFlight:
      return PluginVal(bytes_in_flight_);
    case ConnectionField::kSmoothedRtt:
      return PluginVal(DurationUs{srtt_});
    case ConnectionField::kRttVar:
      return PluginVal(DurationUs{rttvar_});
    case ConnectionField::kMinRtt:
      return PluginVal(DurationUs{min_rtt_});
    case ConnectionField::kLatestRtt:
      return PluginVal(DurationUs{latest_rtt_});
    case ConnectionField::kLossCount:
      return PluginVal(loss_count_);
    case ConnectionField::kPacingRate:
      return PluginVal(pacing_rate_);
    case ConnectionField::kInSlowStart:
      return PluginVal(cwnd_ < ssthresh_);
  }
  return std::nullopt;
}

engine::SetFieldResult AlphaConnection::set_field(ConnectionField f,
                                                  const PluginVal& v) {
  auto info = field_info(f);
  if (!info) return engine::SetFieldResult::kUnsupported;
  if (cfg_.profile == HostProfile::kMinimal && info->group != FieldGroup::kConnection)
    return engine::SetFieldResult::kUnsupported;
  if (!info->writable) return engine::SetFieldResult::kReadOnly;
  if (v.tag() != info->value_tag) return engine::SetFieldResult::kBadType;
  const std::uint64_t u = v.as_u64().value_or(0);
  switch (f) {
    case ConnectionField::kMaxTxData:
      peer_max_data_ = u;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kMaxRxData:
      advertised_limit_ = u;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kIdleTimeout:
      idle_timeout_us_ = u;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kCwnd:
      cwnd_ = std::max<std::uint64_t>(u, std::uint64_t{2} * cfg_.mtu);
      return engine::SetFieldResult::kOk;
    case ConnectionField::kSsthresh:
      ssthresh_ = u;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kSmoothedRtt:
      srtt_ = u;
      rtt_valid_ = true;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kRttVar:
      rttvar_ = u;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kMinRtt:
      min_rtt_ = u;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kLatestRtt:
      latest_rtt_ = u;
      return engine::SetFieldResult::kOk;
    case ConnectionField::kPacingRate:
      pacing_rate_ = u;
      return engine::SetFieldResult::kOk;
    default:
      return engine::SetFieldResult::kReadOnly;
  }
}

}  // namespace quicplug::quiclite::alpha
