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
#include "quicplug/common/frame.hpp"

#include <sstream>

#include "quicplug/common/plugin_val.hpp"
#include "quicplug/common/varint.hpp"

namespace quicplug {

ExtensionFrame::ExtensionFrame() = default;
ExtensionFrame::ExtensionFrame(std::uint64_t t) : frame_type(t) {}
ExtensionFrame::ExtensionFrame(std::uint64_t t, std::vector<PluginVal> p)
    : frame_type(t), payload(std::move(p)) {}
ExtensionFrame::ExtensionFrame(const ExtensionFrame&) = default;
ExtensionFrame::ExtensionFrame(ExtensionFrame&&) noexcept = default;
ExtensionFrame& ExtensionFrame::operator=(const ExtensionFrame&) = default;
ExtensionFrame& ExtensionFrame::operator=(ExtensionFrame&&) noexcept = default;
ExtensionFrame::~ExtensionFrame() = default;
bool ExtensionFrame::operator==(const ExtensionFrame& o) const {
  return frame_type == o.frame_type && payload == o.payload;
}

std::uint64_t Frame::type() const {
  struct Visitor {
    std::uint64_t operator()(const PaddingFrame&) const { return frame_type::kPadding; }
    std::uint64_t operator()(const PingFrame&) const { return frame_type::kPing; }
    std::uint64_t operator()(const AckFrame&) const { return frame_type::kAck; }
    std::uint64_t operator()(const MaxDataFrame&) const { return frame_type::kMaxData; }
    std::uint64_t operator()(const StreamFrame&) const { return frame_type::kStream; }
    std::uint64_t operator()(const PathChallengeFrame&) const {
      return frame_type::kPathChallenge;
    }
    std::uint64_t operator()(const PathResponseFrame&) const {
      return frame_type::kPathResponse;
    }
    std::uint64_t operator()(const ConnectionCloseFrame&) const {
      return frame_type::kConnectionClose;
    }
    std::uint64_t operator()(const ExtensionFrame& e) const { return e.frame_type; }
  };
  return std::visit(Visitor{}, v_);
}

bool Frame::valid() const {
  if (const auto* ack = get_if<AckFrame>()) {
    if (ack->ranges.empty()) return false;
    if (ack->ranges.front().gap != 0) return false;
    std::uint64_t lo = 0;
    bool first = true;
    for (const auto& r : ack->ranges) {
      if (r.len == 0) return false;
      if (first) {
        if (r.len - 1 > ack->largest_acked) return false;
        lo = ack->largest_acked - (r.len - 1);
        first = false;
        continue;
      }
      if (r.gap == 0) return false;
      // Next block sits r.gap unacked numbers below the previous low.
      if (lo < r.gap + r.len) return false;
      lo = lo - r.gap - r.len;
    }
    return true;
  }
  if (const auto* ext = get_if<ExtensionFrame>()) {
    return !frame_type::is_core(ext->frame_type) &&
           ext->frame_type <= varint::kMax && ext->payload.size() <= 8;
  }
  return true;
}

std::string describe_frame(const Frame& f) {
  std::ostringstream os;
  struct Visitor {
    std::ostringstream& os;
    void operator()(const PaddingFrame&) { os << "PADDING"; }
    void operator()(const PingFrame&) { os << "PING"; }
    void operator()(const AckFrame& a) {
      os << "ACK largest=" << a.largest_acked << " delay_us=" << a.ack_delay_us
         << " ranges=" << a.ranges.size();
    }
    void operator()(const MaxDataFrame& m) { os << "MAX_DATA max=" << m.maximum; }
    void operator()(const StreamFrame& s) {
      os << "STREAM id=" << s.stream_id << " off=" << s.offset << " len=" << s.length;
      if (s.fin) os << " fin";
    }
    void operator()(const PathChallengeFrame&) { os << "PATH_CHALLENGE"; }
    void operator()(const PathResponseFrame&) { os << "PATH_RESPONSE"; }
    void operator()(const ConnectionCloseFrame& c) {
      os << "CONNECTION_CLOSE code=" << c.error_code;
    }
    void operator()(const ExtensionFrame& e) {
      os << "FRAME type=0x" << std::hex << e.frame_type << " (opaque)";
    }
  };
  std::visit(Visitor{os}, f.variant());
  return os.str();
}

}  // namespace quicplug
