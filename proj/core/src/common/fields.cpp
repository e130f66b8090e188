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
#include "quicplug/common/fields.hpp"

#include <array>

namespace quicplug {

namespace {

using Tag = PluginVal::Tag;
using F = ConnectionField;
using G = FieldGroup;

// One row per exposed field. value_tag is the ABI contract: get_field
// returns exactly this variant and set_field accepts only it.
constexpr std::array<FieldInfo, 23> kRegistry{{
    {F::kIsServer, "connection.is_server", G::kConnection, Tag::kBool, false},
    {F::kMaxTxData, "connection.max_tx_data", G::kConnection, Tag::kU64, true},
    {F::kTxData, "connection.tx_data", G::kConnection, Tag::kU64, false},
    {F::kMaxRxData, "connection.max_rx_data", G::kConnection, Tag::kU64, true},
    {F::kRxData, "connection.rx_data", G::kConnection, Tag::kU64, false},
    {F::kMtu, "connection.mtu", G::kConnection, Tag::kUsize, false},
    {F::kPeerAddr, "connection.peer_addr", G::kConnection, Tag::kSocketAddr, false},
    {F::kLocalAddr, "connection.local_addr", G::kConnection, Tag::kSocketAddr, false},
    {F::kIsEstablished, "connection.is_established", G::kConnection, Tag::kBool, false},
    {F::kIdleTimeout, "connection.idle_timeout", G::kConnection, Tag::kDuration, true},
    {F::kNextPktNum, "space.next_pkt_num", G::kSpace, Tag::kU64, false},
    {F::kLargestRxPktNum, "space.largest_rx_pkt_num", G::kSpace, Tag::kU64, false},
    {F::kAckElicitingInFlight, "space.ack_eliciting_in_flight", G::kSpace, Tag::kU64,
     false},
    {F::kCwnd, "recovery.cwnd", G::kRecovery, Tag::kU64, true},
    {F::kSsthresh, "recovery.ssthresh", G::kRecovery, Tag::kU64, true},
    {F::kBytesInFlight, "recovery.bytes_in_flight", G::kRecovery, Tag::kU64, false},
    {F::kSmoothedRtt, "recovery.smoothed_rtt", G::kRecovery, Tag::kDuration, true},
    {F::kRttVar, "recovery.rtt_var", G::kRecovery, Tag::kDuration, true},
    {F::kMinRtt, "recovery.min_rtt", G::kRecovery, Tag::kDuration, true},
    {F::kLatestRtt, "recovery.latest_rtt", G::kRecovery, Tag::kDuration, true},
    {F::kLossCount, "recovery.loss_count", G::kRecovery, Tag::kU64, false},
    {F::kPacingRate, "recovery.pacing_rate", G::kRecovery, Tag::kU64, true},
    {F::kInSlowStart, "recovery.in_slow_start", G::kRecovery, Tag::kBool, false},
}};

}  // namespace

std::span<const FieldInfo> field_registry() { return kRegistry; }

std::optional<FieldInfo> field_info(ConnectionField f) {
  for (const auto& e : kRegistry)
    if (e.field == f) return e;
  return std::nullopt;
}

std::optional<ConnectionField> field_from_id(std::uint32_t id) {
  auto f = static_cast<ConnectionField>(id);
  if (field_info(f)) return f;
  return std::nullopt;
}

std::optional<ConnectionField> field_from_name(std::string_view name) {
  for (const auto& e : kRegistry)
    if (e.name == name) return e.field;
  return std::nullopt;
}

}  // namespace quicplug
