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
#ifndef QUICPLUG_QUICLITE_ALPHA_CONNECTION_HPP
#define QUICPLUG_QUICLITE_ALPHA_CONNECTION_HPP

#include <deque>
#include <map>

#include "quicplug/quiclite/connection.hpp"

namespace quicplug::quiclite::alpha {

// alpha backend: a single connection object that schedules and serializes
// frames in one pass (frame bytes are written while deciding what to send).
class AlphaConnection final : public PluggableConnection,
                              public engine::HostConnectionContract {
 public:
  explicit AlphaConnection(const ConnConfig& cfg);

  // PluggableConnection
  Expected<engine::PluginId, engine::LoadDenied> load_plugin(
      std::span<const std::uint8_t> bytecode, const engine::PermissionSet& perms,
      std::string name) override;
  void on_datagram(std::span<const std::uint8_t> data, std::uint64_t now_us) override;
  std::vector<std::vector<std::uint8_t>> poll(std::uint64_t now_us) override;
  std::optional<std::uint64_t> next_timeout_us() const override;
  void on_timer(std::uint64_t now_us) override;
  engine::RoutineResult plugin_control(std::string_view plugin, std::uint64_t op,
                                       std::span<const PluginVal> args) override;
  const ConnStats& stats() const override { return stats_; }
  engine::Engine& engine_ref() override { return *engine_; }
  std::uint64_t current_cwnd() const override { return cwnd_; }
  Role role() const override { return cfg_.role; }
  std::string log_frame(const Frame& f) override;
  void set_tx_callback(TxCallback cb) override { tx_cb_ = std::move(cb); }

  // HostConnectionContract
  std::optional<PluginVal> get_field(ConnectionField f) const override;
  engine::SetFieldResult set_field(ConnectionField f, const PluginVal& v) override;
  std::vector<ConnectionField> supported_fields() const override;

 private:
  struct SentPacket {
    std::uint64_t pn = 0;
    std::uint64_t sent_us = 0;
    std::uint32_t size = 0;
    bool acked = false;
    bool lost = false;
    bool fin = false;
    std::vector<Frame> notify_frames;  // plugin-relevant frames for NotifyFrame
    std::vector<std::pair<std::uint64_t, std::uint64_t>> stream_ranges;
  };

  struct Packet {
    std::vector<std::uint8_t> buf;
    std::uint64_t pn = 0;
    bool eliciting = false;
    bool halted_batch = false;
    std::vector<std::uint64_t> frame_types;
    SentPacket meta;
    bool retransmission = false;
  };

  // One pipeline stage for frame type t; native steps may be null when the
  // host has no native behavior for that step.
  struct StageOutcome {
    bool wrote = false;
    bool halt = false;
  };
  StageOutcome stage(std::uint64_t t, Packet& pkt,
                     const std::function<bool(std::size_t remaining)>& native_should,
                     const std::function<std::optional<Frame>()>& native_prepare,
                     const std::function<std::size_t(const Frame&)>& native_len,
                     const std::function<void(const Frame&, std::span<std::uint8_t>)>&
                         native_write,
                     const std::function<void(const Frame&, std::uint64_t)>&
                         native_reserved);

  bool assemble_one(std::uint64_t now, Packet& pkt);
  std::vector<std::uint8_t> build_initial(std::uint64_t now);
  void handle_initial(std::span<const std::uint8_t> payload, std::uint64_t now);
  std::vector<TransportParameter> build_tp_list();
  void process_frames(std::span<const std::uint8_t> payload, std::uint64_t now);
  void native_process(const Frame& f, std::span<const std::uint8_t> stream_data,
                      std::uint64_t now);
  void process_ack(const AckFrame& ack, std::uint64_t now);
  void detect_losses(std::uint64_t now, std::uint64_t largest_acked);
  void on_packet_lost(SentPacket& p);
  void notify_frames(const SentPacket& p, std::uint64_t kind);
  void cc_on_ack(std::uint64_t acked_bytes);
  void cc_on_loss(std::uint64_t pn);
  void rtt_sample(std::uint64_t sample_us, std::uint64_t ack_delay_us);
  void close_with(std::uint64_t code, std::string_view reason);
  AckFrame build_ack(std::uint64_t now, std::size_t remaining) const;
  void queue_stream_retx(std::uint64_t off, std::uint64_t len, bool fin);
  std::uint8_t payload_byte(std::uint64_t i) const;
  std::uint64_t pto_interval() const;
  void record_rx_pn(std::uint64_t pn);

  ConnConfig cfg_;
  std::unique_ptr<engine::Engine> engine_;
  ConnStats stats_;
  TxCallback tx_cb_;

  // handshake
  bool initial_sent_ = false;
  bool handshake_done_ = false;
  bool hs_reply_due_ = false;
  std::uint64_t hs_deadline_us_ = 0;
  std::uint64_t hs_backoff_ = 1;
  std::uint64_t initial_pn_ = 0;

  // transport parameters
  std::uint64_t peer_max_data_ = 0;
  std::uint64_t peer_mtu_ = 0;
  std::uint64_t peer_idle_ms_ = 0;

  // packet number spaces (OneRtt)
  std::uint64_t next_pn_ = 0;
  std::map<std::uint64_t, SentPacket> sent_;  // unacked, by pn
  std::uint64_t largest_acked_ = 0;
  bool any_acked_ = false;

  // receive state
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rx_pn_ranges_;  // lo,hi merged
  std::uint64_t largest_rx_pn_ = 0;
  std::uint64_t largest_rx_time_ = 0;
  bool ack_pending_ = false;
  bool any_rx_ = false;

  // stream send
  std::uint64_t send_cursor_ = 0;
  std::uint64_t send_acked_high_ = 0;  // fully-acked contiguous prefix
  std::map<std::uint64_t, std::uint64_t> unacked_tx_;  // off -> len outstanding
  std::deque<std::pair<std::uint64_t, std::uint64_t>> retx_queue_;
  bool fin_sent_ = false;
  bool fin_acked_ = false;

  // stream receive
  std::map<std::uint64_t, std::uint64_t> rx_ranges_;  // off -> len merged
  std::uint64_t rx_contiguous_ = 0;
  std::optional<std::uint64_t> fin_offset_;

  // flow control
  std::uint64_t tx_data_ = 0;
  std::uint64_t rx_data_ = 0;
  std::uint64_t advertised_limit_ = 0;

  // recovery
  std::uint64_t cwnd_ = 0;
  std::uint64_t ssthresh_ = UINT64_MAX;
  std::uint64_t bytes_in_flight_ = 0;
  std::uint64_t srtt_ = 0;
  std::uint64_t rttvar_ = 0;
  std::uint64_t min_rtt_ = 0;
  std::uint64_t latest_rtt_ = 0;
  std::uint64_t loss_count_ = 0;
  std::uint64_t pacing_rate_ = 0;
  std::uint64_t recovery_start_pn_ = 0;
  std::uint32_t pto_count_ = 0;
  bool rtt_valid_ = false;

  // path
  std::deque<std::array<std::uint8_t, 8>> path_response_queue_;

  // close / idle
  bool close_sent_ = false;
  std::uint64_t last_activity_us_ = 0;
  std::uint64_t idle_timeout_us_ = 0;
};

}  // namespace quicplug::quiclite::alpha

#endif
