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
#ifndef QUICPLUG_QUICLITE_CONNECTION_HPP
#define QUICPLUG_QUICLITE_CONNECTION_HPP

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quicplug/common/plugin_val.hpp"
#include "quicplug/common/wire.hpp"
#include "quicplug/engine/engine.hpp"

namespace quicplug::quiclite {

// Two independently written host integrations standing in for distinct
// production stacks. alpha writes frames inline while scheduling; beta
// splits scheduling and on-wire serialization into separate modules.
enum class Backend { kAlpha, kBeta };
enum class Role { kClient, kServer };

// Restricting the exposed field registry exercises load-time denial.
enum class HostProfile { kFull, kMinimal };

struct ConnConfig {
  Role role = Role::kClient;
  std::uint32_t mtu = 1350;
  std::uint64_t flow_window = 16u << 20;
  std::uint64_t idle_timeout_ms = 30'000;
  std::uint64_t send_size = 0;  // octets this endpoint streams to its peer
  std::uint64_t seed = 0;       // payload pattern seed
  HostProfile profile = HostProfile::kFull;
  SocketAddr local_addr;
  SocketAddr peer_addr;
  std::function<std::uint64_t()> now_us;  // required
  std::filesystem::path sandbox_dir;      // plugin file sandboxes
  std::function<void(std::string_view plugin, std::string_view line)> log_sink;
  std::int64_t fuel_per_call = 5'000'000;
};

struct TxPacketInfo {
  wire::PacketKind kind;
  std::uint64_t pkt_num;
  std::size_t wire_len;
  std::vector<std::uint64_t> frame_types;
  bool retransmission;
};

struct ConnStats {
  bool handshake_done = false;
  bool send_complete = false;  // everything sent and acknowledged
  bool recv_complete = false;  // fin received with contiguous data
  bool closed = false;
  std::uint64_t close_code = 0;
  std::uint64_t recv_complete_at_us = 0;
  std::uint64_t tx_packets = 0;
  std::uint64_t rx_packets = 0;
  std::uint64_t retx_packets = 0;
  std::uint64_t tx_bytes = 0;
  std::uint64_t rx_bytes = 0;
  std::uint64_t stream_bytes_received = 0;
  std::uint64_t payload_errors = 0;
  std::uint64_t acks_written = 0;    // ACK frames emitted
  std::uint64_t acks_processed = 0;  // ACK frames received and processed
};

// The harness-facing surface shared by both backends. The embedding event
// loop drives a connection with on_datagram / on_timer / poll in turn order.
class PluggableConnection {
 public:
  virtual ~PluggableConnection() = default;

  virtual Expected<engine::PluginId, engine::LoadDenied> load_plugin(
      std::span<const std::uint8_t> bytecode, const engine::PermissionSet& perms,
      std::string name) = 0;

  virtual void on_datagram(std::span<const std::uint8_t> data, std::uint64_t now_us) = 0;
  virtual std::vector<std::vector<std::uint8_t>> poll(std::uint64_t now_us) = 0;
  virtual std::optional<std::uint64_t> next_timeout_us() const = 0;
  virtual void on_timer(std::uint64_t now_us) = 0;

  virtual engine::RoutineResult plugin_control(std::string_view plugin, std::uint64_t op,
                                               std::span<const PluginVal> args) = 0;

  virtual const ConnStats& stats() const = 0;
  virtual engine::Engine& engine_ref() = 0;
  virtual std::uint64_t current_cwnd() const = 0;
  virtual Role role() const = 0;
  virtual std::string log_frame(const Frame& f) = 0;

  using TxCallback = std::function<void(const TxPacketInfo&)>;
  virtual void set_tx_callback(TxCallback cb) = 0;
};

std::unique_ptr<PluggableConnection> make_connection(Backend backend,
                                                     const ConnConfig& config);

const char* backend_name(Backend b);

}  // namespace quicplug::quiclite

#endif
