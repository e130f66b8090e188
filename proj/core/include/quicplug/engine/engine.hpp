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
#ifndef QUICPLUG_ENGINE_ENGINE_HPP
#define QUICPLUG_ENGINE_ENGINE_HPP

#include <array>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "quicplug/common/codec.hpp"
#include "quicplug/common/plugin_val.hpp"
#include "quicplug/common/routine.hpp"
#include "quicplug/common/status.hpp"
#include "quicplug/engine/host_contract.hpp"
#include "quicplug/engine/permissions.hpp"
#include "quicplug/wasm/instance.hpp"

namespace quicplug::engine {

using PluginId = std::uint32_t;

enum class LoadErrorKind {
  kBadModule,
  kBadExportName,
  kMissingField,
  kDefineConflict,
  kInitFailed,
};

const char* load_error_name(LoadErrorKind k);

struct LoadDenied {
  LoadErrorKind kind;
  std::string detail;
};

// Two-phase loading: a freshly loaded plugin only answers the negotiation
// routines until it (or the host) enables it. Poisoned plugins never run
// again on this connection.
enum class Phase : std::uint8_t { kPreNegotiation, kEnabled, kPoisoned };

struct RoutineResult {
  std::int64_t status = status::kOk;
  std::vector<PluginVal> outputs;
};

struct EngineConfig {
  std::function<std::uint64_t()> now_us;  // host clock; virtual under netsim
  std::filesystem::path sandbox_root;     // per-plugin file dirs live beneath
  std::int64_t fuel_per_call = 5'000'000;
  std::uint32_t max_memory_pages = 256;
  std::function<void(std::string_view plugin, std::string_view line)> log_sink;
};

struct TimerRegistration {
  std::uint64_t timer_id;
  PluginId plugin;
  std::uint64_t deadline_us;  // absolute
  std::uint64_t callback_tag;
};

// Audit record of PluginControl dispatches (application- or plugin-
// initiated); scenario summaries read these.
struct ControlCallRecord {
  std::uint64_t t_us;
  std::string caller;  // "host" or the calling plugin's name
  std::string target;
  std::uint64_t op;
  std::int64_t status;
};

struct Registrations {
  std::vector<std::pair<std::uint64_t, PluginId>> frame_types;
  std::vector<std::pair<std::uint64_t, PluginId>> tp_types;
};

// Per-connection pluginization engine: loads sandboxed wasm plugins,
// validates their exports and required fields, dispatches protocol routines
// across anchors, and owns permissions, timers, byte capabilities and the
// plugin-facing API.
class Engine {
 public:
  Engine(HostConnectionContract& host, EngineConfig cfg);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  Expected<PluginId, LoadDenied> load_plugin(std::span<const std::uint8_t> bytecode,
                                             const PermissionSet& perms,
                                             std::string name);

  bool provides(const RoutineId& id, Anchor anchor) const;

  // Full dispatch: before observers, the Define hook, after observers.
  // Returns kNotAvailable when no visible Define exists.
  RoutineResult call_routine(const RoutineId& id, std::span<const PluginVal> inputs);

  // Observer-only dispatch used around native routine implementations.
  void observe(const RoutineId& id, Anchor anchor, std::span<const PluginVal> inputs);

  bool enable_plugin(PluginId id);
  Registrations registrations() const;

  // Host-detected contract breaches (e.g. WriteFrame octet-count mismatch)
  // detach the offending plugin like a trap would.
  std::optional<PluginId> define_owner(const RoutineId& id) const;
  void poison_plugin(PluginId id);

  RoutineResult plugin_control(std::string_view target_name, std::uint64_t op,
                               std::span<const PluginVal> args);

  // -- timers (driven by the host event loop) --
  std::optional<std::uint64_t> next_deadline_us() const;
  void fire_due_timers(std::uint64_t now_us);

  // -- byte capabilities --
  // Registers a capability over a host buffer for the next call_routine on
  // this engine; it dies when that dispatch returns. The buffer must stay
  // valid for the duration of the dispatch.
  BytesCapability stage_bytes(std::span<std::uint8_t> target, std::uint64_t max_read,
                              std::uint64_t max_write);
  BytesCapability stage_bytes_readonly(std::span<const std::uint8_t> source);
  // High-water octet count written through a (possibly expired) capability.
  std::uint64_t bytes_written(std::uint64_t tag) const;

  // -- introspection --
  std::size_t plugin_count() const { return plugins_.size(); }
  std::optional<PluginId> find_plugin(std::string_view name) const;
  std::optional<Phase> plugin_phase(PluginId id) const;
  const std::string& plugin_name(PluginId id) const;
  const std::vector<ControlCallRecord>& control_log() const { return control_log_; }
  std::uint64_t now_us() const { return cfg_.now_us ? cfg_.now_us() : 0; }
  HostConnectionContract& host() { return host_; }
  const EngineConfig& config() const { return cfg_; }

 private:
  friend struct PluginApi;

  struct Plugin {
    PluginId id;
    std::string name;
    PermissionSet perms;
    Phase phase = Phase::kPreNegotiation;
    std::shared_ptr<const wasm::Module> module;
    std::unique_ptr<wasm::Instance> instance;
    // anchor-indexed hook tables: RoutineId -> function index
    std::array<std::unordered_map<RoutineId, std::uint32_t, RoutineIdHash>, 3> hooks;
    std::vector<std::uint64_t> frame_regs;
    std::vector<std::uint64_t> tp_regs;
    std::array<std::FILE*, 8> files{};
    std::filesystem::path sandbox_dir;
  };

  struct CapEntry {
    std::uint8_t* base = nullptr;
    std::uint64_t max_read = 0;
    std::uint64_t max_write = 0;
    std::uint64_t written = 0;  // high-water mark
    bool read_only = false;
  };

  // One call_routine (or control/timeout/load) dispatch: staged inputs and
  // outputs plus the capabilities bound to it.
  struct DispatchScope {
    std::vector<PluginVal> inputs;
    std::vector<PluginVal> outputs;
    std::unordered_map<std::uint64_t, CapEntry> caps;
  };

  // One wasm hook execution within a scope.
  struct HookRun {
    Plugin* plugin;
    bool observer;
  };

  bool plugin_visible(const Plugin& p, RoutineKind kind) const;
  void poison(Plugin& p);
  std::int64_t invoke(Plugin& p, std::uint32_t func_idx, bool observer);
  RoutineResult dispatch(const RoutineId& id, std::span<const PluginVal> inputs,
                         Plugin& define_plugin, std::uint32_t define_func);
  RoutineResult control_dispatch(std::string_view caller, std::string_view target,
                                 std::uint64_t op, std::span<const PluginVal> args);
  Plugin* find(std::string_view name);
  void close_files(Plugin& p);

  HostConnectionContract& host_;
  EngineConfig cfg_;
  std::vector<std::unique_ptr<Plugin>> plugins_;  // load order
  std::vector<TimerRegistration> timers_;
  std::vector<DispatchScope> scopes_;
  std::vector<HookRun> hook_stack_;
  std::unordered_map<std::uint64_t, CapEntry> pending_caps_;
  std::unordered_map<std::uint64_t, std::uint64_t> written_history_;
  std::vector<ControlCallRecord> control_log_;
  std::uint64_t invocation_seq_ = 0;
  std::uint64_t next_cap_tag_ = 1;
  std::uint64_t next_timer_id_ = 1;
  std::uint32_t control_depth_ = 0;
  std::vector<wasm::HostFuncDef> api_;  // the cq-abi-1 import set
};

// Capability tags the engine hands to WriteTransportParameter etc. also
// appear inside staged PluginVal inputs; helper to build that value.
inline PluginVal bytes_val(const BytesCapability& cap) { return PluginVal(cap); }

}  // namespace quicplug::engine

#endif
