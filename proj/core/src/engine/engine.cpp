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
#include "quicplug/engine/engine.hpp"

#include <algorithm>

#include "quicplug/common/varint.hpp"
#include "api_internal.hpp"

namespace quicplug::engine {

const char* load_error_name(LoadErrorKind k) {
  switch (k) {
    case LoadErrorKind::kBadModule: return "BadModule";
    case LoadErrorKind::kBadExportName: return "BadExportName";
    case LoadErrorKind::kMissingField: return "MissingField";
    case LoadErrorKind::kDefineConflict: return "DefineConflict";
    case LoadErrorKind::kInitFailed: return "InitFailed";
  }
  return "LoadError";
}

namespace {

const wasm::FuncType kHookType{{wasm::ValType::kI64}, {wasm::ValType::kI64}};
const wasm::FuncType kRequiredFieldsType{{}, {wasm::ValType::kI64}};

bool prenegotiation_kind(RoutineKind k) {
  return k == RoutineKind::kInit || k == RoutineKind::kWriteTransportParameter ||
         k == RoutineKind::kDecodeTransportParameter;
}

}  // namespace

Engine::Engine(HostConnectionContract& host, EngineConfig cfg)
    : host_(host), cfg_(std::move(cfg)), api_(build_plugin_api()) {}

Engine::~Engine() {
  for (auto& p : plugins_) close_files(*p);
}

void Engine::close_files(Plugin& p) {
  for (auto& f : p.files) {
    if (f) std::fclose(f);
    f = nullptr;
  }
}

Engine::Plugin* Engine::find(std::string_view name) {
  for (auto& p : plugins_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::optional<PluginId> Engine::find_plugin(std::string_view name) const {
  for (const auto& p : plugins_)
    if (p->name == name) return p->id;
  return std::nullopt;
}

std::optional<Phase> Engine::plugin_phase(PluginId id) const {
  for (const auto& p : plugins_)
    if (p->id == id) return p->phase;
  return std::nullopt;
}

const std::string& Engine::plugin_name(PluginId id) const {
  static const std::string kUnknown = "?";
  for (const auto& p : plugins_)
    if (p->id == id) return p->name;
  return kUnknown;
}

bool Engine::plugin_visible(const Plugin& p, RoutineKind kind) const {
  if (p.phase == Phase::kPoisoned) return false;
  if (p.phase == Phase::kEnabled) return true;
  return prenegotiation_kind(kind);
}

void Engine::poison(Plugin& p) {
  p.phase = Phase::kPoisoned;
  close_files(p);
}

std::int64_t Engine::invoke(Plugin& p, std::uint32_t func_idx, bool observer) {
  if (p.phase == Phase::kPoisoned) return status::kRoutineAborted;
  hook_stack_.push_back({&p, observer});
  std::int64_t fuel = cfg_.fuel_per_call;
  std::int64_t st;
  const std::uint64_t seq = ++invocation_seq_;
  try {
    auto r = p.instance->call(func_idx, std::span<const std::uint64_t>(&seq, 1), fuel);
    st = static_cast<std::int64_t>(r.value_or(0));
  } catch (const wasm::Trap&) {
    poison(p);
    st = status::kRoutineAborted;
  }
  hook_stack_.pop_back();
  return st;
}

Expected<PluginId, LoadDenied> Engine::load_plugin(std::span<const std::uint8_t> bytecode,
                                                   const PermissionSet& perms,
                                                   std::string name) {
  wasm::ParseCaps caps;
  caps.max_memory_pages = cfg_.max_memory_pages;
  auto parsed = wasm::parse_module(bytecode, caps);
  if (!parsed.ok())
    return LoadDenied{LoadErrorKind::kBadModule, parsed.error()};

  auto plugin = std::make_unique<Plugin>();
  plugin->id = static_cast<PluginId>(plugins_.size());
  plugin->name = std::move(name);
  plugin->perms = perms;
  plugin->module = std::make_shared<const wasm::Module>(std::move(parsed.value()));
  const wasm::Module& m = *plugin->module;

  // Exported surface: hook functions named by convention, the optional
  // required_fields probe, and exactly one exported linear memory.
  std::optional<std::uint32_t> required_fields_fn;
  std::optional<std::uint32_t> init_fn;
  for (const auto& e : m.exports) {
    switch (e.kind) {
      case wasm::ExportKind::kMemory:
        break;
      case wasm::ExportKind::kFunc: {
        const wasm::FuncType& ft = m.func_type(e.index);
        if (e.name == "required_fields") {
          if (!(ft == kRequiredFieldsType))
            return LoadDenied{LoadErrorKind::kBadModule,
                              "required_fields must be [] -> [i64]"};
          required_fields_fn = e.index;
          continue;
        }
        auto parsed_name = parse_export_name(e.name);
        if (!parsed_name.ok())
          return LoadDenied{LoadErrorKind::kBadExportName, e.name};
        if (!(ft == kHookType))
          return LoadDenied{LoadErrorKind::kBadModule,
                            "hook " + e.name + " must be [i64] -> [i64]"};
        const auto& pe = parsed_name.value();
        auto& table = plugin->hooks[static_cast<std::size_t>(pe.anchor)];
        table[pe.routine] = e.index;
        if (pe.anchor == Anchor::kDefine && pe.routine.kind == RoutineKind::kInit)
          init_fn = e.index;
        break;
      }
      default:
        return LoadDenied{LoadErrorKind::kBadModule,
                          "unexpected non-function export: " + e.name};
    }
  }
  if (!m.memory || !m.find_export("memory", wasm::ExportKind::kMemory))
    return LoadDenied{LoadErrorKind::kBadModule, "module must export its memory"};

  // Define-anchor uniqueness across the connection.
  for (const auto& [rid, fidx] : plugin->hooks[static_cast<std::size_t>(Anchor::kDefine)]) {
    for (const auto& other : plugins_) {
      if (other->phase == Phase::kPoisoned) continue;
      const auto& table = other->hooks[static_cast<std::size_t>(Anchor::kDefine)];
      if (table.count(rid))
        return LoadDenied{LoadErrorKind::kDefineConflict,
                          render_export_name({rid, Anchor::kDefine})};
    }
  }

  wasm::InstanceLimits limits;
  limits.max_pages = cfg_.max_memory_pages;
  std::int64_t fuel = cfg_.fuel_per_call;
  auto inst = wasm::Instance::instantiate(plugin->module, api_, this, limits, fuel);
  if (!inst.ok()) return LoadDenied{LoadErrorKind::kBadModule, inst.error()};
  plugin->instance = std::move(inst.value());

  if (plugin->perms.file_api && !cfg_.sandbox_root.empty()) {
    std::error_code ec;
    plugin->sandbox_dir = cfg_.sandbox_root / plugin->name;
    std::filesystem::create_directories(plugin->sandbox_dir, ec);
    if (ec) plugin->sandbox_dir.clear();
  }

  Plugin* raw = plugin.get();
  plugins_.push_back(std::move(plugin));
  auto unload = [&] { plugins_.pop_back(); };

  // Load-time field check: the plugin streams its required field ids; all
  // must be supported by this host or the load is denied.
  if (required_fields_fn) {
    scopes_.emplace_back();
    std::int64_t st = invoke(*raw, *required_fields_fn, false);
    std::vector<PluginVal> fields = std::move(scopes_.back().outputs);
    scopes_.pop_back();
    if (st != status::kOk || raw->phase == Phase::kPoisoned) {
      unload();
      return LoadDenied{LoadErrorKind::kBadModule, "required_fields failed"};
    }
    for (const auto& v : fields) {
      auto id = v.as_u64();
      auto field = id ? field_from_id(static_cast<std::uint32_t>(*id)) : std::nullopt;
      if (!field) {
        unload();
        return LoadDenied{LoadErrorKind::kMissingField, "unknown field id"};
      }
      if (!host_.supports(*field)) {
        unload();
        return LoadDenied{LoadErrorKind::kMissingField,
                          std::string(field_info(*field)->name)};
      }
    }
  }

  if (init_fn) {
    scopes_.emplace_back();
    std::int64_t st = invoke(*raw, *init_fn, false);
    scopes_.pop_back();
    if (st != status::kOk || raw->phase == Phase::kPoisoned) {
      close_files(*raw);
      unload();
      return LoadDenied{LoadErrorKind::kInitFailed,
                        "init returned " + std::to_string(st)};
    }
  }

  return raw->id;
}

bool Engine::provides(const RoutineId& id, Anchor anchor) const {
  for (const auto& p : plugins_) {
    if (!plugin_visible(*p, id.kind)) continue;
    if (p->hooks[static_cast<std::size_t>(anchor)].count(id)) return true;
  }
  return false;
}

RoutineResult Engine::call_routine(const RoutineId& id, std::span<const PluginVal> inputs) {
  Plugin* define_plugin = nullptr;
  std::uint32_t define_func = 0;
  for (auto& p : plugins_) {
    if (!plugin_visible(*p, id.kind)) continue;
    auto it = p->hooks[static_cast<std::size_t>(Anchor::kDefine)].find(id);
    if (it != p->hooks[static_cast<std::size_t>(Anchor::kDefine)].end()) {
      define_plugin = p.get();
      define_func = it->second;
      break;
    }
  }
  if (!define_plugin) {
    pending_caps_.clear();
    return {status::kNotAvailable, {}};
  }
  return dispatch(id, inputs, *define_plugin, define_func);
}

RoutineResult Engine::dispatch(const RoutineId& id, std::span<const PluginVal> inputs,
                               Plugin& define_plugin, std::uint32_t define_func) {
  DispatchScope scope;
  scope.inputs.assign(inputs.begin(), inputs.end());
  scope.caps = std::move(pending_caps_);
  pending_caps_.clear();
  scopes_.push_back(std::move(scope));

  const auto anchor_hooks = [&](Anchor a, auto&& fn) {
    for (auto& p : plugins_) {
      if (!plugin_visible(*p, id.kind)) continue;
      auto it = p->hooks[static_cast<std::size_t>(a)].find(id);
      if (it != p->hooks[static_cast<std::size_t>(a)].end()) fn(*p, it->second);
    }
  };

  anchor_hooks(Anchor::kBefore, [&](Plugin& p, std::uint32_t f) { invoke(p, f, true); });

  RoutineResult res;
  res.status = invoke(define_plugin, define_func, false);
  if (define_plugin.phase == Phase::kPoisoned) res.status = status::kRoutineAborted;
  res.outputs = std::move(scopes_.back().outputs);
  scopes_.back().outputs.clear();

  anchor_hooks(Anchor::kAfter, [&](Plugin& p, std::uint32_t f) { invoke(p, f, true); });

  for (const auto& [tag, cap] : scopes_.back().caps) written_history_[tag] = cap.written;
  if (written_history_.size() > 256) written_history_.clear();
  scopes_.pop_back();
  return res;
}

void Engine::observe(const RoutineId& id, Anchor anchor, std::span<const PluginVal> inputs) {
  if (anchor == Anchor::kDefine) return;
  bool any = false;
  for (const auto& p : plugins_) {
    if (!plugin_visible(*p, id.kind)) continue;
    if (p->hooks[static_cast<std::size_t>(anchor)].count(id)) {
      any = true;
      break;
    }
  }
  if (!any) return;

  DispatchScope scope;
  scope.inputs.assign(inputs.begin(), inputs.end());
  scopes_.push_back(std::move(scope));
  for (auto& p : plugins_) {
    if (!plugin_visible(*p, id.kind)) continue;
    auto it = p->hooks[static_cast<std::size_t>(anchor)].find(id);
    if (it != p->hooks[static_cast<std::size_t>(anchor)].end())
      invoke(*p, it->second, true);
  }
  scopes_.pop_back();
}

std::optional<PluginId> Engine::define_owner(const RoutineId& id) const {
  for (const auto& p : plugins_) {
    if (!plugin_visible(*p, id.kind)) continue;
    if (p->hooks[static_cast<std::size_t>(Anchor::kDefine)].count(id)) return p->id;
  }
  return std::nullopt;
}

void Engine::poison_plugin(PluginId id) {
  for (auto& p : plugins_)
    if (p->id == id) poison(*p);
}

bool Engine::enable_plugin(PluginId id) {
  for (auto& p : plugins_) {
    if (p->id != id) continue;
    if (p->phase == Phase::kPoisoned) return false;
    p->phase = Phase::kEnabled;
    return true;
  }
  return false;
}

Registrations Engine::registrations() const {
  Registrations out;
  for (const auto& p : plugins_) {
    if (p->phase == Phase::kPoisoned) continue;
    auto tps = p->tp_regs;
    std::sort(tps.begin(), tps.end());
    for (std::uint64_t t : tps) out.tp_types.emplace_back(t, p->id);
    if (p->phase == Phase::kEnabled) {
      auto frames = p->frame_regs;
      std::sort(frames.begin(), frames.end());
      for (std::uint64_t t : frames) out.frame_types.emplace_back(t, p->id);
    }
  }
  return out;
}

RoutineResult Engine::plugin_control(std::string_view target_name, std::uint64_t op,
                                     std::span<const PluginVal> args) {
  return control_dispatch("host", target_name, op, args);
}

RoutineResult Engine::control_dispatch(std::string_view caller, std::string_view target,
                                       std::uint64_t op, std::span<const PluginVal> args) {
  RoutineResult res;
  Plugin* t = find(target);
  const RoutineId rid = RoutineId::plain(RoutineKind::kPluginControl);
  const auto done = [&] {
    control_log_.push_back(
        {now_us(), std::string(caller), std::string(target), op, res.status});
    return res;
  };
  if (!t || t->phase != Phase::kEnabled || control_depth_ >= 4) {
    res.status = status::kNotAvailable;
    return done();
  }
  auto it = t->hooks[static_cast<std::size_t>(Anchor::kDefine)].find(rid);
  if (it == t->hooks[static_cast<std::size_t>(Anchor::kDefine)].end()) {
    res.status = status::kNotAvailable;
    return done();
  }
  std::vector<PluginVal> inputs;
  inputs.reserve(args.size() + 1);
  inputs.emplace_back(op);
  inputs.insert(inputs.end(), args.begin(), args.end());

  ++control_depth_;
  res = dispatch(rid, inputs, *t, it->second);
  --control_depth_;
  return done();
}

std::optional<std::uint64_t> Engine::next_deadline_us() const {
  std::optional<std::uint64_t> best;
  for (const auto& t : timers_)
    if (!best || t.deadline_us < *best) best = t.deadline_us;
  return best;
}

void Engine::fire_due_timers(std::uint64_t now_us) {
  std::vector<TimerRegistration> due;
  for (auto it = timers_.begin(); it != timers_.end();) {
    if (it->deadline_us <= now_us) {
      due.push_back(*it);
      it = timers_.erase(it);
    } else {
      ++it;
    }
  }
  std::sort(due.begin(), due.end(), [](const auto& a, const auto& b) {
    return a.deadline_us != b.deadline_us ? a.deadline_us < b.deadline_us
                                          : a.timer_id < b.timer_id;
  });
  const RoutineId rid = RoutineId::plain(RoutineKind::kOnPluginTimeout);
  for (const auto& t : due) {
    for (auto& p : plugins_) {
      if (p->id != t.plugin || p->phase != Phase::kEnabled) continue;
      auto it = p->hooks[static_cast<std::size_t>(Anchor::kDefine)].find(rid);
      if (it == p->hooks[static_cast<std::size_t>(Anchor::kDefine)].end()) break;
      std::array<PluginVal, 1> inputs{PluginVal(t.callback_tag)};
      dispatch(rid, inputs, *p, it->second);
      break;
    }
  }
}

BytesCapability Engine::stage_bytes(std::span<std::uint8_t> target, std::uint64_t max_read,
                                    std::uint64_t max_write) {
  CapEntry e;
  e.base = target.data();
  e.max_read = std::min<std::uint64_t>(max_read, target.size());
  e.max_write = std::min<std::uint64_t>(max_write, target.size());
  const std::uint64_t tag = next_cap_tag_++;
  pending_caps_[tag] = e;
  return {tag, e.max_read, e.max_write};
}

BytesCapability Engine::stage_bytes_readonly(std::span<const std::uint8_t> source) {
  CapEntry e;
  e.base = const_cast<std::uint8_t*>(source.data());
  e.max_read = source.size();
  e.max_write = 0;
  e.read_only = true;
  const std::uint64_t tag = next_cap_tag_++;
  pending_caps_[tag] = e;
  return {tag, e.max_read, 0};
}

std::uint64_t Engine::bytes_written(std::uint64_t tag) const {
  for (const auto& scope : scopes_) {
    auto it = scope.caps.find(tag);
    if (it != scope.caps.end()) return it->second.written;
  }
  auto it = written_history_.find(tag);
  if (it != written_history_.end()) return it->second;
  auto p = pending_caps_.find(tag);
  if (p != pending_caps_.end()) return p->second.written;
  return 0;
}

}  // namespace quicplug::engine
