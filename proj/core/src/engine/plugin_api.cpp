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
#include <cstring>

#include "quicplug/common/frame.hpp"
#include "quicplug/common/varint.hpp"
#include "quicplug/engine/engine.hpp"

#include "api_internal.hpp"

// The cq-abi-1 import set: every function the engine provides to plugin
// bytecode. All functions return an i64 status (or value); permission
// violations return kPermissionError with no side effect. Bad guest
// pointers trap, which poisons the offending plugin.
namespace quicplug::engine {

namespace {

constexpr const char* kAbi = "cq-abi-1";
constexpr std::size_t kMaxOutputs = 64;
constexpr std::size_t kMaxControlArgs = 16;

using wasm::ValType;
const ValType kI32 = ValType::kI32;
const ValType kI64 = ValType::kI64;

std::span<std::uint8_t> guest(wasm::Instance& inst, std::uint64_t ptr, std::uint64_t len) {
  if (!inst.mem_ok(ptr, len))
    throw wasm::Trap{wasm::TrapKind::kHostError, "guest pointer out of bounds"};
  return inst.memory().subspan(static_cast<std::size_t>(ptr),
                               static_cast<std::size_t>(len));
}

std::int64_t map_set_result(SetFieldResult r) {
  switch (r) {
    case SetFieldResult::kOk: return status::kOk;
    case SetFieldResult::kUnsupported: return status::kUnknownField;
    case SetFieldResult::kReadOnly: return status::kPermissionError;
    case SetFieldResult::kBadType:
    case SetFieldResult::kBadValue: return status::kDecodeError;
  }
  return status::kInternalError;
}

}  // namespace

struct PluginApi {
  static Engine& eng(void* env) { return *static_cast<Engine*>(env); }
  static Engine::HookRun& hook(Engine& e) { return e.hook_stack_.back(); }
  static Engine::DispatchScope& scope(Engine& e) { return e.scopes_.back(); }
  static Engine::Plugin& plugin(Engine& e) { return *hook(e).plugin; }

  static Engine::CapEntry* cap(Engine& e, std::uint64_t tag) {
    auto& caps = scope(e).caps;
    auto it = caps.find(tag);
    return it == caps.end() ? nullptr : &it->second;
  }

  static std::uint64_t ret(std::int64_t v) { return static_cast<std::uint64_t>(v); }

  static std::vector<wasm::HostFuncDef> build();
};

std::vector<wasm::HostFuncDef> PluginApi::build() {
  std::vector<wasm::HostFuncDef> api;
  auto add = [&api](const char* name, std::vector<ValType> params,
                    std::vector<ValType> results, wasm::HostFn fn) {
    api.push_back({kAbi, name, {std::move(params), std::move(results)}, std::move(fn)});
  };

  // -- parameter communication --
  add("get_input", {kI32, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        const std::uint32_t idx = static_cast<std::uint32_t>(a[0]);
        auto& in = scope(e).inputs;
        if (idx >= in.size()) return ret(status::kInputMissing);
        std::vector<std::uint8_t> buf = codec::encode_plugin_val(in[idx]);
        if (buf.size() > a[2]) return ret(status::kRangeError);
        auto dst = guest(inst, a[1], buf.size());
        std::memcpy(dst.data(), buf.data(), buf.size());
        return ret(static_cast<std::int64_t>(buf.size()));
      });

  add("save_output", {kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        if (a[1] > kMaxEncodedPluginVal) return ret(status::kRangeError);
        auto src = guest(inst, a[0], a[1]);
        auto decoded = codec::decode_plugin_val(src);
        if (!decoded || decoded->consumed != a[1]) return ret(status::kDecodeError);
        if (hook(e).observer) return ret(status::kOk);  // observers output nothing
        if (scope(e).outputs.size() >= kMaxOutputs) return ret(status::kRangeError);
        scope(e).outputs.push_back(std::move(decoded->value));
        return ret(status::kOk);
      });

  // -- connection fields --
  add("get_connection_field", {kI32, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (!p.perms.can_read_fields()) return ret(status::kPermissionError);
        auto field = field_from_id(static_cast<std::uint32_t>(a[0]));
        if (!field) return ret(status::kUnknownField);
        if (p.perms.field_denied(*field)) return ret(status::kPermissionError);
        auto val = e.host_.get_field(*field);
        if (!val) return ret(status::kUnknownField);
        std::vector<std::uint8_t> buf = codec::encode_plugin_val(*val);
        if (buf.size() > a[2]) return ret(status::kRangeError);
        auto dst = guest(inst, a[1], buf.size());
        std::memcpy(dst.data(), buf.data(), buf.size());
        return ret(static_cast<std::int64_t>(buf.size()));
      });

  add("set_connection_field", {kI32, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (hook(e).observer) return ret(status::kPermissionError);
        if (!p.perms.write_fields) return ret(status::kPermissionError);
        auto field = field_from_id(static_cast<std::uint32_t>(a[0]));
        if (!field) return ret(status::kUnknownField);
        if (p.perms.field_denied(*field)) return ret(status::kPermissionError);
        auto src = guest(inst, a[1], a[2]);
        auto decoded = codec::decode_plugin_val(src);
        if (!decoded || decoded->consumed != a[2]) return ret(status::kDecodeError);
        if (decoded->value.tag() != field_info(*field)->value_tag)
          return ret(status::kDecodeError);
        return ret(map_set_result(e.host_.set_field(*field, decoded->value)));
      });

  // -- registrations / activation --
  add("register_frame_type", {kI64}, {kI64},
      [](void* env, wasm::Instance&, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (hook(e).observer) return ret(status::kPermissionError);
        if (!p.perms.registration) return ret(status::kPermissionError);
        if (a[0] > varint::kMax || frame_type::is_core(a[0]))
          return ret(status::kRangeError);
        if (std::find(p.frame_regs.begin(), p.frame_regs.end(), a[0]) ==
            p.frame_regs.end())
          p.frame_regs.push_back(a[0]);
        return ret(status::kOk);
      });

  add("register_tp_type", {kI64}, {kI64},
      [](void* env, wasm::Instance&, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (hook(e).observer) return ret(status::kPermissionError);
        if (!p.perms.registration) return ret(status::kPermissionError);
        if (a[0] > varint::kMax) return ret(status::kRangeError);
        if (std::find(p.tp_regs.begin(), p.tp_regs.end(), a[0]) == p.tp_regs.end())
          p.tp_regs.push_back(a[0]);
        return ret(status::kOk);
      });

  add("enable_plugin", {}, {kI64},
      [](void* env, wasm::Instance&, std::span<const std::uint64_t>) {
        Engine& e = eng(env);
        if (hook(e).observer) return ret(status::kPermissionError);
        Engine::Plugin& p = plugin(e);
        if (p.phase == Phase::kPreNegotiation) p.phase = Phase::kEnabled;
        return ret(status::kOk);
      });

  // -- time --
  add("current_time", {}, {kI64},
      [](void* env, wasm::Instance&, std::span<const std::uint64_t>) {
        return eng(env).now_us();
      });

  add("set_timer", {kI64, kI64}, {kI64},
      [](void* env, wasm::Instance&, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (hook(e).observer || !p.perms.timer_api) return ret(status::kPermissionError);
        std::size_t owned = 0;
        for (const auto& t : e.timers_)
          if (t.plugin == p.id) ++owned;
        if (owned >= 64) return ret(status::kRangeError);
        const std::uint64_t id = e.next_timer_id_++;
        e.timers_.push_back({id, p.id, a[0], a[1]});
        return id;
      });

  add("cancel_timer", {kI64}, {kI64},
      [](void* env, wasm::Instance&, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (hook(e).observer || !p.perms.timer_api) return ret(status::kPermissionError);
        for (auto it = e.timers_.begin(); it != e.timers_.end(); ++it) {
          if (it->timer_id == a[0] && it->plugin == p.id) {
            e.timers_.erase(it);
            return ret(status::kOk);
          }
        }
        return ret(status::kNotAvailable);
      });

  // -- byte capabilities --
  add("bytes_read", {kI64, kI64, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        if (!plugin(e).perms.bytes_api) return ret(status::kPermissionError);
        Engine::CapEntry* c = cap(e, a[0]);
        if (!c) return ret(status::kInvalidCapability);
        const std::uint64_t off = a[1], len = a[3];
        if (off + len < off || off + len > c->max_read) return ret(status::kRangeError);
        auto dst = guest(inst, a[2], len);
        std::memcpy(dst.data(), c->base + off, static_cast<std::size_t>(len));
        return ret(static_cast<std::int64_t>(len));
      });

  add("bytes_write", {kI64, kI64, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        if (!plugin(e).perms.bytes_api) return ret(status::kPermissionError);
        if (hook(e).observer) return ret(status::kPermissionError);
        Engine::CapEntry* c = cap(e, a[0]);
        if (!c) return ret(status::kInvalidCapability);
        const std::uint64_t off = a[1], len = a[3];
        if (c->read_only || off + len < off || off + len > c->max_write)
          return ret(status::kRangeError);
        auto src = guest(inst, a[2], len);
        std::memcpy(c->base + off, src.data(), static_cast<std::size_t>(len));
        c->written = std::max(c->written, off + len);
        return ret(static_cast<std::int64_t>(len));
      });

  // -- per-plugin file sandbox --
  add("file_open", {kI32, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (!p.perms.file_api) return ret(status::kPermissionError);
        if (p.sandbox_dir.empty()) return ret(status::kNotAvailable);
        if (a[1] == 0 || a[1] > 512) return ret(status::kRangeError);
        auto src = guest(inst, a[0], a[1]);
        std::string rel(src.begin(), src.end());
        // Paths are sandbox-relative; anything that could escape is denied.
        if (rel.find('\0') != std::string::npos || rel.front() == '/')
          return ret(status::kPermissionError);
        std::size_t start = 0;
        while (start <= rel.size()) {
          std::size_t slash = rel.find('/', start);
          std::string_view part(rel.data() + start,
                                (slash == std::string::npos ? rel.size() : slash) - start);
          if (part == ".." || part.empty()) return ret(status::kPermissionError);
          if (slash == std::string::npos) break;
          start = slash + 1;
        }
        const char* mode;
        switch (a[2]) {
          case 0: mode = "rb"; break;
          case 1: mode = "wb"; break;
          case 2: mode = "ab"; break;
          default: return ret(status::kRangeError);
        }
        for (std::size_t fd = 0; fd < p.files.size(); ++fd) {
          if (p.files[fd]) continue;
          std::FILE* f = std::fopen((p.sandbox_dir / rel).c_str(), mode);
          if (!f) return ret(status::kNotAvailable);
          p.files[fd] = f;
          return ret(static_cast<std::int64_t>(fd));
        }
        return ret(status::kRangeError);
      });

  add("file_read", {kI32, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (!p.perms.file_api) return ret(status::kPermissionError);
        if (a[0] >= p.files.size() || !p.files[a[0]]) return ret(status::kNotAvailable);
        auto dst = guest(inst, a[1], a[2]);
        std::size_t n = std::fread(dst.data(), 1, dst.size(), p.files[a[0]]);
        return ret(static_cast<std::int64_t>(n));
      });

  add("file_write", {kI32, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (!p.perms.file_api) return ret(status::kPermissionError);
        if (a[0] >= p.files.size() || !p.files[a[0]]) return ret(status::kNotAvailable);
        auto src = guest(inst, a[1], a[2]);
        std::size_t n = std::fwrite(src.data(), 1, src.size(), p.files[a[0]]);
        std::fflush(p.files[a[0]]);
        return ret(static_cast<std::int64_t>(n));
      });

  add("file_close", {kI32}, {kI64},
      [](void* env, wasm::Instance&, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (!p.perms.file_api) return ret(status::kPermissionError);
        if (a[0] >= p.files.size() || !p.files[a[0]]) return ret(status::kNotAvailable);
        std::fclose(p.files[a[0]]);
        p.files[a[0]] = nullptr;
        return ret(status::kOk);
      });

  // -- cross-plugin control --
  add("plugin_control", {kI32, kI32, kI64, kI32, kI32, kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        Engine::Plugin& p = plugin(e);
        if (hook(e).observer || !p.perms.control_api) return ret(status::kPermissionError);
        if (a[1] == 0 || a[1] > 256) return ret(status::kRangeError);
        auto name_bytes = guest(inst, a[0], a[1]);
        std::string target(name_bytes.begin(), name_bytes.end());

        std::vector<PluginVal> args;
        if (a[4] > 0) {
          if (a[4] > 16384) return ret(status::kRangeError);
          auto blob = guest(inst, a[3], a[4]);
          if (blob.empty()) return ret(status::kDecodeError);
          std::size_t count = blob[0];
          if (count > kMaxControlArgs) return ret(status::kRangeError);
          std::span<const std::uint8_t> rest = blob.subspan(1);
          for (std::size_t i = 0; i < count; ++i) {
            auto d = codec::decode_plugin_val(rest);
            if (!d) return ret(status::kDecodeError);
            args.push_back(std::move(d->value));
            rest = rest.subspan(d->consumed);
          }
        }

        RoutineResult r = e.control_dispatch(p.name, target, a[2], args);

        std::vector<std::uint8_t> out;
        out.push_back(static_cast<std::uint8_t>(r.outputs.size()));
        for (const auto& v : r.outputs) codec::encode_plugin_val(v, out);
        if (out.size() > a[6]) return ret(status::kRangeError);
        auto dst = guest(inst, a[5], out.size());
        std::memcpy(dst.data(), out.data(), out.size());
        return ret(r.status);
      });

  // -- debug text --
  add("log_line", {kI32, kI32}, {kI64},
      [](void* env, wasm::Instance& inst, std::span<const std::uint64_t> a) {
        Engine& e = eng(env);
        if (a[1] > 4096) return ret(status::kRangeError);
        auto src = guest(inst, a[0], a[1]);
        if (e.cfg_.log_sink)
          e.cfg_.log_sink(plugin(e).name,
                          std::string_view(reinterpret_cast<const char*>(src.data()),
                                           src.size()));
        return ret(status::kOk);
      });

  return api;
}

std::vector<wasm::HostFuncDef> build_plugin_api() { return PluginApi::build(); }

}  // namespace quicplug::engine
