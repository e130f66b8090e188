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
#ifndef QUICPLUG_WASM_INSTANCE_HPP
#define QUICPLUG_WASM_INSTANCE_HPP

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quicplug/wasm/module.hpp"

namespace quicplug::wasm {

enum class TrapKind {
  kUnreachable,
  kMemoryOutOfBounds,
  kDivByZero,
  kIntOverflow,
  kBadIndirectCall,
  kStackOverflow,
  kFuelExhausted,
  kHostError,
};

// Thrown by execution; the embedder catches at its dispatch boundary.
struct Trap {
  TrapKind kind;
  const char* msg;
};

const char* trap_kind_name(TrapKind k);

class Instance;

// Host function: raw 64-bit argument slots in, one slot out (ignored when
// the import type has no result). May throw Trap{kHostError} on contract
// violations such as bad guest pointers.
using HostFn =
    std::function<std::uint64_t(void* env, Instance&, std::span<const std::uint64_t>)>;

struct HostFuncDef {
  std::string module;
  std::string name;
  FuncType type;
  HostFn fn;
};

struct InstanceLimits {
  std::uint32_t max_pages = 256;        // 16 MiB of guest memory
  std::uint32_t max_call_depth = 256;
  std::uint32_t max_value_stack = 1u << 16;  // 64k slots
};

// One sandboxed execution of a parsed module: its linear memory, globals,
// table and resolved imports. Guest state is reachable only through this
// class; nothing hands out host addresses.
class Instance {
 public:
  static Expected<std::unique_ptr<Instance>, std::string> instantiate(
      std::shared_ptr<const Module> mod, std::span<const HostFuncDef> host_funcs,
      void* host_env, const InstanceLimits& limits, std::int64_t& fuel);

  // Calls the function at absolute index (imports first). Returns the
  // result slot if the function has one. Throws Trap; decrements fuel per
  // executed instruction. Reentrant: host functions may call back in.
  std::optional<std::uint64_t> call(std::uint32_t func_idx,
                                    std::span<const std::uint64_t> args,
                                    std::int64_t& fuel);

  std::optional<std::uint64_t> call_export(std::string_view name,
                                           std::span<const std::uint64_t> args,
                                           std::int64_t& fuel);

  const Module& module() const { return *mod_; }
  std::span<std::uint8_t> memory() { return mem_; }
  std::span<const std::uint8_t> memory() const { return mem_; }

  // Guest-pointer check used by host functions before touching memory.
  bool mem_ok(std::uint64_t ptr, std::uint64_t len) const {
    return ptr + len >= ptr && ptr + len <= mem_.size();
  }

  void* host_env() const { return host_env_; }

  ~Instance();
  Instance(const Instance&) = delete;
  Instance& operator=(const Instance&) = delete;

 private:
  Instance() = default;

  void run(std::uint32_t body_idx, std::int64_t& fuel);
  bool grow_memory(std::uint32_t delta_pages);

  std::shared_ptr<const Module> mod_;
  std::vector<HostFn> imports_;
  void* host_env_ = nullptr;
  InstanceLimits lim_;

  std::vector<std::uint8_t> mem_;
  std::uint32_t mem_pages_ = 0;
  std::uint32_t mem_max_pages_ = 0;
  std::vector<std::uint64_t> globals_;
  std::vector<std::uint32_t> table_;  // UINT32_MAX marks a null entry

  // Shared execution stack; reentrant calls nest on top of it.
  std::vector<std::uint64_t> stack_;
  std::size_t sp_ = 0;
  std::uint32_t depth_ = 0;
};

}  // namespace quicplug::wasm

#endif
