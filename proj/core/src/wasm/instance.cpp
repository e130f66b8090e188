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
#include "quicplug/wasm/instance.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace quicplug::wasm {

namespace {

constexpr std::uint32_t kPageSize = 65536;
constexpr std::uint32_t kNullFunc = UINT32_MAX;

inline float as_f32(std::uint64_t bits) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
}
inline double as_f64(std::uint64_t bits) { return std::bit_cast<double>(bits); }
inline std::uint64_t from_f32(float f) { return std::bit_cast<std::uint32_t>(f); }
inline std::uint64_t from_f64(double d) { return std::bit_cast<std::uint64_t>(d); }

template <typename To, typename From>
std::uint64_t trunc_checked(From v) {
  if (std::isnan(v)) throw Trap{TrapKind::kIntOverflow, "nan in trunc"};
  constexpr double lo = static_cast<double>(std::numeric_limits<To>::min());
  constexpr double hi = static_cast<double>(std::numeric_limits<To>::max());
  const double t = std::trunc(static_cast<double>(v));
  // Upper bound is exclusive where the limit is not exactly representable.
  if (t < lo || t >= hi + 1.0) throw Trap{TrapKind::kIntOverflow, "trunc out of range"};
  if constexpr (std::is_signed_v<To>)
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<To>(t)));
  else
    return static_cast<To>(t);
}

// wasm min/max: NaN if either operand is NaN; min(-0, +0) is -0.
template <typename F>
F wmin(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? a : b;
  return a < b ? a : b;
}
template <typename F>
F wmax(F a, F b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<F>::quiet_NaN();
  if (a == b) return std::signbit(a) ? b : a;
  return a > b ? a : b;
}

template <typename To, typename From>
std::uint64_t trunc_sat(From v) {
  if (std::isnan(v)) return 0;
  const double t = std::trunc(static_cast<double>(v));
  constexpr double lo = static_cast<double>(std::numeric_limits<To>::min());
  constexpr double hi = static_cast<double>(std::numeric_limits<To>::max());
  To r;
  if (t < lo)
    r = std::numeric_limits<To>::min();
  else if (t >= hi + 1.0)
    r = std::numeric_limits<To>::max();
  else
    r = static_cast<To>(t);
  if constexpr (std::is_signed_v<To>)
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(r));
  else
    return static_cast<std::uint64_t>(r);
}

}  // namespace

const char* trap_kind_name(TrapKind k) {
  switch (k) {
    case TrapKind::kUnreachable: return "unreachable";
    case TrapKind::kMemoryOutOfBounds: return "memory out of bounds";
    case TrapKind::kDivByZero: return "division by zero";
    case TrapKind::kIntOverflow: return "integer overflow";
    case TrapKind::kBadIndirectCall: return "bad indirect call";
    case TrapKind::kStackOverflow: return "stack exhausted";
    case TrapKind::kFuelExhausted: return "fuel exhausted";
    case TrapKind::kHostError: return "host error";
  }
  return "trap";
}

Instance::~Instance() = default;

Expected<std::unique_ptr<Instance>, std::string> Instance::instantiate(
    std::shared_ptr<const Module> mod, std::span<const HostFuncDef> host_funcs,
    void* host_env, const InstanceLimits& limits, std::int64_t& fuel) {
  auto inst = std::unique_ptr<Instance>(new Instance());
  inst->mod_ = std::move(mod);
  inst->host_env_ = host_env;
  inst->lim_ = limits;
  const Module& m = *inst->mod_;

  // Resolve imports by (module, name) with exact signature match.
  inst->imports_.reserve(m.imports.size());
  for (const auto& imp : m.imports) {
    const HostFuncDef* found = nullptr;
    for (const auto& h : host_funcs) {
      if (h.module == imp.module && h.name == imp.name) {
        found = &h;
        break;
      }
    }
    if (!found) return "unresolved import: " + imp.module + "." + imp.name;
    if (!(found->type == m.types[imp.type_idx]))
      return "import signature mismatch: " + imp.module + "." + imp.name;
    inst->imports_.push_back(found->fn);
  }

  if (m.memory) {
    if (m.memory->min > limits.max_pages) return std::string("memory exceeds limit");
    inst->mem_pages_ = m.memory->min;
    inst->mem_max_pages_ =
        std::min(limits.max_pages, m.memory->max.value_or(limits.max_pages));
    inst->mem_.assign(std::size_t{inst->mem_pages_} * kPageSize, 0);
  }
  for (const auto& seg : m.data) {
    if (std::size_t{seg.offset} + seg.bytes.size() > inst->mem_.size())
      return std::string("data segment out of bounds");
    std::memcpy(inst->mem_.data() + seg.offset, seg.bytes.data(), seg.bytes.size());
  }

  if (m.table) inst->table_.assign(m.table->min, kNullFunc);
  for (const auto& seg : m.elems) {
    if (std::size_t{seg.offset} + seg.funcs.size() > inst->table_.size())
      return std::string("elem segment out of bounds");
    std::copy(seg.funcs.begin(), seg.funcs.end(), inst->table_.begin() + seg.offset);
  }

  for (const auto& g : m.globals) inst->globals_.push_back(g.init);

  inst->stack_.resize(limits.max_value_stack);

  if (m.start) {
    try {
      inst->call(*m.start, {}, fuel);
    } catch (const Trap& t) {
      return std::string("start function trapped: ") + trap_kind_name(t.kind);
    }
  }
  return inst;
}

std::optional<std::uint64_t> Instance::call_export(std::string_view name,
                                                   std::span<const std::uint64_t> args,
                                                   std::int64_t& fuel) {
  const Export* e = mod_->find_export(name, ExportKind::kFunc);
  if (!e) throw Trap{TrapKind::kHostError, "no such export"};
  return call(e->index, args, fuel);
}

std::optional<std::uint64_t> Instance::call(std::uint32_t func_idx,
                                            std::span<const std::uint64_t> args,
                                            std::int64_t& fuel) {
  const Module& m = *mod_;
  const FuncType& ft = m.func_type(func_idx);
  if (args.size() != ft.params.size()) throw Trap{TrapKind::kHostError, "arity mismatch"};

  if (func_idx < m.imports.size()) {
    const std::uint64_t r = imports_[func_idx](host_env_, *this, args);
    if (ft.results.empty()) return std::nullopt;
    return r;
  }

  const std::size_t entry_sp = sp_;
  if (sp_ + args.size() > stack_.size()) throw Trap{TrapKind::kStackOverflow, "entry"};
  for (std::uint64_t a : args) stack_[sp_++] = a;
  try {
    run(func_idx - static_cast<std::uint32_t>(m.imports.size()), fuel);
  } catch (...) {
    sp_ = entry_sp;
    throw;
  }
  std::optional<std::uint64_t> result;
  if (!ft.results.empty()) result = stack_[sp_ - 1];
  sp_ = entry_sp;
  return result;
}

bool Instance::grow_memory(std::uint32_t delta_pages) {
  const std::uint64_t want = std::uint64_t{mem_pages_} + delta_pages;
  if (want > mem_max_pages_) return false;
  mem_pages_ = static_cast<std::uint32_t>(want);
  mem_.resize(std::size_t{mem_pages_} * kPageSize, 0);
  return true;
}

// The dispatch loop. Locals live on the shared slot stack below the operand
// area of each frame; validation already proved types and operand depths, so
// only memory accesses, call depth and fuel are checked dynamically.
void Instance::run(std::uint32_t entry_body, std::int64_t& fuel) {
  struct CallFrame {
    std::uint32_t body_idx;
    std::uint32_t pc;
    std::uint32_t locals_base;
  };

  const Module& m = *mod_;
  std::vector<CallFrame> frames;
  frames.reserve(64);

  if (++depth_ > lim_.max_call_depth) {
    --depth_;
    throw Trap{TrapKind::kStackOverflow, "call depth"};
  }

  // Entry frame setup: args are already on the stack.
  const FuncBody* body = &m.bodies[entry_body];
  std::size_t locals_base = sp_ - body->param_count;
  if (locals_base + body->local_count + body->max_stack > stack_.size()) {
    --depth_;
    throw Trap{TrapKind::kStackOverflow, "value stack"};
  }
  for (std::uint32_t i = body->param_count; i < body->local_count; ++i)
    stack_[locals_base + i] = 0;
  sp_ = locals_base + body->local_count;
  std::size_t operand_base = sp_;
  frames.push_back({entry_body, 0, static_cast<std::uint32_t>(locals_base)});

  const Instr* code = body->code.data();
  std::uint32_t pc = 0;

  auto save_restore_exit = [&] { --depth_; };

  try {
    for (;;) {
      const Instr& in = code[pc++];
      if (--fuel < 0) throw Trap{TrapKind::kFuelExhausted, "fuel"};

      switch (in.op) {
        case 0x00:
          throw Trap{TrapKind::kUnreachable, "unreachable"};

        case op::kJump:
          pc = in.b;
          break;
        case op::kJumpIfZero: {
          const std::uint64_t c = stack_[--sp_];
          if (static_cast<std::uint32_t>(c) == 0) pc = in.b;
          break;
        }
        case op::kBr: {
          // Keep the top `arity` values, unwind to the recorded height.
          const std::size_t target = operand_base + in.imm;
          if (in.a) stack_[target] = stack_[sp_ - 1];
          sp_ = target + in.a;
          pc = in.b;
          break;
        }
        case op::kBrIf: {
          const std::uint64_t c = stack_[--sp_];
          if (static_cast<std::uint32_t>(c) != 0) {
            const std::size_t target = operand_base + in.imm;
            if (in.a) stack_[target] = stack_[sp_ - 1];
            sp_ = target + in.a;
            pc = in.b;
          }
          break;
        }
        case op::kBrTable: {
          const std::uint32_t idx = static_cast<std::uint32_t>(stack_[--sp_]);
          const auto& table = m.br_tables[in.b];
          const BrTarget& t =
              table[idx < table.size() - 1 ? idx : table.size() - 1];
          const std::size_t target = operand_base + t.height;
          if (t.arity) stack_[target] = stack_[sp_ - 1];
          sp_ = target + t.arity;
          pc = t.pc;
          break;
        }
        case op::kReturn: {
          const CallFrame done = frames.back();
          frames.pop_back();
          const std::size_t lb = done.locals_base;
          if (in.a) stack_[lb] = stack_[sp_ - 1];
          sp_ = lb + in.a;
          if (frames.empty()) {
            save_restore_exit();
            return;
          }
          const CallFrame& up = frames.back();
          body = &m.bodies[up.body_idx];
          code = body->code.data();
          pc = up.pc;
          locals_base = up.locals_base;
          operand_base = locals_base + body->local_count;
          break;
        }
        case op::kCall: {
          frames.back().pc = pc;
          if (frames.size() + depth_ > lim_.max_call_depth)
            throw Trap{TrapKind::kStackOverflow, "call depth"};
          const FuncBody& callee = m.bodies[in.b];
          const std::size_t lb = sp_ - callee.param_count;
          if (lb + callee.local_count + callee.max_stack > stack_.size())
            throw Trap{TrapKind::kStackOverflow, "value stack"};
          for (std::uint32_t i = callee.param_count; i < callee.local_count; ++i)
            stack_[lb + i] = 0;
          sp_ = lb + callee.local_count;
          frames.push_back({in.b, 0, static_cast<std::uint32_t>(lb)});
          body = &callee;
          code = body->code.data();
          pc = 0;
          locals_base = lb;
          operand_base = sp_;
          break;
        }
        case op::kCallHost: {
          const std::size_t nargs = in.a;
          std::span<const std::uint64_t> args(stack_.data() + sp_ - nargs, nargs);
          const std::uint64_t r = imports_[in.b](host_env_, *this, args);
          sp_ -= nargs;
          if (in.imm) stack_[sp_++] = r;
          break;
        }
        case op::kCallIndirect: {
          const std::uint32_t elem = static_cast<std::uint32_t>(stack_[--sp_]);
          if (elem >= table_.size()) throw Trap{TrapKind::kBadIndirectCall, "table oob"};
          const std::uint32_t fidx = table_[elem];
          if (fidx == kNullFunc) throw Trap{TrapKind::kBadIndirectCall, "null entry"};
          const std::uint32_t callee_tidx =
              fidx < m.imports.size()
                  ? m.imports[fidx].type_idx
                  : m.func_type_idx[fidx - m.imports.size()];
          if (m.canonical_type[callee_tidx] != m.canonical_type[in.b])
            throw Trap{TrapKind::kBadIndirectCall, "type mismatch"};
          if (fidx < m.imports.size()) {
            const std::size_t nargs = in.a;
            std::span<const std::uint64_t> args(stack_.data() + sp_ - nargs, nargs);
            const std::uint64_t r = imports_[fidx](host_env_, *this, args);
            sp_ -= nargs;
            if (in.imm) stack_[sp_++] = r;
            break;
          }
          frames.back().pc = pc;
          if (frames.size() + depth_ > lim_.max_call_depth)
            throw Trap{TrapKind::kStackOverflow, "call depth"};
          const std::uint32_t bidx = fidx - static_cast<std::uint32_t>(m.imports.size());
          const FuncBody& callee = m.bodies[bidx];
          const std::size_t lb = sp_ - callee.param_count;
          if (lb + callee.local_count + callee.max_stack > stack_.size())
            throw Trap{TrapKind::kStackOverflow, "value stack"};
          for (std::uint32_t i = callee.param_count; i < callee.local_count; ++i)
            stack_[lb + i] = 0;
          sp_ = lb + callee.local_count;
          frames.push_back({bidx, 0, static_cast<std::uint32_t>(lb)});
          body = &callee;
          code = body->code.data();
          pc = 0;
          locals_base = lb;
          operand_base = sp_;
          break;
        }

        case 0x1a:  // drop
          --sp_;
          break;
        case 0x1b: {  // select
          const std::uint64_t c = stack_[--sp_];
          const std::uint64_t b = stack_[--sp_];
          if (static_cast<std::uint32_t>(c) == 0) stack_[sp_ - 1] = b;
          break;
        }
        case 0x20:
          stack_[sp_++] = stack_[locals_base + in.b];
          break;
        case 0x21:
          stack_[locals_base + in.b] = stack_[--sp_];
          break;
        case 0x22:
          stack_[locals_base + in.b] = stack_[sp_ - 1];
          break;
        case 0x23:
          stack_[sp_++] = globals_[in.b];
          break;
        case 0x24:
          globals_[in.b] = stack_[--sp_];
          break;

#define MEM_ADDR(size_)                                                     \
  const std::uint64_t addr =                                                \
      static_cast<std::uint32_t>(stack_[--sp_]) + in.imm;                   \
  if (addr + (size_) > mem_.size() || addr + (size_) < addr)                \
    throw Trap{TrapKind::kMemoryOutOfBounds, "load/store"};

        case 0x28: {  // i32.load
          MEM_ADDR(4)
          std::uint32_t v;
          std::memcpy(&v, mem_.data() + addr, 4);
          stack_[sp_++] = v;
          break;
        }
        case 0x29: {  // i64.load
          MEM_ADDR(8)
          std::uint64_t v;
          std::memcpy(&v, mem_.data() + addr, 8);
          stack_[sp_++] = v;
          break;
        }
        case 0x2a: {  // f32.load
          MEM_ADDR(4)
          std::uint32_t v;
          std::memcpy(&v, mem_.data() + addr, 4);
          stack_[sp_++] = v;
          break;
        }
        case 0x2b: {  // f64.load
          MEM_ADDR(8)
          std::uint64_t v;
          std::memcpy(&v, mem_.data() + addr, 8);
          stack_[sp_++] = v;
          break;
        }
        case 0x2c: {  // i32.load8_s
          MEM_ADDR(1)
          stack_[sp_++] = static_cast<std::uint32_t>(
              static_cast<std::int32_t>(static_cast<std::int8_t>(mem_[addr])));
          break;
        }
        case 0x2d: {  // i32.load8_u
          MEM_ADDR(1)
          stack_[sp_++] = mem_[addr];
          break;
        }
        case 0x2e: {  // i32.load16_s
          MEM_ADDR(2)
          std::uint16_t v;
          std::memcpy(&v, mem_.data() + addr, 2);
          stack_[sp_++] = static_cast<std::uint32_t>(
              static_cast<std::int32_t>(static_cast<std::int16_t>(v)));
          break;
        }
        case 0x2f: {  // i32.load16_u
          MEM_ADDR(2)
          std::uint16_t v;
          std::memcpy(&v, mem_.data() + addr, 2);
          stack_[sp_++] = v;
          break;
        }
        case 0x30: {  // i64.load8_s
          MEM_ADDR(1)
          stack_[sp_++] = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(static_cast<std::int8_t>(mem_[addr])));
          break;
        }
        case 0x31: {  // i64.load8_u
          MEM_ADDR(1)
          stack_[sp_++] = mem_[addr];
          break;
        }
        case 0x32: {  // i64.load16_s
          MEM_ADDR(2)
          std::uint16_t v;
          std::memcpy(&v, mem_.data() + addr, 2);
          stack_[sp_++] = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(static_cast<std::int16_t>(v)));
          break;
        }
        case 0x33: {  // i64.load16_u
          MEM_ADDR(2)
          std::uint16_t v;
          std::memcpy(&v, mem_.data() + addr, 2);
          stack_[sp_++] = v;
          break;
        }
        case 0x34: {  // i64.load32_s
          MEM_ADDR(4)
          std::uint32_t v;
          std::memcpy(&v, mem_.data() + addr, 4);
          stack_[sp_++] = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(static_cast<std::int32_t>(v)));
          break;
        }
        case 0x35: {  // i64.load32_u
          MEM_ADDR(4)
          std::uint32_t v;
          std::memcpy(&v, mem_.data() + addr, 4);
          stack_[sp_++] = v;
          break;
        }
        case 0x36: {  // i32.store
          const std::uint32_t val = static_cast<std::uint32_t>(stack_[--sp_]);
          MEM_ADDR(4)
          std::memcpy(mem_.data() + addr, &val, 4);
          break;
        }
        case 0x37: {  // i64.store
          const std::uint64_t val = stack_[--sp_];
          MEM_ADDR(8)
          std::memcpy(mem_.data() + addr, &val, 8);
          break;
        }
        case 0x38: {  // f32.store
          const std::uint32_t val = static_cast<std::uint32_t>(stack_[--sp_]);
          MEM_ADDR(4)
          std::memcpy(mem_.data() + addr, &val, 4);
          break;
        }
        case 0x39: {  // f64.store
          const std::uint64_t val = stack_[--sp_];
          MEM_ADDR(8)
          std::memcpy(mem_.data() + addr, &val, 8);
          break;
        }
        case 0x3a: {  // i32.store8
          const std::uint8_t val = static_cast<std::uint8_t>(stack_[--sp_]);
          MEM_ADDR(1)
          mem_[addr] = val;
          break;
        }
        case 0x3b: {  // i32.store16
          const std::uint16_t val = static_cast<std::uint16_t>(stack_[--sp_]);
          MEM_ADDR(2)
          std::memcpy(mem_.data() + addr, &val, 2);
          break;
        }
        case 0x3c: {  // i64.store8
          const std::uint8_t val = static_cast<std::uint8_t>(stack_[--sp_]);
          MEM_ADDR(1)
          mem_[addr] = val;
          break;
        }
        case 0x3d: {  // i64.store16
          const std::uint16_t val = static_cast<std::uint16_t>(stack_[--sp_]);
          MEM_ADDR(2)
          std::memcpy(mem_.data() + addr, &val, 2);
          break;
        }
        case 0x3e: {  // i64.store32
          const std::uint32_t val = static_cast<std::uint32_t>(stack_[--sp_]);
          MEM_ADDR(4)
          std::memcpy(mem_.data() + addr, &val, 4);
          break;
        }
#undef MEM_ADDR

        case 0x3f:  // memory.size
          stack_[sp_++] = mem_pages_;
          break;
        case 0x40: {  // memory.grow
          const std::uint32_t delta = static_cast<std::uint32_t>(stack_[--sp_]);
          const std::uint32_t old = mem_pages_;
          stack_[sp_++] = grow_memory(delta) ? old : 0xffffffffu;
          break;
        }

        case 0x41:  // i32.const
        case 0x42:  // i64.const
        case 0x43:  // f32.const
        case 0x44:  // f64.const
          stack_[sp_++] = in.imm;
          break;

#define TOP stack_[sp_ - 1]
#define I32_BIN(expr)                                                  \
  {                                                                    \
    const std::uint32_t rhs = static_cast<std::uint32_t>(stack_[--sp_]); \
    const std::uint32_t lhs = static_cast<std::uint32_t>(TOP);          \
    TOP = static_cast<std::uint32_t>(expr);                             \
    break;                                                              \
  }
#define I64_BIN(expr)                                  \
  {                                                    \
    const std::uint64_t rhs = stack_[--sp_];           \
    const std::uint64_t lhs = TOP;                     \
    TOP = (expr);                                      \
    break;                                             \
  }
#define F32_BIN(expr)                                   \
  {                                                     \
    const float rhs = as_f32(stack_[--sp_]);            \
    const float lhs = as_f32(TOP);                      \
    TOP = from_f32(expr);                               \
    break;                                              \
  }
#define F64_BIN(expr)                                   \
  {                                                     \
    const double rhs = as_f64(stack_[--sp_]);           \
    const double lhs = as_f64(TOP);                     \
    TOP = from_f64(expr);                               \
    break;                                              \
  }
#define CMP(expr)                                       \
  {                                                     \
    TOP = (expr) ? 1u : 0u;                             \
    break;                                              \
  }

        case 0x45:  // i32.eqz
          TOP = static_cast<std::uint32_t>(TOP) == 0 ? 1 : 0;
          break;
        case 0x46: { const std::uint32_t r = static_cast<std::uint32_t>(stack_[--sp_]); const std::uint32_t l = static_cast<std::uint32_t>(TOP); CMP(l == r) }
        case 0x47: { const std::uint32_t r = static_cast<std::uint32_t>(stack_[--sp_]); const std::uint32_t l = static_cast<std::uint32_t>(TOP); CMP(l != r) }
        case 0x48: { const std::int32_t r = static_cast<std::int32_t>(stack_[--sp_]); const std::int32_t l = static_cast<std::int32_t>(TOP); CMP(l < r) }
        case 0x49: { const std::uint32_t r = static_cast<std::uint32_t>(stack_[--sp_]); const std::uint32_t l = static_cast<std::uint32_t>(TOP); CMP(l < r) }
        case 0x4a: { const std::int32_t r = static_cast<std::int32_t>(stack_[--sp_]); const std::int32_t l = static_cast<std::int32_t>(TOP); CMP(l > r) }
        case 0x4b: { const std::uint32_t r = static_cast<std::uint32_t>(stack_[--sp_]); const std::uint32_t l = static_cast<std::uint32_t>(TOP); CMP(l > r) }
        case 0x4c: { const std::int32_t r = static_cast<std::int32_t>(stack_[--sp_]); const std::int32_t l = static_cast<std::int32_t>(TOP); CMP(l <= r) }
        case 0x4d: { const std::uint32_t r = static_cast<std::uint32_t>(stack_[--sp_]); const std::uint32_t l = static_cast<std::uint32_t>(TOP); CMP(l <= r) }
        case 0x4e: { const std::int32_t r = static_cast<std::int32_t>(stack_[--sp_]); const std::int32_t l = static_cast<std::int32_t>(TOP); CMP(l >= r) }
        case 0x4f: { const std::uint32_t r = static_cast<std::uint32_t>(stack_[--sp_]); const std::uint32_t l = static_cast<std::uint32_t>(TOP); CMP(l >= r) }

        case 0x50:  // i64.eqz
          TOP = TOP == 0 ? 1 : 0;
          break;
        case 0x51: { const std::uint64_t r = stack_[--sp_]; const std::uint64_t l = TOP; CMP(l == r) }
        case 0x52: { const std::uint64_t r = stack_[--sp_]; const std::uint64_t l = TOP; CMP(l != r) }
        case 0x53: { const std::int64_t r = static_cast<std::int64_t>(stack_[--sp_]); const std::int64_t l = static_cast<std::int64_t>(TOP); CMP(l < r) }
        case 0x54: { const std::uint64_t r = stack_[--sp_]; const std::uint64_t l = TOP; CMP(l < r) }
        case 0x55: { const std::int64_t r = static_cast<std::int64_t>(stack_[--sp_]); const std::int64_t l = static_cast<std::int64_t>(TOP); CMP(l > r) }
        case 0x56: { const std::uint64_t r = stack_[--sp_]; const std::uint64_t l = TOP; CMP(l > r) }
        case 0x57: { const std::int64_t r = static_cast<std::int64_t>(stack_[--sp_]); const std::int64_t l = static_cast<std::int64_t>(TOP); CMP(l <= r) }
        case 0x58: { const std::uint64_t r = stack_[--sp_]; const std::uint64_t l = TOP; CMP(l <= r) }
        case 0x59: { const std::int64_t r = static_cast<std::int64_t>(stack_[--sp_]); const std::int64_t l = static_cast<std::int64_t>(TOP); CMP(l >= r) }
        case 0x5a: { const std::uint64_t r = stack_[--sp_]; const std::uint64_t l = TOP; CMP(l >= r) }

        case 0x5b: { const float r = as_f32(stack_[--sp_]); const float l = as_f32(TOP); CMP(l == r) }
        case 0x5c: { const float r = as_f32(stack_[--sp_]); const float l = as_f32(TOP); CMP(l != r) }
        case 0x5d: { const float r = as_f32(stack_[--sp_]); const float l = as_f32(TOP); CMP(l < r) }
        case 0x5e: { const float r = as_f32(stack_[--sp_]); const float l = as_f32(TOP); CMP(l > r) }
        case 0x5f: { const float r = as_f32(stack_[--sp_]); const float l = as_f32(TOP); CMP(l <= r) }
        case 0x60: { const float r = as_f32(stack_[--sp_]); const float l = as_f32(TOP); CMP(l >= r) }
        case 0x61: { const double r = as_f64(stack_[--sp_]); const double l = as_f64(TOP); CMP(l == r) }
        case 0x62: { const double r = as_f64(stack_[--sp_]); const double l = as_f64(TOP); CMP(l != r) }
        case 0x63: { const double r = as_f64(stack_[--sp_]); const double l = as_f64(TOP); CMP(l < r) }
        case 0x64: { const double r = as_f64(stack_[--sp_]); const double l = as_f64(TOP); CMP(l > r) }
        case 0x65: { const double r = as_f64(stack_[--sp_]); const double l = as_f64(TOP); CMP(l <= r) }
        case 0x66: { const double r = as_f64(stack_[--sp_]); const double l = as_f64(TOP); CMP(l >= r) }

        case 0x67: {  // i32.clz
          const std::uint32_t v = static_cast<std::uint32_t>(TOP);
          TOP = v == 0 ? 32 : static_cast<std::uint32_t>(__builtin_clz(v));
          break;
        }
        case 0x68: {  // i32.ctz
          const std::uint32_t v = static_cast<std::uint32_t>(TOP);
          TOP = v == 0 ? 32 : static_cast<std::uint32_t>(__builtin_ctz(v));
          break;
        }
        case 0x69:  // i32.popcnt
          TOP = static_cast<std::uint32_t>(
              __builtin_popcount(static_cast<std::uint32_t>(TOP)));
          break;
        case 0x6a: I32_BIN(lhs + rhs)
        case 0x6b: I32_BIN(lhs - rhs)
        case 0x6c: I32_BIN(lhs * rhs)
        case 0x6d: {  // i32.div_s
          const std::int32_t rhs = static_cast<std::int32_t>(stack_[--sp_]);
          const std::int32_t lhs = static_cast<std::int32_t>(TOP);
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i32.div_s"};
          if (lhs == std::numeric_limits<std::int32_t>::min() && rhs == -1)
            throw Trap{TrapKind::kIntOverflow, "i32.div_s"};
          TOP = static_cast<std::uint32_t>(lhs / rhs);
          break;
        }
        case 0x6e: {  // i32.div_u
          const std::uint32_t rhs = static_cast<std::uint32_t>(stack_[--sp_]);
          const std::uint32_t lhs = static_cast<std::uint32_t>(TOP);
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i32.div_u"};
          TOP = lhs / rhs;
          break;
        }
        case 0x6f: {  // i32.rem_s
          const std::int32_t rhs = static_cast<std::int32_t>(stack_[--sp_]);
          const std::int32_t lhs = static_cast<std::int32_t>(TOP);
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i32.rem_s"};
          TOP = static_cast<std::uint32_t>(
              (lhs == std::numeric_limits<std::int32_t>::min() && rhs == -1) ? 0
                                                                             : lhs % rhs);
          break;
        }
        case 0x70: {  // i32.rem_u
          const std::uint32_t rhs = static_cast<std::uint32_t>(stack_[--sp_]);
          const std::uint32_t lhs = static_cast<std::uint32_t>(TOP);
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i32.rem_u"};
          TOP = lhs % rhs;
          break;
        }
        case 0x71: I32_BIN(lhs & rhs)
        case 0x72: I32_BIN(lhs | rhs)
        case 0x73: I32_BIN(lhs ^ rhs)
        case 0x74: I32_BIN(lhs << (rhs & 31))
        case 0x75: I32_BIN(static_cast<std::uint32_t>(static_cast<std::int32_t>(lhs) >> (rhs & 31)))
        case 0x76: I32_BIN(lhs >> (rhs & 31))
        case 0x77: I32_BIN((lhs << (rhs & 31)) | (lhs >> ((32 - (rhs & 31)) & 31)))
        case 0x78: I32_BIN((lhs >> (rhs & 31)) | (lhs << ((32 - (rhs & 31)) & 31)))

        case 0x79: {  // i64.clz
          const std::uint64_t v = TOP;
          TOP = v == 0 ? 64 : static_cast<std::uint64_t>(__builtin_clzll(v));
          break;
        }
        case 0x7a: {  // i64.ctz
          const std::uint64_t v = TOP;
          TOP = v == 0 ? 64 : static_cast<std::uint64_t>(__builtin_ctzll(v));
          break;
        }
        case 0x7b:  // i64.popcnt
          TOP = static_cast<std::uint64_t>(__builtin_popcountll(TOP));
          break;
        case 0x7c: I64_BIN(lhs + rhs)
        case 0x7d: I64_BIN(lhs - rhs)
        case 0x7e: I64_BIN(lhs * rhs)
        case 0x7f: {  // i64.div_s
          const std::int64_t rhs = static_cast<std::int64_t>(stack_[--sp_]);
          const std::int64_t lhs = static_cast<std::int64_t>(TOP);
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i64.div_s"};
          if (lhs == std::numeric_limits<std::int64_t>::min() && rhs == -1)
            throw Trap{TrapKind::kIntOverflow, "i64.div_s"};
          TOP = static_cast<std::uint64_t>(lhs / rhs);
          break;
        }
        case 0x80: {  // i64.div_u
          const std::uint64_t rhs = stack_[--sp_];
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i64.div_u"};
          TOP = TOP / rhs;
          break;
        }
        case 0x81: {  // i64.rem_s
          const std::int64_t rhs = static_cast<std::int64_t>(stack_[--sp_]);
          const std::int64_t lhs = static_cast<std::int64_t>(TOP);
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i64.rem_s"};
          TOP = static_cast<std::uint64_t>(
              (lhs == std::numeric_limits<std::int64_t>::min() && rhs == -1) ? 0
                                                                             : lhs % rhs);
          break;
        }
        case 0x82: {  // i64.rem_u
          const std::uint64_t rhs = stack_[--sp_];
          if (rhs == 0) throw Trap{TrapKind::kDivByZero, "i64.rem_u"};
          TOP = TOP % rhs;
          break;
        }
        case 0x83: I64_BIN(lhs & rhs)
        case 0x84: I64_BIN(lhs | rhs)
        case 0x85: I64_BIN(lhs ^ rhs)
        case 0x86: I64_BIN(lhs << (rhs & 63))
        case 0x87: I64_BIN(static_cast<std::uint64_t>(static_cast<std::int64_t>(lhs) >> (rhs & 63)))
        case 0x88: I64_BIN(lhs >> (rhs & 63))
        case 0x89: I64_BIN((lhs << (rhs & 63)) | (lhs >> ((64 - (rhs & 63)) & 63)))
        case 0x8a: I64_BIN((lhs >> (rhs & 63)) | (lhs << ((64 - (rhs & 63)) & 63)))

        case 0x8b: TOP = from_f32(std::fabs(as_f32(TOP))); break;
        case 0x8c: TOP = from_f32(-as_f32(TOP)); break;
        case 0x8d: TOP = from_f32(std::ceil(as_f32(TOP))); break;
        case 0x8e: TOP = from_f32(std::floor(as_f32(TOP))); break;
        case 0x8f: TOP = from_f32(std::trunc(as_f32(TOP))); break;
        case 0x90: TOP = from_f32(std::nearbyint(as_f32(TOP))); break;
        case 0x91: TOP = from_f32(std::sqrt(as_f32(TOP))); break;
        case 0x92: F32_BIN(lhs + rhs)
        case 0x93: F32_BIN(lhs - rhs)
        case 0x94: F32_BIN(lhs * rhs)
        case 0x95: F32_BIN(lhs / rhs)
        case 0x96: F32_BIN(wmin(lhs, rhs))
        case 0x97: F32_BIN(wmax(lhs, rhs))
        case 0x98: F32_BIN(std::copysign(lhs, rhs))

        case 0x99: TOP = from_f64(std::fabs(as_f64(TOP))); break;
        case 0x9a: TOP = from_f64(-as_f64(TOP)); break;
        case 0x9b: TOP = from_f64(std::ceil(as_f64(TOP))); break;
        case 0x9c: TOP = from_f64(std::floor(as_f64(TOP))); break;
        case 0x9d: TOP = from_f64(std::trunc(as_f64(TOP))); break;
        case 0x9e: TOP = from_f64(std::nearbyint(as_f64(TOP))); break;
        case 0x9f: TOP = from_f64(std::sqrt(as_f64(TOP))); break;
        case 0xa0: F64_BIN(lhs + rhs)
        case 0xa1: F64_BIN(lhs - rhs)
        case 0xa2: F64_BIN(lhs * rhs)
        case 0xa3: F64_BIN(lhs / rhs)
        case 0xa4: F64_BIN(wmin(lhs, rhs))
        case 0xa5: F64_BIN(wmax(lhs, rhs))
        case 0xa6: F64_BIN(std::copysign(lhs, rhs))

        case 0xa7:  // i32.wrap_i64
          TOP = static_cast<std::uint32_t>(TOP);
          break;
        case 0xa8: TOP = trunc_checked<std::int32_t>(as_f32(TOP)); break;
        case 0xa9: TOP = trunc_checked<std::uint32_t>(as_f32(TOP)); break;
        case 0xaa: TOP = trunc_checked<std::int32_t>(as_f64(TOP)); break;
        case 0xab: TOP = trunc_checked<std::uint32_t>(as_f64(TOP)); break;
        case 0xac:  // i64.extend_i32_s
          TOP = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(static_cast<std::int32_t>(TOP)));
          break;
        case 0xad:  // i64.extend_i32_u
          TOP = static_cast<std::uint32_t>(TOP);
          break;
        case 0xae: TOP = trunc_checked<std::int64_t>(as_f32(TOP)); break;
        case 0xaf: TOP = trunc_checked<std::uint64_t>(as_f32(TOP)); break;
        case 0xb0: TOP = trunc_checked<std::int64_t>(as_f64(TOP)); break;
        case 0xb1: TOP = trunc_checked<std::uint64_t>(as_f64(TOP)); break;
        case 0xb2: TOP = from_f32(static_cast<float>(static_cast<std::int32_t>(TOP))); break;
        case 0xb3: TOP = from_f32(static_cast<float>(static_cast<std::uint32_t>(TOP))); break;
        case 0xb4: TOP = from_f32(static_cast<float>(static_cast<std::int64_t>(TOP))); break;
        case 0xb5: TOP = from_f32(static_cast<float>(TOP)); break;
        case 0xb6: TOP = from_f32(static_cast<float>(as_f64(TOP))); break;
        case 0xb7: TOP = from_f64(static_cast<double>(static_cast<std::int32_t>(TOP))); break;
        case 0xb8: TOP = from_f64(static_cast<double>(static_cast<std::uint32_t>(TOP))); break;
        case 0xb9: TOP = from_f64(static_cast<double>(static_cast<std::int64_t>(TOP))); break;
        case 0xba: TOP = from_f64(static_cast<double>(TOP)); break;
        case 0xbb: TOP = from_f64(static_cast<double>(as_f32(TOP))); break;
        case 0xbc:  // i32.reinterpret_f32
        case 0xbe:  // f32.reinterpret_i32
          TOP = static_cast<std::uint32_t>(TOP);
          break;
        case 0xbd:  // i64.reinterpret_f64
        case 0xbf:  // f64.reinterpret_i64
          break;

        case 0xc0:  // i32.extend8_s
          TOP = static_cast<std::uint32_t>(
              static_cast<std::int32_t>(static_cast<std::int8_t>(TOP)));
          break;
        case 0xc1:  // i32.extend16_s
          TOP = static_cast<std::uint32_t>(
              static_cast<std::int32_t>(static_cast<std::int16_t>(TOP)));
          break;
        case 0xc2:  // i64.extend8_s
          TOP = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(static_cast<std::int8_t>(TOP)));
          break;
        case 0xc3:  // i64.extend16_s
          TOP = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(static_cast<std::int16_t>(TOP)));
          break;
        case 0xc4:  // i64.extend32_s
          TOP = static_cast<std::uint64_t>(
              static_cast<std::int64_t>(static_cast<std::int32_t>(TOP)));
          break;

        default: {
          if (in.op >= op::kTruncSatBase && in.op < op::kTruncSatBase + 8) {
            switch (in.op - op::kTruncSatBase) {
              case 0: TOP = trunc_sat<std::int32_t>(as_f32(TOP)); break;
              case 1: TOP = trunc_sat<std::uint32_t>(as_f32(TOP)); break;
              case 2: TOP = trunc_sat<std::int32_t>(as_f64(TOP)); break;
              case 3: TOP = trunc_sat<std::uint32_t>(as_f64(TOP)); break;
              case 4: TOP = trunc_sat<std::int64_t>(as_f32(TOP)); break;
              case 5: TOP = trunc_sat<std::uint64_t>(as_f32(TOP)); break;
              case 6: TOP = trunc_sat<std::int64_t>(as_f64(TOP)); break;
              case 7: TOP = trunc_sat<std::uint64_t>(as_f64(TOP)); break;
            }
            break;
          }
          if (in.op == op::kMemCopy) {
            const std::uint64_t n = static_cast<std::uint32_t>(stack_[--sp_]);
            const std::uint64_t src = static_cast<std::uint32_t>(stack_[--sp_]);
            const std::uint64_t dst = static_cast<std::uint32_t>(stack_[--sp_]);
            if (src + n > mem_.size() || dst + n > mem_.size())
              throw Trap{TrapKind::kMemoryOutOfBounds, "memory.copy"};
            std::memmove(mem_.data() + dst, mem_.data() + src, n);
            break;
          }
          if (in.op == op::kMemFill) {
            const std::uint64_t n = static_cast<std::uint32_t>(stack_[--sp_]);
            const std::uint8_t val = static_cast<std::uint8_t>(stack_[--sp_]);
            const std::uint64_t dst = static_cast<std::uint32_t>(stack_[--sp_]);
            if (dst + n > mem_.size())
              throw Trap{TrapKind::kMemoryOutOfBounds, "memory.fill"};
            std::memset(mem_.data() + dst, val, n);
            break;
          }
          throw Trap{TrapKind::kHostError, "bad internal opcode"};
        }
      }
#undef TOP
#undef I32_BIN
#undef I64_BIN
#undef F32_BIN
#undef F64_BIN
#undef CMP
    }
  } catch (...) {
    save_restore_exit();
    throw;
  }
}

}  // namespace quicplug::wasm
