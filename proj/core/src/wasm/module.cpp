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
#include "quicplug/wasm/module.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_set>

namespace quicplug::wasm {

namespace {

// Validator value-type codes; kVUnknown flows out of dead code.
enum VT : std::int8_t { kVUnknown = -1, kVI32 = 0, kVI64 = 1, kVF32 = 2, kVF64 = 3 };

VT vt(ValType t) {
  switch (t) {
    case ValType::kI32: return kVI32;
    case ValType::kI64: return kVI64;
    case ValType::kF32: return kVF32;
    case ValType::kF64: return kVF64;
  }
  return kVUnknown;
}

struct Parser {
  explicit Parser(std::span<const std::uint8_t> d) : data(d) {}
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;
  std::string err;

  bool fail(std::string msg) {
    if (err.empty()) err = std::move(msg);
    return false;
  }
  std::size_t remaining() const { return data.size() - pos; }

  bool u8(std::uint8_t& out) {
    if (pos >= data.size()) return fail("unexpected end");
    out = data[pos++];
    return true;
  }
  bool bytes(std::size_t n, std::span<const std::uint8_t>& out) {
    if (remaining() < n) return fail("unexpected end");
    out = data.subspan(pos, n);
    pos += n;
    return true;
  }
  // Unsigned LEB128. Padded (non-minimal) encodings are legal up to the
  // ceil(N/7)-byte bound as long as no set bit spills past N.
  bool leb_u(std::uint64_t& out, unsigned bits) {
    out = 0;
    unsigned shift = 0;
    const unsigned max_bytes = (bits + 6) / 7;
    for (unsigned i = 0; i < max_bytes; ++i) {
      std::uint8_t b;
      if (!u8(b)) return false;
      out |= std::uint64_t(b & 0x7f) << shift;
      if (i + 1 == max_bytes) {
        const unsigned used = bits - 7 * (max_bytes - 1);
        if ((b & 0x7f) >> used) return fail("leb overflow");
      }
      if (!(b & 0x80)) return true;
      shift += 7;
    }
    return fail("leb too long");
  }
  bool leb_u32(std::uint32_t& out) {
    std::uint64_t v;
    if (!leb_u(v, 32)) return false;
    out = static_cast<std::uint32_t>(v);
    return true;
  }
  bool leb_s(std::int64_t& out, unsigned bits) {
    std::uint64_t acc = 0;
    unsigned shift = 0;
    const unsigned max_bytes = (bits + 6) / 7;
    for (unsigned i = 0; i < max_bytes; ++i) {
      std::uint8_t b;
      if (!u8(b)) return false;
      acc |= std::uint64_t(b & 0x7f) << shift;
      shift += 7;
      if (!(b & 0x80)) {
        if (shift < 64 && (b & 0x40)) acc |= ~std::uint64_t(0) << shift;
        if (i + 1 == max_bytes) {
          const unsigned used = bits - 7 * (max_bytes - 1);
          const std::uint8_t payload = b & 0x7f;
          const std::uint8_t sign_fill =
              static_cast<std::uint8_t>((payload & (1 << (used - 1))) ? (0x7f << used) & 0x7f : 0);
          if ((payload & static_cast<std::uint8_t>((0x7f << used) & 0x7f)) != sign_fill)
            return fail("sleb overflow");
        }
        out = static_cast<std::int64_t>(acc);
        return true;
      }
    }
    return fail("sleb too long");
  }
  bool name(std::string& out, std::uint32_t max_len = 4096) {
    std::uint32_t len;
    if (!leb_u32(len)) return false;
    if (len > max_len) return fail("name too long");
    std::span<const std::uint8_t> s;
    if (!bytes(len, s)) return false;
    out.assign(s.begin(), s.end());
    return true;
  }
  bool valtype(ValType& out) {
    std::uint8_t b;
    if (!u8(b)) return false;
    if (b != 0x7f && b != 0x7e && b != 0x7d && b != 0x7c) return fail("bad value type");
    out = static_cast<ValType>(b);
    return true;
  }
  bool limits(Limits& out, std::uint32_t hard_max) {
    std::uint8_t flag;
    if (!u8(flag)) return false;
    if (flag > 1) return fail("bad limits flag");
    if (!leb_u32(out.min)) return false;
    if (flag == 1) {
      std::uint32_t m;
      if (!leb_u32(m)) return false;
      if (m < out.min) return fail("limits max < min");
      out.max = m;
    }
    if (out.min > hard_max) return fail("limits exceed cap");
    return true;
  }
};

bool parse_const_expr(Parser& p, ValType expect, std::uint64_t& out_bits) {
  std::uint8_t opc;
  if (!p.u8(opc)) return false;
  switch (opc) {
    case 0x41: {
      if (expect != ValType::kI32) return p.fail("init type mismatch");
      std::int64_t v;
      if (!p.leb_s(v, 32)) return false;
      out_bits = static_cast<std::uint32_t>(v);
      break;
    }
    case 0x42: {
      if (expect != ValType::kI64) return p.fail("init type mismatch");
      std::int64_t v;
      if (!p.leb_s(v, 64)) return false;
      out_bits = static_cast<std::uint64_t>(v);
      break;
    }
    case 0x43: {
      if (expect != ValType::kF32) return p.fail("init type mismatch");
      std::span<const std::uint8_t> b;
      if (!p.bytes(4, b)) return false;
      std::uint32_t bits = 0;
      std::memcpy(&bits, b.data(), 4);
      out_bits = bits;
      break;
    }
    case 0x44: {
      if (expect != ValType::kF64) return p.fail("init type mismatch");
      std::span<const std::uint8_t> b;
      if (!p.bytes(8, b)) return false;
      std::uint64_t bits = 0;
      std::memcpy(&bits, b.data(), 8);
      out_bits = bits;
      break;
    }
    default:
      return p.fail("unsupported init expression");
  }
  std::uint8_t end;
  if (!p.u8(end) || end != 0x0b) return p.fail("init expression not terminated");
  return true;
}

struct Ctrl {
  std::uint8_t kind;   // 0 block, 1 loop, 2 if, 3 func
  std::int8_t result;  // VT code, kVUnknown for none
  std::uint32_t height = 0;
  bool unreachable = false;
  std::uint32_t loop_pc = 0;
  std::uint32_t if_jump = UINT32_MAX;
  bool seen_else = false;
  // Forward-branch fixups. Plain entries index body.code; entries with the
  // top bit set address a br_table slot: (1<<31) | table_idx<<16 | entry.
  std::vector<std::uint32_t> fixups;
};

class BodyBuilder {
 public:
  BodyBuilder(Parser& p, Module& m, FuncBody& body) : p_(p), m_(m), body_(body) {}

  std::vector<std::int8_t>& locals() { return local_types_; }
  bool run(std::size_t body_end);

 private:
  bool fail(const char* msg) { return p_.fail(msg); }

  void push(std::int8_t t) {
    stack_.push_back(t);
    body_.max_stack =
        std::max<std::uint32_t>(body_.max_stack, static_cast<std::uint32_t>(stack_.size()));
  }
  bool pop(std::int8_t expect, std::int8_t* got = nullptr) {
    Ctrl& c = ctrls_.back();
    if (stack_.size() == c.height) {
      if (!c.unreachable) return fail("stack underflow");
      if (got) *got = kVUnknown;
      return true;
    }
    std::int8_t t = stack_.back();
    stack_.pop_back();
    if (expect != kVUnknown && t != kVUnknown && t != expect) return fail("type mismatch");
    if (got) *got = t;
    return true;
  }
  void set_unreachable() {
    Ctrl& c = ctrls_.back();
    stack_.resize(c.height);
    c.unreachable = true;
  }
  std::uint32_t emit(std::uint16_t op, std::uint16_t a = 0, std::uint32_t b = 0,
                     std::uint64_t imm = 0) {
    body_.code.push_back({op, a, b, imm});
    return static_cast<std::uint32_t>(body_.code.size() - 1);
  }

  std::int8_t label_result(const Ctrl& c) const {
    return c.kind == 1 ? static_cast<std::int8_t>(kVUnknown) : c.result;
  }

  bool branch_target(std::uint32_t depth, BrTarget& out, Ctrl** frame) {
    if (depth >= ctrls_.size()) return fail("branch depth out of range");
    Ctrl& c = ctrls_[ctrls_.size() - 1 - depth];
    out.height = c.height;
    out.arity = label_result(c) == kVUnknown ? 0 : 1;
    out.pc = c.kind == 1 ? c.loop_pc : UINT32_MAX;
    *frame = &c;
    return true;
  }

  bool check_label_values(Ctrl& c) {
    std::int8_t r = label_result(c);
    if (r == kVUnknown) return true;
    std::int8_t got;
    if (!pop(r, &got)) return false;
    push(r);
    return true;
  }

  bool memarg(std::uint32_t natural_align_log2, std::uint64_t& offset) {
    std::uint32_t align = 0, off = 0;
    if (!p_.leb_u32(align) || !p_.leb_u32(off)) return false;
    if (align > natural_align_log2) return fail("bad alignment");
    if (!m_.memory) return fail("memory access without memory");
    offset = off;
    return true;
  }

  bool load_op(std::uint8_t opc, std::int8_t result, std::uint32_t align) {
    std::uint64_t off = 0;
    if (!memarg(align, off)) return false;
    if (!pop(kVI32)) return false;
    push(result);
    emit(opc, 0, 0, off);
    return true;
  }
  bool store_op(std::uint8_t opc, std::int8_t value, std::uint32_t align) {
    std::uint64_t off = 0;
    if (!memarg(align, off)) return false;
    if (!pop(value) || !pop(kVI32)) return false;
    emit(opc, 0, 0, off);
    return true;
  }
  bool unop(std::uint16_t opc, std::int8_t t) {
    if (!pop(t)) return false;
    push(t);
    emit(opc);
    return true;
  }
  bool binop(std::uint16_t opc, std::int8_t t) {
    if (!pop(t) || !pop(t)) return false;
    push(t);
    emit(opc);
    return true;
  }
  bool testop(std::uint16_t opc, std::int8_t t) {
    if (!pop(t)) return false;
    push(kVI32);
    emit(opc);
    return true;
  }
  bool relop(std::uint16_t opc, std::int8_t t) {
    if (!pop(t) || !pop(t)) return false;
    push(kVI32);
    emit(opc);
    return true;
  }
  bool cvtop(std::uint16_t opc, std::int8_t from, std::int8_t to) {
    if (!pop(from)) return false;
    push(to);
    emit(opc);
    return true;
  }

  bool numeric_or_memory(std::uint8_t opc);

  Parser& p_;
  Module& m_;
  FuncBody& body_;
  std::vector<std::int8_t> stack_;
  std::vector<Ctrl> ctrls_;
  std::vector<std::int8_t> local_types_;
};

bool BodyBuilder::numeric_or_memory(std::uint8_t opc) {
  switch (opc) {
    case 0x28: return load_op(opc, kVI32, 2);
    case 0x29: return load_op(opc, kVI64, 3);
    case 0x2a: return load_op(opc, kVF32, 2);
    case 0x2b: return load_op(opc, kVF64, 3);
    case 0x2c: case 0x2d: return load_op(opc, kVI32, 0);
    case 0x2e: case 0x2f: return load_op(opc, kVI32, 1);
    case 0x30: case 0x31: return load_op(opc, kVI64, 0);
    case 0x32: case 0x33: return load_op(opc, kVI64, 1);
    case 0x34: case 0x35: return load_op(opc, kVI64, 2);
    case 0x36: return store_op(opc, kVI32, 2);
    case 0x37: return store_op(opc, kVI64, 3);
    case 0x38: return store_op(opc, kVF32, 2);
    case 0x39: return store_op(opc, kVF64, 3);
    case 0x3a: return store_op(opc, kVI32, 0);
    case 0x3b: return store_op(opc, kVI32, 1);
    case 0x3c: return store_op(opc, kVI64, 0);
    case 0x3d: return store_op(opc, kVI64, 1);
    case 0x3e: return store_op(opc, kVI64, 2);
    case 0x3f: case 0x40: {  // memory.size / memory.grow
      std::uint32_t reserved;
      if (!p_.leb_u32(reserved) || reserved != 0) return fail("bad memory index");
      if (!m_.memory) return fail("no memory");
      if (opc == 0x40 && !pop(kVI32)) return false;
      push(kVI32);
      emit(opc);
      return true;
    }
    case 0x41: {  // i32.const
      std::int64_t v;
      if (!p_.leb_s(v, 32)) return false;
      push(kVI32);
      emit(opc, 0, 0, static_cast<std::uint32_t>(v));
      return true;
    }
    case 0x42: {  // i64.const
      std::int64_t v;
      if (!p_.leb_s(v, 64)) return false;
      push(kVI64);
      emit(opc, 0, 0, static_cast<std::uint64_t>(v));
      return true;
    }
    case 0x43: {  // f32.const
      std::span<const std::uint8_t> b;
      if (!p_.bytes(4, b)) return false;
      std::uint32_t bits = 0;
      std::memcpy(&bits, b.data(), 4);
      push(kVF32);
      emit(opc, 0, 0, bits);
      return true;
    }
    case 0x44: {  // f64.const
      std::span<const std::uint8_t> b;
      if (!p_.bytes(8, b)) return false;
      std::uint64_t bits = 0;
      std::memcpy(&bits, b.data(), 8);
      push(kVF64);
      emit(opc, 0, 0, bits);
      return true;
    }

    case 0x45: return testop(opc, kVI32);
    case 0x46: case 0x47: case 0x48: case 0x49: case 0x4a:
    case 0x4b: case 0x4c: case 0x4d: case 0x4e: case 0x4f:
      return relop(opc, kVI32);
    case 0x50: return testop(opc, kVI64);
    case 0x51: case 0x52: case 0x53: case 0x54: case 0x55:
    case 0x56: case 0x57: case 0x58: case 0x59: case 0x5a:
      return relop(opc, kVI64);
    case 0x5b: case 0x5c: case 0x5d: case 0x5e: case 0x5f: case 0x60:
      return relop(opc, kVF32);
    case 0x61: case 0x62: case 0x63: case 0x64: case 0x65: case 0x66:
      return relop(opc, kVF64);

    case 0x67: case 0x68: case 0x69: return unop(opc, kVI32);
    case 0x6a: case 0x6b: case 0x6c: case 0x6d: case 0x6e: case 0x6f: case 0x70:
    case 0x71: case 0x72: case 0x73: case 0x74: case 0x75: case 0x76: case 0x77:
    case 0x78:
      return binop(opc, kVI32);
    case 0x79: case 0x7a: case 0x7b: return unop(opc, kVI64);
    case 0x7c: case 0x7d: case 0x7e: case 0x7f: case 0x80: case 0x81: case 0x82:
    case 0x83: case 0x84: case 0x85: case 0x86: case 0x87: case 0x88: case 0x89:
    case 0x8a:
      return binop(opc, kVI64);
    case 0x8b: case 0x8c: case 0x8d: case 0x8e: case 0x8f: case 0x90: case 0x91:
      return unop(opc, kVF32);
    case 0x92: case 0x93: case 0x94: case 0x95: case 0x96: case 0x97: case 0x98:
      return binop(opc, kVF32);
    case 0x99: case 0x9a: case 0x9b: case 0x9c: case 0x9d: case 0x9e: case 0x9f:
      return unop(opc, kVF64);
    case 0xa0: case 0xa1: case 0xa2: case 0xa3: case 0xa4: case 0xa5: case 0xa6:
      return binop(opc, kVF64);

    case 0xa7: return cvtop(opc, kVI64, kVI32);
    case 0xa8: case 0xa9: return cvtop(opc, kVF32, kVI32);
    case 0xaa: case 0xab: return cvtop(opc, kVF64, kVI32);
    case 0xac: case 0xad: return cvtop(opc, kVI32, kVI64);
    case 0xae: case 0xaf: return cvtop(opc, kVF32, kVI64);
    case 0xb0: case 0xb1: return cvtop(opc, kVF64, kVI64);
    case 0xb2: case 0xb3: return cvtop(opc, kVI32, kVF32);
    case 0xb4: case 0xb5: return cvtop(opc, kVI64, kVF32);
    case 0xb6: return cvtop(opc, kVF64, kVF32);
    case 0xb7: case 0xb8: return cvtop(opc, kVI32, kVF64);
    case 0xb9: case 0xba: return cvtop(opc, kVI64, kVF64);
    case 0xbb: return cvtop(opc, kVF32, kVF64);
    case 0xbc: return cvtop(opc, kVF32, kVI32);
    case 0xbd: return cvtop(opc, kVF64, kVI64);
    case 0xbe: return cvtop(opc, kVI32, kVF32);
    case 0xbf: return cvtop(opc, kVI64, kVF64);

    case 0xc0: case 0xc1: return unop(opc, kVI32);
    case 0xc2: case 0xc3: case 0xc4: return unop(opc, kVI64);

    case 0xfc: {
      std::uint32_t sub;
      if (!p_.leb_u32(sub)) return false;
      switch (sub) {
        case 0: case 1: return cvtop(op::kTruncSatBase + sub, kVF32, kVI32);
        case 2: case 3: return cvtop(op::kTruncSatBase + sub, kVF64, kVI32);
        case 4: case 5: return cvtop(op::kTruncSatBase + sub, kVF32, kVI64);
        case 6: case 7: return cvtop(op::kTruncSatBase + sub, kVF64, kVI64);
        case 10: {  // memory.copy
          std::uint8_t r1, r2;
          if (!p_.u8(r1) || !p_.u8(r2) || r1 != 0 || r2 != 0) return fail("bad memory.copy");
          if (!m_.memory) return fail("no memory");
          if (!pop(kVI32) || !pop(kVI32) || !pop(kVI32)) return false;
          emit(op::kMemCopy);
          return true;
        }
        case 11: {  // memory.fill
          std::uint8_t r1;
          if (!p_.u8(r1) || r1 != 0) return fail("bad memory.fill");
          if (!m_.memory) return fail("no memory");
          if (!pop(kVI32) || !pop(kVI32) || !pop(kVI32)) return false;
          emit(op::kMemFill);
          return true;
        }
        default:
          return fail("unsupported 0xfc opcode");
      }
    }
    default:
      return fail("unsupported opcode");
  }
}

bool BodyBuilder::run(std::size_t body_end) {
  const FuncType& ft = m_.types[body_.type_idx];
  Ctrl func_frame;
  func_frame.kind = 3;
  func_frame.result = ft.results.empty() ? kVUnknown : vt(ft.results[0]);
  func_frame.height = 0;
  ctrls_.push_back(func_frame);

  while (true) {
    if (p_.pos >= body_end) return fail("body ran past its size");
    std::uint8_t opc;
    if (!p_.u8(opc)) return false;

    switch (opc) {
      case 0x00:
        emit(0x00);
        set_unreachable();
        break;
      case 0x01:
        break;
      case 0x02:
      case 0x03:
      case 0x04: {
        std::uint8_t bt;
        if (!p_.u8(bt)) return false;
        std::int8_t result;
        if (bt == 0x40) {
          result = kVUnknown;
        } else if (bt == 0x7f || bt == 0x7e || bt == 0x7d || bt == 0x7c) {
          result = vt(static_cast<ValType>(bt));
        } else {
          return fail("block type index unsupported");
        }
        Ctrl c;
        c.kind = static_cast<std::uint8_t>(opc - 0x02);
        c.result = result;
        if (opc == 0x04) {
          if (!pop(kVI32)) return false;
          c.if_jump = emit(op::kJumpIfZero);
        }
        c.height = static_cast<std::uint32_t>(stack_.size());
        if (opc == 0x03) c.loop_pc = static_cast<std::uint32_t>(body_.code.size());
        ctrls_.push_back(c);
        break;
      }
      case 0x05: {
        if (ctrls_.size() < 2 || ctrls_.back().kind != 2 || ctrls_.back().seen_else)
          return fail("else without if");
        Ctrl& c = ctrls_.back();
        if (c.result != kVUnknown && !pop(c.result)) return false;
        if (stack_.size() != c.height && !c.unreachable) return fail("if branch height");
        c.fixups.push_back(emit(op::kJump));
        body_.code[c.if_jump].b = static_cast<std::uint32_t>(body_.code.size());
        c.if_jump = UINT32_MAX;
        c.seen_else = true;
        c.unreachable = false;
        stack_.resize(c.height);
        break;
      }
      case 0x0b: {
        Ctrl c = ctrls_.back();
        if (c.result != kVUnknown && !pop(c.result)) return false;
        if (stack_.size() != c.height && !c.unreachable) return fail("block height");
        if (c.kind == 2 && !c.seen_else && c.result != kVUnknown)
          return fail("if with result needs else");
        ctrls_.pop_back();
        const std::uint32_t end_pc = static_cast<std::uint32_t>(body_.code.size());
        if (c.if_jump != UINT32_MAX) body_.code[c.if_jump].b = end_pc;
        for (std::uint32_t fixup : c.fixups) {
          if (fixup & 0x80000000u)
            m_.br_tables[(fixup >> 16) & 0x7fff][fixup & 0xffff].pc = end_pc;
          else
            body_.code[fixup].b = end_pc;
        }
        if (ctrls_.empty()) {
          emit(op::kReturn, c.result == kVUnknown ? 0 : 1);
          if (p_.pos != body_end) return fail("trailing bytes in body");
          return true;
        }
        stack_.resize(c.height);
        if (c.result != kVUnknown) push(c.result);
        break;
      }
      case 0x0c:
      case 0x0d: {
        std::uint32_t depth;
        if (!p_.leb_u32(depth)) return false;
        if (opc == 0x0d && !pop(kVI32)) return false;
        BrTarget t;
        Ctrl* frame = nullptr;
        if (!branch_target(depth, t, &frame)) return false;
        if (!check_label_values(*frame)) return false;
        std::uint32_t idx = emit(opc == 0x0c ? op::kBr : op::kBrIf, t.arity, t.pc, t.height);
        if (frame->kind != 1) frame->fixups.push_back(idx);
        if (opc == 0x0c) set_unreachable();
        break;
      }
      case 0x0e: {
        std::uint32_t count;
        if (!p_.leb_u32(count)) return false;
        if (count > 65535) return fail("br_table too large");
        if (m_.br_tables.size() >= 0x7fff) return fail("too many br_tables");
        if (!pop(kVI32)) return false;
        std::vector<BrTarget> targets(count + 1);
        const std::uint32_t table_idx = static_cast<std::uint32_t>(m_.br_tables.size());
        std::int32_t arity = -1;
        for (std::uint32_t i = 0; i <= count; ++i) {
          std::uint32_t depth;
          if (!p_.leb_u32(depth)) return false;
          Ctrl* frame = nullptr;
          if (!branch_target(depth, targets[i], &frame)) return false;
          if (arity < 0) arity = targets[i].arity;
          if (arity != targets[i].arity) return fail("br_table arity mismatch");
          if (!check_label_values(*frame)) return false;
          if (frame->kind != 1)
            frame->fixups.push_back(0x80000000u | (table_idx << 16) | i);
        }
        emit(op::kBrTable, static_cast<std::uint16_t>(arity), table_idx);
        m_.br_tables.push_back(std::move(targets));
        set_unreachable();
        break;
      }
      case 0x0f: {
        if (ft.results.size() == 1 && !pop(vt(ft.results[0]))) return false;
        emit(op::kReturn, ft.results.empty() ? 0 : 1);
        set_unreachable();
        break;
      }
      case 0x10: {
        std::uint32_t fidx;
        if (!p_.leb_u32(fidx)) return false;
        if (fidx >= m_.num_funcs()) return fail("call index out of range");
        const FuncType& ct = m_.func_type(fidx);
        for (auto it = ct.params.rbegin(); it != ct.params.rend(); ++it)
          if (!pop(vt(*it))) return false;
        for (ValType r : ct.results) push(vt(r));
        if (fidx < m_.imports.size())
          emit(op::kCallHost, static_cast<std::uint16_t>(ct.params.size()), fidx,
               ct.results.empty() ? 0 : 1);
        else
          emit(op::kCall, 0, fidx - static_cast<std::uint32_t>(m_.imports.size()));
        break;
      }
      case 0x11: {
        std::uint32_t tidx, table;
        if (!p_.leb_u32(tidx) || !p_.leb_u32(table)) return false;
        if (table != 0) return fail("table index must be 0");
        if (tidx >= m_.types.size()) return fail("type index out of range");
        if (!m_.table) return fail("call_indirect without table");
        if (!pop(kVI32)) return false;
        const FuncType& ct = m_.types[tidx];
        for (auto it = ct.params.rbegin(); it != ct.params.rend(); ++it)
          if (!pop(vt(*it))) return false;
        for (ValType r : ct.results) push(vt(r));
        emit(op::kCallIndirect, static_cast<std::uint16_t>(ct.params.size()), tidx,
             ct.results.empty() ? 0 : 1);
        break;
      }
      case 0x1a: {
        std::int8_t got;
        if (!pop(kVUnknown, &got)) return false;
        emit(0x1a);
        break;
      }
      case 0x1b: {
        if (!pop(kVI32)) return false;
        std::int8_t a = kVUnknown, b = kVUnknown;
        if (!pop(kVUnknown, &a) || !pop(kVUnknown, &b)) return false;
        if (a != kVUnknown && b != kVUnknown && a != b) return fail("select type mismatch");
        push(a == kVUnknown ? b : a);
        emit(0x1b);
        break;
      }
      case 0x20: {
        std::uint32_t idx;
        if (!p_.leb_u32(idx)) return false;
        if (idx >= local_types_.size()) return fail("local index out of range");
        push(local_types_[idx]);
        emit(0x20, 0, idx);
        break;
      }
      case 0x21:
      case 0x22: {
        std::uint32_t idx;
        if (!p_.leb_u32(idx)) return false;
        if (idx >= local_types_.size()) return fail("local index out of range");
        if (!pop(local_types_[idx])) return false;
        if (opc == 0x22) push(local_types_[idx]);
        emit(opc, 0, idx);
        break;
      }
      case 0x23: {
        std::uint32_t idx;
        if (!p_.leb_u32(idx)) return false;
        if (idx >= m_.globals.size()) return fail("global index out of range");
        push(vt(m_.globals[idx].type));
        emit(0x23, 0, idx);
        break;
      }
      case 0x24: {
        std::uint32_t idx;
        if (!p_.leb_u32(idx)) return false;
        if (idx >= m_.globals.size()) return fail("global index out of range");
        if (!m_.globals[idx].mut) return fail("global is immutable");
        if (!pop(vt(m_.globals[idx].type))) return false;
        emit(0x24, 0, idx);
        break;
      }
      default:
        if (!numeric_or_memory(opc)) return false;
        break;
    }
  }
}

}  // namespace

const FuncType& Module::func_type(std::uint32_t idx) const {
  if (idx < imports.size()) return types[imports[idx].type_idx];
  return types[func_type_idx[idx - imports.size()]];
}

const Export* Module::find_export(std::string_view name, ExportKind kind) const {
  for (const auto& e : exports)
    if (e.kind == kind && e.name == name) return &e;
  return nullptr;
}

Expected<Module, std::string> parse_module(std::span<const std::uint8_t> bytes,
                                           const ParseCaps& caps) {
  if (bytes.size() > caps.max_module_size) return std::string("module too large");
  Parser p(bytes);
  Module m;
  m.wire_size = bytes.size();

  std::span<const std::uint8_t> hdr;
  if (!p.bytes(8, hdr)) return p.err;
  static constexpr std::uint8_t kMagic[8] = {0x00, 0x61, 0x73, 0x6d, 0x01, 0x00, 0x00, 0x00};
  if (std::memcmp(hdr.data(), kMagic, 8) != 0) return std::string("bad magic or version");

  // Section order keys; datacount (12) sits between elem and code.
  auto order_key = [](std::uint8_t id) -> int {
    switch (id) {
      case 1: return 1; case 2: return 2; case 3: return 3; case 4: return 4;
      case 5: return 5; case 6: return 6; case 7: return 7; case 8: return 8;
      case 9: return 9; case 12: return 10; case 10: return 11; case 11: return 12;
      default: return -1;
    }
  };

  int last_key = 0;
  std::optional<std::uint32_t> data_count;
  bool seen_code = false;

  while (p.pos < bytes.size()) {
    std::uint8_t sec_id;
    std::uint32_t sec_size;
    if (!p.u8(sec_id) || !p.leb_u32(sec_size)) return p.err;
    std::span<const std::uint8_t> payload;
    if (!p.bytes(sec_size, payload)) return p.err;

    if (sec_id == 0) {  // custom: name + opaque bytes, skipped
      Parser cp(payload);
      std::string cname;
      if (!cp.name(cname)) return cp.err;
      continue;
    }
    int key = order_key(sec_id);
    if (key < 0) return std::string("unknown section id");
    if (key <= last_key) return std::string("section out of order or duplicated");
    last_key = key;

    Parser sp(payload);
    switch (sec_id) {
      case 1: {  // types
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > 100000) return std::string("too many types");
        for (std::uint32_t i = 0; i < count; ++i) {
          std::uint8_t form;
          if (!sp.u8(form)) return sp.err;
          if (form != 0x60) return std::string("bad functype form");
          FuncType ft;
          std::uint32_t np;
          if (!sp.leb_u32(np)) return sp.err;
          if (np > 1000) return std::string("too many params");
          ft.params.resize(np);
          for (auto& t : ft.params)
            if (!sp.valtype(t)) return sp.err;
          std::uint32_t nr;
          if (!sp.leb_u32(nr)) return sp.err;
          if (nr > 1) return std::string("multi-value results unsupported");
          ft.results.resize(nr);
          for (auto& t : ft.results)
            if (!sp.valtype(t)) return sp.err;
          m.types.push_back(std::move(ft));
        }
        break;
      }
      case 2: {  // imports (function imports only)
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > 1000) return std::string("too many imports");
        for (std::uint32_t i = 0; i < count; ++i) {
          Import imp;
          if (!sp.name(imp.module) || !sp.name(imp.name)) return sp.err;
          std::uint8_t kind;
          if (!sp.u8(kind)) return sp.err;
          if (kind != 0) return std::string("only function imports are supported");
          if (!sp.leb_u32(imp.type_idx)) return sp.err;
          if (imp.type_idx >= m.types.size()) return std::string("import type out of range");
          m.imports.push_back(std::move(imp));
        }
        break;
      }
      case 3: {  // function declarations
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > caps.max_functions) return std::string("too many functions");
        m.func_type_idx.resize(count);
        for (auto& t : m.func_type_idx) {
          if (!sp.leb_u32(t)) return sp.err;
          if (t >= m.types.size()) return std::string("function type out of range");
        }
        break;
      }
      case 4: {  // table
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > 1) return std::string("at most one table");
        if (count == 1) {
          std::uint8_t et;
          if (!sp.u8(et)) return sp.err;
          if (et != 0x70) return std::string("table must be funcref");
          Limits lim;
          if (!sp.limits(lim, 1 << 20)) return sp.err;
          m.table = lim;
        }
        break;
      }
      case 5: {  // memory
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > 1) return std::string("at most one memory");
        if (count == 1) {
          Limits lim;
          if (!sp.limits(lim, caps.max_memory_pages)) return sp.err;
          m.memory = lim;
        }
        break;
      }
      case 6: {  // globals
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > 10000) return std::string("too many globals");
        for (std::uint32_t i = 0; i < count; ++i) {
          GlobalDef g;
          if (!sp.valtype(g.type)) return sp.err;
          std::uint8_t mut;
          if (!sp.u8(mut)) return sp.err;
          if (mut > 1) return std::string("bad mutability");
          g.mut = mut == 1;
          if (!parse_const_expr(sp, g.type, g.init)) return sp.err;
          m.globals.push_back(g);
        }
        break;
      }
      case 7: {  // exports
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > 10000) return std::string("too many exports");
        std::unordered_set<std::string> seen;
        for (std::uint32_t i = 0; i < count; ++i) {
          Export e;
          if (!sp.name(e.name)) return sp.err;
          std::uint8_t kind;
          if (!sp.u8(kind)) return sp.err;
          if (kind > 3) return std::string("bad export kind");
          e.kind = static_cast<ExportKind>(kind);
          if (!sp.leb_u32(e.index)) return sp.err;
          if (!seen.insert(e.name).second) return std::string("duplicate export name");
          m.exports.push_back(std::move(e));
        }
        break;
      }
      case 8: {  // start
        std::uint32_t idx;
        if (!sp.leb_u32(idx)) return sp.err;
        m.start = idx;
        break;
      }
      case 9: {  // element segments
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count > 1000) return std::string("too many elem segments");
        for (std::uint32_t i = 0; i < count; ++i) {
          std::uint32_t flag;
          if (!sp.leb_u32(flag)) return sp.err;
          if (flag != 0) return std::string("only active funcref elem segments supported");
          std::uint64_t off_bits;
          if (!parse_const_expr(sp, ValType::kI32, off_bits)) return sp.err;
          ElemSegment seg;
          seg.offset = static_cast<std::uint32_t>(off_bits);
          std::uint32_t n;
          if (!sp.leb_u32(n)) return sp.err;
          if (n > 100000) return std::string("elem segment too large");
          seg.funcs.resize(n);
          for (auto& f : seg.funcs)
            if (!sp.leb_u32(f)) return sp.err;
          m.elems.push_back(std::move(seg));
        }
        break;
      }
      case 12: {  // datacount
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        data_count = count;
        break;
      }
      case 10: {  // code
        seen_code = true;
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (count != m.func_type_idx.size())
          return std::string("code/function count mismatch");
        m.bodies.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) {
          std::uint32_t body_size;
          if (!sp.leb_u32(body_size)) return sp.err;
          if (body_size > sp.remaining()) return std::string("body size out of range");
          const std::size_t body_end = sp.pos + body_size;
          FuncBody& body = m.bodies[i];
          body.type_idx = m.func_type_idx[i];
          const FuncType& ft = m.types[body.type_idx];
          body.param_count = static_cast<std::uint32_t>(ft.params.size());

          BodyBuilder builder(sp, m, body);
          auto& locals = builder.locals();
          for (ValType t : ft.params) locals.push_back(vt(t));
          std::uint32_t group_count;
          if (!sp.leb_u32(group_count)) return sp.err;
          for (std::uint32_t g = 0; g < group_count; ++g) {
            std::uint32_t n;
            ValType t;
            if (!sp.leb_u32(n) || !sp.valtype(t)) return sp.err;
            if (locals.size() + n > caps.max_locals) return std::string("too many locals");
            locals.insert(locals.end(), n, vt(t));
          }
          body.local_count = static_cast<std::uint32_t>(locals.size());
          if (!builder.run(body_end)) return sp.err;
        }
        break;
      }
      case 11: {  // data segments
        std::uint32_t count;
        if (!sp.leb_u32(count)) return sp.err;
        if (data_count && *data_count != count)
          return std::string("datacount mismatch");
        if (count > 1000) return std::string("too many data segments");
        for (std::uint32_t i = 0; i < count; ++i) {
          std::uint32_t flag;
          if (!sp.leb_u32(flag)) return sp.err;
          if (flag != 0) return std::string("only active data segments supported");
          if (!m.memory) return std::string("data segment without memory");
          std::uint64_t off_bits;
          if (!parse_const_expr(sp, ValType::kI32, off_bits)) return sp.err;
          DataSegment seg;
          seg.offset = static_cast<std::uint32_t>(off_bits);
          std::uint32_t n;
          if (!sp.leb_u32(n)) return sp.err;
          std::span<const std::uint8_t> b;
          if (!sp.bytes(n, b)) return sp.err;
          seg.bytes.assign(b.begin(), b.end());
          m.data.push_back(std::move(seg));
        }
        break;
      }
      default:
        return std::string("unknown section id");
    }
    if (!sp.err.empty()) return sp.err;
    if (sp.pos != payload.size()) return std::string("section has trailing bytes");
  }

  if (!m.func_type_idx.empty() && !seen_code) return std::string("missing code section");

  // Cross-section checks.
  for (const auto& e : m.exports) {
    switch (e.kind) {
      case ExportKind::kFunc:
        if (e.index >= m.num_funcs()) return std::string("export func index out of range");
        break;
      case ExportKind::kTable:
        if (!m.table || e.index != 0) return std::string("export table index out of range");
        break;
      case ExportKind::kMemory:
        if (!m.memory || e.index != 0)
          return std::string("export memory index out of range");
        break;
      case ExportKind::kGlobal:
        if (e.index >= m.globals.size())
          return std::string("export global index out of range");
        if (m.globals[e.index].mut)
          return std::string("mutable global export unsupported");
        break;
    }
  }
  if (m.start) {
    if (*m.start >= m.num_funcs()) return std::string("start index out of range");
    const FuncType& ft = m.func_type(*m.start);
    if (!ft.params.empty() || !ft.results.empty())
      return std::string("start function must be []->[]");
  }
  for (const auto& seg : m.elems) {
    if (!m.table) return std::string("elem segment without table");
    for (std::uint32_t f : seg.funcs)
      if (f >= m.num_funcs()) return std::string("elem func index out of range");
  }

  // Canonical type ids for call_indirect signature checks.
  m.canonical_type.resize(m.types.size());
  for (std::size_t i = 0; i < m.types.size(); ++i) {
    m.canonical_type[i] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 0; j < i; ++j) {
      if (m.types[j] == m.types[i]) {
        m.canonical_type[i] = static_cast<std::uint32_t>(j);
        break;
      }
    }
  }

  return m;
}

}  // namespace quicplug::wasm
