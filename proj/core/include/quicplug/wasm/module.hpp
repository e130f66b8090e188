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
#ifndef QUICPLUG_WASM_MODULE_HPP
#define QUICPLUG_WASM_MODULE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quicplug/common/status.hpp"

// Decoder, validator and pre-translator for WebAssembly core modules.
// Supported feature set: the MVP plus sign-extension ops, saturating
// float-to-int truncation, and memory.copy/memory.fill. Function bodies are
// type-checked per the core specification and lowered during the same pass
// into a pre-decoded instruction form with resolved branch targets, which is
// what the interpreter executes.
namespace quicplug::wasm {

enum class ValType : std::uint8_t { kI32 = 0x7f, kI64 = 0x7e, kF32 = 0x7d, kF64 = 0x7c };

struct FuncType {
  std::vector<ValType> params;
  std::vector<ValType> results;  // at most one (no multi-value)
  bool operator==(const FuncType&) const = default;
};

struct Limits {
  std::uint32_t min = 0;
  std::optional<std::uint32_t> max;
};

struct Import {
  std::string module;
  std::string name;
  std::uint32_t type_idx;  // function imports only
};

enum class ExportKind : std::uint8_t { kFunc = 0, kTable = 1, kMemory = 2, kGlobal = 3 };

struct Export {
  std::string name;
  ExportKind kind;
  std::uint32_t index;
};

struct GlobalDef {
  ValType type;
  bool mut;
  std::uint64_t init;  // raw bits; init exprs are constant in this subset
};

struct DataSegment {
  std::uint32_t offset;
  std::vector<std::uint8_t> bytes;
};

struct ElemSegment {
  std::uint32_t offset;
  std::vector<std::uint32_t> funcs;
};

// Pre-decoded instruction. Meaning of the fields depends on op:
//   branches: a = result arity, b = target pc, imm = operand height to unwind to
//   calls:    b = function/host/type index
//   memory:   imm = static offset
//   consts:   imm = raw value bits
//   locals/globals: b = index
struct Instr {
  std::uint16_t op;
  std::uint16_t a;
  std::uint32_t b;
  std::uint64_t imm;
};

struct BrTarget {
  std::uint32_t pc = 0;
  std::uint32_t height = 0;
  std::uint16_t arity = 0;
};

struct FuncBody {
  std::uint32_t type_idx = 0;
  std::uint32_t param_count = 0;
  std::uint32_t local_count = 0;  // params included
  std::uint32_t max_stack = 0;    // operand slots, statically known
  std::vector<Instr> code;
};

struct Module {
  std::vector<FuncType> types;
  std::vector<std::uint32_t> canonical_type;  // structural dedup for call_indirect
  std::vector<Import> imports;
  std::vector<std::uint32_t> func_type_idx;  // defined functions, import-relative
  std::vector<FuncBody> bodies;
  std::optional<Limits> memory;
  std::optional<Limits> table;
  std::vector<GlobalDef> globals;
  std::vector<Export> exports;
  std::optional<std::uint32_t> start;
  std::vector<DataSegment> data;
  std::vector<ElemSegment> elems;
  std::vector<std::vector<BrTarget>> br_tables;
  std::size_t wire_size = 0;

  std::uint32_t num_funcs() const {
    return static_cast<std::uint32_t>(imports.size() + bodies.size());
  }
  // Type of function by absolute index (imports first).
  const FuncType& func_type(std::uint32_t idx) const;
  const Export* find_export(std::string_view name, ExportKind kind) const;
};

struct ParseCaps {
  std::uint32_t max_memory_pages = 256;   // 16 MiB
  std::uint32_t max_functions = 20000;
  std::uint32_t max_locals = 4096;
  std::size_t max_module_size = 4u << 20;
};

// Full decode + validate + lower. The error string names the first defect.
Expected<Module, std::string> parse_module(std::span<const std::uint8_t> bytes,
                                           const ParseCaps& caps = {});

// Internal opcode space: single-byte wasm opcodes keep their value; control
// flow and prefixed ops are remapped above 0xff during lowering.
namespace op {
inline constexpr std::uint16_t kJump = 0x100;
inline constexpr std::uint16_t kJumpIfZero = 0x101;
inline constexpr std::uint16_t kBr = 0x102;
inline constexpr std::uint16_t kBrIf = 0x103;
inline constexpr std::uint16_t kBrTable = 0x104;
inline constexpr std::uint16_t kReturn = 0x105;
inline constexpr std::uint16_t kCall = 0x106;
inline constexpr std::uint16_t kCallHost = 0x107;
inline constexpr std::uint16_t kCallIndirect = 0x108;
inline constexpr std::uint16_t kTruncSatBase = 0x110;  // +0..7, FC 0..7
inline constexpr std::uint16_t kMemCopy = 0x118;
inline constexpr std::uint16_t kMemFill = 0x119;
}  // namespace op

}  // namespace quicplug::wasm

#endif
