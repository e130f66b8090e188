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
#ifndef QUICPLUG_COMMON_STATUS_HPP
#define QUICPLUG_COMMON_STATUS_HPP

#include <cstdint>
#include <string_view>
#include <utility>
#include <variant>

namespace quicplug {

// Status codes crossing the host/plugin boundary. Zero is success, the
// range [-64, -1] is reserved for the engine, positive values are
// plugin-defined. kHaltSending is the one positive value with a host-side
// meaning: returned from a PrepareFrame hook it aborts the packet batch.
namespace status {
inline constexpr std::int64_t kOk = 0;
inline constexpr std::int64_t kHaltSending = 1;
inline constexpr std::int64_t kPermissionError = -1;
inline constexpr std::int64_t kInvalidCapability = -2;
inline constexpr std::int64_t kRangeError = -3;
inline constexpr std::int64_t kNotAvailable = -4;
inline constexpr std::int64_t kRoutineAborted = -5;
inline constexpr std::int64_t kInputMissing = -6;
inline constexpr std::int64_t kDecodeError = -7;
inline constexpr std::int64_t kUnknownField = -8;
inline constexpr std::int64_t kInternalError = -9;
inline constexpr std::int64_t kReservedMin = -64;

std::string_view name(std::int64_t code);
}  // namespace status

// Minimal expected-like result carrier; std::expected is C++23.
template <typename T, typename E>
class Expected {
 public:
  Expected(T value) : v_(std::in_place_index<0>, std::move(value)) {}
  Expected(E error) : v_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const { return v_.index() == 0; }
  explicit operator bool() const { return ok(); }

  T& value() { return std::get<0>(v_); }
  const T& value() const { return std::get<0>(v_); }
  E& error() { return std::get<1>(v_); }
  const E& error() const { return std::get<1>(v_); }

  T& operator*() { return value(); }
  const T& operator*() const { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, E> v_;
};

}  // namespace quicplug

#endif
