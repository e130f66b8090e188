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
#ifndef QUICPLUG_ENGINE_API_INTERNAL_HPP
#define QUICPLUG_ENGINE_API_INTERNAL_HPP

#include <vector>

#include "quicplug/wasm/instance.hpp"

namespace quicplug::engine {

// Builds the cq-abi-1 import set (plugin_api.cpp).
std::vector<wasm::HostFuncDef> build_plugin_api();

}  // namespace quicplug::engine

#endif
