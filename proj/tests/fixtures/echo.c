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
/* Loopback test plugin: copies every staged input to the outputs,
 * exercising the full boundary codec in both directions. */
#include "cq_plugin.h"

static int64_t do_init(int64_t seq) {
  (void)seq;
  cq_enable();
  return CQ_OK;
}

static int64_t echo(int64_t seq) {
  (void)seq;
  static cq_val v;
  for (uint32_t i = 0;; ++i) {
    int64_t rc = cq_get_input(i, &v);
    if (rc == CQ_ERR_INPUT_MISSING) break;
    if (rc != CQ_OK) return rc;
    rc = cq_save_output(&v);
    if (rc != CQ_OK) return rc;
  }
  return CQ_OK;
}

CQ_HOOK("init", do_init)
CQ_HOOK("log_frame_ec", echo)
