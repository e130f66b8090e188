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
/*
 * Plugin authoring kit: typed values, the boundary codec and safe wrappers
 * over the cq-abi-1 imports, so hook code never touches raw serialization.
 *
 * Hooks are ordinary functions `int64_t fn(int64_t seq)`; export them under
 * their convention name with CQ_HOOK("write_frame_bd", fn). Declare the
 * fields the plugin needs with CQ_REQUIRED_FIELDS(...).
 */
#ifndef CQ_PLUGIN_H
#define CQ_PLUGIN_H

#include "cq_abi.h"

#define CQ_RAW_MAX 4096
#define CQ_MAX_ACK_RANGES 32
#define CQ_EXT_PAYLOAD_MAX 1024
#define CQ_TP_VALUE_MAX 256
#define CQ_REASON_MAX 1024

typedef struct {
  uint8_t version; /* 4 or 6 */
  uint8_t addr[16];
  uint16_t port;
} cq_sockaddr;

typedef struct {
  uint64_t tag;
  uint64_t max_read;
  uint64_t max_write;
} cq_bytes;

typedef struct {
  uint64_t gap;
  uint64_t len;
} cq_ack_range;

/* Boundary representation of a frame. Extension payload entries are kept
 * pre-encoded to avoid recursive storage; use the cq_frame_ext_* helpers. */
typedef struct {
  uint64_t type;
  union {
    struct {
      uint64_t largest;
      uint64_t delay_us;
      uint32_t range_count;
      cq_ack_range ranges[CQ_MAX_ACK_RANGES];
    } ack;
    struct {
      uint64_t maximum;
    } max_data;
    struct {
      uint64_t id;
      uint64_t offset;
      uint64_t length;
      uint8_t fin;
    } stream;
    struct {
      uint8_t data[8];
    } path;
    struct {
      uint64_t code;
      uint32_t reason_len;
      uint8_t reason[CQ_REASON_MAX];
    } close;
    struct {
      uint8_t count;
      uint32_t len;
      uint8_t encoded[CQ_EXT_PAYLOAD_MAX];
    } ext;
  } u;
} cq_frame;

typedef struct {
  uint8_t tag;
  union {
    uint8_t boolean;
    int32_t i32;
    int64_t i64;
    uint32_t u32;
    uint64_t u64; /* also usize / duration / instant, selected by tag */
    cq_sockaddr addr;
    cq_frame frame;
    struct {
      uint64_t type;
      uint32_t len;
      uint8_t value[CQ_TP_VALUE_MAX];
    } tp;
    cq_bytes bytes;
    struct {
      uint32_t len;
      uint8_t data[CQ_RAW_MAX];
    } raw;
  } u;
} cq_val;

/* -- constructors -- */
void cq_val_bool(cq_val* v, int b);
void cq_val_u32(cq_val* v, uint32_t x);
void cq_val_u64(cq_val* v, uint64_t x);
void cq_val_usize(cq_val* v, uint64_t x);
void cq_val_duration(cq_val* v, uint64_t us);
void cq_val_frame(cq_val* v, const cq_frame* f);
void cq_val_raw_text(cq_val* v, const char* s);

/* -- boundary codec (bit-exact with the host) -- */
int32_t cq_varint_len(uint64_t v);
int32_t cq_varint_encode(uint64_t v, uint8_t* out, uint32_t cap);
int32_t cq_varint_decode(const uint8_t* in, uint32_t len, uint64_t* out);
int32_t cq_val_encode(const cq_val* v, uint8_t* out, uint32_t cap);
int32_t cq_val_decode(const uint8_t* in, uint32_t len, cq_val* out);

/* -- parameter communication -- */
int64_t cq_get_input(uint32_t idx, cq_val* out);
int64_t cq_save_output(const cq_val* v);

/* -- session interaction -- */
int64_t cq_read_field(uint32_t field, cq_val* out);
int64_t cq_write_field(uint32_t field, const cq_val* v);
int64_t cq_read_field_u64(uint32_t field, uint64_t* out);
int64_t cq_read_field_bool(uint32_t field, int* out);
int64_t cq_write_field_u64(uint32_t field, uint64_t x);
int64_t cq_write_field_duration(uint32_t field, uint64_t us);

/* -- registration / activation -- */
int64_t cq_register_frame(uint64_t frame_type);
int64_t cq_register_tp(uint64_t tp_type);
int64_t cq_enable(void);

/* -- time -- */
uint64_t cq_now(void);
int64_t cq_timer_at(uint64_t deadline_us, uint64_t tag);
int64_t cq_timer_after(uint64_t delay_us, uint64_t tag);
int64_t cq_cancel_timer(uint64_t timer_id);

/* -- raw bytes -- */
int64_t cq_bytes_read(const cq_bytes* cap, uint64_t off, void* dst, uint32_t len);
int64_t cq_bytes_write(const cq_bytes* cap, uint64_t off, const void* src, uint32_t len);

/* -- persistent files (per-plugin sandbox dir) -- */
int64_t cq_file_open(const char* path, uint32_t mode);
int64_t cq_file_read(int64_t fd, void* dst, uint32_t cap);
int64_t cq_file_write(int64_t fd, const void* src, uint32_t len);
int64_t cq_file_write_str(int64_t fd, const char* s);
int64_t cq_file_close(int64_t fd);

/* -- cross-plugin control -- */
int64_t cq_call_plugin_control(const char* target, uint64_t op, const cq_val* args,
                               uint32_t nargs, cq_val* outs, uint32_t max_outs,
                               uint32_t* nouts);

/* -- debug -- */
int64_t cq_log(const char* s);

/* -- small utilities -- */
uint32_t cq_strlen(const char* s);
uint32_t cq_u64_to_dec(uint64_t v, char* out);   /* returns length, NUL-terminates */
uint32_t cq_u64_to_hex(uint64_t v, char* out);
int32_t cq_dec_to_u64(const char* s, uint32_t len, uint64_t* out);
uint64_t cq_rand_u64(void); /* deterministic under a virtual host clock */

/* -- extension frame payload helpers -- */
void cq_frame_ext_init(cq_frame* f, uint64_t frame_type);
int32_t cq_frame_ext_add(cq_frame* f, const cq_val* v);
int32_t cq_frame_ext_add_u64(cq_frame* f, uint64_t x);
int32_t cq_frame_ext_add_duration(cq_frame* f, uint64_t us);
int32_t cq_frame_ext_get(const cq_frame* f, uint32_t idx, cq_val* out);

/* -- hook export plumbing -- */
#define CQ_CONCAT_(a, b) a##b
#define CQ_CONCAT(a, b) CQ_CONCAT_(a, b)
#define CQ_HOOK(name_literal, fn)                                      \
  __attribute__((export_name(name_literal))) int64_t CQ_CONCAT(        \
      cq_hook_, __COUNTER__)(int64_t seq) {                            \
    return fn(seq);                                                    \
  }

#define CQ_REQUIRED_FIELDS(...)                                        \
  __attribute__((export_name("required_fields"))) int64_t              \
  cq_required_fields_export(void) {                                    \
    static const uint32_t cq_req_fields_[] = {__VA_ARGS__};            \
    for (uint32_t i = 0;                                               \
         i < sizeof(cq_req_fields_) / sizeof(cq_req_fields_[0]); ++i) { \
      cq_val v;                                                        \
      cq_val_u32(&v, cq_req_fields_[i]);                               \
      cq_save_output(&v);                                              \
    }                                                                  \
    return 0;                                                          \
  }

#endif /* CQ_PLUGIN_H */
