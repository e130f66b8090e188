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
#include "cq_plugin.h"

#include <stddef.h>

void* memcpy(void* dst, const void* src, size_t n);

/* scratch buffer for one encoded value: 4 KiB payload + framing */
#define CQ_SCRATCH 4352
static uint8_t cq_buf_[CQ_SCRATCH];

/* ---------- varint (RFC 9000) ---------- */

int32_t cq_varint_len(uint64_t v) {
  if (v < (1u << 6)) return 1;
  if (v < (1u << 14)) return 2;
  if (v < (1u << 30)) return 4;
  if (v < ((uint64_t)1 << 62)) return 8;
  return 0;
}

int32_t cq_varint_encode(uint64_t v, uint8_t* out, uint32_t cap) {
  int32_t len = cq_varint_len(v);
  if (len == 0 || (uint32_t)len > cap) return CQ_ERR_RANGE;
  for (int32_t i = 0; i < len; ++i)
    out[i] = (uint8_t)(v >> (8 * (len - 1 - i)));
  static const uint8_t prefix[9] = {0, 0x00, 0x40, 0, 0x80, 0, 0, 0, 0xc0};
  out[0] |= prefix[len];
  return len;
}

int32_t cq_varint_decode(const uint8_t* in, uint32_t len, uint64_t* out) {
  if (len < 1) return CQ_ERR_DECODE;
  uint32_t n = 1u << (in[0] >> 6);
  if (len < n) return CQ_ERR_DECODE;
  uint64_t v = in[0] & 0x3f;
  for (uint32_t i = 1; i < n; ++i) v = (v << 8) | in[i];
  *out = v;
  return (int32_t)n;
}

/* ---------- little-endian helpers ---------- */

static void put_le(uint8_t* out, uint64_t v, uint32_t n) {
  for (uint32_t i = 0; i < n; ++i) out[i] = (uint8_t)(v >> (8 * i));
}

static uint64_t get_le(const uint8_t* in, uint32_t n) {
  uint64_t v = 0;
  for (uint32_t i = n; i > 0; --i) v = (v << 8) | in[i - 1];
  return v;
}

/* ---------- value constructors ---------- */

void cq_val_bool(cq_val* v, int b) {
  v->tag = CQ_TAG_BOOL;
  v->u.boolean = b ? 1 : 0;
}
void cq_val_u32(cq_val* v, uint32_t x) {
  v->tag = CQ_TAG_U32;
  v->u.u32 = x;
}
void cq_val_u64(cq_val* v, uint64_t x) {
  v->tag = CQ_TAG_U64;
  v->u.u64 = x;
}
void cq_val_usize(cq_val* v, uint64_t x) {
  v->tag = CQ_TAG_USIZE;
  v->u.u64 = x;
}
void cq_val_duration(cq_val* v, uint64_t us) {
  v->tag = CQ_TAG_DURATION;
  v->u.u64 = us;
}
void cq_val_frame(cq_val* v, const cq_frame* f) {
  v->tag = CQ_TAG_FRAME;
  v->u.frame = *f;
}
void cq_val_raw_text(cq_val* v, const char* s) {
  v->tag = CQ_TAG_RAW;
  uint32_t n = cq_strlen(s);
  if (n > CQ_RAW_MAX) n = CQ_RAW_MAX;
  v->u.raw.len = n;
  memcpy(v->u.raw.data, s, n);
}

/* ---------- frame codec (boundary form) ---------- */

typedef struct {
  uint8_t* out;
  uint32_t cap;
  uint32_t pos;
  int err;
} enc_t;

static void enc_bytes(enc_t* e, const void* p, uint32_t n) {
  if (e->err) return;
  if (e->pos + n > e->cap) {
    e->err = 1;
    return;
  }
  memcpy(e->out + e->pos, p, n);
  e->pos += n;
}

static void enc_u8(enc_t* e, uint8_t b) { enc_bytes(e, &b, 1); }

static void enc_le(enc_t* e, uint64_t v, uint32_t n) {
  uint8_t tmp[8];
  put_le(tmp, v, n);
  enc_bytes(e, tmp, n);
}

static void enc_varint(enc_t* e, uint64_t v) {
  if (e->err) return;
  int32_t n = cq_varint_encode(v, e->out + e->pos, e->cap - e->pos);
  if (n < 0) {
    e->err = 1;
    return;
  }
  e->pos += (uint32_t)n;
}

static int32_t frame_encode(const cq_frame* f, enc_t* e) {
  enc_varint(e, f->type);
  switch (f->type) {
    case CQ_FRAME_PADDING:
    case CQ_FRAME_PING:
      break;
    case CQ_FRAME_ACK: {
      enc_varint(e, f->u.ack.largest);
      enc_varint(e, f->u.ack.delay_us);
      enc_varint(e, f->u.ack.range_count);
      for (uint32_t i = 0; i < f->u.ack.range_count; ++i) {
        enc_varint(e, f->u.ack.ranges[i].gap);
        enc_varint(e, f->u.ack.ranges[i].len);
      }
      break;
    }
    case CQ_FRAME_MAX_DATA:
      enc_varint(e, f->u.max_data.maximum);
      break;
    case CQ_FRAME_STREAM:
      enc_varint(e, f->u.stream.id);
      enc_varint(e, f->u.stream.offset);
      enc_varint(e, f->u.stream.length);
      enc_u8(e, f->u.stream.fin ? 1 : 0);
      break;
    case CQ_FRAME_PATH_CHALLENGE:
    case CQ_FRAME_PATH_RESPONSE:
      enc_bytes(e, f->u.path.data, 8);
      break;
    case CQ_FRAME_CONNECTION_CLOSE:
      enc_varint(e, f->u.close.code);
      enc_varint(e, f->u.close.reason_len);
      enc_bytes(e, f->u.close.reason, f->u.close.reason_len);
      break;
    default:
      if (f->type <= 0x1e) return CQ_ERR_DECODE; /* unassigned core value */
      enc_u8(e, f->u.ext.count);
      enc_bytes(e, f->u.ext.encoded, f->u.ext.len);
      break;
  }
  return e->err ? CQ_ERR_RANGE : (int32_t)e->pos;
}

typedef struct {
  const uint8_t* in;
  uint32_t len;
  uint32_t pos;
  int err;
} dec_t;

static uint64_t dec_varint(dec_t* d) {
  if (d->err) return 0;
  uint64_t v = 0;
  int32_t n = cq_varint_decode(d->in + d->pos, d->len - d->pos, &v);
  if (n < 0) {
    d->err = 1;
    return 0;
  }
  d->pos += (uint32_t)n;
  return v;
}

static void dec_bytes(dec_t* d, void* out, uint32_t n) {
  if (d->err) return;
  if (d->pos + n > d->len) {
    d->err = 1;
    return;
  }
  memcpy(out, d->in + d->pos, n);
  d->pos += n;
}

static uint8_t dec_u8(dec_t* d) {
  uint8_t b = 0;
  dec_bytes(d, &b, 1);
  return b;
}

static int32_t val_decode_inner(dec_t* d, cq_val* out, int depth);

static int32_t frame_decode(dec_t* d, cq_frame* f, int depth) {
  f->type = dec_varint(d);
  if (d->err) return CQ_ERR_DECODE;
  switch (f->type) {
    case CQ_FRAME_PADDING:
    case CQ_FRAME_PING:
      break;
    case CQ_FRAME_ACK: {
      f->u.ack.largest = dec_varint(d);
      f->u.ack.delay_us = dec_varint(d);
      uint64_t count = dec_varint(d);
      if (d->err || count > CQ_MAX_ACK_RANGES) return CQ_ERR_DECODE;
      f->u.ack.range_count = (uint32_t)count;
      for (uint32_t i = 0; i < count; ++i) {
        f->u.ack.ranges[i].gap = dec_varint(d);
        f->u.ack.ranges[i].len = dec_varint(d);
      }
      break;
    }
    case CQ_FRAME_MAX_DATA:
      f->u.max_data.maximum = dec_varint(d);
      break;
    case CQ_FRAME_STREAM:
      f->u.stream.id = dec_varint(d);
      f->u.stream.offset = dec_varint(d);
      f->u.stream.length = dec_varint(d);
      f->u.stream.fin = dec_u8(d);
      break;
    case CQ_FRAME_PATH_CHALLENGE:
    case CQ_FRAME_PATH_RESPONSE:
      dec_bytes(d, f->u.path.data, 8);
      break;
    case CQ_FRAME_CONNECTION_CLOSE: {
      f->u.close.code = dec_varint(d);
      uint64_t rlen = dec_varint(d);
      if (d->err || rlen > CQ_REASON_MAX) return CQ_ERR_DECODE;
      f->u.close.reason_len = (uint32_t)rlen;
      dec_bytes(d, f->u.close.reason, (uint32_t)rlen);
      break;
    }
    default: {
      if (f->type <= 0x1e) return CQ_ERR_DECODE;
      if (depth > 2) return CQ_ERR_DECODE;
      uint8_t count = dec_u8(d);
      if (d->err || count > 8) return CQ_ERR_DECODE;
      f->u.ext.count = count;
      /* re-encode entries verbatim into the payload buffer */
      uint32_t start = d->pos;
      for (uint8_t i = 0; i < count; ++i) {
        cq_val tmp;
        if (val_decode_inner(d, &tmp, depth + 1) < 0) return CQ_ERR_DECODE;
      }
      uint32_t span = d->pos - start;
      if (span > CQ_EXT_PAYLOAD_MAX) return CQ_ERR_DECODE;
      f->u.ext.len = span;
      memcpy(f->u.ext.encoded, d->in + start, span);
      break;
    }
  }
  return d->err ? CQ_ERR_DECODE : (int32_t)d->pos;
}

/* ---------- value codec ---------- */

static int32_t val_encode_inner(const cq_val* v, enc_t* e) {
  enc_u8(e, v->tag);
  switch (v->tag) {
    case CQ_TAG_BOOL:
      enc_u8(e, v->u.boolean ? 1 : 0);
      break;
    case CQ_TAG_I32:
    case CQ_TAG_U32:
      enc_le(e, (uint32_t)v->u.u32, 4);
      break;
    case CQ_TAG_I64:
    case CQ_TAG_U64:
    case CQ_TAG_USIZE:
    case CQ_TAG_DURATION:
    case CQ_TAG_INSTANT:
      enc_le(e, v->u.u64, 8);
      break;
    case CQ_TAG_SOCKADDR:
      enc_u8(e, v->u.addr.version);
      enc_bytes(e, v->u.addr.addr, v->u.addr.version == 4 ? 4 : 16);
      enc_le(e, v->u.addr.port, 2);
      break;
    case CQ_TAG_FRAME: {
      int32_t r = frame_encode(&v->u.frame, e);
      if (r < 0) return r;
      break;
    }
    case CQ_TAG_TP:
      enc_varint(e, v->u.tp.type);
      enc_varint(e, v->u.tp.len);
      enc_bytes(e, v->u.tp.value, v->u.tp.len);
      break;
    case CQ_TAG_BYTES:
      enc_le(e, v->u.bytes.tag, 8);
      enc_le(e, v->u.bytes.max_read, 8);
      enc_le(e, v->u.bytes.max_write, 8);
      break;
    case CQ_TAG_RAW:
      enc_varint(e, v->u.raw.len);
      enc_bytes(e, v->u.raw.data, v->u.raw.len);
      break;
    default:
      return CQ_ERR_DECODE;
  }
  return e->err ? CQ_ERR_RANGE : (int32_t)e->pos;
}

static int32_t val_decode_inner(dec_t* d, cq_val* out, int depth) {
  uint8_t tag = dec_u8(d);
  if (d->err) return CQ_ERR_DECODE;
  out->tag = tag;
  switch (tag) {
    case CQ_TAG_BOOL: {
      uint8_t b = dec_u8(d);
      if (b > 1) return CQ_ERR_DECODE;
      out->u.boolean = b;
      break;
    }
    case CQ_TAG_I32:
    case CQ_TAG_U32: {
      uint8_t tmp[4];
      dec_bytes(d, tmp, 4);
      out->u.u32 = (uint32_t)get_le(tmp, 4);
      break;
    }
    case CQ_TAG_I64:
    case CQ_TAG_U64:
    case CQ_TAG_USIZE:
    case CQ_TAG_DURATION:
    case CQ_TAG_INSTANT: {
      uint8_t tmp[8];
      dec_bytes(d, tmp, 8);
      out->u.u64 = get_le(tmp, 8);
      break;
    }
    case CQ_TAG_SOCKADDR: {
      out->u.addr.version = dec_u8(d);
      if (out->u.addr.version != 4 && out->u.addr.version != 6) return CQ_ERR_DECODE;
      dec_bytes(d, out->u.addr.addr, out->u.addr.version == 4 ? 4 : 16);
      uint8_t tmp[2];
      dec_bytes(d, tmp, 2);
      out->u.addr.port = (uint16_t)get_le(tmp, 2);
      break;
    }
    case CQ_TAG_FRAME:
      if (frame_decode(d, &out->u.frame, depth) < 0) return CQ_ERR_DECODE;
      break;
    case CQ_TAG_TP: {
      out->u.tp.type = dec_varint(d);
      uint64_t len = dec_varint(d);
      if (d->err || len > CQ_TP_VALUE_MAX) return CQ_ERR_DECODE;
      out->u.tp.len = (uint32_t)len;
      dec_bytes(d, out->u.tp.value, (uint32_t)len);
      break;
    }
    case CQ_TAG_BYTES: {
      uint8_t tmp[8];
      dec_bytes(d, tmp, 8);
      out->u.bytes.tag = get_le(tmp, 8);
      dec_bytes(d, tmp, 8);
      out->u.bytes.max_read = get_le(tmp, 8);
      dec_bytes(d, tmp, 8);
      out->u.bytes.max_write = get_le(tmp, 8);
      break;
    }
    case CQ_TAG_RAW: {
      uint64_t len = dec_varint(d);
      if (d->err || len > CQ_RAW_MAX) return CQ_ERR_DECODE;
      out->u.raw.len = (uint32_t)len;
      dec_bytes(d, out->u.raw.data, (uint32_t)len);
      break;
    }
    default:
      return CQ_ERR_DECODE;
  }
  return d->err ? CQ_ERR_DECODE : (int32_t)d->pos;
}

int32_t cq_val_encode(const cq_val* v, uint8_t* out, uint32_t cap) {
  enc_t e = {out, cap, 0, 0};
  return val_encode_inner(v, &e);
}

int32_t cq_val_decode(const uint8_t* in, uint32_t len, cq_val* out) {
  dec_t d = {in, len, 0, 0};
  return val_decode_inner(&d, out, 0);
}

/* ---------- API wrappers ---------- */

int64_t cq_get_input(uint32_t idx, cq_val* out) {
  int64_t n = cq_raw_get_input(idx, cq_buf_, CQ_SCRATCH);
  if (n < 0) return n;
  int32_t used = cq_val_decode(cq_buf_, (uint32_t)n, out);
  if (used < 0 || used != (int32_t)n) return CQ_ERR_DECODE;
  return CQ_OK;
}

int64_t cq_save_output(const cq_val* v) {
  int32_t n = cq_val_encode(v, cq_buf_, CQ_SCRATCH);
  if (n < 0) return n;
  return cq_raw_save_output(cq_buf_, (uint32_t)n);
}

int64_t cq_read_field(uint32_t field, cq_val* out) {
  int64_t n = cq_raw_get_connection_field(field, cq_buf_, CQ_SCRATCH);
  if (n < 0) return n;
  int32_t used = cq_val_decode(cq_buf_, (uint32_t)n, out);
  if (used < 0 || used != (int32_t)n) return CQ_ERR_DECODE;
  return CQ_OK;
}

int64_t cq_write_field(uint32_t field, const cq_val* v) {
  int32_t n = cq_val_encode(v, cq_buf_, CQ_SCRATCH);
  if (n < 0) return n;
  return cq_raw_set_connection_field(field, cq_buf_, (uint32_t)n);
}

int64_t cq_read_field_u64(uint32_t field, uint64_t* out) {
  cq_val v;
  int64_t rc = cq_read_field(field, &v);
  if (rc != CQ_OK) return rc;
  switch (v.tag) {
    case CQ_TAG_U64:
    case CQ_TAG_USIZE:
    case CQ_TAG_DURATION:
    case CQ_TAG_INSTANT:
      *out = v.u.u64;
      return CQ_OK;
    case CQ_TAG_U32:
      *out = v.u.u32;
      return CQ_OK;
    default:
      return CQ_ERR_DECODE;
  }
}

int64_t cq_read_field_bool(uint32_t field, int* out) {
  cq_val v;
  int64_t rc = cq_read_field(field, &v);
  if (rc != CQ_OK) return rc;
  if (v.tag != CQ_TAG_BOOL) return CQ_ERR_DECODE;
  *out = v.u.boolean;
  return CQ_OK;
}

int64_t cq_write_field_u64(uint32_t field, uint64_t x) {
  cq_val v;
  cq_val_u64(&v, x);
  return cq_write_field(field, &v);
}

int64_t cq_write_field_duration(uint32_t field, uint64_t us) {
  cq_val v;
  cq_val_duration(&v, us);
  return cq_write_field(field, &v);
}

int64_t cq_register_frame(uint64_t t) { return cq_raw_register_frame_type(t); }
int64_t cq_register_tp(uint64_t t) { return cq_raw_register_tp_type(t); }
int64_t cq_enable(void) { return cq_raw_enable_plugin(); }

uint64_t cq_now(void) { return (uint64_t)cq_raw_current_time(); }
int64_t cq_timer_at(uint64_t deadline_us, uint64_t tag) {
  return cq_raw_set_timer(deadline_us, tag);
}
int64_t cq_timer_after(uint64_t delay_us, uint64_t tag) {
  return cq_raw_set_timer(cq_now() + delay_us, tag);
}
int64_t cq_cancel_timer(uint64_t id) { return cq_raw_cancel_timer(id); }

int64_t cq_bytes_read(const cq_bytes* cap, uint64_t off, void* dst, uint32_t len) {
  return cq_raw_bytes_read(cap->tag, off, dst, len);
}
int64_t cq_bytes_write(const cq_bytes* cap, uint64_t off, const void* src, uint32_t len) {
  return cq_raw_bytes_write(cap->tag, off, src, len);
}

int64_t cq_file_open(const char* path, uint32_t mode) {
  return cq_raw_file_open(path, cq_strlen(path), mode);
}
int64_t cq_file_read(int64_t fd, void* dst, uint32_t cap) {
  if (fd < 0) return CQ_ERR_NOT_AVAILABLE;
  return cq_raw_file_read((uint32_t)fd, dst, cap);
}
int64_t cq_file_write(int64_t fd, const void* src, uint32_t len) {
  if (fd < 0) return CQ_ERR_NOT_AVAILABLE;
  return cq_raw_file_write((uint32_t)fd, src, len);
}
int64_t cq_file_write_str(int64_t fd, const char* s) {
  return cq_file_write(fd, s, cq_strlen(s));
}
int64_t cq_file_close(int64_t fd) {
  if (fd < 0) return CQ_ERR_NOT_AVAILABLE;
  return cq_raw_file_close((uint32_t)fd);
}

int64_t cq_call_plugin_control(const char* target, uint64_t op, const cq_val* args,
                               uint32_t nargs, cq_val* outs, uint32_t max_outs,
                               uint32_t* nouts) {
  static uint8_t arg_buf[CQ_SCRATCH];
  static uint8_t out_buf[CQ_SCRATCH];
  if (nargs > 8) return CQ_ERR_RANGE;
  uint32_t pos = 0;
  arg_buf[pos++] = (uint8_t)nargs;
  for (uint32_t i = 0; i < nargs; ++i) {
    int32_t n = cq_val_encode(&args[i], arg_buf + pos, CQ_SCRATCH - pos);
    if (n < 0) return n;
    pos += (uint32_t)n;
  }
  int64_t st = cq_raw_plugin_control(target, cq_strlen(target), op,
                                     nargs ? arg_buf : 0, nargs ? pos : 0, out_buf,
                                     CQ_SCRATCH);
  if (nouts) *nouts = 0;
  if (st < 0) return st; /* engine error: no output block was written */
  /* decode outputs: count prefix then encoded values */
  uint32_t rpos = 0;
  uint8_t count = out_buf[rpos++];
  for (uint8_t i = 0; i < count && outs && i < max_outs; ++i) {
    int32_t n = cq_val_decode(out_buf + rpos, CQ_SCRATCH - rpos, &outs[i]);
    if (n < 0) break;
    rpos += (uint32_t)n;
    if (nouts) *nouts = i + 1u;
  }
  return st;
}

int64_t cq_log(const char* s) { return cq_raw_log_line(s, cq_strlen(s)); }

/* ---------- utilities ---------- */

uint32_t cq_strlen(const char* s) {
  uint32_t n = 0;
  while (s[n]) ++n;
  return n;
}

uint32_t cq_u64_to_dec(uint64_t v, char* out) {
  char tmp[21];
  uint32_t n = 0;
  do {
    tmp[n++] = (char)('0' + v % 10);
    v /= 10;
  } while (v);
  for (uint32_t i = 0; i < n; ++i) out[i] = tmp[n - 1 - i];
  out[n] = 0;
  return n;
}

uint32_t cq_u64_to_hex(uint64_t v, char* out) {
  char tmp[17];
  uint32_t n = 0;
  do {
    tmp[n++] = "0123456789abcdef"[v & 0xf];
    v >>= 4;
  } while (v);
  for (uint32_t i = 0; i < n; ++i) out[i] = tmp[n - 1 - i];
  out[n] = 0;
  return n;
}

int32_t cq_dec_to_u64(const char* s, uint32_t len, uint64_t* out) {
  if (len == 0) return CQ_ERR_DECODE;
  uint64_t v = 0;
  for (uint32_t i = 0; i < len; ++i) {
    if (s[i] < '0' || s[i] > '9') return CQ_ERR_DECODE;
    v = v * 10 + (uint64_t)(s[i] - '0');
  }
  *out = v;
  return CQ_OK;
}

uint64_t cq_rand_u64(void) {
  /* xorshift64*, seeded lazily from the host clock. Under a virtual clock
   * this keeps whole scenarios reproducible. */
  static uint64_t state = 0;
  if (state == 0) state = cq_now() * 2654435761u + 0x9e3779b97f4a7c15u;
  state ^= state >> 12;
  state ^= state << 25;
  state ^= state >> 27;
  return state * 0x2545f4914f6cdd1du;
}

/* ---------- extension frame payload ---------- */

void cq_frame_ext_init(cq_frame* f, uint64_t frame_type) {
  f->type = frame_type;
  f->u.ext.count = 0;
  f->u.ext.len = 0;
}

int32_t cq_frame_ext_add(cq_frame* f, const cq_val* v) {
  if (f->u.ext.count >= 8) return CQ_ERR_RANGE;
  int32_t n = cq_val_encode(v, f->u.ext.encoded + f->u.ext.len,
                            CQ_EXT_PAYLOAD_MAX - f->u.ext.len);
  if (n < 0) return n;
  f->u.ext.len += (uint32_t)n;
  f->u.ext.count += 1;
  return CQ_OK;
}

int32_t cq_frame_ext_add_u64(cq_frame* f, uint64_t x) {
  cq_val v;
  cq_val_u64(&v, x);
  return cq_frame_ext_add(f, &v);
}

int32_t cq_frame_ext_add_duration(cq_frame* f, uint64_t us) {
  cq_val v;
  cq_val_duration(&v, us);
  return cq_frame_ext_add(f, &v);
}

int32_t cq_frame_ext_get(const cq_frame* f, uint32_t idx, cq_val* out) {
  if (idx >= f->u.ext.count) return CQ_ERR_INPUT_MISSING;
  uint32_t pos = 0;
  for (uint32_t i = 0; i <= idx; ++i) {
    int32_t n = cq_val_decode(f->u.ext.encoded + pos, f->u.ext.len - pos, out);
    if (n < 0) return n;
    if (i == idx) return CQ_OK;
    pos += (uint32_t)n;
  }
  return CQ_ERR_INTERNAL;
}
