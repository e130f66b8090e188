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
 * cq-abi-1: the raw host interface available to plugin bytecode. Every
 * import lives in the "cq-abi-1" namespace; numeric constants here are the
 * wire contract and must match the host side (docs/plugin-abi.md).
 */
#ifndef CQ_ABI_H
#define CQ_ABI_H

#include <stdint.h>

#define CQ_ABI_MODULE "cq-abi-1"

#define CQ_IMPORT(sym) \
  __attribute__((import_module(CQ_ABI_MODULE), import_name(#sym)))

CQ_IMPORT(get_input)
extern int64_t cq_raw_get_input(uint32_t idx, void* out, uint32_t cap);
CQ_IMPORT(save_output)
extern int64_t cq_raw_save_output(const void* ptr, uint32_t len);
CQ_IMPORT(get_connection_field)
extern int64_t cq_raw_get_connection_field(uint32_t field, void* out, uint32_t cap);
CQ_IMPORT(set_connection_field)
extern int64_t cq_raw_set_connection_field(uint32_t field, const void* ptr, uint32_t len);
CQ_IMPORT(register_frame_type)
extern int64_t cq_raw_register_frame_type(uint64_t frame_type);
CQ_IMPORT(register_tp_type)
extern int64_t cq_raw_register_tp_type(uint64_t tp_type);
CQ_IMPORT(enable_plugin)
extern int64_t cq_raw_enable_plugin(void);
CQ_IMPORT(current_time)
extern int64_t cq_raw_current_time(void);
CQ_IMPORT(set_timer)
extern int64_t cq_raw_set_timer(uint64_t deadline_us, uint64_t callback_tag);
CQ_IMPORT(cancel_timer)
extern int64_t cq_raw_cancel_timer(uint64_t timer_id);
CQ_IMPORT(bytes_read)
extern int64_t cq_raw_bytes_read(uint64_t tag, uint64_t offset, void* dst, uint32_t len);
CQ_IMPORT(bytes_write)
extern int64_t cq_raw_bytes_write(uint64_t tag, uint64_t offset, const void* src,
                                  uint32_t len);
CQ_IMPORT(file_open)
extern int64_t cq_raw_file_open(const void* path, uint32_t path_len, uint32_t mode);
CQ_IMPORT(file_read)
extern int64_t cq_raw_file_read(uint32_t fd, void* dst, uint32_t cap);
CQ_IMPORT(file_write)
extern int64_t cq_raw_file_write(uint32_t fd, const void* src, uint32_t len);
CQ_IMPORT(file_close)
extern int64_t cq_raw_file_close(uint32_t fd);
CQ_IMPORT(plugin_control)
extern int64_t cq_raw_plugin_control(const void* name, uint32_t name_len, uint64_t op,
                                     const void* args, uint32_t args_len, void* out,
                                     uint32_t out_cap);
CQ_IMPORT(log_line)
extern int64_t cq_raw_log_line(const void* text, uint32_t len);

/* status codes: 0 ok, [-64,-1] engine-reserved, positive plugin-defined.
 * CQ_HALT_SENDING is interpreted by hosts when returned from PrepareFrame. */
#define CQ_OK 0
#define CQ_HALT_SENDING 1
#define CQ_ERR_PERMISSION (-1)
#define CQ_ERR_INVALID_CAPABILITY (-2)
#define CQ_ERR_RANGE (-3)
#define CQ_ERR_NOT_AVAILABLE (-4)
#define CQ_ERR_ROUTINE_ABORTED (-5)
#define CQ_ERR_INPUT_MISSING (-6)
#define CQ_ERR_DECODE (-7)
#define CQ_ERR_UNKNOWN_FIELD (-8)
#define CQ_ERR_INTERNAL (-9)

/* PluginVal variant tags */
#define CQ_TAG_BOOL 0x00
#define CQ_TAG_I32 0x01
#define CQ_TAG_I64 0x02
#define CQ_TAG_U32 0x03
#define CQ_TAG_U64 0x04
#define CQ_TAG_USIZE 0x05
#define CQ_TAG_DURATION 0x06
#define CQ_TAG_INSTANT 0x07
#define CQ_TAG_SOCKADDR 0x08
#define CQ_TAG_FRAME 0x09
#define CQ_TAG_TP 0x0a
#define CQ_TAG_BYTES 0x0b
#define CQ_TAG_RAW 0x0c

/* connection field ids (connection / packet-number-space / recovery) */
#define CQ_FIELD_IS_SERVER 0x0000
#define CQ_FIELD_MAX_TX_DATA 0x0001
#define CQ_FIELD_TX_DATA 0x0002
#define CQ_FIELD_MAX_RX_DATA 0x0003
#define CQ_FIELD_RX_DATA 0x0004
#define CQ_FIELD_MTU 0x0005
#define CQ_FIELD_PEER_ADDR 0x0006
#define CQ_FIELD_LOCAL_ADDR 0x0007
#define CQ_FIELD_IS_ESTABLISHED 0x0008
#define CQ_FIELD_IDLE_TIMEOUT 0x0009
#define CQ_FIELD_NEXT_PKT_NUM 0x0100
#define CQ_FIELD_LARGEST_RX_PKT_NUM 0x0101
#define CQ_FIELD_ACK_ELICITING_IN_FLIGHT 0x0102
#define CQ_FIELD_CWND 0x0200
#define CQ_FIELD_SSTHRESH 0x0201
#define CQ_FIELD_BYTES_IN_FLIGHT 0x0202
#define CQ_FIELD_SMOOTHED_RTT 0x0203
#define CQ_FIELD_RTT_VAR 0x0204
#define CQ_FIELD_MIN_RTT 0x0205
#define CQ_FIELD_LATEST_RTT 0x0206
#define CQ_FIELD_LOSS_COUNT 0x0207
#define CQ_FIELD_PACING_RATE 0x0208
#define CQ_FIELD_IN_SLOW_START 0x0209

/* core frame types (RFC 9000 allocation; extensions live above 0x1e) */
#define CQ_FRAME_PADDING 0x00
#define CQ_FRAME_PING 0x01
#define CQ_FRAME_ACK 0x02
#define CQ_FRAME_STREAM 0x08
#define CQ_FRAME_MAX_DATA 0x10
#define CQ_FRAME_PATH_CHALLENGE 0x1a
#define CQ_FRAME_PATH_RESPONSE 0x1b
#define CQ_FRAME_CONNECTION_CLOSE 0x1c

/* file_open modes */
#define CQ_FILE_READ 0
#define CQ_FILE_WRITE 1
#define CQ_FILE_APPEND 2

/* NotifyFrame event kinds (first input) */
#define CQ_NOTIFY_ACKED 0
#define CQ_NOTIFY_LOST 1

#endif /* CQ_ABI_H */
