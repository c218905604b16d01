/*
 * Copyright (c) 2026, the cxlsim authors
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

#ifndef CXLSIM_FLIT_HPP_
#define CXLSIM_FLIT_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxlsim {

enum class FlitMode : std::uint8_t { F68, F256, F128LO };

const char* to_string(FlitMode m);

// Flit geometry. A 68B flit is 2B protocol-ID + four 16B slots + 2B CRC.
// A 256B standard flit is 2B hdr + fifteen 16B slots + 6B FEC + 8B CRC.
// A latency-optimized flit is two 128B sub-flits: the even half carries the
// 2B hdr, 120B content and a 6B CRC; the odd half 116B content, 6B FEC and
// its own 6B CRC. 224B of the LO content form fourteen 16B slots; the
// trailing 12B are reserved.
inline constexpr unsigned kFlit68Bytes = 68;
inline constexpr unsigned kFlit256Bytes = 256;
inline constexpr unsigned kSlotBytes = 16;

unsigned flit_bytes(FlitMode m);
unsigned usable_slots(FlitMode m);          // 4 / 15 / 14
unsigned slot_equivalents(FlitMode m);      // 4.25->4, 16, 16 (wire footprint/16B)

enum class ProtoKind : std::uint8_t { IO, CACHEMEM, ALMP, IDLE };
const char* to_string(ProtoKind k);

enum class SlotKind : std::uint8_t { H, G, HS };

struct Slot {
  SlotKind kind = SlotKind::G;
  std::array<std::uint8_t, kSlotBytes> bytes{};
};

struct SlotGrammarViolation : std::runtime_error {
  explicit SlotGrammarViolation(const std::string& w) : std::runtime_error(w) {}
};

// ---- protocol-ID redundancy code ----
// 8 codewords (4 kinds x EDS), each an extended-Hamming(8,4) codeword with
// pairwise distance >= 4, repeated in both bytes of the 68B protocol-ID field
// and reused as the flit-type byte of the 256B header.

/// Returns the 2-byte field; both bytes are the same 8-bit codeword.
std::uint16_t encode_protocol_id(ProtoKind kind, bool eds);
std::uint8_t protocol_id_codeword(ProtoKind kind, bool eds);

struct DecodedProtocolId {
  ProtoKind kind;
  bool eds;
  int corrected_bits;  // 0..2 single-bit corrections applied
};

/// Corrects one flipped bit per byte; two flips within a byte (or halves that
/// disagree) are uncorrectable and yield nullopt.
std::optional<DecodedProtocolId> decode_protocol_id(std::uint8_t b0,
                                                    std::uint8_t b1);
std::optional<DecodedProtocolId> decode_protocol_byte(std::uint8_t b);

// ---- flit encode/decode ----

struct FlitInfo {
  ProtoKind kind = ProtoKind::CACHEMEM;
  bool eds = false;
  std::uint8_t control = 0;  // ack/nak/replay byte, 256B modes
};

/// Byte-exact layout per mode; CRC computed, FEC filled with zero bytes.
/// Throws SlotGrammarViolation when the slot count or kinds mismatch the
/// mode's grammar (HS slots exist only in 256B modes).
std::vector<std::uint8_t> encode_flit(FlitMode mode, const FlitInfo& info,
                                      std::span<const Slot> slots);

struct FlitDecode {
  enum class Status { OK, CRC_MISMATCH, BAD_PROTOCOL_ID, BAD_LENGTH };
  Status status = Status::OK;
  FlitInfo info;
  std::vector<std::array<std::uint8_t, kSlotBytes>> slots;
  // Latency-optimized mode: per-half CRC validity, so the even half can be
  // released for processing without waiting for the odd half.
  bool even_ok = true;
  bool odd_ok = true;
  int bad_half = -1;  // 0 = even, 1 = odd

  bool ok() const { return status == Status::OK; }
};

FlitDecode decode_flit(FlitMode mode, std::span<const std::uint8_t> bytes);

/// Trace line: `FLIT <mode> <protocol_id_kind> <hex bytes>`.
std::string flit_trace_line(FlitMode mode, ProtoKind kind,
                            std::span<const std::uint8_t> bytes);

}  // namespace cxlsim

#endif  // CXLSIM_FLIT_HPP_
