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

#include "cxlsim/flit.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "cxlsim/crc.hpp"

namespace cxlsim {

const char* to_string(FlitMode m) {
  switch (m) {
    case FlitMode::F68: return "68";
    case FlitMode::F256: return "256";
    case FlitMode::F128LO: return "128lo";
  }
  return "?";
}

const char* to_string(ProtoKind k) {
  switch (k) {
    case ProtoKind::IO: return "io";
    case ProtoKind::CACHEMEM: return "cachemem";
    case ProtoKind::ALMP: return "almp";
    case ProtoKind::IDLE: return "idle";
  }
  return "?";
}

unsigned flit_bytes(FlitMode m) {
  return m == FlitMode::F68 ? kFlit68Bytes : kFlit256Bytes;
}

unsigned usable_slots(FlitMode m) {
  switch (m) {
    case FlitMode::F68: return 4;
    case FlitMode::F256: return 15;
    case FlitMode::F128LO: return 14;
  }
  return 0;
}

unsigned slot_equivalents(FlitMode m) {
  return m == FlitMode::F68 ? 4 : 16;
}

namespace {

// Extended Hamming(8,4) over the data nibble (kind << 1) | eds.
std::uint8_t ham84(unsigned nibble) {
  unsigned d0 = nibble & 1, d1 = (nibble >> 1) & 1, d2 = (nibble >> 2) & 1,
           d3 = (nibble >> 3) & 1;
  unsigned p1 = d0 ^ d1 ^ d3;
  unsigned p2 = d0 ^ d2 ^ d3;
  unsigned p3 = d1 ^ d2 ^ d3;
  unsigned bits[8] = {p1, p2, d0, p3, d1, d2, d3, 0};
  unsigned parity = 0;
  for (int i = 0; i < 7; ++i) parity ^= bits[i];
  bits[7] = parity;
  std::uint8_t v = 0;
  for (int i = 0; i < 8; ++i) v = static_cast<std::uint8_t>(v | (bits[i] << i));
  return v;
}

const std::array<std::uint8_t, 8>& codewords() {
  static const std::array<std::uint8_t, 8> cw = [] {
    std::array<std::uint8_t, 8> c{};
    for (unsigned n = 0; n < 8; ++n) c[n] = ham84(n);
    return c;
  }();
  return cw;
}

// 68B layout offsets
constexpr unsigned k68Payload = 2;
constexpr unsigned k68Crc = 66;
// 256B standard layout
constexpr unsigned k256Slots = 2;
constexpr unsigned k256Fec = 242;
constexpr unsigned k256Crc = 248;
// 128B LO layout
constexpr unsigned kLoEvenContent = 2;    // 120 bytes
constexpr unsigned kLoEvenCrc = 122;      // 6 bytes
constexpr unsigned kLoOddContent = 128;   // 116 bytes
constexpr unsigned kLoOddFec = 244;       // 6 bytes
constexpr unsigned kLoOddCrc = 250;       // 6 bytes
constexpr unsigned kLoContentBytes = 236;

void put_be(std::vector<std::uint8_t>& v, unsigned at, std::uint64_t val,
            unsigned nbytes) {
  for (unsigned i = 0; i < nbytes; ++i)
    v[at + i] = static_cast<std::uint8_t>(val >> (8 * (nbytes - 1 - i)));
}

std::uint64_t get_be(std::span<const std::uint8_t> v, unsigned at,
                     unsigned nbytes) {
  std::uint64_t val = 0;
  for (unsigned i = 0; i < nbytes; ++i) val = (val << 8) | v[at + i];
  return val;
}

void check_grammar(FlitMode mode, std::span<const Slot> slots) {
  unsigned want = usable_slots(mode);
  if (slots.size() != want) {
    std::ostringstream os;
    os << "mode " << to_string(mode) << " takes " << want << " slots, got "
       << slots.size();
    throw SlotGrammarViolation(os.str());
  }
  for (const Slot& s : slots) {
    if (s.kind == SlotKind::HS && mode == FlitMode::F68)
      throw SlotGrammarViolation("HS slots exist only in 256B flit modes");
    if (s.kind == SlotKind::HS) {
      for (unsigned i = 10; i < kSlotBytes; ++i)
        if (s.bytes[i] != 0)
          throw SlotGrammarViolation("HS slot carries only 10 bytes");
    }
  }
}

// LO content stream: 120B in the even half, 116B in the odd half; the first
// 224B are the 14 slots, the final 12B are reserved.
void scatter_lo_content(std::vector<std::uint8_t>& out,
                        std::span<const std::uint8_t> content) {
  std::memcpy(out.data() + kLoEvenContent, content.data(), 120);
  std::memcpy(out.data() + kLoOddContent, content.data() + 120, 116);
}

std::array<std::uint8_t, kLoContentBytes> gather_lo_content(
    std::span<const std::uint8_t> bytes) {
  std::array<std::uint8_t, kLoContentBytes> c{};
  std::memcpy(c.data(), bytes.data() + kLoEvenContent, 120);
  std::memcpy(c.data() + 120, bytes.data() + kLoOddContent, 116);
  return c;
}

}  // namespace

std::uint8_t protocol_id_codeword(ProtoKind kind, bool eds) {
  return codewords()[(static_cast<unsigned>(kind) << 1) | (eds ? 1 : 0)];
}

std::uint16_t encode_protocol_id(ProtoKind kind, bool eds) {
  std::uint8_t c = protocol_id_codeword(kind, eds);
  return static_cast<std::uint16_t>((c << 8) | c);
}

std::optional<DecodedProtocolId> decode_protocol_byte(std::uint8_t b) {
  const auto& cw = codewords();
  for (unsigned n = 0; n < 8; ++n) {
    int dist = std::popcount(static_cast<unsigned>(b ^ cw[n]));
    if (dist <= 1) {
      return DecodedProtocolId{static_cast<ProtoKind>(n >> 1), (n & 1) != 0,
                               dist};
    }
  }
  return std::nullopt;
}

std::optional<DecodedProtocolId> decode_protocol_id(std::uint8_t b0,
                                                    std::uint8_t b1) {
  auto d0 = decode_protocol_byte(b0);
  auto d1 = decode_protocol_byte(b1);
  if (!d0 || !d1) return std::nullopt;
  if (d0->kind != d1->kind || d0->eds != d1->eds) return std::nullopt;
  return DecodedProtocolId{d0->kind, d0->eds,
                           d0->corrected_bits + d1->corrected_bits};
}

std::vector<std::uint8_t> encode_flit(FlitMode mode, const FlitInfo& info,
                                      std::span<const Slot> slots) {
  check_grammar(mode, slots);
  std::vector<std::uint8_t> out(flit_bytes(mode), 0);

  switch (mode) {
    case FlitMode::F68: {
      std::uint16_t pid = encode_protocol_id(info.kind, info.eds);
      out[0] = static_cast<std::uint8_t>(pid >> 8);
      out[1] = static_cast<std::uint8_t>(pid & 0xFF);
      for (unsigned i = 0; i < 4; ++i)
        std::memcpy(out.data() + k68Payload + i * kSlotBytes,
                    slots[i].bytes.data(), kSlotBytes);
      std::uint16_t crc = crc16_ccitt(
          std::span(out).subspan(k68Payload, 64));
      put_be(out, k68Crc, crc, 2);
      break;
    }
    case FlitMode::F256: {
      out[0] = protocol_id_codeword(info.kind, info.eds);
      out[1] = info.control;
      for (unsigned i = 0; i < 15; ++i)
        std::memcpy(out.data() + k256Slots + i * kSlotBytes,
                    slots[i].bytes.data(), kSlotBytes);
      // FEC bytes stay zero (opaque placeholder)
      std::uint64_t crc = crc64_ecma(std::span(out).subspan(0, k256Crc));
      put_be(out, k256Crc, crc, 8);
      break;
    }
    case FlitMode::F128LO: {
      out[0] = protocol_id_codeword(info.kind, info.eds);
      out[1] = info.control;
      std::array<std::uint8_t, kLoContentBytes> content{};
      for (unsigned i = 0; i < 14; ++i)
        std::memcpy(content.data() + i * kSlotBytes, slots[i].bytes.data(),
                    kSlotBytes);
      scatter_lo_content(out, content);
      put_be(out, kLoEvenCrc,
             crc48_from_crc64(std::span(out).subspan(0, kLoEvenCrc)), 6);
      put_be(out, kLoOddCrc,
             crc48_from_crc64(std::span(out).subspan(kLoOddContent,
                                                     kLoOddCrc - kLoOddContent)),
             6);
      break;
    }
  }
  return out;
}

FlitDecode decode_flit(FlitMode mode, std::span<const std::uint8_t> bytes) {
  FlitDecode r;
  if (bytes.size() != flit_bytes(mode)) {
    r.status = FlitDecode::Status::BAD_LENGTH;
    return r;
  }

  switch (mode) {
    case FlitMode::F68: {
      auto pid = decode_protocol_id(bytes[0], bytes[1]);
      if (!pid) {
        r.status = FlitDecode::Status::BAD_PROTOCOL_ID;
        return r;
      }
      r.info.kind = pid->kind;
      r.info.eds = pid->eds;
      std::uint16_t want = crc16_ccitt(bytes.subspan(k68Payload, 64));
      if (want != get_be(bytes, k68Crc, 2)) {
        r.status = FlitDecode::Status::CRC_MISMATCH;
        return r;
      }
      for (unsigned i = 0; i < 4; ++i) {
        std::array<std::uint8_t, kSlotBytes> s{};
        std::memcpy(s.data(), bytes.data() + k68Payload + i * kSlotBytes,
                    kSlotBytes);
        r.slots.push_back(s);
      }
      return r;
    }
    case FlitMode::F256: {
      auto pid = decode_protocol_byte(bytes[0]);
      if (!pid) {
        r.status = FlitDecode::Status::BAD_PROTOCOL_ID;
        return r;
      }
      r.info.kind = pid->kind;
      r.info.eds = pid->eds;
      r.info.control = bytes[1];
      if (crc64_ecma(bytes.subspan(0, k256Crc)) != get_be(bytes, k256Crc, 8)) {
        r.status = FlitDecode::Status::CRC_MISMATCH;
        return r;
      }
      for (unsigned i = 0; i < 15; ++i) {
        std::array<std::uint8_t, kSlotBytes> s{};
        std::memcpy(s.data(), bytes.data() + k256Slots + i * kSlotBytes,
                    kSlotBytes);
        r.slots.push_back(s);
      }
      return r;
    }
    case FlitMode::F128LO: {
      r.even_ok = crc48_from_crc64(bytes.subspan(0, kLoEvenCrc)) ==
                  get_be(bytes, kLoEvenCrc, 6);
      r.odd_ok = crc48_from_crc64(bytes.subspan(
                     kLoOddContent, kLoOddCrc - kLoOddContent)) ==
                 get_be(bytes, kLoOddCrc, 6);
      if (r.even_ok) {
        if (auto pid = decode_protocol_byte(bytes[0])) {
          r.info.kind = pid->kind;
          r.info.eds = pid->eds;
          r.info.control = bytes[1];
        } else {
          r.status = FlitDecode::Status::BAD_PROTOCOL_ID;
          return r;
        }
      }
      if (!r.even_ok || !r.odd_ok) {
        r.status = FlitDecode::Status::CRC_MISMATCH;
        r.bad_half = r.even_ok ? 1 : 0;
        return r;
      }
      auto content = gather_lo_content(bytes);
      for (unsigned i = 0; i < 14; ++i) {
        std::array<std::uint8_t, kSlotBytes> s{};
        std::memcpy(s.data(), content.data() + i * kSlotBytes, kSlotBytes);
        r.slots.push_back(s);
      }
      return r;
    }
  }
  return r;
}

std::string flit_trace_line(FlitMode mode, ProtoKind kind,
                            std::span<const std::uint8_t> bytes) {
  static const char* hexd = "0123456789abcdef";
  std::string s = "FLIT ";
  s += to_string(mode);
  s += ' ';
  s += to_string(kind);
  s += ' ';
  for (std::uint8_t b : bytes) {
    s += hexd[b >> 4];
    s += hexd[b & 0xF];
  }
  return s;
}

}  // namespace cxlsim
