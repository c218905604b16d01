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

#include "cxlsim/crc.hpp"

#include <array>

namespace cxlsim {

namespace {

std::array<std::uint16_t, 256> make_crc16_table() {
  std::array<std::uint16_t, 256> t{};
  for (unsigned i = 0; i < 256; ++i) {
    std::uint16_t v = static_cast<std::uint16_t>(i << 8);
    for (int b = 0; b < 8; ++b)
      v = static_cast<std::uint16_t>((v & 0x8000) ? (v << 1) ^ 0x1021 : v << 1);
    t[i] = v;
  }
  return t;
}

std::array<std::uint64_t, 256> make_crc64_table() {
  std::array<std::uint64_t, 256> t{};
  constexpr std::uint64_t poly = 0x42F0E1EBA9EA3693ULL;
  for (unsigned i = 0; i < 256; ++i) {
    std::uint64_t v = static_cast<std::uint64_t>(i) << 56;
    for (int b = 0; b < 8; ++b)
      v = (v & 0x8000000000000000ULL) ? (v << 1) ^ poly : v << 1;
    t[i] = v;
  }
  return t;
}

}  // namespace

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data) {
  static const auto table = make_crc16_table();
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data)
    crc = static_cast<std::uint16_t>((crc << 8) ^ table[(crc >> 8) ^ byte]);
  return crc;
}

std::uint64_t crc64_ecma(std::span<const std::uint8_t> data) {
  static const auto table = make_crc64_table();
  std::uint64_t crc = 0;
  for (std::uint8_t byte : data)
    crc = (crc << 8) ^ table[((crc >> 56) ^ byte) & 0xFF];
  return crc;
}

std::uint64_t crc48_from_crc64(std::span<const std::uint8_t> data) {
  return crc64_ecma(data) >> 16;
}

}  // namespace cxlsim
