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

#ifndef CXLSIM_CRC_HPP_
#define CXLSIM_CRC_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

namespace cxlsim {

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF). Hamming distance 4 through
/// messages far longer than a 64-byte flit payload, so every 1-, 2- and 3-bit
/// corruption is detected.
std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data);

/// CRC-64/ECMA-182 (poly 0x42F0E1EBA9EA3693, init 0).
std::uint64_t crc64_ecma(std::span<const std::uint8_t> data);

/// 48-bit CRC for latency-optimized sub-flits, derived from the 64-bit CRC
/// by truncation to its top 6 bytes.
std::uint64_t crc48_from_crc64(std::span<const std::uint8_t> data);

}  // namespace cxlsim

#endif  // CXLSIM_CRC_HPP_
