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

#ifndef CXLSIM_TYPES_HPP_
#define CXLSIM_TYPES_HPP_

#include <array>
#include <cstdint>
#include <string>

namespace cxlsim {

inline constexpr unsigned kCacheLineBytes = 64;
inline constexpr std::uint64_t kLineMask = ~std::uint64_t{63};
inline constexpr unsigned kTagBits = 16;
inline constexpr unsigned kMaxMldLds = 16;    // logical devices per MLD
inline constexpr unsigned kPidBits = 12;      // fabric PBR-ID width
inline constexpr unsigned kMaxPids = 1u << kPidBits;

/// Host physical address. Coherence always keys on the 64-byte line.
struct Address {
  std::uint64_t hpa = 0;

  constexpr Address() = default;
  constexpr explicit Address(std::uint64_t a) : hpa(a) {}

  constexpr std::uint64_t line() const { return hpa & kLineMask; }

  friend constexpr bool operator==(Address a, Address b) { return a.hpa == b.hpa; }
  friend constexpr bool operator<(Address a, Address b) { return a.hpa < b.hpa; }
  friend constexpr bool same_line(Address a, Address b) { return a.line() == b.line(); }
};

enum class MesiState : std::uint8_t { M, E, S, I };

const char* to_string(MesiState s);

/// One cache line of payload. Value-comparable so monitors can check
/// data-value coherence.
using DataBlock = std::array<std::uint8_t, kCacheLineBytes>;

/// A DataBlock whose first 8 bytes carry the given token, rest zero.
DataBlock make_data(std::uint64_t token);
std::uint64_t data_token(const DataBlock& d);

using ComponentId = std::string;  // host/switch/device names from topology files
using amount_t = double;

}  // namespace cxlsim

#endif  // CXLSIM_TYPES_HPP_
