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

#ifndef CXLSIM_PERF_MODEL_HPP_
#define CXLSIM_PERF_MODEL_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxlsim/flit.hpp"
#include "cxlsim/protocol.hpp"

namespace cxlsim {

enum class ClockMode : std::uint8_t { COMMON, INDEPENDENT };

struct LinkConfig {
  unsigned lanes = 16;      // 16/8/4 native, 2/1 degraded
  unsigned rate_gts = 32;   // 32/64 native, 16/8 degraded
  FlitMode flit_mode = FlitMode::F68;
  bool sync_hdr_bypass = true;
  ClockMode clock_mode = ClockMode::COMMON;

  /// Raw bandwidth per direction, GB/s.
  double raw_gbps() const { return lanes * rate_gts / 8.0; }
};

enum class TrafficMix : std::uint8_t {
  IO_READ, IO_WRITE, IO_RW5050,
  MEM_1R0W, MEM_1R1W, MEM_2R1W,
  CACHE_DEVREAD, CACHE_DEVWRITE,
};

const char* to_string(TrafficMix m);

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& w) : std::runtime_error(w) {}
};

// ---- link efficiency ----
// 68B cache+mem: (128/130 if sync hdr) x 374/375 (SKP) x 64/68 (flit
// overhead) = 0.924 / 0.939. 68B io: 0.906 / 0.92 including ~2% DLLP.
// 256B modes: 15/16 for cache+mem; 0.92 (256B) and 0.91 (LO) for io.
double link_efficiency(const LinkConfig& cfg, Protocol protocol);

// ---- CXL.mem realizable bandwidth (Table 4) ----
struct DirBandwidth {
  double m2s_gbps = 0;
  double s2m_gbps = 0;
};

/// Slot-accounting closed form. device_type is 2 or 3 (Type-2 adds an NDR
/// completion per read). Directions are rate-coupled: the slower one sets
/// the transaction rate.
DirBandwidth mem_bandwidth(const LinkConfig& cfg, TrafficMix mix,
                           int device_type);

/// Per-message S2M header costs (slot fractions) used by mem_bandwidth.
struct MemSlotCosts {
  double drs_hdr;
  double ndr;
  double req;
  double rwd_hdr;
};
MemSlotCosts mem_slot_costs(FlitMode mode);

// ---- CXL.cache device bandwidth (the 56.6 / 40.1 / 112 / 104 / 73.8
// identities) ----
double cache_bandwidth(const LinkConfig& cfg, TrafficMix mix);

// ---- CXL.io realizable bandwidth (Table 3) ----
// Per-TLP overhead: 3 DW completion header, 4 DW request header (64-bit
// addressing), plus 2 DW framing per TLP in 68B mode. 50-50 reports the sum
// of both directions.
double io_bandwidth(const LinkConfig& cfg, TrafficMix mix, unsigned payload_dw);

// ---- UIO/BI efficiency ratio (Table 5) ----
// a = hops device<->CPU, b = CPU<->memory, c = device<->memory,
// d = payload DW, x = fraction of accesses triggering a BI-Snp.
// Returns existing-flow bytes / BI-flow bytes.
double uio_bi_tradeoff(TrafficMix mix, int a, int b, int c, unsigned d,
                       double x);

// ---- latency composition (Fig 19 constants, Table 2) ----
struct LatencyComponent {
  std::string name;
  double ns;
};

struct LatencyPath {
  std::vector<LatencyComponent> components;
};

double latency_estimate(const LatencyPath& path);  // pure sum

// Fig 19 constants
namespace latency {
inline constexpr double kCpuLoadToUse = 100.0;     // "< 100 ns", pinned
inline constexpr double kPortRtCommonClk = 21.0;
inline constexpr double kPortRtIndepClk = 25.0;
inline constexpr double kRetimerRt = 15.0;
inline constexpr double kWireFlightPerHop = 10.0;
inline constexpr double kSwitchArbLookup = 10.0;
inline constexpr double kSwitchFlight = 10.0;
inline constexpr double kDevicePinToPin = 80.0;
inline constexpr double kSnoopResponse = 50.0;
}  // namespace latency

// Table 2 canned paths: direct-attach Type-3 (170), switched Type-3 (250),
// peer message over one switch/SMC (220), over two switches (270).
LatencyPath path_direct_type3();
LatencyPath path_switched_type3();
LatencyPath path_peer_one_switch();
LatencyPath path_peer_two_switch();

/// 21 + 21 + 15: port round-trip at each end plus retimer round-trip.
double end_to_end_adder_ns();

// ---- table emitters ----
enum class TableId { IO_BW, MEM_BW, CACHE_BW, LATENCY, UIO_BI };

/// Renders one of the golden tables as aligned text or CSV. The flit mode
/// applies to IO_BW/MEM_BW; the others ignore it.
std::string emit_table(TableId id, FlitMode mode, bool csv);

}  // namespace cxlsim

#endif  // CXLSIM_PERF_MODEL_HPP_
