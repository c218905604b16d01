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

#ifndef CXLSIM_PROTOCOL_HPP_
#define CXLSIM_PROTOCOL_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "cxlsim/types.hpp"

namespace cxlsim {

enum class Protocol : std::uint8_t { IO, CACHE, MEM };

enum class ChannelName : std::uint8_t {
  // CXL.cache, three channels each direction
  D2H_REQ, D2H_RSP, D2H_DATA,
  H2D_REQ, H2D_RSP, H2D_DATA,
  // CXL.mem, two channels each direction plus the 3.0 back-invalidate pair
  M2S_REQ, M2S_RWD, S2M_NDR, S2M_DRS,
  S2M_BISNP, M2S_BIRSP,
  // CXL.io flow-control classes, per virtual channel
  IO_P, IO_NP, IO_C,
};

enum class FcClass : std::uint8_t { P, NP, C };

// D2H request categories. The category fixes the legal response pattern:
// READ -> GO + Data, READ0 -> GO only, READ0_WRITE -> WritePull then GO,
// WRITE -> combined GO_WritePull.
enum class ReqCategory : std::uint8_t { READ, READ0, READ0_WRITE, WRITE };

// All message opcodes, grouped by owning channel. The D2H request set is the
// full 15-command vocabulary (names past RdCurr/RdOwn/RdOwnNoData/DirtyEvict/
// CleanEvict* are non-normative placeholders).
enum class Opcode : std::uint16_t {
  // --- D2H_REQ: READ ---
  RdCurr, RdShared, RdOwn, RdAny,
  // --- D2H_REQ: READ0 ---
  RdOwnNoData, CLFlush, CacheFlushed,
  // --- D2H_REQ: READ0_WRITE ---
  WrInv, WOWrInv, WOWrInvF, ItoMWr, WrCur,
  // --- D2H_REQ: WRITE ---
  CleanEvict, DirtyEvict, CleanEvictNoData,
  // --- D2H_RSP: snoop responses (RspX = final state, HitY/FwdY = prior) ---
  RspIHitI, RspIHitSE, RspSHitSE, RspIFwdM, RspSFwdM, RspVHitV, RspVFwdV,
  // --- D2H_DATA ---
  D2HData,
  // --- H2D_REQ: snoops ---
  SnpData, SnpInv, SnpCur,
  // --- H2D_RSP ---
  GO, WritePull, GO_WritePull,
  // --- H2D_DATA ---
  H2DData,
  // --- M2S_REQ ---
  MemRd, MemRdData, MemInv, MemSpecRd, MemRdFwd, MemClnEvct,
  // --- M2S_RWD ---
  MemWr, MemWrPtl,
  // --- S2M_NDR ---
  Cmp, CmpS, CmpE,
  // --- S2M_DRS ---
  MemData, MemDataNXM,
  // --- S2M_BISNP ---
  BISnpInv, BISnpData, BISnpCur,
  // --- M2S_BIRSP ---
  BIRspI, BIRspS, BIRspE,
  // --- CXL.io TLP kinds ---
  IoMemWr, IoMemRd, IoCfgWr, IoCfgRd, IoCpl, IoCplD,
  UioWr, UioRd, UioWrCpl, UioRdCpl, UioRdCplD,
};

const char* to_string(Opcode op);
const char* to_string(ChannelName ch);
const char* to_string(FcClass fc);
const char* to_string(Protocol p);
const char* to_string(ReqCategory c);

/// Requested coherence state on M2S traffic (multi-host HDM-DB modeling;
/// NONE for plain expander reads/writes).
enum class CohReq : std::uint8_t { NONE, S, E };

/// One protocol-layer transaction unit.
struct Message {
  Opcode opcode = Opcode::MemRd;
  std::optional<Address> address;      // absent for pure completions
  std::uint16_t tag = 0;
  std::optional<std::uint8_t> ld_id;   // 4-bit, switch-to-MLD links only
  std::optional<std::uint8_t> cache_id;  // 4-bit caching-device id
  std::optional<std::uint16_t> spid;   // 12-bit source PID (PBR)
  std::optional<std::uint16_t> dpid;   // 12-bit destination PID (PBR)
  std::optional<std::uint8_t> meta;    // 2-bit HDM meta value
  bool meta_update = false;            // request directs a meta store
  bool has_data = false;
  bool bogus = false;                  // stale-data marker, D2H_DATA only
  bool poison = false;
  std::optional<DataBlock> data;
  // auxiliary, not on the wire
  MesiState go_state = MesiState::I;   // state granted by GO
  CohReq coh_req = CohReq::NONE;
  ComponentId src;
  ComponentId dst;
  std::uint8_t vc = 0;                 // CXL.io virtual channel
  bool relaxed_ordering = false;       // CXL.io RO attribute
  std::uint32_t payload_dw = 0;        // CXL.io payload size

  std::string str() const;
};

struct UnknownOpcode : std::runtime_error {
  explicit UnknownOpcode(const std::string& what) : std::runtime_error(what) {}
};

/// Channel and protocol the opcode always travels on.
ChannelName channel_of(Opcode op);
Protocol protocol_of(ChannelName ch);

/// Category of a D2H request opcode; throws UnknownOpcode otherwise.
ReqCategory category_of(Opcode op);

bool is_data_bearing(ChannelName ch);
bool is_d2h_request(Opcode op);
bool is_snoop(Opcode op);

struct Classification {
  ChannelName channel;
  std::optional<FcClass> fc;  // present only for CXL.io
};

/// Total mapping from any simulator-produced message to its channel and,
/// for CXL.io, its flow-control class. Throws UnknownOpcode for opcodes
/// outside the configured protocol level (BI channels need CXL 3.0).
Classification classify_message(const Message& msg, bool cxl3 = true);

/// Validates field/channel invariants (has_data on data channels, bogus only
/// on D2H data, ld_id only on MLD switch links). Returns an explanation for
/// the first violated invariant, or nullopt.
std::optional<std::string> check_message_invariants(const Message& msg,
                                                    bool on_host_link = false);

}  // namespace cxlsim

#endif  // CXLSIM_PROTOCOL_HPP_
