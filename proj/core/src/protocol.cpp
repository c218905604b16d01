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

#include "cxlsim/protocol.hpp"

#include <cstring>
#include <sstream>

namespace cxlsim {

DataBlock make_data(std::uint64_t token) {
  DataBlock d{};
  std::memcpy(d.data(), &token, sizeof(token));
  return d;
}

std::uint64_t data_token(const DataBlock& d) {
  std::uint64_t t;
  std::memcpy(&t, d.data(), sizeof(t));
  return t;
}

const char* to_string(MesiState s) {
  switch (s) {
    case MesiState::M: return "M";
    case MesiState::E: return "E";
    case MesiState::S: return "S";
    case MesiState::I: return "I";
  }
  return "?";
}

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::IO: return "io";
    case Protocol::CACHE: return "cache";
    case Protocol::MEM: return "mem";
  }
  return "?";
}

const char* to_string(FcClass fc) {
  switch (fc) {
    case FcClass::P: return "P";
    case FcClass::NP: return "NP";
    case FcClass::C: return "C";
  }
  return "?";
}

const char* to_string(ReqCategory c) {
  switch (c) {
    case ReqCategory::READ: return "Read";
    case ReqCategory::READ0: return "Read0";
    case ReqCategory::READ0_WRITE: return "Read0-Write";
    case ReqCategory::WRITE: return "Write";
  }
  return "?";
}

const char* to_string(ChannelName ch) {
  switch (ch) {
    case ChannelName::D2H_REQ: return "D2H_REQ";
    case ChannelName::D2H_RSP: return "D2H_RSP";
    case ChannelName::D2H_DATA: return "D2H_DATA";
    case ChannelName::H2D_REQ: return "H2D_REQ";
    case ChannelName::H2D_RSP: return "H2D_RSP";
    case ChannelName::H2D_DATA: return "H2D_DATA";
    case ChannelName::M2S_REQ: return "M2S_REQ";
    case ChannelName::M2S_RWD: return "M2S_RWD";
    case ChannelName::S2M_NDR: return "S2M_NDR";
    case ChannelName::S2M_DRS: return "S2M_DRS";
    case ChannelName::S2M_BISNP: return "S2M_BISNP";
    case ChannelName::M2S_BIRSP: return "M2S_BIRSP";
    case ChannelName::IO_P: return "IO_P";
    case ChannelName::IO_NP: return "IO_NP";
    case ChannelName::IO_C: return "IO_C";
  }
  return "?";
}

const char* to_string(Opcode op) {
  switch (op) {
    case Opcode::RdCurr: return "RdCurr";
    case Opcode::RdShared: return "RdShared";
    case Opcode::RdOwn: return "RdOwn";
    case Opcode::RdAny: return "RdAny";
    case Opcode::RdOwnNoData: return "RdOwnNoData";
    case Opcode::CLFlush: return "CLFlush";
    case Opcode::CacheFlushed: return "CacheFlushed";
    case Opcode::WrInv: return "WrInv";
    case Opcode::WOWrInv: return "WOWrInv";
    case Opcode::WOWrInvF: return "WOWrInvF";
    case Opcode::ItoMWr: return "ItoMWr";
    case Opcode::WrCur: return "WrCur";
    case Opcode::CleanEvict: return "CleanEvict";
    case Opcode::DirtyEvict: return "DirtyEvict";
    case Opcode::CleanEvictNoData: return "CleanEvictNoData";
    case Opcode::RspIHitI: return "RspIHitI";
    case Opcode::RspIHitSE: return "RspIHitSE";
    case Opcode::RspSHitSE: return "RspSHitSE";
    case Opcode::RspIFwdM: return "RspIFwdM";
    case Opcode::RspSFwdM: return "RspSFwdM";
    case Opcode::RspVHitV: return "RspVHitV";
    case Opcode::RspVFwdV: return "RspVFwdV";
    case Opcode::D2HData: return "D2HData";
    case Opcode::SnpData: return "SnpData";
    case Opcode::SnpInv: return "SnpInv";
    case Opcode::SnpCur: return "SnpCur";
    case Opcode::GO: return "GO";
    case Opcode::WritePull: return "WritePull";
    case Opcode::GO_WritePull: return "GO_WritePull";
    case Opcode::H2DData: return "H2DData";
    case Opcode::MemRd: return "MemRd";
    case Opcode::MemRdData: return "MemRdData";
    case Opcode::MemInv: return "MemInv";
    case Opcode::MemSpecRd: return "MemSpecRd";
    case Opcode::MemRdFwd: return "MemRdFwd";
    case Opcode::MemClnEvct: return "MemClnEvct";
    case Opcode::MemWr: return "MemWr";
    case Opcode::MemWrPtl: return "MemWrPtl";
    case Opcode::Cmp: return "Cmp";
    case Opcode::CmpS: return "CmpS";
    case Opcode::CmpE: return "CmpE";
    case Opcode::MemData: return "MemData";
    case Opcode::MemDataNXM: return "MemDataNXM";
    case Opcode::BISnpInv: return "BISnpInv";
    case Opcode::BISnpData: return "BISnpData";
    case Opcode::BISnpCur: return "BISnpCur";
    case Opcode::BIRspI: return "BIRspI";
    case Opcode::BIRspS: return "BIRspS";
    case Opcode::BIRspE: return "BIRspE";
    case Opcode::IoMemWr: return "IoMemWr";
    case Opcode::IoMemRd: return "IoMemRd";
    case Opcode::IoCfgWr: return "IoCfgWr";
    case Opcode::IoCfgRd: return "IoCfgRd";
    case Opcode::IoCpl: return "IoCpl";
    case Opcode::IoCplD: return "IoCplD";
    case Opcode::UioWr: return "UioWr";
    case Opcode::UioRd: return "UioRd";
    case Opcode::UioWrCpl: return "UioWrCpl";
    case Opcode::UioRdCpl: return "UioRdCpl";
    case Opcode::UioRdCplD: return "UioRdCplD";
  }
  return "?";
}

ChannelName channel_of(Opcode op) {
  switch (op) {
    case Opcode::RdCurr: case Opcode::RdShared: case Opcode::RdOwn:
    case Opcode::RdAny: case Opcode::RdOwnNoData: case Opcode::CLFlush:
    case Opcode::CacheFlushed: case Opcode::WrInv: case Opcode::WOWrInv:
    case Opcode::WOWrInvF: case Opcode::ItoMWr: case Opcode::WrCur:
    case Opcode::CleanEvict: case Opcode::DirtyEvict:
    case Opcode::CleanEvictNoData:
      return ChannelName::D2H_REQ;
    case Opcode::RspIHitI: case Opcode::RspIHitSE: case Opcode::RspSHitSE:
    case Opcode::RspIFwdM: case Opcode::RspSFwdM: case Opcode::RspVHitV:
    case Opcode::RspVFwdV:
      return ChannelName::D2H_RSP;
    case Opcode::D2HData:
      return ChannelName::D2H_DATA;
    case Opcode::SnpData: case Opcode::SnpInv: case Opcode::SnpCur:
      return ChannelName::H2D_REQ;
    case Opcode::GO: case Opcode::WritePull: case Opcode::GO_WritePull:
      return ChannelName::H2D_RSP;
    case Opcode::H2DData:
      return ChannelName::H2D_DATA;
    case Opcode::MemRd: case Opcode::MemRdData: case Opcode::MemInv:
    case Opcode::MemSpecRd: case Opcode::MemRdFwd: case Opcode::MemClnEvct:
      return ChannelName::M2S_REQ;
    case Opcode::MemWr: case Opcode::MemWrPtl:
      return ChannelName::M2S_RWD;
    case Opcode::Cmp: case Opcode::CmpS: case Opcode::CmpE:
      return ChannelName::S2M_NDR;
    case Opcode::MemData: case Opcode::MemDataNXM:
      return ChannelName::S2M_DRS;
    case Opcode::BISnpInv: case Opcode::BISnpData: case Opcode::BISnpCur:
      return ChannelName::S2M_BISNP;
    case Opcode::BIRspI: case Opcode::BIRspS: case Opcode::BIRspE:
      return ChannelName::M2S_BIRSP;
    case Opcode::IoMemWr: case Opcode::UioWr:
      return ChannelName::IO_P;
    case Opcode::IoMemRd: case Opcode::IoCfgRd: case Opcode::IoCfgWr:
    case Opcode::UioRd:
      return ChannelName::IO_NP;
    case Opcode::IoCpl: case Opcode::IoCplD: case Opcode::UioWrCpl:
    case Opcode::UioRdCpl: case Opcode::UioRdCplD:
      return ChannelName::IO_C;
  }
  throw UnknownOpcode("unmapped opcode");
}

Protocol protocol_of(ChannelName ch) {
  switch (ch) {
    case ChannelName::IO_P: case ChannelName::IO_NP: case ChannelName::IO_C:
      return Protocol::IO;
    case ChannelName::D2H_REQ: case ChannelName::D2H_RSP:
    case ChannelName::D2H_DATA: case ChannelName::H2D_REQ:
    case ChannelName::H2D_RSP: case ChannelName::H2D_DATA:
      return Protocol::CACHE;
    default:
      return Protocol::MEM;
  }
}

ReqCategory category_of(Opcode op) {
  switch (op) {
    case Opcode::RdCurr: case Opcode::RdShared: case Opcode::RdOwn:
    case Opcode::RdAny:
      return ReqCategory::READ;
    case Opcode::RdOwnNoData: case Opcode::CLFlush: case Opcode::CacheFlushed:
      return ReqCategory::READ0;
    case Opcode::WrInv: case Opcode::WOWrInv: case Opcode::WOWrInvF:
    case Opcode::ItoMWr: case Opcode::WrCur:
      return ReqCategory::READ0_WRITE;
    case Opcode::CleanEvict: case Opcode::DirtyEvict:
    case Opcode::CleanEvictNoData:
      return ReqCategory::WRITE;
    default:
      throw UnknownOpcode(std::string("not a D2H request: ") + to_string(op));
  }
}

bool is_data_bearing(ChannelName ch) {
  return ch == ChannelName::D2H_DATA || ch == ChannelName::H2D_DATA ||
         ch == ChannelName::M2S_RWD || ch == ChannelName::S2M_DRS;
}

bool is_d2h_request(Opcode op) {
  return channel_of(op) == ChannelName::D2H_REQ;
}

bool is_snoop(Opcode op) {
  return op == Opcode::SnpData || op == Opcode::SnpInv || op == Opcode::SnpCur;
}

Classification classify_message(const Message& msg, bool cxl3) {
  ChannelName ch = channel_of(msg.opcode);
  if (!cxl3 &&
      (ch == ChannelName::S2M_BISNP || ch == ChannelName::M2S_BIRSP)) {
    throw UnknownOpcode(std::string(to_string(msg.opcode)) +
                        " requires a CXL 3.0 protocol level");
  }
  Classification c{ch, std::nullopt};
  if (protocol_of(ch) == Protocol::IO) {
    switch (ch) {
      case ChannelName::IO_P: c.fc = FcClass::P; break;
      case ChannelName::IO_NP: c.fc = FcClass::NP; break;
      default: c.fc = FcClass::C; break;
    }
  }
  return c;
}

std::optional<std::string> check_message_invariants(const Message& msg,
                                                    bool on_host_link) {
  ChannelName ch = channel_of(msg.opcode);
  bool data_ch = is_data_bearing(ch);
  bool io_payload = protocol_of(ch) == Protocol::IO && msg.payload_dw > 0;
  if (msg.has_data && !(data_ch || io_payload))
    return "has_data set on a non-data channel";
  if (data_ch && !msg.has_data)
    return "data channel message without has_data";
  if (msg.bogus && ch != ChannelName::D2H_DATA)
    return "bogus marker outside D2H_DATA";
  if (msg.ld_id && on_host_link)
    return "ld_id present on a host link";
  return std::nullopt;
}

std::string Message::str() const {
  std::ostringstream os;
  os << to_string(channel_of(opcode)) << " " << to_string(opcode);
  if (address) {
    os << " A=" << std::hex << address->line() << std::dec;
  }
  os << " tag=" << tag;
  if (bogus) os << " bogus";
  if (poison) os << " poison";
  return os.str();
}

}  // namespace cxlsim
