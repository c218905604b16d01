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

#include "cxlsim/packer.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace cxlsim {

namespace {

constexpr int kSlotUnits = 36;  // header costs in 1/36 slot

// Header footprints. The 68B column encodes the Fig 4 slot formats (4
// data-hdrs per slot, 2 DRS, 2 NDR, request + one data-hdr, 3 BIRsp); the
// 256B/LO column encodes the denser small-header packing that yields the
// published per-mix slot counts (DRS 4/9, NDR 1/3, D2H data-hdr 1/2).
int header_units(FlitMode mode, ChannelName ch) {
  bool f68 = mode == FlitMode::F68;
  switch (ch) {
    case ChannelName::D2H_REQ: return f68 ? 27 : 36;
    case ChannelName::D2H_RSP: return 9;
    case ChannelName::H2D_RSP: return 9;
    case ChannelName::H2D_REQ: return 18;
    case ChannelName::D2H_DATA: return f68 ? 9 : 18;
    case ChannelName::H2D_DATA: return 9;
    case ChannelName::M2S_REQ: return 36;
    case ChannelName::M2S_RWD: return 36;
    case ChannelName::S2M_NDR: return f68 ? 18 : 12;
    case ChannelName::S2M_DRS: return f68 ? 18 : 16;
    case ChannelName::S2M_BISNP: return 18;
    case ChannelName::M2S_BIRSP: return 12;
    default: return 0;
  }
}

// Drain priority: requests and data-bearing headers ahead of completions.
// Requests go first so a request slot can absorb a loose data-hdr, which is
// what makes the device-write stream cost exactly two slots per line.
constexpr ChannelName kDrainOrder[] = {
    ChannelName::M2S_RWD,  ChannelName::M2S_REQ,  ChannelName::D2H_REQ,
    ChannelName::S2M_DRS,  ChannelName::D2H_DATA, ChannelName::H2D_DATA,
    ChannelName::H2D_REQ,  ChannelName::S2M_NDR,  ChannelName::D2H_RSP,
    ChannelName::H2D_RSP,  ChannelName::S2M_BISNP, ChannelName::M2S_BIRSP,
};

constexpr unsigned kMaxLinesPerFlit = 5;

}  // namespace

double header_slot_cost(FlitMode mode, Opcode op) {
  return header_units(mode, channel_of(op)) / static_cast<double>(kSlotUnits);
}

unsigned io_tlp_bytes(FlitMode mode, const Message& msg) {
  unsigned hdr_dw;
  switch (msg.opcode) {
    case Opcode::IoCpl: case Opcode::IoCplD: case Opcode::UioWrCpl:
    case Opcode::UioRdCpl: case Opcode::UioRdCplD:
      hdr_dw = 3;
      break;
    default:
      hdr_dw = 4;
      break;
  }
  unsigned framing = (mode == FlitMode::F68) ? 8 : 0;  // STP + LCRC
  return (hdr_dw + msg.payload_dw) * 4 + framing;
}

void SlotPacker::enqueue(const Message& msg) {
  ChannelName ch = channel_of(msg.opcode);
  Entry e;
  e.msg = msg;
  if (protocol_of(ch) == Protocol::IO) {
    e.io_bytes_left = io_tlp_bytes(mode_, msg);
    io_queue_.push_back(std::move(e));
    return;
  }
  e.hdr_cost = header_units(mode_, ch);
  e.beats_total = msg.has_data ? 4 : 0;
  queues_[ch].push_back(std::move(e));
}

bool SlotPacker::pending() const {
  if (!io_queue_.empty() || !unlocked_.empty()) return true;
  for (const auto& [_, q] : queues_)
    if (!q.empty()) return true;
  return false;
}

std::size_t SlotPacker::queued_messages() const {
  std::size_t n = io_queue_.size() + unlocked_.size();
  for (const auto& [_, q] : queues_) n += q.size();
  return n;
}

void SlotPacker::finish(Entry&& e, FlitPlan* plan) {
  plan->delivered.push_back(std::move(e.msg));
}

SlotPacker::Entry* SlotPacker::next_unlocked_data() {
  return unlocked_.empty() ? nullptr : &unlocked_.front();
}

bool SlotPacker::headers_pending() const {
  for (ChannelName ch : kDrainOrder) {
    auto it = queues_.find(ch);
    if (it != queues_.end() && !it->second.empty()) return true;
  }
  return false;
}

std::optional<SlotPacker::Entry> SlotPacker::pop_fitting_header(int cap) {
  for (ChannelName ch : kDrainOrder) {
    auto it = queues_.find(ch);
    if (it == queues_.end() || it->second.empty()) continue;
    if (static_cast<int>(it->second.front().hdr_cost) <= cap) {
      Entry e = std::move(it->second.front());
      it->second.pop_front();
      return e;
    }
  }
  return std::nullopt;
}

void SlotPacker::header_packed(Entry&& e, FlitPlan* plan) {
  e.hdr_sent = true;
  if (e.beats_total > 0)
    unlocked_.push_back(std::move(e));
  else
    finish(std::move(e), plan);
}

FlitPlan SlotPacker::pack_next() {
  FlitPlan plan;
  const unsigned total = usable_slots(mode_);

  bool have_cachemem = !unlocked_.empty() || headers_pending();

  if (!have_cachemem && io_queue_.empty()) {
    plan.kind = ProtoKind::IDLE;
    plan.idle_slots = total;
    return plan;
  }

  if (!have_cachemem) {
    // CXL.io flit: the payload carries the TLP byte stream as-is.
    plan.kind = ProtoKind::IO;
    double capacity = total * 16.0;
    while (capacity > 0 && !io_queue_.empty()) {
      Entry& e = io_queue_.front();
      double take = std::min(capacity, e.io_bytes_left);
      e.io_bytes_left -= take;
      capacity -= take;
      plan.io_bytes += take;
      if (e.io_bytes_left <= 0) {
        finish(std::move(e), &plan);
        io_queue_.pop_front();
      }
    }
    ++flits_;
    return plan;
  }

  plan.kind = ProtoKind::CACHEMEM;

  if (mode_ == FlitMode::F68) {
    unsigned unlocked_beats = 0;
    for (const Entry& e : unlocked_)
      unlocked_beats += static_cast<unsigned>(e.beats_total - e.beats_sent);
    bool all_data = unlocked_beats >= 4;

    for (unsigned s = 0; s < total; ++s) {
      bool want_header =
          !all_data && headers_pending() && (s == 0 || unlocked_.empty());
      if (want_header) {
        int cap = kSlotUnits;
        while (auto e = pop_fitting_header(cap)) {
          cap -= static_cast<int>(e->hdr_cost);
          header_packed(std::move(*e), &plan);
        }
        ++plan.header_slots;
      } else if (Entry* e = next_unlocked_data()) {
        ++e->beats_sent;
        ++plan.data_slots;
        if (e->beats_sent == e->beats_total) {
          finish(std::move(*e), &plan);
          unlocked_.pop_front();
        }
      } else {
        ++plan.idle_slots;
      }
    }
    data_slots_ += plan.data_slots;
    ++flits_;
    return plan;
  }

  // 256B / LO: one reserved H slot per flit; small headers stream across
  // header slots with sub-slot granularity, carrying a part-filled extra
  // slot into the next flit. The reserved slot's spare is not carried.
  unsigned slots_left = total - 1;
  plan.header_slots = 1;
  int reserved = kSlotUnits;
  int carry = open_extra_units_;

  while (headers_pending()) {
    int avail_now = carry + reserved + static_cast<int>(slots_left) * kSlotUnits;
    auto e = pop_fitting_header(std::min(avail_now, kSlotUnits));
    if (!e) break;
    int need = static_cast<int>(e->hdr_cost);
    int take = std::min(need, carry);
    carry -= take;
    need -= take;
    take = std::min(need, reserved);
    reserved -= take;
    need -= take;
    if (need > 0) {
      ++plan.header_slots;
      --slots_left;
      carry = kSlotUnits - need;
    }
    header_packed(std::move(*e), &plan);
  }
  open_extra_units_ = carry;

  std::set<std::uint64_t> lines;
  while (slots_left > 0) {
    Entry* e = next_unlocked_data();
    if (!e) break;
    std::uint64_t line = e->msg.address ? e->msg.address->line() : 0;
    if (!lines.count(line) && lines.size() >= kMaxLinesPerFlit) break;
    lines.insert(line);
    ++e->beats_sent;
    ++plan.data_slots;
    --slots_left;
    if (e->beats_sent == e->beats_total) {
      finish(std::move(*e), &plan);
      unlocked_.pop_front();
    }
  }
  plan.idle_slots = slots_left;
  data_slots_ += plan.data_slots;
  ++flits_;
  return plan;
}

}  // namespace cxlsim
