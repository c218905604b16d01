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

#ifndef CXLSIM_PACKER_HPP_
#define CXLSIM_PACKER_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "cxlsim/flit.hpp"
#include "cxlsim/protocol.hpp"

namespace cxlsim {

/// Header slot cost in slot fractions per mode. 68B costs are in twelfths of
/// a slot (4 data-hdrs, 2 DRS, 2 NDR, a request plus one data-hdr, 3 BIRsp
/// per slot); 256B/LO costs reflect the denser small-header formats.
double header_slot_cost(FlitMode mode, Opcode op);

/// Wire footprint of a CXL.io TLP in bytes: header DWs + payload DWs, plus
/// per-TLP framing in 68B mode where TLPs are carried as-is.
unsigned io_tlp_bytes(FlitMode mode, const Message& msg);

struct FlitPlan {
  ProtoKind kind = ProtoKind::IDLE;
  unsigned data_slots = 0;
  unsigned header_slots = 0;  // slots allocated to headers this flit
  unsigned idle_slots = 0;
  double io_bytes = 0;        // CXL.io stream bytes carried
  std::vector<Message> delivered;  // fully transmitted with this flit

  bool is_null() const { return kind == ProtoKind::IDLE; }
};

// Greedy slot packer for one link direction. Headers are prioritized into
// the leading slot(s); data fills the remaining slots; a 68B flit goes
// all-data when a full cache line worth of beats is already unlocked.
//
// In 256B/LO modes every cache+mem flit reserves one H slot, and small
// headers stream across header slots with sub-slot granularity (an
// idealization that makes steady-state slot fractions land exactly on the
// closed-form bandwidth figures). 68B slots fill in twelfths with no carry
// between flits, so e.g. a lone request alongside an unpairable request
// wastes the quarter-slot the figures say it wastes.
class SlotPacker {
 public:
  explicit SlotPacker(FlitMode mode) : mode_(mode) {}

  FlitMode mode() const { return mode_; }

  void enqueue(const Message& msg);
  bool pending() const;
  std::size_t queued_messages() const;

  /// Builds one flit worth of slot assignment. Empty queues yield a NULL plan.
  FlitPlan pack_next();

  // cumulative accounting, for efficiency measurements
  std::uint64_t flits_packed() const { return flits_; }
  std::uint64_t data_slots_total() const { return data_slots_; }
  std::uint64_t slot_equivalents_total() const {
    return flits_ * slot_equivalents(mode_);
  }

 private:
  struct Entry {
    Message msg;
    double hdr_cost = 0;
    int beats_total = 0;
    int beats_sent = 0;
    bool hdr_sent = false;
    double io_bytes_left = 0;
  };

  bool headers_pending() const;
  std::optional<Entry> pop_fitting_header(int cap);
  void header_packed(Entry&& e, FlitPlan* plan);
  Entry* next_unlocked_data();
  void finish(Entry&& e, FlitPlan* plan);

  FlitMode mode_;
  std::map<ChannelName, std::deque<Entry>> queues_;
  std::deque<Entry> io_queue_;
  std::deque<Entry> unlocked_;   // hdr sent, data beats outstanding
  int open_extra_units_ = 0;     // carried partial header slot (256B/LO)
  std::uint64_t flits_ = 0;
  std::uint64_t data_slots_ = 0;
};

}  // namespace cxlsim

#endif  // CXLSIM_PACKER_HPP_
