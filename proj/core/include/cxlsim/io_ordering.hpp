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

#ifndef CXLSIM_IO_ORDERING_HPP_
#define CXLSIM_IO_ORDERING_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "cxlsim/protocol.hpp"

namespace cxlsim {

enum class OrderingVerdict : std::uint8_t {
  MUST_NOT_PASS,
  MUST_ALLOW_PASS,
  MAY_PASS,
};
const char* to_string(OrderingVerdict v);

enum class OrderingMode : std::uint8_t { LEGACY, UIO };

struct IoTlp {
  FcClass fc = FcClass::P;
  Opcode kind = Opcode::IoMemWr;
  bool relaxed_ordering = false;
  std::uint8_t vc = 0;
  std::uint32_t payload_dw = 0;
  std::uint32_t txn_id = 0;  // completions of one request share a txn_id
};

IoTlp make_tlp(Opcode kind, bool relaxed_ordering = false, std::uint8_t vc = 0);

/// May `second` (the later transaction) overtake `first`? LEGACY encodes the
/// CXL 1.1 table: column-1 No cells flip to MAY with the RO attribute set on
/// the second transaction, completion-past-NP is MUST_ALLOW (forward
/// progress), same-transaction completions stay ordered. UIO is fully
/// unordered except completions must not be blocked by P/NP.
OrderingVerdict may_pass(const IoTlp& first, const IoTlp& second,
                         OrderingMode mode);

struct MalformedTrace : std::runtime_error {
  explicit MalformedTrace(const std::string& w) : std::runtime_error(w) {}
};

// ---- trace checkers ----
// Line format, one event per line:
//   W <agent> <var> <value>
//   R <agent> <var> <value>
// The producer-consumer script writes Data then Flag on one agent and reads
// Flag then Data on another; values are old/new literals.

struct TraceEvent {
  bool is_write = false;
  std::string agent;
  std::string var;
  std::string value;
};

std::vector<TraceEvent> parse_trace(std::istream& in);

struct Violation {
  std::size_t line;  // index of the offending read
  std::string what;
};

/// Flags every consumer whose Flag read returned the new value while the
/// later Data read returned a stale one (the (f', d) outcome).
std::vector<Violation> check_producer_consumer(
    const std::vector<TraceEvent>& trace);

/// Outcome pair of a Fig 6b/6c style two-device synchronization script:
/// the values each device's read returned, tagged old/new.
struct SyncOutcome {
  bool a_new = false;  // read of A returned the new value
  bool b_new = false;  // read of B returned the new value
  friend bool operator<(const SyncOutcome& l, const SyncOutcome& r) {
    return std::tie(l.a_new, l.b_new) < std::tie(r.a_new, r.b_new);
  }
  friend bool operator==(const SyncOutcome& l, const SyncOutcome& r) {
    return l.a_new == r.a_new && l.b_new == r.b_new;
  }
};

/// Classifies a two-device write/read synchronization trace into its
/// outcome pair. Throws MalformedTrace unless the trace has exactly one
/// read of each of two variables.
SyncOutcome check_sync_patterns(const std::vector<TraceEvent>& trace);

/// All outcomes reachable for the Fig 6b script (each device writes its own
/// variable then reads the other's) under the given ordering mode, or the
/// Fig 6c script (read first, then write) when write_first is false.
/// Enumerates every admissible interleaving, including the same-device
/// reorderings the ordering table permits.
std::set<SyncOutcome> enumerate_sync_outcomes(OrderingMode mode,
                                              bool write_first);

// ---- UIO source fencing ----
// Every UIO write is completed; the producer holds its Flag write until all
// Data-write completions returned, restoring producer-consumer semantics
// over an unordered multipath fabric.
class UioSourceFence {
 public:
  void data_write_issued(std::uint32_t txn_id);
  void completion_received(std::uint32_t txn_id);
  bool flag_may_emit() const { return pending_.empty(); }
  std::size_t pending() const { return pending_.size(); }

 private:
  std::set<std::uint32_t> pending_;
};

/// Exhaustively interleaves a 2-path UIO producer/consumer run (n_data data
/// writes + 1 flag write, each path an independent FIFO) and returns how
/// many interleavings exhibit a stale-data violation. With the fence the
/// count is zero; without it adversarial path delays produce at least one.
unsigned count_uio_violations(unsigned n_data, bool fence_enabled);

}  // namespace cxlsim

#endif  // CXLSIM_IO_ORDERING_HPP_
