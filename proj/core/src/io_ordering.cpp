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

#include "cxlsim/io_ordering.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace cxlsim {

const char* to_string(OrderingVerdict v) {
  switch (v) {
    case OrderingVerdict::MUST_NOT_PASS: return "must-not-pass";
    case OrderingVerdict::MUST_ALLOW_PASS: return "must-allow-pass";
    case OrderingVerdict::MAY_PASS: return "may-pass";
  }
  return "?";
}

IoTlp make_tlp(Opcode kind, bool relaxed_ordering, std::uint8_t vc) {
  IoTlp t;
  t.kind = kind;
  t.relaxed_ordering = relaxed_ordering;
  t.vc = vc;
  Message m;
  m.opcode = kind;
  t.fc = *classify_message(m).fc;
  return t;
}

OrderingVerdict may_pass(const IoTlp& first, const IoTlp& second,
                         OrderingMode mode) {
  if (mode == OrderingMode::UIO) {
    // Completions must not be blocked by P/NP; everything else unordered.
    if (second.fc == FcClass::C && first.fc != FcClass::C)
      return OrderingVerdict::MUST_ALLOW_PASS;
    return OrderingVerdict::MAY_PASS;
  }

  bool ro = second.relaxed_ordering;
  switch (second.fc) {
    case FcClass::P:
      switch (first.fc) {
        case FcClass::P:   // A1: a No, b Y/N with RO
          return ro ? OrderingVerdict::MAY_PASS
                    : OrderingVerdict::MUST_NOT_PASS;
        case FcClass::NP:  // A2: Yes
          return OrderingVerdict::MUST_ALLOW_PASS;
        case FcClass::C:   // A3: a Y/N, b Yes with RO
          return ro ? OrderingVerdict::MUST_ALLOW_PASS
                    : OrderingVerdict::MAY_PASS;
      }
      break;
    case FcClass::NP:
      switch (first.fc) {
        case FcClass::P:   // B1: a No, b Y/N with RO
          return ro ? OrderingVerdict::MAY_PASS
                    : OrderingVerdict::MUST_NOT_PASS;
        case FcClass::NP:  // B2: Y/N, no stated RO gate
        case FcClass::C:   // B3: Y/N
          return OrderingVerdict::MAY_PASS;
      }
      break;
    case FcClass::C:
      switch (first.fc) {
        case FcClass::P:   // C1: a No, b Y/N with RO
          return ro ? OrderingVerdict::MAY_PASS
                    : OrderingVerdict::MUST_NOT_PASS;
        case FcClass::NP:  // C2: Yes, else completions deadlock behind reads
          return OrderingVerdict::MUST_ALLOW_PASS;
        case FcClass::C:   // C3: a Y/N, b No for the same transaction
          return first.txn_id == second.txn_id
                     ? OrderingVerdict::MUST_NOT_PASS
                     : OrderingVerdict::MAY_PASS;
      }
      break;
  }
  return OrderingVerdict::MAY_PASS;
}

std::vector<TraceEvent> parse_trace(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string op;
    if (!(ls >> op)) continue;
    TraceEvent ev;
    if (op == "W")
      ev.is_write = true;
    else if (op == "R")
      ev.is_write = false;
    else
      throw MalformedTrace("line " + std::to_string(lineno) +
                           ": expected W or R, got '" + op + "'");
    if (!(ls >> ev.agent >> ev.var >> ev.value))
      throw MalformedTrace("line " + std::to_string(lineno) +
                           ": expected <agent> <var> <value>");
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<Violation> check_producer_consumer(
    const std::vector<TraceEvent>& trace) {
  std::vector<Violation> violations;
  // trace-position of every write, per var and value
  std::map<std::string, std::vector<std::size_t>> writes_of_var;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (trace[i].is_write) writes_of_var[trace[i].var].push_back(i);

  auto write_pos = [&](const std::string& var,
                       const std::string& value) -> std::optional<std::size_t> {
    auto it = writes_of_var.find(var);
    if (it == writes_of_var.end()) return std::nullopt;
    for (std::size_t i : it->second)
      if (trace[i].value == value) return i;
    return std::nullopt;
  };

  for (std::size_t fi = 0; fi < trace.size(); ++fi) {
    const TraceEvent& flag_read = trace[fi];
    if (flag_read.is_write) continue;
    auto fw = write_pos(flag_read.var, flag_read.value);
    if (!fw) continue;  // read an initial value, nothing implied
    const std::string& producer = trace[*fw].agent;
    // every producer write that precedes the flag write in its program order
    for (std::size_t dw = 0; dw < *fw; ++dw) {
      if (!trace[dw].is_write || trace[dw].agent != producer) continue;
      if (trace[dw].var == flag_read.var) continue;
      // a later read of that data var by the same consumer must not be stale
      for (std::size_t di = fi + 1; di < trace.size(); ++di) {
        const TraceEvent& data_read = trace[di];
        if (data_read.is_write || data_read.agent != flag_read.agent) continue;
        if (data_read.var != trace[dw].var) continue;
        auto dv = write_pos(data_read.var, data_read.value);
        bool stale = !dv || *dv < dw;
        if (stale) {
          violations.push_back(
              {di, "consumer " + data_read.agent + " saw flag '" +
                       flag_read.value + "' but read stale " + data_read.var +
                       "='" + data_read.value + "'"});
        }
      }
    }
  }
  return violations;
}

SyncOutcome check_sync_patterns(const std::vector<TraceEvent>& trace) {
  std::vector<std::size_t> reads;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (!trace[i].is_write) reads.push_back(i);
  if (reads.size() != 2)
    throw MalformedTrace("synchronization trace needs exactly two reads");
  const TraceEvent& r0 = trace[reads[0]];
  const TraceEvent& r1 = trace[reads[1]];
  if (r0.var == r1.var)
    throw MalformedTrace("the two reads must target distinct variables");

  auto is_new = [&](const TraceEvent& r) {
    for (const TraceEvent& ev : trace)
      if (ev.is_write && ev.var == r.var && ev.value == r.value) return true;
    return false;
  };
  // map onto (A, B) by variable name order
  const TraceEvent& ra = r0.var < r1.var ? r0 : r1;
  const TraceEvent& rb = r0.var < r1.var ? r1 : r0;
  return SyncOutcome{is_new(ra), is_new(rb)};
}

namespace {

struct SyncOp {
  bool is_write;
  char var;  // 'A' or 'B'
};

// Interleave two fixed per-device sequences in every order and evaluate.
void run_interleavings(const std::vector<SyncOp>& x,
                       const std::vector<SyncOp>& y,
                       std::set<SyncOutcome>* out) {
  std::function<void(std::size_t, std::size_t, bool, bool, bool, bool)> rec =
      [&](std::size_t xi, std::size_t yi, bool a_new, bool b_new,
          bool read_a_new, bool read_b_new) {
        if (xi == x.size() && yi == y.size()) {
          out->insert(SyncOutcome{read_a_new, read_b_new});
          return;
        }
        auto step = [&](const SyncOp& op, std::size_t nxi, std::size_t nyi) {
          bool an = a_new, bn = b_new, ran = read_a_new, rbn = read_b_new;
          if (op.is_write) {
            (op.var == 'A' ? an : bn) = true;
          } else {
            if (op.var == 'A') ran = a_new;
            else rbn = b_new;
          }
          rec(nxi, nyi, an, bn, ran, rbn);
        };
        if (xi < x.size()) step(x[xi], xi + 1, yi);
        if (yi < y.size()) step(y[yi], xi, yi + 1);
      };
  rec(0, 0, false, false, false, false);
}

}  // namespace

std::set<SyncOutcome> enumerate_sync_outcomes(OrderingMode mode,
                                              bool write_first) {
  // X touches A (write) and B (read); Y is the mirror image.
  SyncOp x_wr{true, 'A'}, x_rd{false, 'B'};
  SyncOp y_wr{true, 'B'}, y_rd{false, 'A'};

  std::vector<std::vector<SyncOp>> x_orders, y_orders;
  auto add_orders = [&](SyncOp first_op, SyncOp second_op,
                        std::vector<std::vector<SyncOp>>* orders) {
    orders->push_back({first_op, second_op});
    IoTlp first = make_tlp(first_op.is_write ? Opcode::IoMemWr : Opcode::IoMemRd);
    IoTlp second =
        make_tlp(second_op.is_write ? Opcode::IoMemWr : Opcode::IoMemRd);
    if (may_pass(first, second, mode) != OrderingVerdict::MUST_NOT_PASS)
      orders->push_back({second_op, first_op});
  };
  if (write_first) {
    add_orders(x_wr, x_rd, &x_orders);
    add_orders(y_wr, y_rd, &y_orders);
  } else {
    add_orders(x_rd, x_wr, &x_orders);
    add_orders(y_rd, y_wr, &y_orders);
  }

  std::set<SyncOutcome> outcomes;
  for (const auto& xo : x_orders)
    for (const auto& yo : y_orders) run_interleavings(xo, yo, &outcomes);
  return outcomes;
}

void UioSourceFence::data_write_issued(std::uint32_t txn_id) {
  pending_.insert(txn_id);
}

void UioSourceFence::completion_received(std::uint32_t txn_id) {
  pending_.erase(txn_id);
}

unsigned count_uio_violations(unsigned n_data, bool fence_enabled) {
  // messages 0..n_data-1 are data writes, n_data is the flag write
  const unsigned flag = n_data;
  unsigned violations = 0;

  // The consumer at the far end sees deliveries in order; a violation is the
  // flag arriving ahead of any data write (the consumer would then read
  // stale data). Each delivery order is turned into a trace and run through
  // the producer-consumer checker.
  auto check_order = [&](const std::vector<unsigned>& order) {
    // The checker takes the producer's program order (data writes, then
    // flag). The consumer reacts to the flag and reads each data variable;
    // a data write still in flight at that instant reads the initial value.
    std::size_t flag_at = 0;
    for (std::size_t k = 0; k < order.size(); ++k)
      if (order[k] == flag) flag_at = k;
    std::vector<TraceEvent> trace;
    for (unsigned i = 0; i < n_data; ++i)
      trace.push_back({true, "producer", "data" + std::to_string(i), "new"});
    trace.push_back({true, "producer", "flag", "new"});
    trace.push_back({false, "consumer", "flag", "new"});
    for (unsigned i = 0; i < n_data; ++i) {
      bool delivered = false;
      for (std::size_t k = 0; k < flag_at; ++k)
        if (order[k] == i) delivered = true;
      trace.push_back({false, "consumer", "data" + std::to_string(i),
                       delivered ? "new" : "init"});
    }
    if (!check_producer_consumer(trace).empty()) ++violations;
  };

  // issue-order per path is FIFO; the flag is issued after all data
  // completions when the fence is on, so it can only be appended once every
  // data write has delivered
  if (fence_enabled) {
    for (unsigned assign = 0; assign < (1u << n_data); ++assign) {
      std::vector<std::vector<unsigned>> path(2);
      for (unsigned m = 0; m < n_data; ++m)
        path[(assign >> m) & 1].push_back(m);
      std::function<void(std::size_t, std::size_t, std::vector<unsigned>&)>
          rec = [&](std::size_t i0, std::size_t i1,
                    std::vector<unsigned>& order) {
            if (i0 == path[0].size() && i1 == path[1].size()) {
              order.push_back(flag);
              check_order(order);
              order.pop_back();
              return;
            }
            if (i0 < path[0].size()) {
              order.push_back(path[0][i0]);
              rec(i0 + 1, i1, order);
              order.pop_back();
            }
            if (i1 < path[1].size()) {
              order.push_back(path[1][i1]);
              rec(i0, i1 + 1, order);
              order.pop_back();
            }
          };
    std::vector<unsigned> order;
      rec(0, 0, order);
    }
    return violations;
  }

  for (unsigned assign = 0; assign < (1u << (n_data + 1)); ++assign) {
    std::vector<std::vector<unsigned>> path(2);
    for (unsigned m = 0; m <= n_data; ++m)
      path[(assign >> m) & 1].push_back(m);
    std::function<void(std::size_t, std::size_t, std::vector<unsigned>&)> rec =
        [&](std::size_t i0, std::size_t i1, std::vector<unsigned>& order) {
          if (i0 == path[0].size() && i1 == path[1].size()) {
            check_order(order);
            return;
          }
          if (i0 < path[0].size()) {
            order.push_back(path[0][i0]);
            rec(i0 + 1, i1, order);
            order.pop_back();
          }
          if (i1 < path[1].size()) {
            order.push_back(path[1][i1]);
            rec(i0, i1 + 1, order);
            order.pop_back();
          }
        };
    std::vector<unsigned> order;
    rec(0, 0, order);
  }
  return violations;
}

}  // namespace cxlsim
