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

#ifndef CXLSIM_SIM_HPP_
#define CXLSIM_SIM_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "cxlsim/packer.hpp"
#include "cxlsim/perf_model.hpp"
#include "cxlsim/protocol.hpp"

namespace cxlsim {

using ps_t = std::int64_t;  // integer picoseconds

// ---------------------------------------------------------------------------
// Deterministic event engine: events run in (time, sequence) order, so equal
// inputs and seed give byte-identical traces.
class Engine {
 public:
  using Action = std::function<void()>;

  ps_t now() const { return now_; }
  void at(ps_t t, Action a);
  void after(ps_t delay, Action a) { at(now_ + delay, std::move(a)); }

  bool step();
  /// Runs until the queue drains or the horizon passes; returns the number
  /// of events executed.
  std::uint64_t run_until(ps_t horizon);
  bool empty() const { return queue_.empty(); }

 private:
  struct Ev {
    ps_t t;
    std::uint64_t seq;
    Action a;
  };
  struct Later {
    bool operator()(const Ev& l, const Ev& r) const {
      return l.t != r.t ? l.t > r.t : l.seq > r.seq;
    }
  };
  ps_t now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Ev, std::vector<Ev>, Later> queue_;
};

// ---------------------------------------------------------------------------
struct TraceSink {
  bool enabled = false;
  std::vector<std::string> lines;
  void record(ps_t t, const std::string& agent, const char* dir,
              const Message& m);
  void raw(const std::string& line);
};

/// One link direction: a greedy packer feeding a serializer. Flit time
/// derives from the wire footprint and the link's effective byte rate (SKP
/// and sync-header overheads fold into the rate for 68B links).
class SimLink {
 public:
  using Deliver = std::function<void(const Message&)>;

  SimLink(Engine* eng, const LinkConfig& cfg, std::string name,
          Deliver deliver, TraceSink* trace);

  void send(const Message& m);
  bool idle() const { return !emitting_ && !packer_.pending(); }

  std::uint64_t flits_sent() const { return flits_; }
  std::uint64_t data_bytes_delivered() const { return data_bytes_; }
  double utilization_window_gbps(ps_t from, ps_t to) const;
  /// Payload bytes delivered in [from, to).
  std::uint64_t bytes_in_window(ps_t from, ps_t to) const;
  /// Delivery log: (arrival time, payload bytes) per data message.
  const std::vector<std::pair<ps_t, unsigned>>& deliveries() const {
    return deliveries_;
  }

 private:
  void pump();

  Engine* eng_;
  std::string name_;
  SlotPacker packer_;
  double flit_ps_;
  ps_t wire_ps_;
  Deliver deliver_;
  TraceSink* trace_;
  bool emitting_ = false;
  double next_free_ = 0;
  std::uint64_t flits_ = 0;
  std::uint64_t data_bytes_ = 0;
  std::vector<std::pair<ps_t, unsigned>> deliveries_;  // (time, bytes)
};

// ---------------------------------------------------------------------------
struct WorkloadSpec {
  TrafficMix mix = TrafficMix::MEM_1R0W;
  std::uint64_t lines = 10000;  // cache lines to move
  std::uint64_t seed = 1;
  unsigned credits = 32;  // outstanding requests per host
};

struct SimConfig {
  LinkConfig link;
  int device_type = 3;
  double media_latency_ns = 80;
  ps_t horizon_ps = 0;  // 0 = run to completion
  bool trace = false;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 1;

  // switched two-VH scenario (error containment)
  bool two_vh = false;
  ps_t kill_time_ps = 0;       // when > 0, the second VH's device dies
  ps_t request_timeout_ps = 2'000'000;
  double switch_latency_ns = 20;  // arb/lookup + flight
};

struct SimStats {
  std::map<std::string, double> values;  // metric -> value
  std::string csv() const;               // metric,scope,value,unit
};

struct SimResult {
  SimStats stats;
  std::vector<std::string> trace;
  bool deadlock = false;
  bool conserved = true;  // every request completed or error-contained
  std::string note;
};

/// Host + Type-2/3 device over one link (criterion-7 shape), or two
/// host/device VH pairs through a switch when cfg.two_vh is set.
SimResult run_mem_sim(const SimConfig& cfg, const WorkloadSpec& workload);

}  // namespace cxlsim

#endif  // CXLSIM_SIM_HPP_
