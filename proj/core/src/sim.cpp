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

#include "cxlsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cxlsim/fabric.hpp"
#include "cxlsim/mem_agent.hpp"

namespace cxlsim {

// ---------------------------------------------------------------------------
// Engine

void Engine::at(ps_t t, Action a) {
  queue_.push(Ev{std::max(t, now_), next_seq_++, std::move(a)});
}

bool Engine::step() {
  if (queue_.empty()) return false;
  Ev ev = queue_.top();
  queue_.pop();
  now_ = ev.t;
  ev.a();
  return true;
}

std::uint64_t Engine::run_until(ps_t horizon) {
  std::uint64_t n = 0;
  while (!queue_.empty() && (horizon == 0 || queue_.top().t <= horizon)) {
    step();
    ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// TraceSink

void TraceSink::record(ps_t t, const std::string& agent, const char* dir,
                       const Message& m) {
  if (!enabled) return;
  std::ostringstream os;
  os << "T=" << t << " " << agent << " " << dir << " "
     << to_string(channel_of(m.opcode)) << " " << to_string(m.opcode);
  if (m.address) os << " A=" << std::hex << m.address->line() << std::dec;
  os << " tag=" << m.tag;
  if (m.bogus) os << " bogus";
  if (m.poison) os << " poison";
  lines.push_back(os.str());
}

void TraceSink::raw(const std::string& line) {
  if (enabled) lines.push_back(line);
}

// ---------------------------------------------------------------------------
// SimLink

namespace {

double flit_wire_ps(const LinkConfig& cfg) {
  // effective byte rate folds the SKP ordered-set and sync-header overheads
  // for 68B links; 256B modes carry their overhead inside the flit
  double bytes_per_s = cfg.lanes * cfg.rate_gts * 1e9 / 8.0;
  if (cfg.flit_mode == FlitMode::F68) {
    bytes_per_s *= 374.0 / 375.0;
    if (!cfg.sync_hdr_bypass) bytes_per_s *= 128.0 / 130.0;
  }
  return flit_bytes(cfg.flit_mode) / bytes_per_s * 1e12;
}

}  // namespace

SimLink::SimLink(Engine* eng, const LinkConfig& cfg, std::string name,
                 Deliver deliver, TraceSink* trace)
    : eng_(eng),
      name_(std::move(name)),
      packer_(cfg.flit_mode),
      flit_ps_(flit_wire_ps(cfg)),
      wire_ps_(static_cast<ps_t>(latency::kWireFlightPerHop * 1000 / 2)),
      deliver_(std::move(deliver)),
      trace_(trace) {}

void SimLink::send(const Message& m) {
  if (trace_) trace_->record(eng_->now(), name_, "tx", m);
  packer_.enqueue(m);
  if (!emitting_) {
    emitting_ = true;
    double start = std::max<double>(eng_->now(), next_free_);
    eng_->at(static_cast<ps_t>(std::llround(start)), [this] { pump(); });
  }
}

void SimLink::pump() {
  if (!packer_.pending()) {
    emitting_ = false;
    return;
  }
  double start = std::max<double>(eng_->now(), next_free_);
  FlitPlan plan = packer_.pack_next();
  ++flits_;
  next_free_ = start + flit_ps_;
  ps_t arrival = static_cast<ps_t>(std::llround(next_free_)) + wire_ps_;
  for (Message& m : plan.delivered) {
    unsigned bytes = m.has_data ? kCacheLineBytes : 0;
    eng_->at(arrival, [this, m, bytes] {
      if (bytes) {
        data_bytes_ += bytes;
        deliveries_.push_back({eng_->now(), bytes});
      }
      if (trace_) trace_->record(eng_->now(), name_, "rx", m);
      deliver_(m);
    });
  }
  eng_->at(static_cast<ps_t>(std::llround(next_free_)), [this] { pump(); });
}

std::uint64_t SimLink::bytes_in_window(ps_t from, ps_t to) const {
  std::uint64_t bytes = 0;
  for (const auto& [t, b] : deliveries_)
    if (t >= from && t < to) bytes += b;
  return bytes;
}

double SimLink::utilization_window_gbps(ps_t from, ps_t to) const {
  if (to <= from) return 0;
  return bytes_in_window(from, to) * 1000.0 / static_cast<double>(to - from);
}

// ---------------------------------------------------------------------------
// run_mem_sim

namespace {

struct OpPattern {
  std::vector<bool> is_write;
};

OpPattern pattern_for(TrafficMix mix) {
  switch (mix) {
    case TrafficMix::MEM_1R0W: return {{false}};
    case TrafficMix::MEM_1R1W: return {{false, true}};
    case TrafficMix::MEM_2R1W: return {{false, false, true}};
    default: throw DomainError("mem sim takes a MEM_* mix");
  }
}

struct HostState {
  std::string name;
  std::uint64_t next_op = 0;
  std::uint64_t total_ops = 0;
  std::uint64_t completed = 0;
  std::uint64_t error_completed = 0;
  unsigned credits;
  OpPattern pattern;
  std::uint16_t next_tag = 1;
  struct Outstanding {
    Message req;
    ps_t issued_at;
    bool want_cmp = false;  // Type-2 reads wait for DRS + NDR
    bool got_data = false;
    bool got_cmp = false;
  };
  std::map<std::uint16_t, Outstanding> outstanding;
  std::vector<double> latencies_ns;
};

}  // namespace

std::string SimStats::csv() const {
  std::ostringstream os;
  os << "metric,scope,value,unit\n";
  for (const auto& [k, v] : values) {
    std::string metric = k, scope = "sim", unit = "";
    if (auto dot = k.find('.'); dot != std::string::npos) {
      scope = k.substr(0, dot);
      metric = k.substr(dot + 1);
    }
    if (metric.find("gbps") != std::string::npos) unit = "GB/s";
    else if (metric.find("_ns") != std::string::npos) unit = "ns";
    else if (metric.find("_ps") != std::string::npos) unit = "ps";
    os << metric << "," << scope << "," << v << "," << unit << "\n";
  }
  return os.str();
}

SimResult run_mem_sim(const SimConfig& cfg, const WorkloadSpec& workload) {
  Engine eng;
  SimResult result;
  TraceSink trace;
  trace.enabled = cfg.trace;
  trace.raw("# cxlsim trace seed=" + std::to_string(cfg.seed) + " mix=" +
            std::string(to_string(workload.mix)) + " flit=" +
            std::string(to_string(cfg.link.flit_mode)));

  const unsigned n_vh = cfg.two_vh ? 2 : 1;
  const ps_t media_ps = static_cast<ps_t>(cfg.media_latency_ns * 1000);
  const ps_t switch_ps = static_cast<ps_t>(cfg.switch_latency_ns * 1000);

  // components
  std::vector<HostState> hosts(n_vh);
  std::vector<MemDevice> devices;
  std::vector<bool> device_dead(n_vh, false);
  for (unsigned i = 0; i < n_vh; ++i) {
    MemDevice::Config mc;
    mc.id = "dev" + std::to_string(i);
    mc.device_type = cfg.device_type;
    mc.media_latency_ns = cfg.media_latency_ns;
    devices.emplace_back(mc);
    devices.back().add_region(
        {Address(0), std::uint64_t{1} << 40, HdmKind::HDM_H, mc.id});
    hosts[i].name = "host" + std::to_string(i);
    hosts[i].credits = workload.credits;
    hosts[i].pattern = pattern_for(workload.mix);
    hosts[i].total_ops = workload.lines;
  }

  // links; in the switched scenario each hop has its own link pair
  std::vector<std::unique_ptr<SimLink>> links;
  // indices: per VH: m2s_host_side, s2m_host_side, and when switched:
  // m2s_dev_side, s2m_dev_side
  struct VhLinks {
    SimLink* m2s_a = nullptr;  // host -> (switch or device)
    SimLink* s2m_a = nullptr;  // (switch or device) -> host
    SimLink* m2s_b = nullptr;  // switch -> device
    SimLink* s2m_b = nullptr;  // device -> switch
  };
  std::vector<VhLinks> vh(n_vh);

  std::function<void(unsigned)> try_issue;  // forward decl

  auto host_complete = [&](unsigned h, std::uint16_t tag, bool error) {
    auto& hs = hosts[h];
    auto it = hs.outstanding.find(tag);
    if (it == hs.outstanding.end()) return;
    hs.latencies_ns.push_back((eng.now() - it->second.issued_at) / 1000.0);
    hs.outstanding.erase(it);
    ++(error ? hs.error_completed : hs.completed);
    try_issue(h);
  };

  auto host_receive = [&](unsigned h, const Message& m) {
    auto& hs = hosts[h];
    auto it = hs.outstanding.find(m.tag);
    if (it == hs.outstanding.end()) return;  // error-contained already
    auto& o = it->second;
    switch (channel_of(m.opcode)) {
      case ChannelName::S2M_DRS:
        o.got_data = true;
        break;
      case ChannelName::S2M_NDR:
        o.got_cmp = true;
        break;
      default:
        return;
    }
    bool done = o.want_cmp ? (o.got_data && o.got_cmp)
                           : (o.got_data || o.got_cmp);
    if (done) host_complete(h, m.tag, m.poison);
  };

  auto device_receive = [&](unsigned d, const Message& m) {
    if (device_dead[d]) return;  // unresponsive endpoint swallows traffic
    eng.after(media_ps, [&, d, m] {
      if (device_dead[d]) return;
      for (const Message& rsp : devices[d].handle_m2s(0, m)) {
        SimLink* out = cfg.two_vh ? vh[d].s2m_b : vh[d].s2m_a;
        out->send(rsp);
      }
    });
  };

  // wire up links
  for (unsigned i = 0; i < n_vh; ++i) {
    if (!cfg.two_vh) {
      links.push_back(std::make_unique<SimLink>(
          &eng, cfg.link, "m2s" + std::to_string(i),
          [&, i](const Message& m) { device_receive(i, m); }, &trace));
      vh[i].m2s_a = links.back().get();
      links.push_back(std::make_unique<SimLink>(
          &eng, cfg.link, "s2m" + std::to_string(i),
          [&, i](const Message& m) { host_receive(i, m); }, &trace));
      vh[i].s2m_a = links.back().get();
    } else {
      // host -> switch -> device and back; the switch adds arb + flight
      links.push_back(std::make_unique<SimLink>(
          &eng, cfg.link, "h" + std::to_string(i) + "-sw",
          [&, i](const Message& m) {
            eng.after(switch_ps, [&, i, m] { vh[i].m2s_b->send(m); });
          },
          &trace));
      vh[i].m2s_a = links.back().get();
      links.push_back(std::make_unique<SimLink>(
          &eng, cfg.link, "sw-dev" + std::to_string(i),
          [&, i](const Message& m) { device_receive(i, m); }, &trace));
      vh[i].m2s_b = links.back().get();
      links.push_back(std::make_unique<SimLink>(
          &eng, cfg.link, "dev" + std::to_string(i) + "-sw",
          [&, i](const Message& m) {
            eng.after(switch_ps, [&, i, m] { vh[i].s2m_a->send(m); });
          },
          &trace));
      vh[i].s2m_b = links.back().get();
      links.push_back(std::make_unique<SimLink>(
          &eng, cfg.link, "sw-h" + std::to_string(i),
          [&, i](const Message& m) { host_receive(i, m); }, &trace));
      vh[i].s2m_a = links.back().get();
    }
  }

  try_issue = [&](unsigned h) {
    auto& hs = hosts[h];
    while (hs.next_op < hs.total_ops &&
           hs.outstanding.size() < hs.credits) {
      bool is_write = hs.pattern.is_write[hs.next_op % hs.pattern.is_write.size()];
      Message m;
      m.opcode = is_write ? Opcode::MemWr : Opcode::MemRd;
      m.address = Address(hs.next_op * kCacheLineBytes);
      m.tag = hs.next_tag++;
      m.spid = 0;
      m.src = hs.name;
      m.dst = "dev" + std::to_string(h);
      if (is_write) {
        m.has_data = true;
        m.data = make_data(hs.next_op);
      }
      HostState::Outstanding o;
      o.req = m;
      o.issued_at = eng.now();
      o.want_cmp = !is_write && cfg.device_type == 2;
      hs.outstanding.emplace(m.tag, o);
      ++hs.next_op;
      vh[h].m2s_a->send(m);
    }
  };

  // error containment: synthesize completions for requests outstanding
  // past the timeout (the device died)
  std::function<void(unsigned)> sweep = [&](unsigned h) {
    auto& hs = hosts[h];
    std::vector<Message> timed_out;
    for (auto& [tag, o] : hs.outstanding)
      if (eng.now() - o.issued_at > cfg.request_timeout_ps)
        timed_out.push_back(o.req);
    for (const Message& err : Fabric::contain_error(timed_out)) {
      if (trace.enabled) trace.record(eng.now(), hs.name, "rx", err);
      host_complete(h, err.tag, true);
    }
    if (hs.outstanding.size() + (hs.total_ops - hs.next_op) > 0)
      eng.after(cfg.request_timeout_ps / 4, [&, h] { sweep(h); });
  };

  for (unsigned h = 0; h < n_vh; ++h) {
    eng.at(0, [&, h] { try_issue(h); });
    if (cfg.kill_time_ps > 0)
      eng.at(1, [&, h] { sweep(h); });
  }
  if (cfg.kill_time_ps > 0 && n_vh > 1)
    eng.at(cfg.kill_time_ps, [&] { device_dead[1] = true; });

  eng.run_until(cfg.horizon_ps);

  // --- results ---
  bool all_done = true;
  for (auto& hs : hosts) {
    if (hs.completed + hs.error_completed < hs.total_ops) all_done = false;
  }
  result.conserved = all_done;
  result.deadlock = !all_done && eng.empty();
  result.trace = std::move(trace.lines);

  auto& stats = result.stats.values;

  // steady-state bandwidth: drop the warmup fraction of delivered bytes,
  // then rate the remainder between its first and last delivery
  auto steady_bw = [&](const SimLink* link) -> double {
    if (!link) return 0;
    const auto& log = link->deliveries();
    if (log.size() < 8) return 0;
    std::uint64_t total = 0;
    for (const auto& [t, b] : log) total += b;
    std::uint64_t skip =
        static_cast<std::uint64_t>(total * cfg.warmup_fraction);
    std::uint64_t acc = 0;
    std::size_t i0 = 0;
    while (i0 < log.size() && acc < skip) acc += log[i0++].second;
    if (i0 + 1 >= log.size()) return 0;
    std::uint64_t bytes = 0;
    for (std::size_t i = i0 + 1; i < log.size(); ++i) bytes += log[i].second;
    ps_t t0 = log[i0].first, t1 = log.back().first;
    return t1 > t0 ? bytes * 1000.0 / static_cast<double>(t1 - t0) : 0;
  };

  for (unsigned h = 0; h < n_vh; ++h) {
    const auto& hs = hosts[h];
    std::string scope = hs.name;
    stats[scope + ".completed"] = static_cast<double>(hs.completed);
    stats[scope + ".error_completed"] =
        static_cast<double>(hs.error_completed);
    if (!hs.latencies_ns.empty()) {
      double sum = 0;
      for (double v : hs.latencies_ns) sum += v;
      stats[scope + ".latency_ns_mean"] = sum / hs.latencies_ns.size();
    }
    stats[scope + ".s2m_data_gbps"] = steady_bw(vh[h].s2m_a);
    stats[scope + ".m2s_data_gbps"] = steady_bw(vh[h].m2s_a);

    if (cfg.kill_time_ps > 0 && vh[h].s2m_a) {
      const auto& log = vh[h].s2m_a->deliveries();
      if (!log.empty()) {
        ps_t t_first = log.front().first;
        ps_t t_last = log.back().first;
        ps_t warm = t_first + (cfg.kill_time_ps - t_first) / 5;
        stats[scope + ".s2m_gbps_before_kill"] =
            vh[h].s2m_a->utilization_window_gbps(warm, cfg.kill_time_ps);
        ps_t settle = cfg.kill_time_ps + cfg.request_timeout_ps;
        if (t_last > settle)
          stats[scope + ".s2m_gbps_after_kill"] =
              vh[h].s2m_a->utilization_window_gbps(settle, t_last);
      }
    }
  }
  return result;
}

}  // namespace cxlsim
