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

#include "cxlsim/explore.hpp"

#include <deque>
#include <sstream>
#include <unordered_map>

#include "cxlsim/cache_agent.hpp"

namespace cxlsim {

namespace {

// The whole system under exploration, copyable by value. The monitor's
// agent pointers are rebound after every copy.
struct MiniSystem {
  std::vector<DeviceCacheAgent> devices;
  HostHomeAgent host;
  std::vector<H2dDelivery> h2d;                                 // per device
  std::vector<std::deque<Message>> d2h_req, d2h_rsp, d2h_data;  // per device
  CoherenceMonitor monitor;
  unsigned issues_left;
  unsigned host_invs_left;
  unsigned store_seq = 0;

  explicit MiniSystem(const ExploreConfig& cfg)
      : host("host", cfg.snoop_filter_capacity),
        issues_left(cfg.max_issues),
        host_invs_left(cfg.max_host_invs) {
    for (unsigned i = 0; i < cfg.n_devices; ++i) {
      devices.emplace_back("dev" + std::to_string(i),
                           static_cast<std::uint8_t>(i));
      host.register_device(static_cast<std::uint8_t>(i), devices.back().id());
      h2d.emplace_back(cfg.go_push_rule);
      d2h_req.emplace_back();
      d2h_rsp.emplace_back();
      d2h_data.emplace_back();
    }
    monitor.note_committed(Address(cfg.line), 0);
  }

  std::string key() const {
    std::string s;
    for (const auto& d : devices) d.serialize(&s);
    host.serialize(&s);
    for (const auto& q : h2d) q.serialize(&s);
    auto dump = [&s](const std::deque<Message>& q, char t) {
      s += t;
      for (const auto& m : q) s += m.str() + ";";
    };
    for (unsigned i = 0; i < devices.size(); ++i) {
      dump(d2h_req[i], 'q');
      dump(d2h_rsp[i], 'r');
      dump(d2h_data[i], 'd');
    }
    s += "g" + monitor.ghost_str();
    s += "s" + std::to_string(store_seq);
    return s;
  }

  void route_to_devices(const std::vector<Message>& msgs) {
    for (const Message& m : msgs)
      for (unsigned i = 0; i < devices.size(); ++i)
        if (devices[i].id() == m.dst) h2d[i].send(m);
  }

  void route_to_host(unsigned dev, const std::vector<Message>& msgs) {
    for (const Message& m : msgs) {
      switch (channel_of(m.opcode)) {
        case ChannelName::D2H_REQ: d2h_req[dev].push_back(m); break;
        case ChannelName::D2H_RSP: d2h_rsp[dev].push_back(m); break;
        case ChannelName::D2H_DATA: d2h_data[dev].push_back(m); break;
        default: break;
      }
    }
  }
};

}  // namespace

ExploreReport explore(const ExploreConfig& cfg) {
  ExploreReport report;

  struct Node {
    MiniSystem sys;
    unsigned depth_left;
    std::vector<std::string> schedule;
  };

  // a state is re-expanded only when revisited with a larger budget
  std::unordered_map<std::string, std::pair<unsigned, unsigned>> seen;
  std::deque<Node> stack;
  stack.push_back({MiniSystem(cfg), cfg.depth, {}});

  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();

    std::string k = node.sys.key();
    unsigned stimuli = node.sys.issues_left + node.sys.host_invs_left;
    auto it = seen.find(k);
    if (it != seen.end() && it->second.first >= node.depth_left &&
        it->second.second >= stimuli)
      continue;
    seen[k] = {node.depth_left, stimuli};
    ++report.states_visited;
    if (report.states_visited > cfg.state_budget)
      throw StateSpaceBudgetExceeded(
          "explore: state budget exceeded after " +
          std::to_string(report.states_visited) + " states");

    bool stop = false;
    const Address line(cfg.line);

    // Applies one transition on a copy, runs the monitors, and pushes the
    // child node (stimuli do not consume depth).
    auto run_child = [&](const std::string& label, bool stimulus,
                         auto&& mutate) {
      MiniSystem next = node.sys;
      AgentOutput out = mutate(next);
      ++report.transitions_taken;
      next.monitor.rebind(&next.host, next.devices);
      std::optional<std::string> verdict = next.monitor.on_events(out.events);
      if (verdict) {
        report.violation_found = true;
        report.violation = *verdict;
        report.witness = node.schedule;
        report.witness.push_back(label);
        return true;
      }
      Node child{std::move(next),
                 stimulus ? node.depth_left : node.depth_left - 1,
                 node.schedule};
      child.schedule.push_back(label);
      stack.push_back(std::move(child));
      return false;
    };

    // stimuli: device issues and host-internal invalidations
    if (node.sys.issues_left > 0) {
      for (unsigned d = 0; d < cfg.n_devices && !stop; ++d) {
        for (Opcode op : cfg.alphabet) {
          if (!node.sys.devices[d].can_issue(op, line)) continue;
          std::ostringstream lbl;
          lbl << "dev" << d << ".issue(" << to_string(op) << ")";
          stop = run_child(lbl.str(), true, [&](MiniSystem& s) {
            std::optional<std::uint64_t> token;
            if (op == Opcode::RdOwn) token = 100 + 10 * d + ++s.store_seq;
            Message req = s.devices[d].issue(op, line, token);
            s.route_to_host(d, {req});
            --s.issues_left;
            return AgentOutput{};
          });
          if (stop) break;
        }
      }
    }
    if (!stop && cfg.host_inv_in_alphabet && node.sys.host_invs_left > 0) {
      stop = run_child("host.SnpInv", true, [&](MiniSystem& s) {
        --s.host_invs_left;
        AgentOutput out = s.host.host_invalidate(line);
        s.route_to_devices(out.out);
        return out;
      });
    }

    if (stop) break;
    if (node.depth_left == 0) continue;

    // host consumes one D2H message (any device, any channel head)
    for (unsigned d = 0; d < cfg.n_devices && !stop; ++d) {
      for (const char* ch : {"req", "rsp", "data"}) {
        const std::deque<Message>& q =
            std::string(ch) == "req"
                ? node.sys.d2h_req[d]
                : std::string(ch) == "rsp" ? node.sys.d2h_rsp[d]
                                           : node.sys.d2h_data[d];
        if (q.empty()) continue;
        std::ostringstream lbl;
        lbl << "host.d2h(dev" << d << "." << ch << ")";
        std::string chs(ch);
        stop = run_child(lbl.str(), false, [&, chs](MiniSystem& s) {
          std::deque<Message>& sq = chs == "req" ? s.d2h_req[d]
                                   : chs == "rsp" ? s.d2h_rsp[d]
                                                  : s.d2h_data[d];
          Message m = sq.front();
          sq.pop_front();
          AgentOutput out = s.host.on_d2h(m);
          s.route_to_devices(out.out);
          return out;
        });
        if (stop) break;
      }
    }

    // deliver one H2D message to a device
    for (unsigned d = 0; d < cfg.n_devices && !stop; ++d) {
      for (ChannelName ch : node.sys.h2d[d].deliverable()) {
        std::ostringstream lbl;
        lbl << "dev" << d << ".h2d(" << to_string(ch) << ")";
        stop = run_child(lbl.str(), false, [&, ch](MiniSystem& s) {
          Message m = s.h2d[d].deliver(ch);
          AgentOutput out = s.devices[d].on_h2d(m);
          s.route_to_host(d, out.out);
          return out;
        });
        if (stop) break;
      }
    }

    if (stop) break;
  }
  return report;
}

}  // namespace cxlsim
