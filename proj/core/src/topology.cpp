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

#include "cxlsim/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

namespace cxlsim {

const char* to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::SLD: return "SLD";
    case DeviceKind::MLD: return "MLD";
    case DeviceKind::GFD: return "GFD";
  }
  return "?";
}

bool Topology::is_host(const ComponentId& id) const {
  return std::find(hosts.begin(), hosts.end(), id) != hosts.end();
}

bool Topology::is_switch(const ComponentId& id) const {
  return std::find(switches.begin(), switches.end(), id) != switches.end();
}

const DeviceSpec* Topology::device(const ComponentId& id) const {
  for (const auto& d : devices)
    if (d.id == id) return &d;
  return nullptr;
}

const LinkSpec* Topology::link_between(const ComponentId& a,
                                       const ComponentId& b) const {
  for (const auto& l : links)
    if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return &l;
  return nullptr;
}

std::vector<ComponentId> Topology::neighbors(const ComponentId& id) const {
  std::vector<ComponentId> out;
  for (const auto& l : links) {
    if (l.a == id) out.push_back(l.b);
    if (l.b == id) out.push_back(l.a);
  }
  return out;
}

std::vector<ComponentId> Topology::tree_path(const ComponentId& from,
                                             const ComponentId& to) const {
  if (from == to) return {from};
  std::map<ComponentId, ComponentId> parent;
  std::deque<ComponentId> q{from};
  parent[from] = from;
  while (!q.empty()) {
    ComponentId cur = q.front();
    q.pop_front();
    for (const auto& n : neighbors(cur)) {
      if (parent.count(n)) continue;
      parent[n] = cur;
      if (n == to) {
        std::vector<ComponentId> path{to};
        for (ComponentId w = to; w != from; w = parent[w])
          path.push_back(parent[w]);
        std::reverse(path.begin(), path.end());
        return path;
      }
      q.push_back(n);
    }
  }
  return {};
}

std::vector<std::string> Topology::validate() const {
  std::vector<std::string> problems;
  auto known = [&](const ComponentId& id) {
    return is_host(id) || is_switch(id) || device(id) != nullptr;
  };
  for (const auto& l : links) {
    if (!known(l.a)) problems.push_back("link endpoint unknown: " + l.a);
    if (!known(l.b)) problems.push_back("link endpoint unknown: " + l.b);
    if (l.width != 16 && l.width != 8 && l.width != 4 && l.width != 2 &&
        l.width != 1)
      problems.push_back("link width must be 16/8/4/2/1: " + l.a + "-" + l.b);
    if (l.gts != 32 && l.gts != 64 && l.gts != 16 && l.gts != 8)
      problems.push_back("link rate must be 32/64 (or degraded 16/8): " +
                         l.a + "-" + l.b);
  }
  for (const auto& d : devices) {
    if (d.type < 1 || d.type > 3)
      problems.push_back("device type must be 1..3: " + d.id);
    if (d.kind == DeviceKind::MLD && (d.lds < 1 || d.lds > kMaxMldLds))
      problems.push_back("MLD partitions into at most 16 LDs: " + d.id);
    if (d.kind != DeviceKind::MLD && d.lds > 1)
      problems.push_back("only MLDs carry multiple LDs: " + d.id);
  }
  for (const auto& f : fasts) {
    if (!is_switch(f.switch_id))
      problems.push_back("FAST names unknown switch: " + f.switch_id);
    if (f.segsize == 0 || (f.segsize & (f.segsize - 1)) != 0)
      problems.push_back("FAST segment size must be a power of two");
    for (std::uint16_t pid : f.segment_pid)
      if (pid >= kMaxPids)
        problems.push_back("FAST PID out of 12-bit range");
  }
  return problems;
}

namespace {

std::map<std::string, std::string> parse_kv(std::istringstream& is) {
  std::map<std::string, std::string> kv;
  std::string word;
  while (is >> word) {
    auto eq = word.find('=');
    if (eq == std::string::npos)
      kv[word] = "";
    else
      kv[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return kv;
}

}  // namespace

Topology parse_topology(std::istream& in) {
  Topology t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string kind;
    if (!(ls >> kind)) continue;
    auto fail = [&](const std::string& why) {
      throw TopologyError("line " + std::to_string(lineno) + ": " + why);
    };

    if (kind == "HOST") {
      std::string id;
      if (!(ls >> id)) fail("HOST needs an id");
      t.hosts.push_back(id);
    } else if (kind == "SWITCH") {
      std::string id;
      if (!(ls >> id)) fail("SWITCH needs an id");
      t.switches.push_back(id);
    } else if (kind == "DEVICE") {
      DeviceSpec d;
      if (!(ls >> d.id)) fail("DEVICE needs an id");
      auto kv = parse_kv(ls);
      if (kv.count("type")) d.type = std::stoi(kv["type"]);
      if (kv.count("kind")) {
        if (kv["kind"] == "SLD") d.kind = DeviceKind::SLD;
        else if (kv["kind"] == "MLD") d.kind = DeviceKind::MLD;
        else if (kv["kind"] == "GFD") d.kind = DeviceKind::GFD;
        else fail("device kind must be SLD|MLD|GFD");
      }
      if (kv.count("lds")) d.lds = std::stoul(kv["lds"]);
      t.devices.push_back(std::move(d));
    } else if (kind == "LINK") {
      LinkSpec l;
      if (!(ls >> l.a >> l.b)) fail("LINK needs two endpoints");
      auto kv = parse_kv(ls);
      if (kv.count("width")) l.width = std::stoul(kv["width"]);
      if (kv.count("gts")) l.gts = std::stoul(kv["gts"]);
      if (kv.count("retimer")) l.retimer = true;
      t.links.push_back(std::move(l));
    } else if (kind == "FAST") {
      FastSpec f;
      if (!(ls >> f.switch_id)) fail("FAST needs a switch id");
      auto kv = parse_kv(ls);
      if (kv.count("base")) f.base = std::stoull(kv["base"], nullptr, 16);
      if (kv.count("segsize"))
        f.segsize = std::stoull(kv["segsize"], nullptr, 16);
      if (kv.count("map")) {
        std::istringstream ms(kv["map"]);
        std::string tok;
        while (std::getline(ms, tok, ','))
          f.segment_pid.push_back(
              static_cast<std::uint16_t>(std::stoul(tok)));
      }
      t.fasts.push_back(std::move(f));
    } else {
      fail("unknown directive: " + kind);
    }
  }
  return t;
}

Topology parse_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file: " + path);
  return parse_topology(in);
}

std::vector<FmCommand> parse_fm_script(std::istream& in) {
  std::vector<FmCommand> cmds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string verb;
    if (!(ls >> verb)) continue;
    auto fail = [&](const std::string& why) {
      throw TopologyError("fm script line " + std::to_string(lineno) + ": " +
                          why);
    };
    FmCommand c;
    if (verb == "BIND") {
      c.kind = FmCommand::Kind::BIND;
      if (!(ls >> c.switch_id >> c.vppb >> c.port)) fail("BIND <sw> <vppb> <port> [ld]");
      unsigned ld;
      if (ls >> ld) c.ld = static_cast<std::uint8_t>(ld);
    } else if (verb == "UNBIND") {
      c.kind = FmCommand::Kind::UNBIND;
      std::string opt;
      if (!(ls >> c.switch_id >> c.vppb >> opt))
        fail("UNBIND <sw> <vppb> <option>");
      if (opt == "WAIT") c.option = FmCommand::UnbindOption::WAIT;
      else if (opt == "HOT_REMOVE_WAIT")
        c.option = FmCommand::UnbindOption::HOT_REMOVE_WAIT;
      else if (opt == "FORCE") c.option = FmCommand::UnbindOption::FORCE;
      else fail("unbind option must be WAIT|HOT_REMOVE_WAIT|FORCE");
    } else if (verb == "SETLD") {
      c.kind = FmCommand::Kind::SET_LD;
      std::string ranges;
      if (!(ls >> c.device_id >> c.granularity_mb >> ranges))
        fail("SETLD <dev> <gran_mb> <ranges>");
      std::istringstream rs(ranges);
      std::string tok;
      while (std::getline(rs, tok, ',')) c.range_mb.push_back(std::stoull(tok));
    } else {
      c.kind = FmCommand::Kind::OTHER;
      c.other_name = verb;
    }
    cmds.push_back(std::move(c));
  }
  return cmds;
}

}  // namespace cxlsim
