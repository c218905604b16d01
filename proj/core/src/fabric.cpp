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

#include "cxlsim/fabric.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace cxlsim {

namespace {

constexpr unsigned kVppbsPerHost = 8;
constexpr std::uint64_t kHdmBase = 0x4000'0000;  // 1 GiB, per-host space
constexpr std::uint64_t kDefaultWindow = 0x1000'0000;  // 256 MiB per (dev, ld)

}  // namespace

const SwitchPort* SwitchModel::port_to(const ComponentId& peer) const {
  for (const auto& p : ports)
    if (p.peer == peer) return &p;
  return nullptr;
}

// ---------------------------------------------------------------------------
// IslChannelSet

const std::vector<ChannelName>& IslChannelSet::channels() {
  static const std::vector<ChannelName> chans = {
      ChannelName::D2H_REQ,   ChannelName::D2H_RSP,  ChannelName::D2H_DATA,
      ChannelName::H2D_REQ,   ChannelName::H2D_RSP,  ChannelName::H2D_DATA,
      ChannelName::M2S_REQ,   ChannelName::M2S_RWD,  ChannelName::S2M_NDR,
      ChannelName::S2M_DRS,   ChannelName::S2M_BISNP, ChannelName::M2S_BIRSP,
  };
  return chans;
}

IslChannelSet::IslChannelSet(unsigned credits_per_channel) {
  for (ChannelName ch : channels()) {
    up_[ch] = credits_per_channel;
    down_[ch] = credits_per_channel;
  }
}

bool IslChannelSet::take_credit(ChannelName ch, bool upstream) {
  auto& pool = upstream ? up_ : down_;
  auto it = pool.find(ch);
  if (it == pool.end() || it->second == 0) return false;
  --it->second;
  return true;
}

void IslChannelSet::return_credit(ChannelName ch, bool upstream) {
  auto& pool = upstream ? up_ : down_;
  ++pool.at(ch);
}

unsigned IslChannelSet::credits(ChannelName ch, bool upstream) const {
  const auto& pool = upstream ? up_ : down_;
  auto it = pool.find(ch);
  return it == pool.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// DevLoadController

const char* to_string(DevLoad l) {
  switch (l) {
    case DevLoad::LIGHT: return "light";
    case DevLoad::OPTIMAL: return "optimal";
    case DevLoad::MODERATE: return "moderate";
    case DevLoad::SEVERE: return "severe";
  }
  return "?";
}

double DevLoadController::update(DevLoad observed) {
  switch (observed) {
    case DevLoad::SEVERE: rate_per_us *= reduce_severe; break;
    case DevLoad::MODERATE: rate_per_us *= reduce_moderate; break;
    case DevLoad::LIGHT:
      rate_per_us = std::min(nominal_per_us, rate_per_us * increase_light);
      break;
    case DevLoad::OPTIMAL: break;
  }
  return rate_per_us;
}

// ---------------------------------------------------------------------------
// Fabric

Fabric::Fabric(Topology topo, std::uint64_t seed)
    : topo_(std::move(topo)), seed_(seed), rng_(seed) {
  for (const auto& sw : topo_.switches) {
    SwitchModel m;
    m.id = sw;
    unsigned pid = 0;
    for (const auto& n : topo_.neighbors(sw)) {
      SwitchPort p;
      p.id = pid++;
      p.peer = n;
      p.dir = topo_.is_host(n) ? SwitchPort::Dir::UPSTREAM
              : topo_.is_switch(n) ? SwitchPort::Dir::ISL
                                   : SwitchPort::Dir::DOWNSTREAM;
      m.ports.push_back(std::move(p));
    }
    // a pool of vPPBs per virtual hierarchy
    unsigned v = 0;
    for (const auto& h : topo_.hosts)
      for (unsigned k = 0; k < kVppbsPerHost; ++k)
        m.vppbs.push_back({v++, h, std::nullopt, std::nullopt});
    for (const auto& f : topo_.fasts)
      if (f.switch_id == sw) m.fast = f;
    switches_.emplace(sw, std::move(m));
  }
  for (const auto& h : topo_.hosts) {
    host_responsive_[h] = true;
    hdm_[h];
  }
  // endpoint PIDs: hosts then devices, in declaration order
  std::uint16_t next_pid = 1;
  pid_rev_.push_back("");  // PID 0 reserved
  for (const auto& h : topo_.hosts) {
    pid_[h] = next_pid++;
    pid_rev_.push_back(h);
  }
  for (const auto& d : topo_.devices) {
    pid_[d.id] = next_pid++;
    pid_rev_.push_back(d.id);
  }
  rebuild_pbr_tables();
}

SwitchModel& Fabric::switch_model(const ComponentId& id) {
  return switches_.at(id);
}
const SwitchModel& Fabric::switch_model(const ComponentId& id) const {
  return switches_.at(id);
}

unsigned Fabric::ld_count(const ComponentId& device) const {
  auto it = set_ld_counts_.find(device);
  if (it != set_ld_counts_.end()) return it->second;
  const DeviceSpec* d = topo_.device(device);
  return d && d->kind == DeviceKind::MLD ? d->lds : 1;
}

Fabric::FmResult Fabric::bind(const FmCommand& cmd) {
  FmResult r;
  auto sit = switches_.find(cmd.switch_id);
  if (sit == switches_.end()) {
    r.ok = false;
    r.error = "UnknownEntity: switch " + cmd.switch_id;
    return r;
  }
  SwitchModel& sw = sit->second;
  if (cmd.vppb >= sw.vppbs.size()) {
    r.ok = false;
    r.error = "UnknownEntity: vppb " + std::to_string(cmd.vppb);
    return r;
  }
  Vppb& v = sw.vppbs[cmd.vppb];
  if (v.phys_port) {
    r.ok = false;
    r.error = "PortAlreadyBound: vppb already bound";
    return r;
  }
  if (cmd.port >= sw.ports.size()) {
    r.ok = false;
    r.error = "UnknownEntity: port " + std::to_string(cmd.port);
    return r;
  }
  const SwitchPort& port = sw.ports[cmd.port];
  if (port.dir != SwitchPort::Dir::DOWNSTREAM) {
    r.ok = false;
    r.error = "UnknownEntity: port is not a device port";
    return r;
  }
  const DeviceSpec* dev = topo_.device(port.peer);
  bool mld = dev && dev->kind == DeviceKind::MLD;
  if (mld != cmd.ld.has_value()) {
    r.ok = false;
    r.error = mld ? "UnknownEntity: MLD bind needs an LD id"
                  : "UnknownEntity: LD id given for an SLD";
    return r;
  }
  if (cmd.ld && *cmd.ld >= ld_count(port.peer)) {
    r.ok = false;
    r.error = "UnknownEntity: LD out of range";
    return r;
  }
  // a physical port binds to one vPPB unless it hosts an MLD (one per LD)
  for (const Vppb& o : sw.vppbs) {
    if (!o.phys_port || *o.phys_port != cmd.port) continue;
    if (!mld || o.ld == cmd.ld) {
      r.ok = false;
      r.error = "PortAlreadyBound: physical port in use";
      return r;
    }
  }

  v.phys_port = cmd.port;
  v.ld = cmd.ld;
  // hot-add: the owner host programs an HDM decoder window
  auto& windows = hdm_[v.owner_host];
  std::uint64_t base = kHdmBase;
  for (const auto& w : windows) base = std::max(base, w.base + w.size);
  windows.push_back({port.peer, cmd.ld, base, kDefaultWindow});

  std::ostringstream note;
  note << "hot-add host=" << v.owner_host << " vppb=" << v.id
       << " device=" << port.peer;
  if (cmd.ld) note << " ld=" << int(*cmd.ld);
  note << " hpa=0x" << std::hex << base;
  r.notifications.push_back(note.str());
  r.notifications.push_back("fm: bind complete");
  rebuild_pbr_tables();
  return r;
}

Fabric::FmResult Fabric::unbind(const FmCommand& cmd) {
  FmResult r;
  auto sit = switches_.find(cmd.switch_id);
  if (sit == switches_.end() || cmd.vppb >= sit->second.vppbs.size()) {
    r.ok = false;
    r.error = "UnknownEntity: no such vppb";
    return r;
  }
  Vppb& v = sit->second.vppbs[cmd.vppb];
  if (!v.phys_port) {
    r.ok = false;
    r.error = "UnknownEntity: vppb not bound";
    return r;
  }
  if (cmd.option != FmCommand::UnbindOption::FORCE &&
      !host_responsive_.at(v.owner_host)) {
    r.ok = false;
    r.error = "HostUncooperative: " + v.owner_host +
              " is not responding; use FORCE";
    return r;
  }
  const ComponentId dev = sit->second.ports[*v.phys_port].peer;
  auto& windows = hdm_[v.owner_host];
  windows.erase(std::remove_if(windows.begin(), windows.end(),
                               [&](const HdmWindow& w) {
                                 return w.device == dev && w.ld == v.ld;
                               }),
                windows.end());
  std::ostringstream note;
  note << "hot-remove host=" << v.owner_host << " vppb=" << v.id
       << " device=" << dev;
  r.notifications.push_back(note.str());
  v.phys_port.reset();
  v.ld.reset();
  rebuild_pbr_tables();
  return r;
}

Fabric::FmResult Fabric::set_ld(const FmCommand& cmd) {
  FmResult r;
  const DeviceSpec* dev = topo_.device(cmd.device_id);
  if (!dev) {
    r.ok = false;
    r.error = "UnknownEntity: device " + cmd.device_id;
    return r;
  }
  if (dev->kind != DeviceKind::MLD) {
    r.ok = false;
    r.error = "UnknownEntity: Set-LD applies to MLDs";
    return r;
  }
  if (cmd.range_mb.empty() || cmd.range_mb.size() > kMaxMldLds) {
    r.ok = false;
    r.error = "UnknownEntity: an MLD holds 1..16 LDs";
    return r;
  }
  for (std::uint64_t mb : cmd.range_mb) {
    if (mb == 0 || mb % cmd.granularity_mb != 0) {
      r.ok = false;
      r.error = "UnknownEntity: ranges must be multiples of the granularity";
      return r;
    }
  }
  set_ld_counts_[cmd.device_id] = static_cast<unsigned>(cmd.range_mb.size());
  r.notifications.push_back("set-ld device=" + cmd.device_id + " lds=" +
                            std::to_string(cmd.range_mb.size()));
  return r;
}

const std::vector<std::string>& Fabric::stub_cci_commands() {
  static const std::vector<std::string> cmds = {
      "IdentifySwitchDevice", "GetPhysicalPortState", "PhysicalPortControl",
      "SendPpbCxlioConfig",   "GetVirtualCxlSwitchInfo", "GetQosControl",
      "SetQosControl",        "GetQosStatus",         "GetQosBandwidthLimit",
      "SetQosBandwidthLimit", "GetLdInfo",            "GetLdAllocations",
      "SetLdAllocations",     "TunnelManagementCommand",
      "GetDomainValidationSvId", "SecondaryBusReset", "GetConnectedDevices",
      "BindVppbAsync",        "UnbindVppbAsync",
  };
  return cmds;
}

Fabric::FmResult Fabric::fm_execute(const FmCommand& cmd) {
  switch (cmd.kind) {
    case FmCommand::Kind::BIND: return bind(cmd);
    case FmCommand::Kind::UNBIND: return unbind(cmd);
    case FmCommand::Kind::SET_LD: return set_ld(cmd);
    case FmCommand::Kind::QUERY: {
      FmResult r;
      r.notifications.push_back("fabric: " + std::to_string(topo_.hosts.size()) +
                                " hosts, " + std::to_string(topo_.switches.size()) +
                                " switches, " + std::to_string(topo_.devices.size()) +
                                " devices");
      return r;
    }
    case FmCommand::Kind::OTHER: {
      FmResult r;
      const auto& stubs = stub_cci_commands();
      if (std::find(stubs.begin(), stubs.end(), cmd.other_name) ==
          stubs.end()) {
        r.ok = false;
        r.error = "UnknownEntity: unsupported CCI command " + cmd.other_name;
        return r;
      }
      r.notifications.push_back("capability: " + cmd.other_name +
                                " accepted (no-op)");
      return r;
    }
  }
  return {};
}

void Fabric::set_host_responsive(const ComponentId& host, bool responsive) {
  host_responsive_.at(host) = responsive;
}

std::optional<std::pair<ComponentId, std::optional<std::uint8_t>>>
Fabric::binding(const ComponentId& switch_id, unsigned vppb) const {
  const SwitchModel& sw = switches_.at(switch_id);
  if (vppb >= sw.vppbs.size() || !sw.vppbs[vppb].phys_port)
    return std::nullopt;
  const Vppb& v = sw.vppbs[vppb];
  return std::make_pair(sw.ports[*v.phys_port].peer, v.ld);
}

std::optional<ComponentId> Fabric::owner_of(
    const ComponentId& device, std::optional<std::uint8_t> ld) const {
  for (const auto& [_, sw] : switches_) {
    for (const Vppb& v : sw.vppbs) {
      if (!v.phys_port) continue;
      if (sw.ports[*v.phys_port].peer != device) continue;
      if (v.ld == ld || !ld) return v.owner_host;
    }
  }
  return std::nullopt;
}

const std::vector<Fabric::HdmWindow>& Fabric::hdm_windows(
    const ComponentId& host) const {
  return hdm_.at(host);
}

std::optional<Fabric::HdmWindow> Fabric::decode(const ComponentId& host,
                                                Address a) const {
  for (const auto& w : hdm_.at(host))
    if (a.hpa >= w.base && a.hpa < w.base + w.size) return w;
  return std::nullopt;
}

std::uint16_t Fabric::pid_of(const ComponentId& endpoint) const {
  return pid_.at(endpoint);
}

const ComponentId& Fabric::endpoint_of(std::uint16_t pid) const {
  return pid_rev_.at(pid);
}

void Fabric::rebuild_pbr_tables() {
  // BFS distances from every endpoint over the live graph; a switch's table
  // lists every port on a shortest path toward the endpoint
  for (auto& [sid, sw] : switches_) sw.routing.clear();
  for (const auto& [endpoint, pid] : pid_) {
    std::map<ComponentId, unsigned> dist;
    std::deque<ComponentId> q{endpoint};
    dist[endpoint] = 0;
    while (!q.empty()) {
      ComponentId cur = q.front();
      q.pop_front();
      for (const auto& n : topo_.neighbors(cur)) {
        if (dist.count(n)) continue;
        dist[n] = dist[cur] + 1;
        q.push_back(n);
      }
    }
    for (auto& [sid, sw] : switches_) {
      auto dit = dist.find(sid);
      if (dit == dist.end()) continue;
      std::vector<unsigned> ports;
      for (const SwitchPort& p : sw.ports) {
        auto pit = dist.find(p.peer);
        if (pit != dist.end() && pit->second + 1 == dit->second)
          ports.push_back(p.id);
      }
      if (!ports.empty()) sw.routing[pid] = ports;
    }
  }
}

void Fabric::fail_link(const ComponentId& a, const ComponentId& b) {
  topo_.links.erase(
      std::remove_if(topo_.links.begin(), topo_.links.end(),
                     [&](const LinkSpec& l) {
                       return (l.a == a && l.b == b) || (l.a == b && l.b == a);
                     }),
      topo_.links.end());
  // the FM reconfigures the routing tables and redistributes them
  for (auto& [sid, sw] : switches_) {
    sw.ports.clear();
    unsigned pid = 0;
    for (const auto& n : topo_.neighbors(sid)) {
      SwitchPort p;
      p.id = pid++;
      p.peer = n;
      p.dir = topo_.is_host(n) ? SwitchPort::Dir::UPSTREAM
              : topo_.is_switch(n) ? SwitchPort::Dir::ISL
                                   : SwitchPort::Dir::DOWNSTREAM;
      sw.ports.push_back(std::move(p));
    }
  }
  rebuild_pbr_tables();
}

Fabric::Route Fabric::route_hbr(const Message& msg,
                                const ComponentId& from) const {
  Route r;
  if (topo_.is_host(from)) {
    if (!msg.address) {
      r.error = "NoRoute: downstream HBR traffic routes by address";
      return r;
    }
    auto w = decode(from, *msg.address);
    if (!w) {
      r.error = "NoRoute: address not in any HDM window of " + from;
      return r;
    }
    auto path = topo_.tree_path(from, w->device);
    if (path.empty()) {
      r.error = "NoRoute: no path to " + w->device;
      return r;
    }
    r.ok = true;
    r.endpoint = w->device;
    r.ld = w->ld;  // the switch stamps the LD from the host's binding
    r.path = std::move(path);
    return r;
  }
  // upstream: to the VH owner
  auto owner = owner_of(from, msg.ld_id);
  if (!owner) {
    r.error = "NoRoute: " + from + " is not bound to any virtual hierarchy";
    return r;
  }
  auto path = topo_.tree_path(from, *owner);
  if (path.empty()) {
    r.error = "NoRoute: no path to " + *owner;
    return r;
  }
  r.ok = true;
  r.endpoint = *owner;
  r.path = std::move(path);
  return r;
}

Message Fabric::edge_translate_to_fabric(const Message& msg,
                                         const ComponentId& edge_switch,
                                         const ComponentId& src_endpoint) const {
  Message pbr = msg;
  pbr.spid = pid_of(src_endpoint);
  const SwitchModel& sw = switches_.at(edge_switch);

  if (topo_.is_host(src_endpoint)) {
    if (!msg.address) throw TopologyError("UnmappedId: no address to decode");
    if (sw.fast) {
      // Address -> PID by Fabric Address Segment Table lookup
      const FastSpec& f = *sw.fast;
      if (msg.address->hpa < f.base) throw TopologyError("NoFastSegment");
      std::uint64_t seg = (msg.address->hpa - f.base) / f.segsize;
      if (seg >= f.segment_pid.size()) throw TopologyError("NoFastSegment");
      pbr.dpid = f.segment_pid[seg];
    } else {
      auto w = decode(src_endpoint, *msg.address);
      if (!w) throw TopologyError("NoFastSegment: address unmapped");
      pbr.dpid = pid_of(w->device);
    }
    return pbr;
  }

  // upstream: LD-ID indexes the 16-deep table when present
  if (msg.ld_id) {
    auto it = sw.ldid_to_pid.find(*msg.ld_id);
    if (it == sw.ldid_to_pid.end())
      throw TopologyError("UnmappedId: LD-ID has no PID mapping");
    pbr.dpid = it->second;
    return pbr;
  }
  auto owner = owner_of(src_endpoint, std::nullopt);
  if (!owner) throw TopologyError("UnmappedId: unbound device");
  pbr.dpid = pid_of(*owner);
  return pbr;
}

Message Fabric::edge_translate_from_fabric(const Message& msg) const {
  Message inner = msg;
  inner.spid.reset();
  inner.dpid.reset();
  return inner;
}

std::uint64_t Fabric::flow_hash(const Message& msg) const {
  // flow key: protocol, channel class, line address or tag
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  ChannelName ch = channel_of(msg.opcode);
  mix(static_cast<std::uint64_t>(protocol_of(ch)));
  mix(static_cast<std::uint64_t>(ch));
  if (msg.address)
    mix(msg.address->line());
  else
    mix(msg.tag);
  return h;
}

Fabric::Route Fabric::route_pbr(const Message& msg, const ComponentId& from,
                                bool ordered_flow) const {
  Route r;
  if (!msg.dpid) {
    r.error = "NoRoute: PBR message without DPID";
    return r;
  }
  const ComponentId& target = endpoint_of(*msg.dpid);
  ComponentId cur = from;
  r.path.push_back(cur);
  std::size_t guard = topo_.hosts.size() + topo_.switches.size() +
                      topo_.devices.size() + 2;
  while (cur != target) {
    if (r.path.size() > guard) {
      r.error = "NoRoute: routing loop toward " + target;
      r.ok = false;
      return r;
    }
    auto sit = switches_.find(cur);
    if (sit == switches_.end()) {
      // endpoints forward to their single attached neighbor
      auto ns = topo_.neighbors(cur);
      if (ns.empty()) {
        r.error = "NoRoute: dead end at " + cur;
        return r;
      }
      cur = ns.front();
      r.path.push_back(cur);
      continue;
    }
    const SwitchModel& sw = sit->second;
    auto rit = sw.routing.find(*msg.dpid);
    if (rit == sw.routing.end() || rit->second.empty()) {
      r.error = "NoRoute: DPID " + std::to_string(*msg.dpid) +
                " absent from " + cur + " routing table";
      return r;
    }
    const std::vector<unsigned>& options = rit->second;
    unsigned pick;
    if (options.size() == 1) {
      pick = options[0];
    } else if (ordered_flow) {
      // ordered messages follow one deterministic path per flow key
      pick = options[flow_hash(msg) % options.size()];
    } else {
      pick = options[rng_() % options.size()];
    }
    cur = sw.ports[pick].peer;
    r.path.push_back(cur);
  }
  r.ok = true;
  r.endpoint = target;
  return r;
}

std::vector<Message> Fabric::contain_error(
    const std::vector<Message>& outstanding) {
  std::vector<Message> out;
  for (const Message& req : outstanding) {
    Message err;
    err.tag = req.tag;
    err.address = req.address;
    err.poison = true;
    err.src = req.dst;
    err.dst = req.src;
    switch (channel_of(req.opcode)) {
      case ChannelName::M2S_REQ:
        err.opcode = Opcode::MemDataNXM;
        err.has_data = true;
        err.data = DataBlock{};
        break;
      case ChannelName::M2S_RWD:
        err.opcode = Opcode::Cmp;
        break;
      case ChannelName::IO_NP:
        err.opcode = Opcode::IoCpl;
        break;
      case ChannelName::D2H_REQ:
        err.opcode = Opcode::GO;
        err.go_state = MesiState::I;
        break;
      default:
        err.opcode = Opcode::Cmp;
        break;
    }
    out.push_back(std::move(err));
  }
  return out;
}

std::optional<std::string> Fabric::check_vh_isolation() const {
  for (const auto& [host, windows] : hdm_) {
    for (const auto& w : windows) {
      Message probe;
      probe.opcode = Opcode::MemRd;
      probe.address = Address(w.base);
      Route r = route_hbr(probe, host);
      if (!r.ok) return "window of " + host + " does not route: " + r.error;
      if (r.endpoint != w.device)
        return "window of " + host + " routed to foreign endpoint " +
               r.endpoint;
      auto owner = owner_of(w.device, w.ld);
      if (!owner || *owner != host)
        return "device " + w.device + " window mapped by non-owner " + host;
    }
  }
  return std::nullopt;
}

}  // namespace cxlsim
