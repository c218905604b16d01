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

#include "cxlsim/mem_agent.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace cxlsim {

const char* to_string(HdmKind k) {
  switch (k) {
    case HdmKind::HDM_H: return "HDM-H";
    case HdmKind::HDM_D: return "HDM-D";
    case HdmKind::HDM_DB: return "HDM-DB";
  }
  return "?";
}

const char* to_string(BiasState b) {
  switch (b) {
    case BiasState::HOST_S: return "Host-S";
    case BiasState::HOST_A: return "Host-A";
    case BiasState::DEVICE: return "Device";
  }
  return "?";
}

std::string format_devattr(const DeviceAttributes& a) {
  std::ostringstream os;
  os << "DEVATTR device=" << a.device << " latency_ns=" << a.latency_ns
     << " bandwidth_gbs=" << a.bandwidth_gbs << " size_mb=" << a.size_mb;
  return os.str();
}

DeviceAttributes parse_devattr(const std::string& line) {
  std::istringstream is(line);
  std::string word;
  is >> word;
  if (word != "DEVATTR") throw std::runtime_error("not a DEVATTR record");
  DeviceAttributes a;
  while (is >> word) {
    auto eq = word.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("malformed DEVATTR field: " + word);
    std::string key = word.substr(0, eq), val = word.substr(eq + 1);
    if (key == "device") a.device = val;
    else if (key == "latency_ns") a.latency_ns = std::stod(val);
    else if (key == "bandwidth_gbs") a.bandwidth_gbs = std::stod(val);
    else if (key == "size_mb") a.size_mb = std::stoull(val);
    else throw std::runtime_error("unknown DEVATTR field: " + key);
  }
  return a;
}

HdmRegion program_hdm_decoder(const DeviceAttributes& attrs,
                              std::uint64_t* next_free_hpa, HdmKind kind) {
  HdmRegion r;
  r.base = Address(*next_free_hpa);
  r.size = attrs.size_mb * 1024 * 1024;
  r.kind = kind;
  r.owner_device = attrs.device;
  *next_free_hpa += r.size;
  return r;
}

// ---------------------------------------------------------------------------
// MemDevice

void MemDevice::add_region(const HdmRegion& r) {
  if (r.kind == HdmKind::HDM_D && cfg_.device_type != 2)
    throw std::invalid_argument("HDM-D regions exist only on Type-2 devices");
  for (const auto& other : regions_) {
    bool disjoint = r.base.hpa + r.size <= other.base.hpa ||
                    other.base.hpa + other.size <= r.base.hpa;
    if (!disjoint)
      throw std::invalid_argument("HDM regions must be disjoint in HPA space");
  }
  regions_.push_back(r);
}

const HdmRegion* MemDevice::region_of(Address a) const {
  for (const auto& r : regions_)
    if (r.contains(a)) return &r;
  return nullptr;
}

Message MemDevice::ndr(Opcode op, const Message& req, bool poison) const {
  Message m;
  m.opcode = op;
  m.tag = req.tag;
  m.poison = poison;
  m.src = cfg_.id;
  m.dpid = req.spid;
  return m;
}

Message MemDevice::drs(const Message& req, const MemLine& line,
                       std::uint8_t prior_meta) const {
  Message m;
  m.opcode = Opcode::MemData;
  m.address = req.address;
  m.tag = req.tag;
  m.has_data = true;
  m.data = line.data;
  m.meta = prior_meta;
  m.poison = line.poison;
  m.src = cfg_.id;
  m.dpid = req.spid;
  return m;
}

std::vector<Message> MemDevice::start_bi(std::uint64_t line,
                                         const std::set<std::uint16_t>& targets,
                                         Opcode kind) {
  std::vector<Message> out;
  for (std::uint16_t h : targets) {
    Message snp;
    snp.opcode = kind;
    snp.address = Address(line);
    snp.tag = next_tag_++;
    snp.src = cfg_.id;
    snp.dpid = h;
    out.push_back(snp);
  }
  return out;
}

// hosts covered by the directory's sharer (or group) entries
static std::set<std::uint16_t> expand_sharers(const DirectoryEntry& e,
                                              unsigned group_size,
                                              unsigned n_hosts = 4096) {
  std::set<std::uint16_t> hosts;
  if (group_size <= 1) return e.sharers;
  for (std::uint16_t g : e.sharers)
    for (unsigned h = g * group_size; h < (g + 1u) * group_size && h < n_hosts;
         ++h)
      hosts.insert(static_cast<std::uint16_t>(h));
  return hosts;
}

std::vector<Message> MemDevice::maybe_evict_for(std::uint64_t line) {
  if (directory_.count(line) || directory_.size() < cfg_.directory_capacity)
    return {};
  // capacity miss: back-invalidate the least recently used victim
  std::uint64_t victim = 0, best = ~std::uint64_t{0};
  for (const auto& [l, _] : directory_) {
    if (parked_.count(l)) continue;
    auto it = dir_last_use_.find(l);
    std::uint64_t seq = it == dir_last_use_.end() ? 0 : it->second;
    if (seq < best) {
      best = seq;
      victim = l;
    }
  }
  const DirectoryEntry& e = directory_.at(victim);
  assert(!e.sharers.empty() && "directory entries always name their holders");
  BiTxn txn;
  txn.evict_only = true;
  txn.waiting = expand_sharers(e, cfg_.host_group_size);
  std::vector<Message> out = start_bi(victim, txn.waiting, Opcode::BISnpInv);
  parked_.emplace(victim, std::move(txn));
  return out;
}

std::vector<Message> MemDevice::handle_m2s(std::uint16_t host,
                                           const Message& msg) {
  if (msg.opcode == Opcode::MemRdFwd) {
    bias_flip_complete(*msg.address);
    return {};
  }

  const std::uint64_t line = msg.address ? msg.address->line() : 0;

  // dirty writeback belonging to an in-flight back-invalidation
  auto pit = parked_.find(line);
  if (pit != parked_.end() && channel_of(msg.opcode) == ChannelName::M2S_RWD &&
      pit->second.waiting.count(host)) {
    MemLine& l = media_[line];
    l.data = msg.data.value_or(DataBlock{});
    l.poison = msg.poison;
    return {};
  }
  if (pit != parked_.end()) {
    waiting_[line].push_back({host, msg});
    return {};
  }
  return serve(host, msg);
}

std::vector<Message> MemDevice::serve(std::uint16_t host, const Message& msg) {
  std::vector<Message> out;
  const HdmRegion* region = msg.address ? region_of(*msg.address) : nullptr;
  const bool is_write = channel_of(msg.opcode) == ChannelName::M2S_RWD;

  if (!region) {
    // out-of-range: error completion with poison semantics
    if (is_write) {
      out.push_back(ndr(Opcode::Cmp, msg, true));
    } else {
      Message err;
      err.opcode = Opcode::MemDataNXM;
      err.address = msg.address;
      err.tag = msg.tag;
      err.has_data = true;
      err.data = DataBlock{};
      err.poison = true;
      err.src = cfg_.id;
      err.dpid = msg.spid.value_or(host);
      out.push_back(err);
    }
    return out;
  }

  const std::uint64_t line = msg.address->line();
  std::uint16_t sharer_key = group_of(host);

  if (msg.opcode == Opcode::MemClnEvct) {
    auto dit = directory_.find(line);
    if (dit != directory_.end()) {
      dit->second.sharers.erase(sharer_key);
      if (dit->second.sharers.empty()) directory_.erase(dit);
      else if (dit->second.state == MesiState::E)
        dit->second.state = MesiState::S;
    }
    out.push_back(ndr(Opcode::Cmp, msg));
    return out;
  }

  if (is_write) {
    if (region->kind == HdmKind::HDM_DB) {
      auto dit = directory_.find(line);
      std::set<std::uint16_t> conflicts;
      if (dit != directory_.end()) {
        conflicts = expand_sharers(dit->second, cfg_.host_group_size);
        for (unsigned h = sharer_key * std::max(1u, cfg_.host_group_size);
             cfg_.host_group_size > 1 &&
             h < (sharer_key + 1u) * cfg_.host_group_size;
             ++h)
          conflicts.erase(static_cast<std::uint16_t>(h));
        if (cfg_.host_group_size <= 1) conflicts.erase(host);
      }
      if (!conflicts.empty()) {
        BiTxn txn;
        txn.request = msg;
        txn.requester = host;
        txn.waiting = conflicts;
        std::vector<Message> bi = start_bi(line, conflicts, Opcode::BISnpInv);
        parked_.emplace(line, std::move(txn));
        return bi;
      }
    }
    MemLine& l = media_[line];
    l.data = msg.data.value_or(DataBlock{});
    l.poison = msg.poison;
    out.push_back(ndr(Opcode::Cmp, msg));
    return out;
  }

  // reads (M2S_REQ MemRd and friends)
  switch (region->kind) {
    case HdmKind::HDM_H: {
      MemLine& l = media_[line];
      std::uint8_t prior = l.meta;
      if (msg.meta_update) l.meta = *msg.meta & 0x3;
      out.push_back(drs(msg, l, prior));
      if (cfg_.device_type == 2) out.push_back(ndr(Opcode::Cmp, msg));
      return out;
    }
    case HdmKind::HDM_D: {
      // DCOH checks the device cache first; on a miss data comes from media
      auto cit = dev_cache_.find(line);
      if (cit != dev_cache_.end()) {
        media_[line].data = cit->second;  // flush current copy
        dev_cache_.erase(cit);
      }
      bias_[line] =
          msg.coh_req == CohReq::E ? BiasState::HOST_A : BiasState::HOST_S;
      MemLine& l = media_[line];
      out.push_back(drs(msg, l, l.meta));
      if (cfg_.device_type == 2) out.push_back(ndr(Opcode::Cmp, msg));
      return out;
    }
    case HdmKind::HDM_DB: {
      if (std::vector<Message> evict = maybe_evict_for(line); !evict.empty()) {
        waiting_[line].push_back({host, msg});
        return evict;
      }
      auto dit = directory_.find(line);
      std::set<std::uint16_t> conflicts;
      Opcode bi_kind = cfg_.bi_downgrade;
      if (dit != directory_.end()) {
        const DirectoryEntry& e = dit->second;
        bool foreign_owner =
            e.state == MesiState::E && !e.sharers.count(sharer_key);
        if (msg.coh_req == CohReq::E) {
          conflicts = expand_sharers(e, cfg_.host_group_size);
          if (cfg_.host_group_size <= 1) conflicts.erase(host);
          bi_kind = Opcode::BISnpInv;
        } else if (foreign_owner) {
          conflicts = expand_sharers(e, cfg_.host_group_size);
        }
      }
      if (!conflicts.empty()) {
        BiTxn txn;
        txn.request = msg;
        txn.requester = host;
        txn.waiting = conflicts;
        std::vector<Message> bi = start_bi(line, conflicts, bi_kind);
        parked_.emplace(line, std::move(txn));
        return bi;
      }
      // no conflict: update the directory, then return the data
      dir_last_use_[line] = ++use_seq_;
      if (msg.coh_req == CohReq::E) {
        directory_[line] = {MesiState::E, {sharer_key}};
      } else if (msg.coh_req == CohReq::S) {
        auto& e = directory_[line];
        e.state = MesiState::S;
        e.sharers.insert(sharer_key);
      }
      MemLine& l = media_[line];
      out.push_back(drs(msg, l, l.meta));
      if (cfg_.device_type == 2) out.push_back(ndr(Opcode::Cmp, msg));
      return out;
    }
  }
  return out;
}

std::vector<Message> MemDevice::handle_birsp(std::uint16_t host,
                                             const Message& msg) {
  std::vector<Message> out;
  const std::uint64_t line = msg.address->line();
  auto pit = parked_.find(line);
  if (pit == parked_.end()) return out;
  BiTxn& txn = pit->second;
  txn.waiting.erase(host);

  // BIRspS means the host kept a shared copy
  bool kept_shared = msg.opcode == Opcode::BIRspS;
  auto dit = directory_.find(line);
  if (dit != directory_.end()) {
    std::uint16_t key = group_of(host);
    if (kept_shared) {
      dit->second.state = MesiState::S;
    } else {
      dit->second.sharers.erase(key);
      if (dit->second.sharers.empty()) directory_.erase(dit);
      else if (dit->second.state == MesiState::E)
        dit->second.state = MesiState::S;
    }
  }
  if (!txn.waiting.empty()) return out;

  // all responses in: update the directory before granting anything
  BiTxn done = std::move(txn);
  parked_.erase(pit);
  if (done.evict_only) {
    directory_.erase(line);
    dir_last_use_.erase(line);
  } else {
    std::vector<Message> served = serve(done.requester, done.request);
    out.insert(out.end(), served.begin(), served.end());
  }
  auto wit = waiting_.find(line);
  if (wit != waiting_.end()) {
    auto queue = std::move(wit->second);
    waiting_.erase(wit);
    for (auto& [h, m] : queue) {
      std::vector<Message> more = handle_m2s(h, m);
      out.insert(out.end(), more.begin(), more.end());
    }
  }
  return out;
}

std::vector<Message> MemDevice::bias_flip_start(Address addr) {
  const HdmRegion* region = region_of(addr);
  if (!region || region->kind != HdmKind::HDM_D)
    throw OutOfRange("bias flip applies to HDM-D lines only");
  if (cfg_.device_type != 2)
    throw std::logic_error("only Type-2 devices run the bias flip flow");
  if (bias(addr) == BiasState::DEVICE) return {};

  Message req;
  req.opcode = Opcode::RdOwnNoData;
  req.address = Address(addr.line());
  req.tag = next_tag_++;
  req.src = cfg_.id;
  return {req};
}

void MemDevice::bias_flip_complete(Address addr) {
  bias_[addr.line()] = BiasState::DEVICE;
}

BiasState MemDevice::bias(Address addr) const {
  auto it = bias_.find(addr.line());
  return it == bias_.end() ? BiasState::DEVICE : it->second;
}

const DirectoryEntry* MemDevice::directory_entry(Address addr) const {
  auto it = directory_.find(addr.line());
  return it == directory_.end() ? nullptr : &it->second;
}

MemLine MemDevice::peek(Address addr) const {
  auto it = media_.find(addr.line());
  return it == media_.end() ? MemLine{} : it->second;
}

void MemDevice::dev_cache_fill(Address addr, const DataBlock& data) {
  dev_cache_[addr.line()] = data;
}

bool MemDevice::dev_cache_holds(Address addr) const {
  return dev_cache_.count(addr.line()) > 0;
}

void MemDevice::poke(Address addr, const MemLine& line) {
  media_[addr.line()] = line;
}

// ---------------------------------------------------------------------------
// HostMemPort

Message HostMemPort::request(Address addr, CohReq want, std::uint16_t tag) {
  Message m;
  m.opcode = Opcode::MemRd;
  m.address = Address(addr.line());
  m.tag = tag;
  m.coh_req = want;
  m.spid = host_id_;
  m.src = id_;
  return m;
}

Message HostMemPort::evict(Address addr, std::uint16_t tag) {
  Message m;
  m.opcode = Opcode::MemClnEvct;
  m.address = Address(addr.line());
  m.tag = tag;
  m.spid = host_id_;
  m.src = id_;
  cache_.erase(addr.line());
  return m;
}

void HostMemPort::store(Address addr, std::uint64_t token) {
  auto it = cache_.find(addr.line());
  if (it == cache_.end() || it->second.first == MesiState::S)
    throw std::logic_error(id_ + ": store needs E ownership");
  it->second.first = MesiState::M;
  it->second.second = make_data(token);
}

std::vector<Message> HostMemPort::handle_bisnp(const Message& snp) {
  std::vector<Message> out;
  const std::uint64_t line = snp.address->line();
  auto it = cache_.find(line);
  MesiState st = it == cache_.end() ? MesiState::I : it->second.first;

  bool dirty = st == MesiState::M;
  bool invalidate = snp.opcode == Opcode::BISnpInv;
  if (dirty) {
    Message wb;
    wb.opcode = Opcode::MemWr;
    wb.address = Address(line);
    wb.tag = snp.tag;
    wb.has_data = true;
    wb.data = it->second.second;
    wb.spid = host_id_;
    wb.src = id_;
    out.push_back(wb);
  }
  Message rsp;
  rsp.address = Address(line);
  rsp.tag = snp.tag;
  rsp.spid = host_id_;
  rsp.src = id_;
  if (invalidate || st == MesiState::I) {
    rsp.opcode = Opcode::BIRspI;
    if (it != cache_.end()) cache_.erase(it);
  } else {
    rsp.opcode = Opcode::BIRspS;
    it->second.first = MesiState::S;
  }
  out.push_back(rsp);
  return out;
}

void HostMemPort::handle_response(const Message& rsp, CohReq want) {
  if (rsp.opcode != Opcode::MemData || want == CohReq::NONE) return;
  cache_[rsp.address->line()] = {
      want == CohReq::E ? MesiState::E : MesiState::S,
      rsp.data.value_or(DataBlock{})};
}

MesiState HostMemPort::state(Address addr) const {
  auto it = cache_.find(addr.line());
  return it == cache_.end() ? MesiState::I : it->second.first;
}

std::vector<std::uint64_t> HostMemPort::cached_lines() const {
  std::vector<std::uint64_t> v;
  for (const auto& [line, _] : cache_) v.push_back(line);
  return v;
}

// ---------------------------------------------------------------------------
// MultiHostMemSystem

MultiHostMemSystem::MultiHostMemSystem(unsigned n_hosts,
                                       MemDevice::Config dev_cfg,
                                       const HdmRegion& region)
    : dev_(std::move(dev_cfg)) {
  dev_.add_region(region);
  for (unsigned i = 0; i < n_hosts; ++i)
    hosts_.emplace_back("H" + std::to_string(i),
                        static_cast<std::uint16_t>(i));
}

void MultiHostMemSystem::pump(std::vector<Message> msgs,
                              std::vector<Message>* transcript) {
  std::deque<Message> q(msgs.begin(), msgs.end());
  while (!q.empty()) {
    Message m = q.front();
    q.pop_front();
    transcript->push_back(m);
    std::vector<Message> more;
    switch (channel_of(m.opcode)) {
      case ChannelName::M2S_REQ:
      case ChannelName::M2S_RWD:
        more = dev_.handle_m2s(m.spid.value_or(0), m);
        break;
      case ChannelName::M2S_BIRSP:
        more = dev_.handle_birsp(m.spid.value_or(0), m);
        break;
      case ChannelName::S2M_BISNP:
        more = hosts_.at(*m.dpid).handle_bisnp(m);
        break;
      case ChannelName::S2M_DRS: {
        auto wit = want_by_tag_.find(m.tag);
        hosts_.at(*m.dpid).handle_response(
            m, wit == want_by_tag_.end() ? CohReq::NONE : wit->second);
        break;
      }
      case ChannelName::S2M_NDR:
        break;
      default:
        break;
    }
    for (Message& nm : more) q.push_back(nm);
  }
}

std::vector<Message> MultiHostMemSystem::acquire(unsigned host, Address addr,
                                                 CohReq want) {
  std::vector<Message> transcript;
  std::uint16_t tag = next_tag_++;
  want_by_tag_[tag] = want;
  pump({hosts_.at(host).request(addr, want, tag)}, &transcript);
  return transcript;
}

std::vector<Message> MultiHostMemSystem::evict(unsigned host, Address addr) {
  std::vector<Message> transcript;
  MesiState st = hosts_.at(host).state(addr);
  if (st == MesiState::I) return transcript;
  std::vector<Message> msgs;
  if (st == MesiState::M) {
    Message wb;
    wb.opcode = Opcode::MemWr;
    wb.address = Address(addr.line());
    wb.tag = next_tag_++;
    wb.has_data = true;
    wb.data = make_data(0);
    wb.spid = hosts_.at(host).host_id();
    wb.src = hosts_.at(host).id();
    msgs.push_back(wb);
  }
  msgs.push_back(hosts_.at(host).evict(addr, next_tag_++));
  pump(msgs, &transcript);
  return transcript;
}

std::vector<Message> MultiHostMemSystem::write(unsigned host, Address addr,
                                               const DataBlock& data,
                                               bool poison) {
  std::vector<Message> transcript;
  Message wr;
  wr.opcode = Opcode::MemWr;
  wr.address = Address(addr.line());
  wr.tag = next_tag_++;
  wr.has_data = true;
  wr.data = data;
  wr.poison = poison;
  wr.spid = hosts_.at(host).host_id();
  wr.src = hosts_.at(host).id();
  pump({wr}, &transcript);
  return transcript;
}

std::optional<std::string> MultiHostMemSystem::check_directory() const {
  // collect actual host caching per line
  std::map<std::uint64_t, std::set<std::uint16_t>> actual;
  std::map<std::uint64_t, unsigned> exclusive;
  for (const auto& h : hosts_) {
    for (std::uint64_t line : h.cached_lines()) {
      actual[line].insert(dev_.group_of(h.host_id()));
      MesiState st = h.state(Address(line));
      if (st == MesiState::E || st == MesiState::M) ++exclusive[line];
    }
  }
  // completeness + soundness, per line, in sharer-key space
  std::set<std::uint64_t> lines;
  for (const auto& [line, _] : actual) lines.insert(line);
  for (const auto& h : hosts_)
    for (std::uint64_t line : h.cached_lines()) lines.insert(line);

  for (std::uint64_t line : lines) {
    const DirectoryEntry* e = dev_.directory_entry(Address(line));
    std::set<std::uint16_t> dir_sharers = e ? e->sharers : std::set<std::uint16_t>{};
    auto it = actual.find(line);
    std::set<std::uint16_t> real =
        it == actual.end() ? std::set<std::uint16_t>{} : it->second;
    if (dir_sharers != real) {
      std::ostringstream os;
      os << "directory mismatch on line " << std::hex << line << ": dir={";
      for (auto s : dir_sharers) os << s << ",";
      os << "} actual={";
      for (auto s : real) os << s << ",";
      os << "}";
      return os.str();
    }
    if (exclusive.count(line) && exclusive.at(line) > 1)
      return "multi-host SWMR violation (two exclusive holders)";
    if (e && e->state == MesiState::E && e->sharers.size() != 1)
      return "directory E state with sharer count != 1";
  }
  // device directory must not name lines nobody caches
  return std::nullopt;
}

}  // namespace cxlsim
