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

#include "cxlsim/cache_agent.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace cxlsim {

namespace {

constexpr std::uint8_t kInternalRequestor = 0xFF;

bool grants_cached_state(Opcode op) {
  switch (op) {
    case Opcode::RdShared: case Opcode::RdOwn: case Opcode::RdAny:
    case Opcode::RdOwnNoData:
      return true;
    default:
      return false;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// DeviceCacheAgent

bool DeviceCacheAgent::can_issue(Opcode op, Address addr) const {
  if (pending_.count(addr.line())) return false;
  ReqCategory cat;
  try {
    cat = category_of(op);
  } catch (const UnknownOpcode&) {
    return false;
  }
  if (cat == ReqCategory::WRITE) {
    auto it = cache_.find(addr.line());
    MesiState st = it == cache_.end() ? MesiState::I : it->second.state;
    if (op == Opcode::DirtyEvict) return st == MesiState::M;
    return st == MesiState::E || st == MesiState::S;
  }
  return true;
}

Message DeviceCacheAgent::issue(Opcode op, Address addr,
                                std::optional<std::uint64_t> store_token,
                                std::optional<DataBlock> write_data) {
  const std::uint64_t line = addr.line();
  if (pending_.count(line))
    throw AddressBusy(id_ + ": outstanding request on line");
  ReqCategory cat = category_of(op);

  Pending p;
  p.op = op;
  p.category = cat;
  p.addr = Address(line);
  p.tag = next_tag_++;
  p.store_token = store_token;

  auto it = cache_.find(line);
  MesiState st = it == cache_.end() ? MesiState::I : it->second.state;

  switch (cat) {
    case ReqCategory::READ:
      p.got_go = false;
      p.awaiting_data = true;
      break;
    case ReqCategory::READ0:
      break;
    case ReqCategory::READ0_WRITE:
      p.awaiting_writepull = true;
      p.push_data = write_data.value_or(DataBlock{});
      break;
    case ReqCategory::WRITE: {
      if (op == Opcode::DirtyEvict && st != MesiState::M)
        throw IllegalStateForEvict(id_ + ": DirtyEvict needs M");
      if (op != Opcode::DirtyEvict &&
          !(st == MesiState::E || st == MesiState::S))
        throw IllegalStateForEvict(id_ + ": clean evict needs E or S");
      // the line is relinquished at issue; its data rides in the pending
      // record until the host pulls it
      p.push_data = it->second.data;
      p.push_dirty = op == Opcode::DirtyEvict;
      cache_.erase(it);
      break;
    }
  }
  pending_.emplace(line, p);

  Message m;
  m.opcode = op;
  m.address = Address(line);
  m.tag = p.tag;
  m.cache_id = cache_id_;
  m.src = id_;
  return m;
}

Message DeviceCacheAgent::data_message(const Pending& p, bool bogus) const {
  Message d;
  d.opcode = Opcode::D2HData;
  d.address = p.addr;
  d.tag = p.tag;
  d.cache_id = cache_id_;
  d.has_data = true;
  d.bogus = bogus;
  d.data = p.push_data;
  d.src = id_;
  return d;
}

void DeviceCacheAgent::complete_read(Pending& p, AgentOutput* out) {
  MesiState st = p.go_state;
  DataBlock data = p.data;
  if (p.store_token) {
    // read-for-ownership with a store to apply
    data = make_data(*p.store_token);
    st = MesiState::M;
  }
  if (st != MesiState::I) {
    cache_[p.addr.line()] = {st, data};
    out->events.push_back({AgentEvent::Kind::STATE_CHANGE, p.addr, 0,
                           MesiState::I, st, p.op, p.tag});
  }
  if (p.store_token)
    out->events.push_back({AgentEvent::Kind::STORE_APPLIED, p.addr,
                           *p.store_token, MesiState::I, MesiState::M, p.op,
                           p.tag});
  if (p.category == ReqCategory::READ)
    out->events.push_back({AgentEvent::Kind::READ_COMPLETED, p.addr,
                           data_token(p.data), MesiState::I, st, p.op, p.tag});
  out->events.push_back({AgentEvent::Kind::REQ_COMPLETED, p.addr, 0,
                         MesiState::I, st, p.op, p.tag});
}

AgentOutput DeviceCacheAgent::on_h2d(const Message& msg) {
  ChannelName ch = channel_of(msg.opcode);
  if (ch == ChannelName::H2D_REQ) return apply_snoop(msg);

  AgentOutput out;
  auto match = pending_.end();
  for (auto it = pending_.begin(); it != pending_.end(); ++it)
    if (it->second.tag == msg.tag) {
      match = it;
      break;
    }
  if (match == pending_.end()) return out;  // stale delivery, drop
  Pending& p = match->second;

  if (ch == ChannelName::H2D_DATA) {
    p.got_data = true;
    p.data = msg.data.value_or(DataBlock{});
    if (p.got_go) {
      complete_read(p, &out);
      pending_.erase(match);
    }
    return out;
  }

  switch (msg.opcode) {
    case Opcode::GO:
      p.got_go = true;
      p.go_state = msg.go_state;
      if (p.category == ReqCategory::READ) {
        if (p.got_data) {
          complete_read(p, &out);
          pending_.erase(match);
        }
      } else if (p.category == ReqCategory::READ0) {
        MesiState st = msg.go_state;
        auto cit = cache_.find(p.addr.line());
        MesiState old = cit == cache_.end() ? MesiState::I : cit->second.state;
        if (st == MesiState::I) {
          if (cit != cache_.end()) cache_.erase(cit);
        } else {
          DataBlock data =
              cit != cache_.end() ? cit->second.data : DataBlock{};
          if (p.store_token) {
            data = make_data(*p.store_token);
            st = MesiState::M;
          }
          cache_[p.addr.line()] = {st, data};
        }
        if (old != st)
          out.events.push_back({AgentEvent::Kind::STATE_CHANGE, p.addr, 0, old,
                                st, p.op, p.tag});
        if (p.store_token)
          out.events.push_back({AgentEvent::Kind::STORE_APPLIED, p.addr,
                                *p.store_token, old, MesiState::M, p.op,
                                p.tag});
        out.events.push_back({AgentEvent::Kind::REQ_COMPLETED, p.addr, 0, old,
                              st, p.op, p.tag});
        pending_.erase(match);
      } else if (p.category == ReqCategory::READ0_WRITE) {
        // GO after the pull: write globally observed
        out.events.push_back({AgentEvent::Kind::REQ_COMPLETED, p.addr, 0,
                              MesiState::I, MesiState::I, p.op, p.tag});
        pending_.erase(match);
      } else {  // WRITE with no data pull (CleanEvictNoData)
        out.events.push_back({AgentEvent::Kind::REQ_COMPLETED, p.addr, 0,
                              MesiState::I, MesiState::I, p.op, p.tag});
        pending_.erase(match);
      }
      break;

    case Opcode::WritePull:
      out.out.push_back(data_message(p, false));
      p.awaiting_writepull = false;
      break;

    case Opcode::GO_WritePull:
      out.out.push_back(data_message(p, p.snooped_away));
      out.events.push_back({AgentEvent::Kind::REQ_COMPLETED, p.addr, 0,
                            MesiState::I, MesiState::I, p.op, p.tag});
      pending_.erase(match);
      break;

    default:
      break;
  }
  return out;
}

AgentOutput DeviceCacheAgent::apply_snoop(const Message& snoop) {
  AgentOutput out;
  const std::uint64_t line = snoop.address->line();
  auto respond = [&](Opcode rsp, bool with_data, const DataBlock* data) {
    Message r;
    r.opcode = rsp;
    r.address = Address(line);
    r.tag = snoop.tag;
    r.cache_id = cache_id_;
    r.src = id_;
    out.out.push_back(r);
    if (with_data) {
      Message d;
      d.opcode = Opcode::D2HData;
      d.address = Address(line);
      d.tag = snoop.tag;
      d.cache_id = cache_id_;
      d.has_data = true;
      d.data = *data;
      d.src = id_;
      out.out.push_back(d);
    }
  };

  auto pit = pending_.find(line);
  if (pit != pending_.end() && pit->second.category == ReqCategory::WRITE &&
      !pit->second.snooped_away) {
    // Snoop racing an outstanding evict: reply with the current data; the
    // later WritePull data must then be marked bogus so the host drops it.
    Pending& p = pit->second;
    p.snooped_away = true;
    if (p.push_dirty && snoop.opcode != Opcode::SnpCur) {
      respond(Opcode::RspIFwdM, true, &p.push_data);
    } else if (snoop.opcode == Opcode::SnpCur) {
      respond(Opcode::RspVFwdV, p.push_dirty, &p.push_data);
      p.snooped_away = false;  // SnpCur leaves the eviction intact
    } else {
      respond(Opcode::RspIHitI, false, nullptr);
    }
    out.events.push_back({AgentEvent::Kind::SNOOP_APPLIED, Address(line), 0,
                          MesiState::I, MesiState::I, snoop.opcode,
                          snoop.tag});
    return out;
  }

  auto cit = cache_.find(line);
  MesiState st = cit == cache_.end() ? MesiState::I : cit->second.state;
  MesiState to = st;

  switch (snoop.opcode) {
    case Opcode::SnpInv:
      if (st == MesiState::M) {
        respond(Opcode::RspIFwdM, true, &cit->second.data);
        cache_.erase(cit);
        to = MesiState::I;
      } else if (st == MesiState::E || st == MesiState::S) {
        respond(Opcode::RspIHitSE, false, nullptr);
        cache_.erase(cit);
        to = MesiState::I;
      } else {
        respond(Opcode::RspIHitI, false, nullptr);
      }
      break;
    case Opcode::SnpData:
      if (st == MesiState::M) {
        respond(Opcode::RspSFwdM, true, &cit->second.data);
        cit->second.state = MesiState::S;
        to = MesiState::S;
      } else if (st == MesiState::E || st == MesiState::S) {
        respond(Opcode::RspSHitSE, false, nullptr);
        cit->second.state = MesiState::S;
        to = MesiState::S;
      } else {
        respond(Opcode::RspIHitI, false, nullptr);
      }
      break;
    case Opcode::SnpCur:
      if (st == MesiState::M) {
        respond(Opcode::RspVFwdV, true, &cit->second.data);
      } else if (st == MesiState::E || st == MesiState::S) {
        respond(Opcode::RspVHitV, false, nullptr);
      } else {
        respond(Opcode::RspIHitI, false, nullptr);
      }
      break;
    default:
      respond(Opcode::RspIHitI, false, nullptr);
      break;
  }
  if (st != to)
    out.events.push_back({AgentEvent::Kind::STATE_CHANGE, Address(line), 0, st,
                          to, snoop.opcode, snoop.tag});
  out.events.push_back({AgentEvent::Kind::SNOOP_APPLIED, Address(line), 0, st,
                        to, snoop.opcode, snoop.tag});
  return out;
}

MesiState DeviceCacheAgent::line_state(Address addr) const {
  auto it = cache_.find(addr.line());
  return it == cache_.end() ? MesiState::I : it->second.state;
}

std::optional<DataBlock> DeviceCacheAgent::line_data(Address addr) const {
  auto it = cache_.find(addr.line());
  if (it == cache_.end()) return std::nullopt;
  return it->second.data;
}

bool DeviceCacheAgent::has_outstanding(Address addr) const {
  return pending_.count(addr.line()) > 0;
}

std::vector<std::uint64_t> DeviceCacheAgent::cached_lines() const {
  std::vector<std::uint64_t> v;
  for (const auto& [line, _] : cache_) v.push_back(line);
  return v;
}

void DeviceCacheAgent::serialize(std::string* out) const {
  std::ostringstream os;
  os << "dev:" << id_ << "{";
  for (const auto& [line, l] : cache_)
    os << std::hex << line << "=" << to_string(l.state) << ","
       << data_token(l.data) << ";";
  os << "|";
  for (const auto& [line, p] : pending_)
    os << std::hex << line << "=" << to_string(p.op) << "," << p.got_go << ","
       << p.got_data << "," << p.snooped_away << ";";
  os << "}";
  *out += os.str();
}

// ---------------------------------------------------------------------------
// HostHomeAgent

void HostHomeAgent::register_device(std::uint8_t cache_id,
                                    const ComponentId& dev_id) {
  devices_[cache_id] = dev_id;
}

void HostHomeAgent::write_memory(Address addr, const DataBlock& data) {
  memory_[addr.line()] = data;
}

DataBlock HostHomeAgent::read_memory(Address addr) const {
  auto it = memory_.find(addr.line());
  return it == memory_.end() ? DataBlock{} : it->second;
}

Message HostHomeAgent::snoop(Opcode kind, Address addr,
                             std::uint8_t target_cache_id) {
  Message m;
  m.opcode = kind;
  m.address = addr;
  m.tag = next_snoop_tag_++;
  m.src = id_;
  m.dst = devices_.at(target_cache_id);
  snoop_tag_line_[m.tag] = addr.line();
  snoop_tag_dev_[m.tag] = target_cache_id;
  return m;
}

bool HostHomeAgent::need_capacity_evict(const Message& req) const {
  if (!req.address || !grants_cached_state(req.opcode)) return false;
  return filter_.find(req.address->line()) == filter_.end() &&
         filter_.size() >= capacity_;
}

std::uint64_t HostHomeAgent::pick_victim() const {
  std::uint64_t victim = 0;
  std::uint64_t best = ~std::uint64_t{0};
  for (const auto& [line, e] : filter_) {
    if (active_.count(line)) continue;  // busy lines are not victims
    if (e.last_granted < best) {
      best = e.last_granted;
      victim = line;
    }
  }
  return victim;
}

AgentOutput HostHomeAgent::on_d2h(const Message& msg) {
  AgentOutput out;
  ChannelName ch = channel_of(msg.opcode);

  if (ch == ChannelName::D2H_REQ) {
    if (msg.opcode == Opcode::CacheFlushed) {
      // addressless: the device has emptied its cache
      for (auto it = filter_.begin(); it != filter_.end();) {
        it->second.holders.erase(*msg.cache_id);
        it = it->second.holders.empty() ? filter_.erase(it) : std::next(it);
      }
      Message go;
      go.opcode = Opcode::GO;
      go.go_state = MesiState::I;
      go.tag = msg.tag;
      go.src = id_;
      go.dst = devices_.at(*msg.cache_id);
      out.out.push_back(go);
      return out;
    }
    start_request(msg, &out);
    return out;
  }

  if (ch == ChannelName::D2H_RSP) {
    auto lit = snoop_tag_line_.find(msg.tag);
    if (lit == snoop_tag_line_.end()) return out;
    std::uint64_t line = lit->second;
    std::uint8_t dev = snoop_tag_dev_.at(msg.tag);
    auto& txn = active_.at(line);
    txn.snoop_tags_outstanding.erase(msg.tag);
    bool forwards_data = msg.opcode == Opcode::RspIFwdM ||
                         msg.opcode == Opcode::RspSFwdM ||
                         msg.opcode == Opcode::RspVFwdV;
    if (!forwards_data) {
      // Fwd* responses keep their tag mapping alive until the data lands
      snoop_tag_line_.erase(msg.tag);
      snoop_tag_dev_.erase(msg.tag);
    }

    auto fit = filter_.find(line);
    switch (msg.opcode) {
      case Opcode::RspIHitI:
      case Opcode::RspIHitSE:
        if (fit != filter_.end()) fit->second.holders.erase(dev);
        break;
      case Opcode::RspIFwdM:
        if (fit != filter_.end()) fit->second.holders.erase(dev);
        ++txn.fwd_data_expected;
        txn.fwd_dirty = true;
        break;
      case Opcode::RspSHitSE:
        if (fit != filter_.end()) fit->second.holders[dev] = MesiState::S;
        break;
      case Opcode::RspSFwdM:
        if (fit != filter_.end()) fit->second.holders[dev] = MesiState::S;
        ++txn.fwd_data_expected;
        txn.fwd_dirty = true;
        break;
      case Opcode::RspVFwdV:
        ++txn.fwd_data_expected;
        break;
      case Opcode::RspVHitV:
      default:
        break;
    }
    if (fit != filter_.end() && fit->second.holders.empty())
      filter_.erase(fit);

    if (txn.snoops_done()) finish_request(txn, &out);
    return out;
  }

  if (ch == ChannelName::D2H_DATA) {
    auto lit = snoop_tag_line_.find(msg.tag);
    std::uint64_t line;
    bool is_snoop_fwd = false;
    if (lit != snoop_tag_line_.end()) {
      line = lit->second;
      is_snoop_fwd = true;
    } else {
      line = msg.address->line();
    }
    auto ait = active_.find(line);
    if (ait == active_.end()) return out;
    Txn& txn = ait->second;

    if (is_snoop_fwd) {
      ++txn.fwd_data_received;
      txn.fwd_data = msg.data.value_or(DataBlock{});
      snoop_tag_line_.erase(msg.tag);
      snoop_tag_dev_.erase(msg.tag);
      if (txn.snoops_done()) finish_request(txn, &out);
      return out;
    }

    // write-pull data for the active request on this line
    txn.pull_data_received = true;
    ReqCategory cat = category_of(txn.req.opcode);
    if (!msg.bogus) {
      bool commit = cat == ReqCategory::READ0_WRITE ||
                    txn.req.opcode == Opcode::DirtyEvict;
      if (commit) {
        write_memory(Address(line), msg.data.value_or(DataBlock{}));
        out.events.push_back({AgentEvent::Kind::MEM_COMMITTED, Address(line),
                              data_token(*msg.data), MesiState::I,
                              MesiState::I, msg.opcode, msg.tag});
      }
    }
    if (cat == ReqCategory::READ0_WRITE) {
      grant(txn.req, MesiState::I, &out);
      complete_txn(line, &out);
    } else {  // WRITE eviction
      auto fit = filter_.find(line);
      if (fit != filter_.end()) {
        fit->second.holders.erase(*txn.req.cache_id);
        if (fit->second.holders.empty()) filter_.erase(fit);
      }
      complete_txn(line, &out);
    }
    return out;
  }
  return out;
}

void HostHomeAgent::start_request(const Message& req, AgentOutput* out) {
  const std::uint64_t line = req.address->line();
  if (active_.count(line)) {
    waiting_[line].push_back(req);
    return;
  }
  if (need_capacity_evict(req)) {
    deferred_.push_back(req);
    std::uint64_t victim = pick_victim();
    // back-invalidate the victim entry, then retry the deferred request
    Message internal;
    internal.opcode = Opcode::SnpInv;
    internal.cache_id = kInternalRequestor;
    internal.address = Address(victim);
    internal.src = id_;
    if (!active_.count(victim)) {
      Txn txn;
      txn.req = internal;
      txn.internal = true;
      auto fit = filter_.find(victim);
      if (fit != filter_.end()) {
        for (const auto& [dev, _] : fit->second.holders) {
          Message s = snoop(Opcode::SnpInv, Address(victim), dev);
          txn.snoop_tags_outstanding.insert(s.tag);
          out->out.push_back(s);
        }
      }
      auto [it, _] = active_.emplace(victim, std::move(txn));
      if (it->second.snoop_tags_outstanding.empty())
        finish_request(it->second, out);
    }
    return;
  }

  Txn txn;
  txn.req = req;
  txn.internal = req.cache_id && *req.cache_id == kInternalRequestor;
  if (txn.internal) {
    auto tit = pending_internal_tokens_.find(line);
    if (tit != pending_internal_tokens_.end() && !tit->second.empty()) {
      txn.internal_token = tit->second.front();
      tit->second.pop_front();
      if (tit->second.empty()) pending_internal_tokens_.erase(tit);
    }
  }
  auto [it, _] = active_.emplace(line, std::move(txn));
  Txn& t = it->second;

  // which holders must be snooped, and how
  auto fit = filter_.find(line);
  if (fit != filter_.end()) {
    Opcode snp;
    bool only_em = false;
    switch (req.opcode) {
      case Opcode::RdCurr:
        snp = Opcode::SnpCur;
        only_em = true;
        break;
      case Opcode::RdShared:
      case Opcode::RdAny:
        snp = Opcode::SnpData;
        only_em = true;
        break;
      default:
        snp = Opcode::SnpInv;
        break;
    }
    for (const auto& [dev, st] : fit->second.holders) {
      if (req.cache_id && dev == *req.cache_id && !t.internal &&
          req.opcode != Opcode::CLFlush)
        continue;  // never snoop the requestor, except for flushes
      if (only_em && st != MesiState::E) continue;
      Message s = snoop(snp, Address(line), dev);
      t.snoop_tags_outstanding.insert(s.tag);
      out->out.push_back(s);
    }
  }
  if (t.snoop_tags_outstanding.empty()) finish_request(t, out);
}

void HostHomeAgent::grant(const Message& req, MesiState state,
                          AgentOutput* out) {
  Message go;
  go.opcode = Opcode::GO;
  go.go_state = state;
  go.tag = req.tag;
  go.address = req.address;
  go.src = id_;
  go.dst = devices_.at(*req.cache_id);
  out->out.push_back(go);
}

void HostHomeAgent::finish_request(Txn& txn, AgentOutput* out) {
  const Message& req = txn.req;
  const std::uint64_t line = req.address->line();

  if (txn.fwd_dirty && txn.fwd_data_received > 0) {
    // dirty data collected from the previous owner lands in memory
    write_memory(Address(line), txn.fwd_data);
    out->events.push_back({AgentEvent::Kind::MEM_COMMITTED, Address(line),
                           data_token(txn.fwd_data), MesiState::I,
                           MesiState::I, req.opcode, req.tag});
  }

  if (txn.internal) {
    if (txn.internal_token) {
      write_memory(Address(line), make_data(*txn.internal_token));
      out->events.push_back({AgentEvent::Kind::MEM_COMMITTED, Address(line),
                             *txn.internal_token, MesiState::I, MesiState::I,
                             Opcode::SnpInv, 0});
    }
    filter_.erase(line);
    complete_txn(line, out);
    return;
  }

  ReqCategory cat = category_of(req.opcode);
  switch (cat) {
    case ReqCategory::READ: {
      MesiState st;
      switch (req.opcode) {
        case Opcode::RdCurr: st = MesiState::I; break;
        case Opcode::RdShared: st = MesiState::S; break;
        case Opcode::RdOwn: st = MesiState::E; break;
        default: {  // RdAny: exclusive when alone, shared otherwise
          auto fit = filter_.find(line);
          bool others = false;
          if (fit != filter_.end())
            for (const auto& [dev, _] : fit->second.holders)
              if (dev != *req.cache_id) others = true;
          st = others ? MesiState::S : MesiState::E;
          break;
        }
      }
      if (st != MesiState::I) {
        auto& e = filter_[line];
        e.holders[*req.cache_id] =
            st == MesiState::E ? MesiState::E : MesiState::S;
        e.last_granted = ++grant_seq_;
      }
      grant(req, st, out);
      Message data;
      data.opcode = Opcode::H2DData;
      data.address = Address(line);
      data.tag = req.tag;
      data.has_data = true;
      data.data = txn.fwd_dirty ? txn.fwd_data : read_memory(Address(line));
      data.src = id_;
      data.dst = devices_.at(*req.cache_id);
      out->out.push_back(data);
      complete_txn(line, out);
      break;
    }
    case ReqCategory::READ0: {
      MesiState st = MesiState::I;
      if (req.opcode == Opcode::RdOwnNoData) {
        st = MesiState::E;
        auto& e = filter_[line];
        e.holders[*req.cache_id] = MesiState::E;
        e.last_granted = ++grant_seq_;
      }
      grant(req, st, out);
      complete_txn(line, out);
      break;
    }
    case ReqCategory::READ0_WRITE: {
      if (!txn.pull_sent) {
        Message pull;
        pull.opcode = Opcode::WritePull;
        pull.tag = req.tag;
        pull.address = Address(line);
        pull.src = id_;
        pull.dst = devices_.at(*req.cache_id);
        txn.pull_sent = true;
        out->out.push_back(pull);
      }
      // txn completes when the pulled data arrives
      break;
    }
    case ReqCategory::WRITE: {
      if (req.opcode == Opcode::CleanEvictNoData) {
        auto fit = filter_.find(line);
        if (fit != filter_.end()) {
          fit->second.holders.erase(*req.cache_id);
          if (fit->second.holders.empty()) filter_.erase(fit);
        }
        grant(req, MesiState::I, out);
        complete_txn(line, out);
      } else {
        Message pull;
        pull.opcode = Opcode::GO_WritePull;
        pull.tag = req.tag;
        pull.address = Address(line);
        pull.src = id_;
        pull.dst = devices_.at(*req.cache_id);
        txn.pull_sent = true;
        out->out.push_back(pull);
        // txn completes when the evict data arrives
      }
      break;
    }
  }
}

void HostHomeAgent::complete_txn(std::uint64_t line, AgentOutput* out) {
  active_.erase(line);

  auto wit = waiting_.find(line);
  if (wit != waiting_.end() && !wit->second.empty()) {
    Message next = wit->second.front();
    wit->second.pop_front();
    if (wit->second.empty()) waiting_.erase(wit);
    start_request(next, out);
  }
  if (!deferred_.empty() && filter_.size() < capacity_) {
    std::deque<Message> retry;
    retry.swap(deferred_);
    for (Message& m : retry) start_request(m, out);
  }
}

AgentOutput HostHomeAgent::host_invalidate(
    Address addr, std::optional<std::uint64_t> token) {
  AgentOutput out;
  Message internal;
  internal.opcode = Opcode::SnpInv;
  internal.cache_id = kInternalRequestor;
  internal.address = addr;
  internal.src = id_;
  const std::uint64_t line = addr.line();
  if (active_.count(line)) {
    waiting_[line].push_back(internal);
    // token is attached when the txn actually starts; stash it in the queue
    // by serializing it into the message tag space is fragile, so re-attach
    // via pending token map
    pending_internal_tokens_[line].push_back(token);
    return out;
  }
  Txn txn;
  txn.req = internal;
  txn.internal = true;
  txn.internal_token = token;
  auto fit = filter_.find(line);
  auto [it, _] = active_.emplace(line, std::move(txn));
  if (fit != filter_.end()) {
    for (const auto& [dev, st] : fit->second.holders) {
      Message s = snoop(Opcode::SnpInv, addr, dev);
      it->second.snoop_tags_outstanding.insert(s.tag);
      out.out.push_back(s);
    }
  }
  if (it->second.snoop_tags_outstanding.empty())
    finish_request(it->second, &out);
  return out;
}

std::map<std::uint8_t, MesiState> HostHomeAgent::filter_entry(
    Address addr) const {
  auto it = filter_.find(addr.line());
  if (it == filter_.end()) return {};
  return it->second.holders;
}

bool HostHomeAgent::filter_has(Address addr) const {
  return filter_.count(addr.line()) > 0;
}

void HostHomeAgent::serialize(std::string* out) const {
  std::ostringstream os;
  os << "host:" << id_ << "{f:";
  for (const auto& [line, e] : filter_) {
    os << std::hex << line << "=";
    for (const auto& [dev, st] : e.holders)
      os << int(dev) << to_string(st) << ".";
    os << ";";
  }
  os << "|m:";
  for (const auto& [line, d] : memory_)
    os << std::hex << line << "=" << data_token(d) << ";";
  os << "|a:";
  for (const auto& [line, t] : active_)
    os << std::hex << line << "=" << to_string(t.req.opcode) << ","
       << t.snoop_tags_outstanding.size() << "," << t.fwd_data_expected << ","
       << t.pull_sent << ";";
  os << "|w:";
  for (const auto& [line, q] : waiting_) os << std::hex << line << "=" << q.size() << ";";
  os << "}";
  *out += os.str();
}

// ---------------------------------------------------------------------------
// H2dDelivery

void H2dDelivery::send(const Message& m) {
  Entry e{next_seq_++, m};
  switch (channel_of(m.opcode)) {
    case ChannelName::H2D_REQ: req_.push_back(std::move(e)); break;
    case ChannelName::H2D_RSP: rsp_.push_back(std::move(e)); break;
    case ChannelName::H2D_DATA: data_.push_back(std::move(e)); break;
    default: break;
  }
}

bool H2dDelivery::empty() const {
  return req_.empty() && rsp_.empty() && data_.empty();
}

std::size_t H2dDelivery::size() const {
  return req_.size() + rsp_.size() + data_.size();
}

bool H2dDelivery::snoop_blocked() const {
  if (req_.empty() || !rule_) return false;
  const Entry& head = req_.front();
  if (!is_snoop(head.msg.opcode)) return false;
  for (const Entry& e : rsp_) {
    if (e.seq > head.seq) continue;
    if ((e.msg.opcode == Opcode::GO || e.msg.opcode == Opcode::GO_WritePull) &&
        e.msg.address && head.msg.address &&
        e.msg.address->line() == head.msg.address->line())
      return true;
  }
  return false;
}

std::vector<ChannelName> H2dDelivery::deliverable() const {
  std::vector<ChannelName> v;
  if (!req_.empty() && !snoop_blocked()) v.push_back(ChannelName::H2D_REQ);
  if (!rsp_.empty()) v.push_back(ChannelName::H2D_RSP);
  if (!data_.empty()) v.push_back(ChannelName::H2D_DATA);
  return v;
}

Message H2dDelivery::deliver(ChannelName ch) {
  std::deque<Entry>* q = nullptr;
  switch (ch) {
    case ChannelName::H2D_REQ: q = &req_; break;
    case ChannelName::H2D_RSP: q = &rsp_; break;
    case ChannelName::H2D_DATA: q = &data_; break;
    default: break;
  }
  Message m = q->front().msg;
  q->pop_front();
  return m;
}

void H2dDelivery::serialize(std::string* out) const {
  std::ostringstream os;
  os << "q{";
  for (const auto& e : req_) os << "R" << e.msg.str() << ";";
  for (const auto& e : rsp_) os << "P" << e.msg.str() << ";";
  for (const auto& e : data_) os << "D" << e.msg.str() << ";";
  os << "}";
  *out += os.str();
}

// ---------------------------------------------------------------------------
// CoherenceMonitor

void CoherenceMonitor::note_committed(Address addr, std::uint64_t token) {
  ghost_value_[addr.line()] = token;
}

std::optional<std::uint64_t> CoherenceMonitor::committed(Address addr) const {
  auto it = ghost_value_.find(addr.line());
  if (it == ghost_value_.end()) return std::nullopt;
  return it->second;
}

std::string CoherenceMonitor::ghost_str() const {
  std::ostringstream os;
  for (const auto& [line, v] : ghost_value_) os << std::hex << line << "=" << std::dec << v << ";";
  return os.str();
}

std::optional<std::string> CoherenceMonitor::on_events(
    const std::vector<AgentEvent>& events) {
  for (const AgentEvent& ev : events) {
    switch (ev.kind) {
      case AgentEvent::Kind::STORE_APPLIED:
      case AgentEvent::Kind::MEM_COMMITTED:
        ghost_value_[ev.addr.line()] = ev.token;
        break;
      case AgentEvent::Kind::READ_COMPLETED: {
        auto it = ghost_value_.find(ev.addr.line());
        std::uint64_t expect = it == ghost_value_.end() ? 0 : it->second;
        if (ev.token != expect) {
          std::ostringstream os;
          os << "data-value violation: read of line " << std::hex
             << ev.addr.line() << " returned " << std::dec << ev.token
             << ", committed value is " << expect;
          return os.str();
        }
        break;
      }
      default:
        break;
    }
  }
  return check_invariants();
}

std::optional<std::string> CoherenceMonitor::check_invariants() const {
  // single-writer/multiple-reader over all device caches
  std::map<std::uint64_t, std::vector<std::pair<std::string, MesiState>>> by_line;
  for (const DeviceCacheAgent* d : devices_)
    for (std::uint64_t line : d->cached_lines())
      by_line[line].push_back({d->id(), d->line_state(Address(line))});

  for (const auto& [line, holders] : by_line) {
    unsigned owners = 0, sharers = 0;
    for (const auto& [_, st] : holders) {
      if (st == MesiState::M || st == MesiState::E) ++owners;
      if (st == MesiState::S) ++sharers;
    }
    if (owners > 1 || (owners == 1 && sharers > 0)) {
      std::ostringstream os;
      os << "SWMR violation on line " << std::hex << line << ":";
      for (const auto& [id, st] : holders) os << " " << id << "=" << to_string(st);
      return os.str();
    }
    // snoop-filter soundness: cached lines must be tracked by the host
    if (host_) {
      auto entry = host_->filter_entry(Address(line));
      for (const DeviceCacheAgent* d : devices_) {
        if (d->line_state(Address(line)) != MesiState::I &&
            !entry.count(d->cache_id())) {
          std::ostringstream os;
          os << "snoop-filter unsound: " << d->id() << " caches line "
             << std::hex << line << " untracked";
          return os.str();
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace cxlsim
