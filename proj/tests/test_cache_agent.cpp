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

#include <deque>
#include <memory>

#include "doctest.h"

using namespace cxlsim;

namespace {

const Address X(0x1000);
const Address Y(0x2000);

// Synchronous wiring of one host and a few devices. Deliveries run to
// quiescence in send order; the H2D side honors the snoop-pushes-GO rule.
struct Rig {
  HostHomeAgent host{"host", 1024};
  std::vector<std::unique_ptr<DeviceCacheAgent>> devs;
  std::vector<H2dDelivery> h2d;
  std::deque<Message> d2h;
  CoherenceMonitor monitor;

  explicit Rig(unsigned n_devices, std::size_t filter_cap = 1024)
      : host("host", filter_cap) {
    for (unsigned i = 0; i < n_devices; ++i) {
      devs.push_back(std::make_unique<DeviceCacheAgent>(
          "dev" + std::to_string(i), static_cast<std::uint8_t>(i)));
      host.register_device(static_cast<std::uint8_t>(i), devs[i]->id());
      h2d.emplace_back(true);
      monitor.attach_device(devs[i].get());
    }
    monitor.attach(&host);
  }

  void to_host(const std::vector<Message>& ms) {
    for (const auto& m : ms) d2h.push_back(m);
  }
  void to_devs(const std::vector<Message>& ms) {
    for (const auto& m : ms)
      for (unsigned i = 0; i < devs.size(); ++i)
        if (devs[i]->id() == m.dst) h2d[i].send(m);
  }

  std::optional<std::string> pump() {
    bool progress = true;
    while (progress) {
      progress = false;
      if (!d2h.empty()) {
        Message m = d2h.front();
        d2h.pop_front();
        AgentOutput out = host.on_d2h(m);
        if (auto v = monitor.on_events(out.events)) return v;
        to_devs(out.out);
        progress = true;
        continue;
      }
      for (unsigned i = 0; i < devs.size(); ++i) {
        auto chans = h2d[i].deliverable();
        if (chans.empty()) continue;
        Message m = h2d[i].deliver(chans.front());
        AgentOutput out = devs[i]->on_h2d(m);
        if (auto v = monitor.on_events(out.events)) return v;
        to_host(out.out);
        progress = true;
        break;
      }
    }
    return std::nullopt;
  }

  void issue_and_pump(unsigned dev, Opcode op, Address a,
                      std::optional<std::uint64_t> store = std::nullopt,
                      std::optional<DataBlock> wdata = std::nullopt) {
    to_host({devs[dev]->issue(op, a, store, wdata)});
    auto v = pump();
    REQUIRE_MESSAGE(!v.has_value(), v.value_or(""));
  }
};

}  // namespace

TEST_CASE("issue preconditions and pending bookkeeping") {
  DeviceCacheAgent dev("dev0", 0);

  SUBCASE("RdOwn on an I line awaits GO and data") {
    Message m = dev.issue(Opcode::RdOwn, X);
    CHECK(channel_of(m.opcode) == ChannelName::D2H_REQ);
    CHECK(dev.has_outstanding(X));
    CHECK_THROWS_AS(dev.issue(Opcode::RdCurr, X), AddressBusy);  // same line
  }
  SUBCASE("DirtyEvict needs M") {
    CHECK_THROWS_AS(dev.issue(Opcode::DirtyEvict, X), IllegalStateForEvict);
  }
  SUBCASE("CleanEvict needs E or S") {
    CHECK_THROWS_AS(dev.issue(Opcode::CleanEvict, X), IllegalStateForEvict);
  }
}

TEST_CASE("RdOwn on uncached line: GO-E plus data, in either order") {
  for (bool data_first : {false, true}) {
    DeviceCacheAgent dev("dev0", 0);
    Message req = dev.issue(Opcode::RdOwn, X);

    Message go;
    go.opcode = Opcode::GO;
    go.go_state = MesiState::E;
    go.tag = req.tag;
    go.address = X;
    Message data;
    data.opcode = Opcode::H2DData;
    data.tag = req.tag;
    data.address = X;
    data.has_data = true;
    data.data = make_data(42);

    if (data_first) {
      dev.on_h2d(data);
      CHECK(dev.line_state(X) == MesiState::I);  // not complete yet
      dev.on_h2d(go);
    } else {
      dev.on_h2d(go);
      CHECK(dev.line_state(X) == MesiState::I);
      dev.on_h2d(data);
    }
    CHECK(dev.line_state(X) == MesiState::E);
    CHECK(data_token(*dev.line_data(X)) == 42);
    CHECK(!dev.has_outstanding(X));
  }
}

TEST_CASE("host grants E on RdOwn when the line is uncached elsewhere") {
  Rig rig(2);
  rig.issue_and_pump(0, Opcode::RdOwn, X);
  CHECK(rig.devs[0]->line_state(X) == MesiState::E);
  auto entry = rig.host.filter_entry(X);
  REQUIRE(entry.count(0));
  CHECK(entry.at(0) == MesiState::E);
}

TEST_CASE("RdShared while a peer holds E: snoop first, both end Shared") {
  Rig rig(2);
  rig.issue_and_pump(0, Opcode::RdOwn, X);
  rig.issue_and_pump(1, Opcode::RdShared, X);
  CHECK(rig.devs[0]->line_state(X) == MesiState::S);
  CHECK(rig.devs[1]->line_state(X) == MesiState::S);
  auto entry = rig.host.filter_entry(X);
  CHECK(entry.at(0) == MesiState::S);
  CHECK(entry.at(1) == MesiState::S);
}

TEST_CASE("RdShared forwards dirty data from the M holder") {
  Rig rig(2);
  rig.monitor.note_committed(X, 0);
  rig.issue_and_pump(0, Opcode::RdOwn, X, /*store=*/777);
  CHECK(rig.devs[0]->line_state(X) == MesiState::M);
  rig.issue_and_pump(1, Opcode::RdShared, X);
  CHECK(data_token(*rig.devs[1]->line_data(X)) == 777);
  CHECK(data_token(rig.host.read_memory(X)) == 777);  // writeback landed
}

TEST_CASE("RdOwnNoData upgrades S to E without data") {
  Rig rig(1);
  rig.issue_and_pump(0, Opcode::RdShared, X);
  CHECK(rig.devs[0]->line_state(X) == MesiState::S);
  Message m = rig.devs[0]->issue(Opcode::RdOwnNoData, X);
  rig.to_host({m});
  REQUIRE(!rig.pump().has_value());
  CHECK(rig.devs[0]->line_state(X) == MesiState::E);
}

TEST_CASE("WrInv: WritePull, then data, then GO (Read0-Write)") {
  Rig rig(1);
  rig.host.write_memory(X, make_data(1));
  rig.monitor.note_committed(X, 1);
  rig.issue_and_pump(0, Opcode::WrInv, X, std::nullopt, make_data(55));
  CHECK(data_token(rig.host.read_memory(X)) == 55);
  CHECK(rig.devs[0]->line_state(X) == MesiState::I);  // write without caching
  CHECK(!rig.devs[0]->has_outstanding(X));
}

TEST_CASE("SnpInv on an E line: state I, RspIHitSE") {
  Rig rig(1);
  rig.issue_and_pump(0, Opcode::RdOwn, X);
  REQUIRE(rig.devs[0]->line_state(X) == MesiState::E);
  Message snp;
  snp.opcode = Opcode::SnpInv;
  snp.address = X;
  snp.tag = 99;
  AgentOutput out = rig.devs[0]->on_h2d(snp);
  REQUIRE(out.out.size() == 1);
  CHECK(out.out[0].opcode == Opcode::RspIHitSE);
  CHECK(rig.devs[0]->line_state(X) == MesiState::I);
}

TEST_CASE("SnpInv on an I line with no pending: RspIHitI") {
  DeviceCacheAgent dev("dev0", 0);
  Message snp;
  snp.opcode = Opcode::SnpInv;
  snp.address = X;
  snp.tag = 99;
  AgentOutput out = dev.on_h2d(snp);
  REQUIRE(out.out.size() == 1);
  CHECK(out.out[0].opcode == Opcode::RspIHitI);
}

TEST_CASE("evict race: snoop takes the data, WritePull data goes bogus") {
  Rig rig(1);
  rig.monitor.note_committed(X, 0);
  rig.issue_and_pump(0, Opcode::RdOwn, X, /*store=*/31);
  REQUIRE(rig.devs[0]->line_state(X) == MesiState::M);

  // DirtyEvict issued but not yet pulled
  Message evict = rig.devs[0]->issue(Opcode::DirtyEvict, X);
  CHECK(rig.devs[0]->line_state(X) == MesiState::I);

  // a snoop arrives while the evict is outstanding (Fig 7C)
  Message snp;
  snp.opcode = Opcode::SnpInv;
  snp.address = X;
  snp.tag = 77;
  AgentOutput rsp = rig.devs[0]->on_h2d(snp);
  REQUIRE(rsp.out.size() == 2);
  CHECK(rsp.out[0].opcode == Opcode::RspIFwdM);
  CHECK(rsp.out[1].opcode == Opcode::D2HData);
  CHECK(data_token(*rsp.out[1].data) == 31);  // current M data
  CHECK(!rsp.out[1].bogus);

  // the later GO_WritePull still pulls, but the data is marked bogus
  Message pull;
  pull.opcode = Opcode::GO_WritePull;
  pull.tag = evict.tag;
  pull.address = X;
  AgentOutput pulled = rig.devs[0]->on_h2d(pull);
  REQUIRE(pulled.out.size() == 1);
  CHECK(pulled.out[0].opcode == Opcode::D2HData);
  CHECK(pulled.out[0].bogus);
}

TEST_CASE("host drops bogus writepull data") {
  Rig rig(2);
  rig.monitor.note_committed(X, 0);
  rig.issue_and_pump(0, Opcode::RdOwn, X, /*store=*/500);

  // device 0 starts a DirtyEvict; while it is in flight, device 1 wants the
  // line, so the host snoops device 0 and must keep the forwarded data, not
  // the bogus evict data
  Message evict = rig.devs[0]->issue(Opcode::DirtyEvict, X);
  Message rd = rig.devs[1]->issue(Opcode::RdShared, X);
  rig.to_host({rd, evict});
  REQUIRE(!rig.pump().has_value());
  CHECK(data_token(rig.host.read_memory(X)) == 500);
  CHECK(rig.devs[1]->line_state(X) == MesiState::S);
  CHECK(data_token(*rig.devs[1]->line_data(X)) == 500);
}

TEST_CASE("H2D delivery: a snoop pushes the earlier GO for the same line") {
  H2dDelivery q(true);
  Message go;
  go.opcode = Opcode::GO;
  go.address = X;
  go.tag = 1;
  Message snp;
  snp.opcode = Opcode::SnpInv;
  snp.address = X;
  snp.tag = 2;
  q.send(go);
  q.send(snp);

  auto d = q.deliverable();
  REQUIRE(d.size() == 1);
  CHECK(d[0] == ChannelName::H2D_RSP);  // the snoop is held back
  CHECK(q.snoop_blocked());
  q.deliver(ChannelName::H2D_RSP);
  d = q.deliverable();
  REQUIRE(d.size() == 1);
  CHECK(d[0] == ChannelName::H2D_REQ);  // now the snoop may go
}

TEST_CASE("H2D delivery: different lines are unordered") {
  H2dDelivery q(true);
  Message go;
  go.opcode = Opcode::GO;
  go.address = X;
  go.tag = 1;
  Message snp;
  snp.opcode = Opcode::SnpInv;
  snp.address = Y;
  snp.tag = 2;
  q.send(go);
  q.send(snp);
  auto d = q.deliverable();
  CHECK(d.size() == 2);  // either observation order is legal
}

TEST_CASE("H2D delivery: rule disabled lets the snoop bypass") {
  H2dDelivery q(false);
  Message go;
  go.opcode = Opcode::GO;
  go.address = X;
  go.tag = 1;
  Message snp;
  snp.opcode = Opcode::SnpInv;
  snp.address = X;
  snp.tag = 2;
  q.send(go);
  q.send(snp);
  CHECK(q.deliverable().size() == 2);
  CHECK(!q.snoop_blocked());
}

TEST_CASE("Fig 7B: device sees the snoop while Invalid, request stalls") {
  Rig rig(2);
  rig.monitor.note_committed(X, 0);
  rig.issue_and_pump(0, Opcode::RdShared, X);  // dev0 holds S

  // dev1's ownership request reaches the host first and snoops dev0;
  // dev0's own upgrade for the same line stalls behind that snoop
  Message rd1 = rig.devs[1]->issue(Opcode::RdOwn, X);
  AgentOutput snoops = rig.host.on_d2h(rd1);
  REQUIRE(snoops.out.size() == 1);
  REQUIRE(is_snoop(snoops.out[0].opcode));

  Message rd0 = rig.devs[0]->issue(Opcode::RdOwn, X);
  AgentOutput stalled = rig.host.on_d2h(rd0);
  CHECK(stalled.out.empty());  // stalled until the snoop completes

  // dev0 processes the snoop before any GO for its own request arrives
  AgentOutput rsp = rig.devs[0]->on_h2d(snoops.out[0]);
  REQUIRE(!rsp.out.empty());
  CHECK(rsp.out[0].opcode == Opcode::RspIHitSE);
  CHECK(rig.devs[0]->line_state(X) == MesiState::I);

  rig.to_host(rsp.out);
  REQUIRE(!rig.pump().has_value());
  // dev1 got its grant first; dev0's stalled request then snoops dev1 back
  CHECK(rig.devs[0]->line_state(X) == MesiState::E);
  CHECK(rig.devs[1]->line_state(X) == MesiState::I);
}

TEST_CASE("requests to a line stall while its snoop is in flight") {
  Rig rig(2);
  rig.issue_and_pump(0, Opcode::RdOwn, X);

  // host starts snooping dev0 for dev1's request; dev1's second request to
  // the same line must wait for the first to finish
  Message rd1 = rig.devs[1]->issue(Opcode::RdOwn, X);
  AgentOutput snoops = rig.host.on_d2h(rd1);
  REQUIRE(snoops.out.size() == 1);
  CHECK(is_snoop(snoops.out[0].opcode));
  CHECK(!rig.host.idle());

  rig.to_devs(snoops.out);
  REQUIRE(!rig.pump().has_value());
  CHECK(rig.host.idle());
  CHECK(rig.devs[1]->line_state(X) == MesiState::E);
}

TEST_CASE("snoop filter capacity eviction back-invalidates the LRU entry") {
  Rig rig(1, /*filter_cap=*/2);
  rig.issue_and_pump(0, Opcode::RdShared, Address(0x1000));
  rig.issue_and_pump(0, Opcode::RdShared, Address(0x2000));
  CHECK(rig.host.filter_size() == 2);

  // the third grant exceeds capacity: the host first back-invalidates the
  // least recently granted line
  rig.issue_and_pump(0, Opcode::RdShared, Address(0x3000));
  CHECK(rig.host.filter_size() == 2);
  CHECK(rig.devs[0]->line_state(Address(0x1000)) == MesiState::I);
  CHECK(rig.devs[0]->line_state(Address(0x2000)) == MesiState::S);
  CHECK(rig.devs[0]->line_state(Address(0x3000)) == MesiState::S);
  CHECK(!rig.host.filter_has(Address(0x1000)));
}

TEST_CASE("clean evicts keep the filter exact (no silent eviction)") {
  Rig rig(1);
  rig.issue_and_pump(0, Opcode::RdShared, X);
  CHECK(rig.host.filter_has(X));
  Message ev = rig.devs[0]->issue(Opcode::CleanEvictNoData, X);
  rig.to_host({ev});
  REQUIRE(!rig.pump().has_value());
  CHECK(!rig.host.filter_has(X));
  CHECK(rig.devs[0]->line_state(X) == MesiState::I);
}

TEST_CASE("monitor flags a fabricated SWMR violation") {
  Rig rig(2);
  rig.issue_and_pump(0, Opcode::RdOwn, X);
  // forge a second exclusive copy behind the protocol's back
  Message go;
  go.opcode = Opcode::GO;
  go.go_state = MesiState::E;
  go.tag = rig.devs[1]->issue(Opcode::RdOwn, X).tag;
  go.address = X;
  Message data;
  data.opcode = Opcode::H2DData;
  data.tag = go.tag;
  data.address = X;
  data.has_data = true;
  data.data = make_data(0);
  rig.devs[1]->on_h2d(go);
  AgentOutput out = rig.devs[1]->on_h2d(data);
  auto verdict = rig.monitor.on_events(out.events);
  REQUIRE(verdict.has_value());
  CHECK(verdict->find("SWMR") != std::string::npos);
}
