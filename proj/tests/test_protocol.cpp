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

#include "cxlsim/protocol.hpp"

#include "doctest.h"

using namespace cxlsim;

TEST_CASE("addresses key on the 64-byte line") {
  Address a(0xdeadbeef);
  CHECK(a.line() == (0xdeadbeefULL & ~63ULL));
  CHECK((a.line() & 63) == 0);
  CHECK(same_line(Address(0x1000), Address(0x103f)));
  CHECK(!same_line(Address(0x1000), Address(0x1040)));
}

TEST_CASE("classify_message is total over every opcode") {
  // every simulator-produced opcode maps to exactly one channel
  for (int op = 0; op <= static_cast<int>(Opcode::UioRdCplD); ++op) {
    Message m;
    m.opcode = static_cast<Opcode>(op);
    Classification c = classify_message(m);
    Protocol p = protocol_of(c.channel);
    if (p == Protocol::IO) {
      CHECK(c.fc.has_value());
    } else {
      CHECK(!c.fc.has_value());
    }
  }
}

TEST_CASE("CXL.io flow-control classes per Fig 5") {
  Message wr;
  wr.opcode = Opcode::IoMemWr;
  CHECK(*classify_message(wr).fc == FcClass::P);

  Message rd;
  rd.opcode = Opcode::IoMemRd;
  CHECK(*classify_message(rd).fc == FcClass::NP);

  Message cpl;
  cpl.opcode = Opcode::IoCplD;
  CHECK(*classify_message(cpl).fc == FcClass::C);
}

TEST_CASE("D2H DirtyEvict maps to the request channel with no FC class") {
  Message m;
  m.opcode = Opcode::DirtyEvict;
  Classification c = classify_message(m);
  CHECK(c.channel == ChannelName::D2H_REQ);
  CHECK(!c.fc.has_value());
}

TEST_CASE("BI channels require a CXL 3.0 protocol level") {
  Message m;
  m.opcode = Opcode::BISnpInv;
  m.address = Address(0x40);
  CHECK_THROWS_AS(classify_message(m, /*cxl3=*/false), UnknownOpcode);
  CHECK(classify_message(m, true).channel == ChannelName::S2M_BISNP);
}

TEST_CASE("the 15 D2H request opcodes split 4/3/5/3 across categories") {
  int read = 0, read0 = 0, read0_write = 0, write = 0, total = 0;
  for (int op = 0; op <= static_cast<int>(Opcode::UioRdCplD); ++op) {
    Opcode o = static_cast<Opcode>(op);
    if (channel_of(o) != ChannelName::D2H_REQ) continue;
    ++total;
    switch (category_of(o)) {
      case ReqCategory::READ: ++read; break;
      case ReqCategory::READ0: ++read0; break;
      case ReqCategory::READ0_WRITE: ++read0_write; break;
      case ReqCategory::WRITE: ++write; break;
    }
  }
  CHECK(total == 15);
  CHECK(read == 4);
  CHECK(read0 == 3);
  CHECK(read0_write == 5);
  CHECK(write == 3);
}

TEST_CASE("message invariants") {
  Message data;
  data.opcode = Opcode::D2HData;
  data.address = Address(0x40);
  SUBCASE("data channels need has_data") {
    CHECK(check_message_invariants(data).has_value());
    data.has_data = true;
    CHECK(!check_message_invariants(data).has_value());
  }
  SUBCASE("bogus only on D2H data") {
    data.has_data = true;
    data.bogus = true;
    CHECK(!check_message_invariants(data).has_value());
    Message go;
    go.opcode = Opcode::GO;
    go.bogus = true;
    CHECK(check_message_invariants(go).has_value());
  }
  SUBCASE("ld_id never appears on host links") {
    Message rd;
    rd.opcode = Opcode::MemRd;
    rd.address = Address(0x40);
    rd.ld_id = 3;
    CHECK(check_message_invariants(rd, /*on_host_link=*/true).has_value());
    CHECK(!check_message_invariants(rd, /*on_host_link=*/false).has_value());
  }
}
