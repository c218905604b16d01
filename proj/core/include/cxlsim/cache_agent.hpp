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

#ifndef CXLSIM_CACHE_AGENT_HPP_
#define CXLSIM_CACHE_AGENT_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxlsim/protocol.hpp"

namespace cxlsim {

struct AddressBusy : std::runtime_error {
  explicit AddressBusy(const std::string& w) : std::runtime_error(w) {}
};
struct IllegalStateForEvict : std::runtime_error {
  explicit IllegalStateForEvict(const std::string& w)
      : std::runtime_error(w) {}
};

/// Notable agent-internal happenings, for traces and coherence monitors.
struct AgentEvent {
  enum class Kind {
    REQ_COMPLETED,    // any D2H request finished (GO and data all in)
    READ_COMPLETED,   // READ category finished; token = data received
    STORE_APPLIED,    // a store landed (line is now M); token = new value
    MEM_COMMITTED,    // host memory updated; token = new value
    STATE_CHANGE,     // MESI transition
    SNOOP_APPLIED,    // snoop processed by the device
  };
  Kind kind;
  Address addr;
  std::uint64_t token = 0;
  MesiState old_state = MesiState::I;
  MesiState new_state = MesiState::I;
  Opcode op = Opcode::GO;
  std::uint16_t tag = 0;
};

struct AgentOutput {
  std::vector<Message> out;
  std::vector<AgentEvent> events;
};

struct DeviceCacheLineState {
  MesiState state = MesiState::I;
  DataBlock data{};
};

// ---------------------------------------------------------------------------
// Device cache controller: MESI over host memory, driven by GO messages and
// snoops. At most one outstanding request per line.
class DeviceCacheAgent {
 public:
  DeviceCacheAgent(ComponentId id, std::uint8_t cache_id)
      : id_(std::move(id)), cache_id_(cache_id) {}

  const ComponentId& id() const { return id_; }
  std::uint8_t cache_id() const { return cache_id_; }

  /// Issues a D2H request. READ0_WRITE categories take the data to push;
  /// store_token, when set, makes the request a read-for-ownership whose
  /// completion applies a store (line ends M with that value).
  Message issue(Opcode op, Address addr,
                std::optional<std::uint64_t> store_token = std::nullopt,
                std::optional<DataBlock> write_data = std::nullopt);

  bool can_issue(Opcode op, Address addr) const;

  /// Handles one delivered H2D message (snoop, GO, WritePull or data).
  AgentOutput on_h2d(const Message& msg);

  MesiState line_state(Address addr) const;
  std::optional<DataBlock> line_data(Address addr) const;
  bool has_outstanding(Address addr) const;
  std::size_t outstanding_count() const { return pending_.size(); }
  std::vector<std::uint64_t> cached_lines() const;

  /// Canonical serialization for model-checker state hashing.
  void serialize(std::string* out) const;

 private:
  struct Pending {
    Opcode op;
    ReqCategory category;
    Address addr;
    std::uint16_t tag = 0;
    bool got_go = false;
    MesiState go_state = MesiState::I;
    bool got_data = false;
    DataBlock data{};
    bool awaiting_data = false;
    bool awaiting_writepull = false;
    std::optional<std::uint64_t> store_token;
    DataBlock push_data{};   // data for write-pull flows
    bool push_dirty = false;
    bool snooped_away = false;  // a snoop took the line mid-evict
  };

  AgentOutput apply_snoop(const Message& snoop);
  void complete_read(Pending& p, AgentOutput* out);
  Message data_message(const Pending& p, bool bogus) const;

  ComponentId id_;
  std::uint8_t cache_id_;
  std::uint16_t next_tag_ = 1;
  std::map<std::uint64_t, DeviceCacheLineState> cache_;
  std::map<std::uint64_t, Pending> pending_;
};

// ---------------------------------------------------------------------------
// Host home agent: exact snoop filter over all caching devices, per-line
// request serialization (a request stalls while a snoop for its line is in
// flight), capacity eviction by back-invalidating the least recently granted
// entry.
class HostHomeAgent {
 public:
  HostHomeAgent(ComponentId id, std::size_t snoop_filter_capacity)
      : id_(std::move(id)), capacity_(snoop_filter_capacity) {}

  const ComponentId& id() const { return id_; }

  void register_device(std::uint8_t cache_id, const ComponentId& dev_id);

  void write_memory(Address addr, const DataBlock& data);
  DataBlock read_memory(Address addr) const;

  /// Handles any delivered D2H message (request, response, or data).
  AgentOutput on_d2h(const Message& msg);

  /// Host-internal invalidation of a line (a host core storing to it):
  /// snoops every holder, collects dirty data, then commits the given token
  /// to memory. Models the SnpInv entry of the model checker's alphabet.
  AgentOutput host_invalidate(Address addr,
                              std::optional<std::uint64_t> token = std::nullopt);

  /// Snoop-filter view: cache_id -> S or E (E stands for E-or-M).
  std::map<std::uint8_t, MesiState> filter_entry(Address addr) const;
  bool filter_has(Address addr) const;
  std::size_t filter_size() const { return filter_.size(); }
  std::size_t filter_capacity() const { return capacity_; }
  bool idle() const { return active_.empty() && deferred_.empty(); }

  void serialize(std::string* out) const;

 private:
  struct FilterEntry {
    std::map<std::uint8_t, MesiState> holders;  // S or E(-or-M)
    std::uint64_t last_granted = 0;
  };
  struct Txn {
    Message req;                       // original request (or internal inv)
    bool internal = false;
    std::optional<std::uint64_t> internal_token;
    std::set<std::uint16_t> snoop_tags_outstanding;
    unsigned fwd_data_expected = 0;    // counted at Fwd* snoop responses
    unsigned fwd_data_received = 0;    // data may land before its response
    bool fwd_dirty = false;
    DataBlock fwd_data{};
    bool pull_sent = false;            // WritePull / GO_WritePull emitted
    bool pull_data_received = false;

    bool snoops_done() const {
      return snoop_tags_outstanding.empty() &&
             fwd_data_received >= fwd_data_expected;
    }
  };

  void start_request(const Message& req, AgentOutput* out);
  void finish_request(Txn& txn, AgentOutput* out);
  void complete_txn(std::uint64_t line, AgentOutput* out);
  void grant(const Message& req, MesiState state, AgentOutput* out);
  Message snoop(Opcode kind, Address addr, std::uint8_t target_cache_id);
  bool need_capacity_evict(const Message& req) const;
  std::uint64_t pick_victim() const;

  ComponentId id_;
  std::size_t capacity_;
  std::uint64_t grant_seq_ = 0;
  std::uint16_t next_snoop_tag_ = 1;
  std::map<std::uint8_t, ComponentId> devices_;
  std::map<std::uint64_t, FilterEntry> filter_;
  std::map<std::uint64_t, DataBlock> memory_;
  std::map<std::uint64_t, Txn> active_;               // one txn per line
  std::map<std::uint64_t, std::deque<Message>> waiting_;  // stalled per line
  std::deque<Message> deferred_;  // waiting for a capacity eviction
  std::map<std::uint16_t, std::uint64_t> snoop_tag_line_;
  std::map<std::uint16_t, std::uint8_t> snoop_tag_dev_;
  // tokens for stalled host-internal invalidations, per line, FIFO
  std::map<std::uint64_t, std::deque<std::optional<std::uint64_t>>>
      pending_internal_tokens_;
};

// ---------------------------------------------------------------------------
// H2D delivery with the ordering rule: a snoop in H2D_REQ must push every
// earlier GO in H2D_RSP for the same cache line. Channels are otherwise
// independent and FIFO.
class H2dDelivery {
 public:
  explicit H2dDelivery(bool rule_enabled = true) : rule_(rule_enabled) {}

  void send(const Message& m);
  bool empty() const;
  std::size_t size() const;

  /// Channels whose head is deliverable right now.
  std::vector<ChannelName> deliverable() const;
  Message deliver(ChannelName ch);

  /// True when the head of H2D_REQ is a snoop held back by the rule.
  bool snoop_blocked() const;

  void serialize(std::string* out) const;

 private:
  struct Entry {
    std::uint64_t seq;
    Message msg;
  };
  bool rule_;
  std::uint64_t next_seq_ = 0;
  std::deque<Entry> req_, rsp_, data_;
};

/// Monitor over one host + its devices: single-writer/multiple-reader,
/// snoop-filter soundness, and data-value coherence via a ghost value per
/// line (updated by stores applying and memory writebacks).
class CoherenceMonitor {
 public:
  void attach(const HostHomeAgent* host) { host_ = host; }
  void attach_device(const DeviceCacheAgent* dev) { devices_.push_back(dev); }

  /// Re-points the monitor at a copied system, keeping the ghost values.
  void rebind(const HostHomeAgent* host,
              const std::vector<DeviceCacheAgent>& devices) {
    host_ = host;
    devices_.clear();
    for (const auto& d : devices) devices_.push_back(&d);
  }

  void note_committed(Address addr, std::uint64_t token);
  std::optional<std::uint64_t> committed(Address addr) const;
  std::string ghost_str() const;

  /// Consumes agent events (stores, read completions) and re-checks the
  /// invariants. Returns an explanation of the first violation found.
  std::optional<std::string> on_events(const std::vector<AgentEvent>& events);
  std::optional<std::string> check_invariants() const;

 private:
  const HostHomeAgent* host_ = nullptr;
  std::vector<const DeviceCacheAgent*> devices_;
  std::map<std::uint64_t, std::uint64_t> ghost_value_;
};

}  // namespace cxlsim

#endif  // CXLSIM_CACHE_AGENT_HPP_
