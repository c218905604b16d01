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

#ifndef CXLSIM_MEM_AGENT_HPP_
#define CXLSIM_MEM_AGENT_HPP_

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

enum class HdmKind : std::uint8_t { HDM_H, HDM_D, HDM_DB };
const char* to_string(HdmKind k);

struct HdmRegion {
  Address base;
  std::uint64_t size = 0;  // bytes
  HdmKind kind = HdmKind::HDM_H;
  ComponentId owner_device;

  bool contains(Address a) const {
    return a.hpa >= base.hpa && a.hpa < base.hpa + size;
  }
};

struct MemLine {
  DataBlock data{};
  std::uint8_t meta = 0;  // 2-bit value, HDM-H semantics
  bool poison = false;
};

enum class BiasState : std::uint8_t { HOST_S, HOST_A, DEVICE };
const char* to_string(BiasState b);

struct DirectoryEntry {
  MesiState state = MesiState::I;  // I, S or E only
  std::set<std::uint16_t> sharers;  // host ids, or group ids in coarse mode
};

struct OutOfRange : std::runtime_error {
  explicit OutOfRange(const std::string& w) : std::runtime_error(w) {}
};
struct HostTimeout : std::runtime_error {
  explicit HostTimeout(const std::string& w) : std::runtime_error(w) {}
};

/// Simplified device attribute record (the CDAT stand-in):
/// `DEVATTR device=<id> latency_ns=<n> bandwidth_gbs=<n> size_mb=<n>`.
struct DeviceAttributes {
  ComponentId device;
  double latency_ns = 80;
  double bandwidth_gbs = 64;
  std::uint64_t size_mb = 1024;
};
std::string format_devattr(const DeviceAttributes& a);
DeviceAttributes parse_devattr(const std::string& line);

/// Host side of hot-add: assigns the next free HPA range and programs an
/// HDM decoder entry for the device.
HdmRegion program_hdm_decoder(const DeviceAttributes& attrs,
                              std::uint64_t* next_free_hpa,
                              HdmKind kind = HdmKind::HDM_H);

// ---------------------------------------------------------------------------
// CXL.mem device: media with meta/poison, DCOH bias tracking for HDM-D,
// directory (exact or coarse host groups) with BI flows for HDM-DB.
class MemDevice {
 public:
  struct Config {
    ComponentId id;
    int device_type = 3;              // 2 or 3
    std::size_t directory_capacity = 1024;  // device snoop-filter bound
    unsigned host_group_size = 1;     // >1 = coarse-grain sharer tracking
    Opcode bi_downgrade = Opcode::BISnpInv;  // or BISnpData for reads
    double media_latency_ns = 80;     // pin-to-pin budget
  };

  explicit MemDevice(Config cfg) : cfg_(std::move(cfg)) {}

  const ComponentId& id() const { return cfg_.id; }
  int device_type() const { return cfg_.device_type; }
  double media_latency_ns() const { return cfg_.media_latency_ns; }

  void add_region(const HdmRegion& r);
  const std::vector<HdmRegion>& regions() const { return regions_; }
  const HdmRegion* region_of(Address a) const;

  /// Handles one M2S message from `host`. Emits S2M responses and, for
  /// HDM-DB conflicts, BISnp messages; when a BI round is needed the
  /// original request is parked until every BIRsp arrives.
  std::vector<Message> handle_m2s(std::uint16_t host, const Message& msg);

  /// BIRsp arrival (M2S_BIRSP). May release a parked request.
  std::vector<Message> handle_birsp(std::uint16_t host, const Message& msg);

  // --- device-side operations (Type-2) ---
  /// Starts a bias flip for an HDM-D line; returns the D2H RdOwnNoData to
  /// send through CXL.cache (empty when the bias is already DEVICE).
  std::vector<Message> bias_flip_start(Address addr);
  /// MemRdFwd observed on M2S_REQ: the host finished flipping.
  void bias_flip_complete(Address addr);

  BiasState bias(Address addr) const;
  const DirectoryEntry* directory_entry(Address addr) const;
  std::size_t directory_size() const { return directory_.size(); }
  bool has_parked_request() const { return !parked_.empty(); }

  /// Direct media access for tests and the host's error paths.
  MemLine peek(Address addr) const;
  void poke(Address addr, const MemLine& line);

  /// Type-2 device-side cache of its own HDM-D memory (what DCOH checks).
  void dev_cache_fill(Address addr, const DataBlock& data);
  bool dev_cache_holds(Address addr) const;

  std::uint16_t group_of(std::uint16_t host) const {
    return cfg_.host_group_size <= 1
               ? host
               : static_cast<std::uint16_t>(host / cfg_.host_group_size);
  }
  unsigned host_group_size() const { return cfg_.host_group_size; }

 private:
  struct BiTxn {
    Message request;          // the parked M2S request
    std::uint16_t requester;
    std::set<std::uint16_t> waiting;  // host ids owed a BIRsp
    bool evict_only = false;  // capacity eviction, no request to serve
  };

  std::vector<Message> serve(std::uint16_t host, const Message& msg);
  std::vector<Message> start_bi(std::uint64_t line,
                                const std::set<std::uint16_t>& targets,
                                Opcode kind);
  std::vector<Message> maybe_evict_for(std::uint64_t line);
  Message ndr(Opcode op, const Message& req, bool poison = false) const;
  Message drs(const Message& req, const MemLine& line,
              std::uint8_t prior_meta) const;

  Config cfg_;
  std::vector<HdmRegion> regions_;
  std::map<std::uint64_t, MemLine> media_;
  std::map<std::uint64_t, DataBlock> dev_cache_;  // Type-2 device cache
  std::map<std::uint64_t, BiasState> bias_;
  std::map<std::uint64_t, DirectoryEntry> directory_;
  std::map<std::uint64_t, std::uint64_t> dir_last_use_;
  std::uint64_t use_seq_ = 0;
  std::map<std::uint64_t, BiTxn> parked_;
  std::map<std::uint64_t, std::deque<std::pair<std::uint16_t, Message>>>
      waiting_;
  std::uint16_t next_tag_ = 1;
};

// ---------------------------------------------------------------------------
// A host's view of one HDM-DB line (the simplified per-host cache used for
// multi-host sharing). Hosts never drop a line silently: an evict emits a
// MemClnEvct so the device directory stays exact.
class HostMemPort {
 public:
  HostMemPort(ComponentId id, std::uint16_t host_id)
      : id_(std::move(id)), host_id_(host_id) {}

  const ComponentId& id() const { return id_; }
  std::uint16_t host_id() const { return host_id_; }

  Message request(Address addr, CohReq want, std::uint16_t tag);
  Message evict(Address addr, std::uint16_t tag);
  void store(Address addr, std::uint64_t token);  // E -> M locally

  /// Applies a BISnp; returns the BIRsp (plus a MemWr writeback when the
  /// line was dirty).
  std::vector<Message> handle_bisnp(const Message& snp);
  /// DRS/NDR completion for an outstanding request.
  void handle_response(const Message& rsp, CohReq want);

  MesiState state(Address addr) const;
  std::vector<std::uint64_t> cached_lines() const;

 private:
  ComponentId id_;
  std::uint16_t host_id_;
  std::map<std::uint64_t, std::pair<MesiState, DataBlock>> cache_;
};

// ---------------------------------------------------------------------------
// Wiring for N hosts sharing one HDM-DB device, message-synchronous.
// Records the full message transcript for flow tests.
class MultiHostMemSystem {
 public:
  MultiHostMemSystem(unsigned n_hosts, MemDevice::Config dev_cfg,
                     const HdmRegion& region);

  MemDevice& device() { return dev_; }
  HostMemPort& host(unsigned i) { return hosts_[i]; }
  unsigned host_count() const { return static_cast<unsigned>(hosts_.size()); }

  /// Runs one host operation to completion (including any BI round trips).
  /// Returns the messages exchanged, in order.
  std::vector<Message> acquire(unsigned host, Address addr, CohReq want);
  std::vector<Message> evict(unsigned host, Address addr);
  std::vector<Message> write(unsigned host, Address addr,
                             const DataBlock& data, bool poison = false);

  /// Directory soundness+completeness: sharers(X) equals the set of hosts
  /// actually caching X. Returns the first discrepancy.
  std::optional<std::string> check_directory() const;

 private:
  void pump(std::vector<Message> msgs, std::vector<Message>* transcript);

  MemDevice dev_;
  std::vector<HostMemPort> hosts_;
  std::uint16_t next_tag_ = 1;
  std::map<std::uint16_t, CohReq> want_by_tag_;
};

}  // namespace cxlsim

#endif  // CXLSIM_MEM_AGENT_HPP_
