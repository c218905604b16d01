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

#ifndef CXLSIM_FABRIC_HPP_
#define CXLSIM_FABRIC_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cxlsim/protocol.hpp"
#include "cxlsim/topology.hpp"

namespace cxlsim {

// ---------------------------------------------------------------------------
// Per-switch state: ports, vPPB bindings, per-DPID routing, FAST.
struct SwitchPort {
  unsigned id = 0;
  ComponentId peer;
  enum class Dir : std::uint8_t { UPSTREAM, DOWNSTREAM, ISL } dir =
      Dir::DOWNSTREAM;
};

struct Vppb {
  unsigned id = 0;
  ComponentId owner_host;  // the virtual hierarchy this bridge belongs to
  std::optional<unsigned> phys_port;  // unbound when empty
  std::optional<std::uint8_t> ld;     // bound LD for MLD ports
};

struct SwitchModel {
  ComponentId id;
  std::vector<SwitchPort> ports;
  std::vector<Vppb> vppbs;
  // PBR routing: DPID -> candidate egress ports (several = multipath)
  std::map<std::uint16_t, std::vector<unsigned>> routing;
  std::optional<FastSpec> fast;
  std::map<std::uint8_t, std::uint16_t> ldid_to_pid;  // 16-deep edge table

  const SwitchPort* port_to(const ComponentId& peer) const;
};

/// Inter-switch links carry all 12 CXL channels in both directions, each
/// with its own credit pool (no cross-channel credit theft).
class IslChannelSet {
 public:
  explicit IslChannelSet(unsigned credits_per_channel = 16);
  static const std::vector<ChannelName>& channels();  // the 12 channels

  bool take_credit(ChannelName ch, bool upstream);
  void return_credit(ChannelName ch, bool upstream);
  unsigned credits(ChannelName ch, bool upstream) const;

 private:
  std::map<ChannelName, unsigned> up_, down_;
};

// ---------------------------------------------------------------------------
// DevLoad reference throttling: reduce at MODERATE/SEVERE, raise at LIGHT
// up to the nominal rate, hold at OPTIMAL.
enum class DevLoad : std::uint8_t { LIGHT, OPTIMAL, MODERATE, SEVERE };
const char* to_string(DevLoad l);

struct DevLoadController {
  double rate_per_us = 100.0;
  double nominal_per_us = 100.0;
  double reduce_severe = 0.5;
  double reduce_moderate = 0.8;
  double increase_light = 1.1;

  double update(DevLoad observed);  // returns the new injection rate
};

// ---------------------------------------------------------------------------
// The fabric: topology + FM-owned state (bindings, LD partitions, PBR
// tables), HBR and PBR routing, error containment.
class Fabric {
 public:
  struct FmResult {
    bool ok = true;
    std::string error;
    std::vector<std::string> notifications;  // hot-add etc., in order
  };

  struct Route {
    bool ok = false;
    std::string error;
    ComponentId endpoint;
    std::optional<std::uint8_t> ld;       // stamped LD-ID, MLD routes
    std::vector<ComponentId> path;        // hop components, inclusive
  };

  explicit Fabric(Topology topo, std::uint64_t seed = 1);

  const Topology& topology() const { return topo_; }
  SwitchModel& switch_model(const ComponentId& id);
  const SwitchModel& switch_model(const ComponentId& id) const;

  // --- fabric management ---
  FmResult fm_execute(const FmCommand& cmd);
  void set_host_responsive(const ComponentId& host, bool responsive);
  /// Bound (device, ld) for a vppb, if any.
  std::optional<std::pair<ComponentId, std::optional<std::uint8_t>>> binding(
      const ComponentId& switch_id, unsigned vppb) const;
  /// The host owning a device (or one of an MLD's LDs), if bound.
  std::optional<ComponentId> owner_of(const ComponentId& device,
                                      std::optional<std::uint8_t> ld) const;
  unsigned ld_count(const ComponentId& device) const;

  /// Host address decoders: hot-add assigns each bound (device, ld) an HPA
  /// window in the owner's address space.
  struct HdmWindow {
    ComponentId device;
    std::optional<std::uint8_t> ld;
    std::uint64_t base = 0;
    std::uint64_t size = 0;
  };
  const std::vector<HdmWindow>& hdm_windows(const ComponentId& host) const;
  std::optional<HdmWindow> decode(const ComponentId& host, Address a) const;

  // --- endpoint PIDs and PBR ---
  std::uint16_t pid_of(const ComponentId& endpoint) const;
  const ComponentId& endpoint_of(std::uint16_t pid) const;
  /// Builds per-switch DPID tables (all shortest paths) and edge FASTs from
  /// the owners' HDM windows. Called after binds change or links fail.
  void rebuild_pbr_tables();
  void fail_link(const ComponentId& a, const ComponentId& b);

  // --- routing ---
  /// Hierarchical (tree) routing inside a virtual hierarchy. Downstream
  /// traffic decodes the address against the source host's HDM windows and
  /// stamps the LD-ID at the switch; upstream traffic routes to the VH owner.
  Route route_hbr(const Message& msg, const ComponentId& from) const;

  /// PBR edge translation: to-fabric derives the DPID (FAST for addresses,
  /// the 16-deep table for LD-IDs), stateless; from-fabric strips PIDs.
  Message edge_translate_to_fabric(const Message& msg,
                                   const ComponentId& edge_switch,
                                   const ComponentId& src_endpoint) const;
  Message edge_translate_from_fabric(const Message& msg) const;

  /// DPID table routing. Ordered flows pin one path via the flow key
  /// (protocol, channel class, line or tag); unordered traffic spreads over
  /// the candidates deterministically under the seed.
  Route route_pbr(const Message& msg, const ComponentId& from,
                  bool ordered_flow) const;

  /// Synthesized error completions for outstanding requests to a dead
  /// endpoint (error containment keeps the VH alive past a host timeout).
  static std::vector<Message> contain_error(
      const std::vector<Message>& outstanding);

  /// Checks every bound route stays inside one virtual hierarchy.
  std::optional<std::string> check_vh_isolation() const;

  static const std::vector<std::string>& stub_cci_commands();  // the other 19

 private:
  FmResult bind(const FmCommand& cmd);
  FmResult unbind(const FmCommand& cmd);
  FmResult set_ld(const FmCommand& cmd);
  std::uint64_t flow_hash(const Message& msg) const;

  Topology topo_;
  std::uint64_t seed_;
  std::map<ComponentId, SwitchModel> switches_;
  std::map<ComponentId, bool> host_responsive_;
  std::map<ComponentId, unsigned> set_ld_counts_;  // device -> LDs via Set-LD
  std::map<ComponentId, std::vector<HdmWindow>> hdm_;
  std::map<ComponentId, std::uint16_t> pid_;
  std::vector<ComponentId> pid_rev_;
  mutable std::mt19937_64 rng_;
};

}  // namespace cxlsim

#endif  // CXLSIM_FABRIC_HPP_
