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

#ifndef CXLSIM_TOPOLOGY_HPP_
#define CXLSIM_TOPOLOGY_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxlsim/types.hpp"

namespace cxlsim {

enum class DeviceKind : std::uint8_t { SLD, MLD, GFD };
const char* to_string(DeviceKind k);

struct DeviceSpec {
  ComponentId id;
  int type = 3;  // 1, 2 or 3
  DeviceKind kind = DeviceKind::SLD;
  unsigned lds = 1;  // logical devices, MLD only, <= 16
};

struct LinkSpec {
  ComponentId a, b;
  unsigned width = 16;
  unsigned gts = 32;
  bool retimer = false;
};

struct FastSpec {
  ComponentId switch_id;
  std::uint64_t base = 0;
  std::uint64_t segsize = 0;            // power of two
  std::vector<std::uint16_t> segment_pid;  // segment index -> PID
};

struct TopologyError : std::runtime_error {
  explicit TopologyError(const std::string& w) : std::runtime_error(w) {}
};

struct Topology {
  std::vector<ComponentId> hosts;
  std::vector<ComponentId> switches;
  std::vector<DeviceSpec> devices;
  std::vector<LinkSpec> links;
  std::vector<FastSpec> fasts;

  bool is_host(const ComponentId& id) const;
  bool is_switch(const ComponentId& id) const;
  const DeviceSpec* device(const ComponentId& id) const;
  const LinkSpec* link_between(const ComponentId& a, const ComponentId& b) const;
  std::vector<ComponentId> neighbors(const ComponentId& id) const;

  /// Unique path between two components when the topology is a tree;
  /// empty when disconnected.
  std::vector<ComponentId> tree_path(const ComponentId& from,
                                     const ComponentId& to) const;

  /// Structural checks (entities exist, MLD <= 16 LDs, sane links).
  /// Returns problem descriptions; empty means valid.
  std::vector<std::string> validate() const;
};

// Text format, one directive per line ('#' comments):
//   HOST <id>
//   SWITCH <id>
//   DEVICE <id> type=<1|2|3> kind=<SLD|MLD|GFD> [lds=<n>]
//   LINK <a> <b> width=<lanes> gts=<32|64> [retimer]
//   FAST <switch> base=<hex> segsize=<hex> map=<pid,...>
Topology parse_topology(std::istream& in);
Topology parse_topology_file(const std::string& path);

// FM command script:
//   BIND <sw> <vppb> <port> [ld]
//   UNBIND <sw> <vppb> <WAIT|HOT_REMOVE_WAIT|FORCE>
//   SETLD <dev> <gran_mb> <ranges>       (ranges: comma list of MB sizes)
struct FmCommand {
  enum class Kind : std::uint8_t { BIND, UNBIND, SET_LD, QUERY, OTHER };
  enum class UnbindOption : std::uint8_t { WAIT, HOT_REMOVE_WAIT, FORCE };

  Kind kind = Kind::QUERY;
  ComponentId switch_id;
  unsigned vppb = 0;
  unsigned port = 0;
  std::optional<std::uint8_t> ld;  // empty for SLDs
  UnbindOption option = UnbindOption::WAIT;
  ComponentId device_id;
  std::uint64_t granularity_mb = 256;
  std::vector<std::uint64_t> range_mb;
  std::string other_name;  // one of the stubbed CCI commands
};

std::vector<FmCommand> parse_fm_script(std::istream& in);

}  // namespace cxlsim

#endif  // CXLSIM_TOPOLOGY_HPP_
