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

#ifndef CXLSIM_DEPGRAPH_HPP_
#define CXLSIM_DEPGRAPH_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cxlsim {

// Protocol dependence graph: nodes are channel groups (L1 = CXL.cache,
// L2 = host internal, L3 = CXL.mem), a directed edge a -> b reads
// "a may block on b". Deadlock freedom holds iff the graph is acyclic.
class DependenceGraph {
 public:
  void add_node(const std::string& name);
  void add_edge(const std::string& from, const std::string& to);

  const std::set<std::string>& nodes() const { return nodes_; }
  const std::map<std::string, std::set<std::string>>& edges() const {
    return edges_;
  }
  bool has_edge(const std::string& from, const std::string& to) const;
  std::size_t edge_count() const;

 private:
  std::set<std::string> nodes_;
  std::map<std::string, std::set<std::string>> edges_;
};

/// Which protocol layers participate in a configuration.
struct ProtocolLevels {
  bool cache = false;    // CXL.cache (L1)
  bool host_l2 = false;  // host-internal protocol (L2)
  bool mem = false;      // CXL.mem (L3)
  bool bi = false;       // CXL 3.0 Back-Invalidate channels
};

ProtocolLevels levels_cxl11();
ProtocolLevels levels_cxl20();
ProtocolLevels levels_cxl30();

DependenceGraph build_dependence_graph(const ProtocolLevels& config);

struct AcyclicVerdict {
  bool ok = true;
  std::vector<std::string> cycle;  // closed walk, first == last, when !ok
};

AcyclicVerdict check_acyclic(const DependenceGraph& g);

}  // namespace cxlsim

#endif  // CXLSIM_DEPGRAPH_HPP_
