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

#include "cxlsim/depgraph.hpp"

#include <algorithm>
#include <functional>

namespace cxlsim {

void DependenceGraph::add_node(const std::string& name) { nodes_.insert(name); }

void DependenceGraph::add_edge(const std::string& from, const std::string& to) {
  nodes_.insert(from);
  nodes_.insert(to);
  edges_[from].insert(to);
}

bool DependenceGraph::has_edge(const std::string& from,
                               const std::string& to) const {
  auto it = edges_.find(from);
  return it != edges_.end() && it->second.count(to) > 0;
}

std::size_t DependenceGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [_, tos] : edges_) n += tos.size();
  return n;
}

ProtocolLevels levels_cxl11() { return {true, true, true, false}; }
ProtocolLevels levels_cxl20() { return {true, true, true, false}; }
ProtocolLevels levels_cxl30() { return {true, true, true, true}; }

// L1 = CXL.cache (L1-Req = D2H Req, L1-Snp = H2D Req, L1-Rsp = the
// pre-allocated H2D/D2H RSP+Data channels). L2 = host internal. L3 = CXL.mem
// (L3-Rsp = pre-allocated S2M NDR+DRS; BIRsp folds into L3-Rsp). Pre-allocated
// response groups are sinks: they always drain, so nothing they "block on".
DependenceGraph build_dependence_graph(const ProtocolLevels& config) {
  DependenceGraph g;
  if (config.cache) {
    g.add_node("L1-Req");
    g.add_node("L1-Snp");
    g.add_node("L1-Rsp");
    // a request may require a snoop to be sent and completed first
    g.add_edge("L1-Req", "L1-Snp");
    g.add_edge("L1-Req", "L1-Rsp");
    g.add_edge("L1-Snp", "L1-Rsp");
  }
  if (config.host_l2) {
    g.add_node("L2-Req");
    g.add_node("L2-Snp");
    g.add_node("L2-Rsp");
    g.add_edge("L2-Req", "L2-Snp");
    g.add_edge("L2-Req", "L2-Rsp");
    g.add_edge("L2-Snp", "L2-Rsp");
    if (config.cache) {
      // CXL.cache requests resolve through the host home agent; host snoops
      // fan out to CXL caches
      g.add_edge("L1-Req", "L2-Req");
      g.add_edge("L2-Snp", "L1-Snp");
    }
  }
  if (config.mem) {
    g.add_node("L3-Req");
    g.add_node("L3-RwD");
    g.add_node("L3-Rsp");
    g.add_edge("L3-Req", "L3-Rsp");
    g.add_edge("L3-RwD", "L3-Rsp");
    if (config.host_l2) {
      g.add_edge("L2-Req", "L3-Req");
      g.add_edge("L2-Req", "L3-RwD");
    }
  }
  if (config.bi && config.mem) {
    g.add_node("L3-BISnp");
    g.add_edge("L3-Req", "L3-BISnp");
    g.add_edge("L3-RwD", "L3-BISnp");
    g.add_edge("L3-BISnp", "L3-Rsp");
    if (config.host_l2) g.add_edge("L3-BISnp", "L2-Snp");
  }
  return g;
}

AcyclicVerdict check_acyclic(const DependenceGraph& g) {
  enum Color { WHITE, GRAY, BLACK };
  std::map<std::string, Color> color;
  std::map<std::string, std::string> parent;
  for (const auto& n : g.nodes()) color[n] = WHITE;

  AcyclicVerdict verdict;
  std::function<bool(const std::string&)> dfs = [&](const std::string& u) {
    color[u] = GRAY;
    auto it = g.edges().find(u);
    if (it != g.edges().end()) {
      for (const auto& v : it->second) {
        if (color[v] == GRAY) {
          // back edge: walk parents from u back to v
          std::vector<std::string> cyc{v};
          for (std::string w = u; w != v; w = parent[w]) cyc.push_back(w);
          cyc.push_back(v);
          std::reverse(cyc.begin() + 1, cyc.end() - 1);
          verdict.ok = false;
          verdict.cycle = cyc;
          return true;
        }
        if (color[v] == WHITE) {
          parent[v] = u;
          if (dfs(v)) return true;
        }
      }
    }
    color[u] = BLACK;
    return false;
  };

  for (const auto& n : g.nodes()) {
    if (color[n] == WHITE && dfs(n)) break;
  }
  return verdict;
}

}  // namespace cxlsim
