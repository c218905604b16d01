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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cxlsim/depgraph.hpp"
#include "cxlsim/explore.hpp"
#include "cxlsim/fabric.hpp"
#include "cxlsim/io_ordering.hpp"
#include "cxlsim/perf_model.hpp"
#include "cxlsim/sim.hpp"
#include "cxlsim/topology.hpp"

namespace {

using namespace cxlsim;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CXLSIM_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      std::cerr << "warning: ignoring malformed CXLSIM_SEED\n";
    }
  }
  return 1;
}

FlitMode parse_flit(const std::string& s) {
  if (s == "68") return FlitMode::F68;
  if (s == "256") return FlitMode::F256;
  if (s == "128lo") return FlitMode::F128LO;
  throw CLI::ValidationError("--flit takes 68, 256 or 128lo");
}

int cmd_tables(const std::string& table, const std::string& flit, bool csv) {
  TableId id;
  if (table == "io-bw") id = TableId::IO_BW;
  else if (table == "mem-bw") id = TableId::MEM_BW;
  else if (table == "cache-bw") id = TableId::CACHE_BW;
  else if (table == "latency") id = TableId::LATENCY;
  else if (table == "uio-bi") id = TableId::UIO_BI;
  else {
    std::cerr << "unknown table: " << table << "\n";
    return 2;
  }
  std::cout << emit_table(id, parse_flit(flit), csv);
  return 0;
}

int cmd_simulate(const std::string& topo_path, const std::string& workload,
                 std::uint64_t seed, double horizon_us,
                 const std::string& flit, const std::string& trace_path,
                 unsigned repeat) {
  Topology topo = parse_topology_file(topo_path);
  auto problems = topo.validate();
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "topology: " << p << "\n";
    return 1;
  }
  if (topo.hosts.empty() || topo.devices.empty()) {
    std::cerr << "simulate needs at least one host and one device\n";
    return 1;
  }

  SimConfig cfg;
  cfg.link.flit_mode = parse_flit(flit);
  if (!topo.links.empty()) {
    cfg.link.lanes = topo.links.front().width;
    cfg.link.rate_gts = topo.links.front().gts;
  }
  cfg.seed = seed;
  cfg.horizon_ps = static_cast<ps_t>(horizon_us * 1e6);
  cfg.trace = !trace_path.empty();
  cfg.two_vh = topo.hosts.size() >= 2 && topo.devices.size() >= 2 &&
               !topo.switches.empty();

  WorkloadSpec w;
  w.seed = seed;
  std::istringstream ws(workload);
  std::string tok;
  while (std::getline(ws, tok, ',')) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "mix") {
      if (val == "1r0w") w.mix = TrafficMix::MEM_1R0W;
      else if (val == "1r1w") w.mix = TrafficMix::MEM_1R1W;
      else if (val == "2r1w") w.mix = TrafficMix::MEM_2R1W;
      else {
        std::cerr << "unknown mix: " << val << "\n";
        return 2;
      }
    } else if (key == "lines") {
      w.lines = std::stoull(val);
    } else if (key == "credits") {
      w.credits = static_cast<unsigned>(std::stoul(val));
    } else {
      std::cerr << "unknown workload field: " << key << "\n";
      return 2;
    }
  }

  for (unsigned r = 0; r < std::max(1u, repeat); ++r) {
    SimResult res = run_mem_sim(cfg, w);
    if (!trace_path.empty()) {
      std::ofstream out(repeat > 1
                            ? trace_path + "." + std::to_string(r)
                            : trace_path);
      for (const auto& line : res.trace) out << line << "\n";
    }
    std::cout << res.stats.csv();
    if (res.deadlock) {
      std::cerr << "deadlock: no events remain but requests are outstanding\n";
      return 1;
    }
    if (!res.conserved) {
      std::cerr << "conservation failure: requests left incomplete\n";
      return 1;
    }
  }
  return 0;
}

int cmd_check_trace(const std::string& mode, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open trace: " << path << "\n";
    return 2;
  }
  if (mode != "legacy" && mode != "uio") {
    std::cerr << "--mode takes legacy or uio\n";
    return 2;
  }
  try {
    auto trace = parse_trace(in);
    auto violations = check_producer_consumer(trace);
    for (const auto& v : violations)
      std::cout << "violation at event " << v.line << ": " << v.what << "\n";
    if (!violations.empty()) return 1;
    std::cout << "ok: no producer-consumer violations ("
              << trace.size() << " events, " << mode << " rules)\n";
    return 0;
  } catch (const MalformedTrace& e) {
    std::cerr << "malformed trace: " << e.what() << "\n";
    return 2;
  }
}

int cmd_validate(const std::string& topo_path) {
  Topology topo = parse_topology_file(topo_path);
  bool ok = true;
  for (const auto& p : topo.validate()) {
    std::cout << "FAIL structure: " << p << "\n";
    ok = false;
  }

  DependenceGraph g = build_dependence_graph(levels_cxl30());
  AcyclicVerdict verdict = check_acyclic(g);
  if (verdict.ok) {
    std::cout << "ok: protocol dependence graph acyclic ("
              << g.nodes().size() << " nodes, " << g.edge_count()
              << " edges)\n";
  } else {
    std::cout << "FAIL dependence cycle:";
    for (const auto& n : verdict.cycle) std::cout << " " << n;
    std::cout << "\n";
    ok = false;
  }

  if (ok) {
    Fabric f(topo);
    // routing completeness: every endpoint is reachable from every switch
    for (const auto& sw : topo.switches) {
      const SwitchModel& m = f.switch_model(sw);
      for (const auto& h : topo.hosts)
        if (!m.routing.count(f.pid_of(h))) {
          std::cout << "FAIL routing: " << sw << " has no route to " << h
                    << "\n";
          ok = false;
        }
      for (const auto& d : topo.devices)
        if (!m.routing.count(f.pid_of(d.id))) {
          std::cout << "FAIL routing: " << sw << " has no route to " << d.id
                    << "\n";
          ok = false;
        }
    }
    if (ok) std::cout << "ok: routing tables cover every endpoint\n";
  }
  return ok ? 0 : 1;
}

int cmd_explore(const std::string& config_path, unsigned depth,
                unsigned issues, bool no_go_push) {
  ExploreConfig cfg;
  cfg.depth = depth;
  cfg.max_issues = issues;
  cfg.go_push_rule = !no_go_push;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open explore config: " << config_path << "\n";
      return 2;
    }
    std::string key;
    while (in >> key) {
      auto eq = key.find('=');
      if (eq == std::string::npos) continue;
      std::string name = key.substr(0, eq), val = key.substr(eq + 1);
      if (name == "devices") cfg.n_devices = std::stoul(val);
      else if (name == "depth") cfg.depth = std::stoul(val);
      else if (name == "issues") cfg.max_issues = std::stoul(val);
      else if (name == "host_invs") cfg.max_host_invs = std::stoul(val);
      else if (name == "go_push") cfg.go_push_rule = val != "0";
      else if (name == "budget") cfg.state_budget = std::stoull(val);
    }
  }
  try {
    ExploreReport r = explore(cfg);
    std::cout << "states=" << r.states_visited
              << " transitions=" << r.transitions_taken << "\n";
    if (r.violation_found) {
      std::cout << "VIOLATION: " << r.violation << "\nwitness:\n";
      for (const auto& step : r.witness) std::cout << "  " << step << "\n";
      return 1;
    }
    std::cout << "ok: no SWMR or ordering violations to depth " << cfg.depth
              << "\n";
    return 0;
  } catch (const StateSpaceBudgetExceeded& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cxlsim: CXL protocol simulator and analytical model"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a workload on a topology");
  std::string topo_path, workload = "mix=1r0w,lines=10000", trace_path;
  std::string flit = "68";
  std::uint64_t seed = default_seed();
  double horizon_us = 0;
  unsigned repeat = 1;
  sim->add_option("--topology", topo_path, "topology file")->required();
  sim->add_option("--workload", workload, "mix=<1r0w|1r1w|2r1w>,lines=N[,credits=N]");
  sim->add_option("--seed", seed, "simulation seed");
  sim->add_option("--horizon-us", horizon_us, "stop after this many microseconds");
  sim->add_option("--flit", flit, "flit mode: 68, 256, 128lo");
  sim->add_option("--trace", trace_path, "write the event trace here");
  sim->add_option("--repeat", repeat, "independent repetitions");

  // tables
  auto* tab = app.add_subcommand("tables", "emit the analytical-model tables");
  std::string table;
  bool csv = false;
  std::string tab_flit = "68";
  tab->add_option("--table", table, "io-bw | mem-bw | cache-bw | latency | uio-bi")
      ->required();
  tab->add_option("--flit", tab_flit, "flit mode: 68, 256, 128lo");
  tab->add_flag("--csv", csv, "CSV instead of aligned text");

  // check-trace
  auto* chk = app.add_subcommand("check-trace", "run ordering checkers on a trace");
  std::string mode = "legacy", trace_file;
  chk->add_option("--mode", mode, "legacy | uio");
  chk->add_option("file", trace_file, "trace file")->required();

  // validate
  auto* val = app.add_subcommand("validate", "validate a topology file");
  std::string val_topo;
  val->add_option("--topology", val_topo, "topology file")->required();

  // explore
  auto* exp = app.add_subcommand("explore", "exhaustive coherence model checking");
  std::string exp_config;
  unsigned depth = 8, issues = 3;
  bool no_go_push = false;
  exp->add_option("--config", exp_config, "key=value exploration config");
  exp->add_option("--depth", depth, "processing-event depth bound");
  exp->add_option("--issues", issues, "request stimuli bound");
  exp->add_flag("--no-go-push", no_go_push, "disable the snoop-pushes-GO rule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors
  }

  try {
    if (sim->parsed())
      return cmd_simulate(topo_path, workload, seed, horizon_us, flit,
                          trace_path, repeat);
    if (tab->parsed()) return cmd_tables(table, tab_flit, csv);
    if (chk->parsed()) return cmd_check_trace(mode, trace_file);
    if (val->parsed()) return cmd_validate(val_topo);
    if (exp->parsed()) return cmd_explore(exp_config, depth, issues, no_go_push);
  } catch (const TopologyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
