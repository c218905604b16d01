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

#ifndef CXLSIM_EXPLORE_HPP_
#define CXLSIM_EXPLORE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cxlsim/protocol.hpp"

namespace cxlsim {

// Exhaustive interleaving exploration of a small CXL.cache configuration:
// n devices, one host home agent, one cache line, a bounded request
// alphabet. Depth counts message-processing events (host steps and
// deliveries); request issues are stimuli bounded separately.
struct ExploreConfig {
  unsigned n_devices = 2;
  unsigned depth = 8;                 // processing events
  unsigned max_issues = 3;            // device requests total
  unsigned max_host_invs = 1;         // host-internal SnpInv stimuli
  std::vector<Opcode> alphabet = {Opcode::RdShared, Opcode::RdOwn,
                                  Opcode::DirtyEvict};
  bool host_inv_in_alphabet = true;   // the SnpInv entry of the alphabet
  bool go_push_rule = true;           // disable as a negative control
  std::uint64_t line = 0x1000;
  std::uint64_t state_budget = 2'000'000;
  std::size_t snoop_filter_capacity = 64;
};

struct StateSpaceBudgetExceeded : std::runtime_error {
  explicit StateSpaceBudgetExceeded(const std::string& w)
      : std::runtime_error(w) {}
};

struct ExploreReport {
  bool violation_found = false;
  std::string violation;
  std::vector<std::string> witness;  // schedule reaching the violation
  std::uint64_t states_visited = 0;
  std::uint64_t transitions_taken = 0;
  bool budget_exceeded = false;
};

ExploreReport explore(const ExploreConfig& cfg);

}  // namespace cxlsim

#endif  // CXLSIM_EXPLORE_HPP_
