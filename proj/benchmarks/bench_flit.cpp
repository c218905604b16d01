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

#include <random>

#include <benchmark/benchmark.h>

#include "cxlsim/flit.hpp"
#include "cxlsim/packer.hpp"

using namespace cxlsim;

namespace {

std::vector<Slot> random_slots(FlitMode mode, std::mt19937_64& rng) {
  std::vector<Slot> slots(usable_slots(mode));
  for (Slot& s : slots)
    for (auto& b : s.bytes) b = static_cast<std::uint8_t>(rng());
  return slots;
}

void BM_encode_flit(benchmark::State& state) {
  FlitMode mode = static_cast<FlitMode>(state.range(0));
  std::mt19937_64 rng(1);
  auto slots = random_slots(mode, rng);
  for (auto _ : state) {
    auto bytes = encode_flit(mode, {ProtoKind::CACHEMEM, false, 0}, slots);
    benchmark::DoNotOptimize(bytes);
  }
  state.SetBytesProcessed(state.iterations() * flit_bytes(mode));
}
BENCHMARK(BM_encode_flit)->Arg(0)->Arg(1)->Arg(2);

void BM_decode_flit(benchmark::State& state) {
  FlitMode mode = static_cast<FlitMode>(state.range(0));
  std::mt19937_64 rng(2);
  auto slots = random_slots(mode, rng);
  auto bytes = encode_flit(mode, {ProtoKind::CACHEMEM, false, 0}, slots);
  for (auto _ : state) {
    FlitDecode dec = decode_flit(mode, bytes);
    benchmark::DoNotOptimize(dec);
  }
  state.SetBytesProcessed(state.iterations() * flit_bytes(mode));
}
BENCHMARK(BM_decode_flit)->Arg(0)->Arg(1)->Arg(2);

void BM_packer_read_stream(benchmark::State& state) {
  FlitMode mode = static_cast<FlitMode>(state.range(0));
  SlotPacker packer(mode);
  std::uint64_t line = 0;
  for (auto _ : state) {
    while (packer.queued_messages() < 4) {
      Message m;
      m.opcode = Opcode::MemData;
      m.address = Address(line++ * kCacheLineBytes);
      m.has_data = true;
      m.data = make_data(line);
      packer.enqueue(m);
    }
    FlitPlan plan = packer.pack_next();
    benchmark::DoNotOptimize(plan);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_packer_read_stream)->Arg(0)->Arg(1)->Arg(2);

}  // namespace
