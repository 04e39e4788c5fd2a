// Copyright 2026 The nnlogic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nnlogic/verify.hpp"

#include <random>
#include <string>

#include "nnlogic/error.hpp"
#include "nnlogic/simulator.hpp"

namespace nnlogic {

ReferenceResult verify_against_reference(const Netlist& n, const QuantizedMLP& model,
                                         const ReferenceOptions& options) {
  const auto features = static_cast<std::size_t>(model.input_count());
  const auto outputs = static_cast<std::size_t>(model.output_count());
  if (n.inputs().size() != features || n.outputs().size() != outputs) {
    throw DimensionError("netlist has " + std::to_string(n.inputs().size()) + " inputs and " +
                         std::to_string(n.outputs().size()) + " outputs, model expects " + std::to_string(features) +
                         " and " + std::to_string(outputs));
  }
  for (const auto* list : {&n.inputs(), &n.outputs()}) {
    for (const Bus& b : *list) {
      if (b.bits.size() != static_cast<std::size_t>(kActivationWidth)) {
        throw DimensionError("bus " + b.name + " is not " + std::to_string(kActivationWidth) + " bits wide");
      }
    }
  }
  for (const auto& v : options.vectors) {
    if (v.size() != features) throw DimensionError("test vector has the wrong number of features");
  }

  constexpr std::size_t kLanes = Simulator::kLanes;
  const int latency_i = options.latency.value_or(n.latency());
  if (latency_i < 0) throw DimensionError("negative latency");
  const auto latency = static_cast<std::size_t>(latency_i);
  const std::size_t total = options.vectors.size() + options.trials;
  const std::size_t batches = (total + kLanes - 1) / kLanes;
  const std::size_t cycles = options.warmup + batches + latency;

  Simulator sim(n);
  std::mt19937_64 rng(options.seed);
  // Inputs applied in each of the last latency+1 cycles, [lane][feature].
  std::vector<std::vector<std::int8_t>> ring((latency + 1) * kLanes, std::vector<std::int8_t>(features));
  std::vector<std::uint64_t> lane_values(kLanes);

  ReferenceResult result;
  for (std::size_t c = 0; c < cycles; ++c) {
    auto* slot = &ring[(c % (latency + 1)) * kLanes];
    const bool measured = c >= options.warmup && c - options.warmup < batches;
    for (std::size_t lane = 0; lane < kLanes; ++lane) {
      const std::size_t idx = (c - options.warmup) * kLanes + lane;
      if (measured && idx < options.vectors.size()) {
        slot[lane] = options.vectors[idx];
      } else {
        for (auto& x : slot[lane]) x = static_cast<std::int8_t>(rng() & 0xFF);
      }
    }
    for (std::size_t f = 0; f < features; ++f) {
      for (std::size_t lane = 0; lane < kLanes; ++lane) lane_values[lane] = static_cast<std::uint8_t>(slot[lane][f]);
      sim.set_input_lanes(f, lane_values);
    }
    sim.evaluate();

    if (c >= latency + options.warmup && c - latency - options.warmup < batches) {
      const std::size_t batch = c - latency - options.warmup;
      const auto* src = &ring[((c - latency) % (latency + 1)) * kLanes];
      for (std::size_t lane = 0; lane < kLanes; ++lane) {
        if (batch * kLanes + lane >= total) break;
        const auto expected = infer_reference(model, src[lane]);
        std::vector<std::int8_t> actual(outputs);
        for (std::size_t o = 0; o < outputs; ++o) {
          actual[o] = static_cast<std::int8_t>(sim.output_value(o, static_cast<int>(lane)) & 0xFF);
        }
        if (actual != expected) {
          result.equivalent = false;
          result.mismatch = ReferenceMismatch{src[lane], expected, actual};
          return result;
        }
        ++result.comparisons;
      }
    }
    sim.clock();
  }
  return result;
}

}  // namespace nnlogic
