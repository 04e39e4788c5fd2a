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

#include "nnlogic/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <random>

#include "nnlogic/error.hpp"

namespace nnlogic {

Simulator::Simulator(const Netlist& n) : n_(n), values_(n.net_count(), 0), next_q_(n.flops().size(), 0) {
  const auto order = topological_order(n);
  ops_.reserve(order.size());
  for (std::uint32_t ci : order) {
    const Cell& c = n.cell(ci);
    const int k = arity(c.kind);
    ops_.push_back({c.kind, c.inputs[0], k > 1 ? c.inputs[1] : kConst0, k > 2 ? c.inputs[2] : kConst0, c.output});
  }
  reset();
}

void Simulator::reset() {
  std::fill(values_.begin(), values_.end(), 0);
  values_[kConst1] = ~std::uint64_t{0};
}

void Simulator::set_input_lanes(std::size_t bus, std::span<const std::uint64_t> values) {
  const auto& bits = n_.inputs().at(bus).bits;
  const std::size_t lanes = std::min<std::size_t>(values.size(), kLanes);
  for (std::size_t b = 0; b < bits.size(); ++b) {
    std::uint64_t word = 0;
    for (std::size_t l = 0; l < lanes; ++l) word |= ((values[l] >> b) & 1u) << l;
    values_[bits[b]] = word;
  }
}

void Simulator::set_input_broadcast(std::size_t bus, std::uint64_t value) {
  const auto& bits = n_.inputs().at(bus).bits;
  for (std::size_t b = 0; b < bits.size(); ++b) values_[bits[b]] = ((value >> b) & 1u) ? ~std::uint64_t{0} : 0;
}

void Simulator::evaluate() {
  std::uint64_t* v = values_.data();
  for (const Op& op : ops_) v[op.out] = eval_cell(op.kind, v[op.a], v[op.b], v[op.c]);
}

void Simulator::clock() {
  const auto& flops = n_.flops();
  for (std::size_t i = 0; i < flops.size(); ++i) next_q_[i] = values_[flops[i].d];
  for (std::size_t i = 0; i < flops.size(); ++i) values_[flops[i].q] = next_q_[i];
}

std::uint64_t Simulator::output_value(std::size_t bus, int lane) const {
  const auto& bits = n_.outputs().at(bus).bits;
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < bits.size() && b < 64; ++b) v |= ((values_[bits[b]] >> lane) & 1u) << b;
  return v;
}

std::vector<BusValues> simulate(const Netlist& n, std::span<const BusValues> stream) {
  Simulator sim(n);
  std::vector<BusValues> out;
  out.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    if (stream[t].size() != n.inputs().size()) {
      throw DimensionError("cycle " + std::to_string(t) + " assigns " + std::to_string(stream[t].size()) +
                           " of " + std::to_string(n.inputs().size()) + " input buses");
    }
    for (std::size_t b = 0; b < stream[t].size(); ++b) sim.set_input_broadcast(b, stream[t][b]);
    sim.evaluate();
    BusValues rec(n.outputs().size());
    for (std::size_t b = 0; b < rec.size(); ++b) rec[b] = sim.output_value(b, 0);
    out.push_back(std::move(rec));
    sim.clock();
  }
  return out;
}

namespace {

void check_signature(const std::vector<Bus>& a, const std::vector<Bus>& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + " bus counts differ: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].bits.size() != b[i].bits.size()) {
      throw DimensionError(std::string(what) + " bus " + std::to_string(i) + " differs: " + a[i].name + "[" +
                           std::to_string(a[i].bits.size()) + "] vs " + b[i].name + "[" +
                           std::to_string(b[i].bits.size()) + "]");
    }
  }
}

}  // namespace

EquivResult check_equiv(const Netlist& a, const Netlist& b, const EquivOptions& options) {
  check_signature(a.inputs(), b.inputs(), "input");
  check_signature(a.outputs(), b.outputs(), "output");
  // Normalise so that the netlist compared later in time is `late`.
  const bool a_late = options.latency_offset >= 0;
  const Netlist& late = a_late ? a : b;
  const Netlist& early = a_late ? b : a;
  const auto offset = static_cast<std::size_t>(std::abs(options.latency_offset));

  Simulator sim_late(late);
  Simulator sim_early(early);
  const std::size_t per_lane = (options.trials + Simulator::kLanes - 1) / Simulator::kLanes;
  const std::size_t cycles = options.warmup + per_lane + offset;

  std::mt19937_64 rng(options.seed);
  std::size_t input_bits = 0;
  for (const Bus& bus : late.inputs()) input_bits += bus.bits.size();
  std::vector<std::uint64_t> words(input_bits);
  // Output records of the early netlist, kept until the late one catches up.
  std::vector<std::vector<std::uint64_t>> early_out(offset + 1);
  std::size_t output_bits = 0;
  for (const Bus& bus : late.outputs()) output_bits += bus.bits.size();

  EquivResult result;
  std::size_t remaining = options.trials;
  for (std::size_t t = 0; t < cycles; ++t) {
    for (auto& w : words) w = rng();
    std::size_t k = 0;
    for (std::size_t bus = 0; bus < late.inputs().size(); ++bus) {
      for (std::size_t bit = 0; bit < late.inputs()[bus].bits.size(); ++bit, ++k) {
        sim_late.set_input_word(bus, bit, words[k]);
        sim_early.set_input_word(bus, bit, words[k]);
      }
    }
    sim_late.evaluate();
    sim_early.evaluate();
    auto& rec = early_out[t % early_out.size()];
    rec.resize(output_bits);
    k = 0;
    for (std::size_t bus = 0; bus < early.outputs().size(); ++bus) {
      for (std::size_t bit = 0; bit < early.outputs()[bus].bits.size(); ++bit, ++k) {
        rec[k] = sim_early.output_word(bus, bit);
      }
    }
    if (t >= offset && t - offset >= options.warmup && remaining > 0) {
      const std::size_t te = t - offset;
      const auto& ref = early_out[te % early_out.size()];
      const int lanes = static_cast<int>(std::min<std::size_t>(remaining, Simulator::kLanes));
      const std::uint64_t lane_mask = lanes == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << lanes) - 1);
      std::uint64_t diff = 0;
      k = 0;
      std::size_t bad_bus = 0;
      for (std::size_t bus = 0; bus < late.outputs().size() && !diff; ++bus) {
        for (std::size_t bit = 0; bit < late.outputs()[bus].bits.size(); ++bit, ++k) {
          diff |= (sim_late.output_word(bus, bit) ^ ref[k]) & lane_mask;
        }
        bad_bus = bus;
      }
      if (diff) {
        const int lane = std::countr_zero(diff);
        // Recover the per-bus values of the failing lane.
        std::size_t base = 0;
        for (std::size_t bus = 0; bus < bad_bus; ++bus) base += late.outputs()[bus].bits.size();
        std::uint64_t v_early = 0;
        for (std::size_t bit = 0; bit < late.outputs()[bad_bus].bits.size() && bit < 64; ++bit) {
          v_early |= ((ref[base + bit] >> lane) & 1u) << bit;
        }
        const std::uint64_t v_late = sim_late.output_value(bad_bus, lane);
        Counterexample cex;
        cex.lane = lane;
        cex.cycle = a_late ? te : t;
        cex.bus = late.outputs()[bad_bus].name;
        cex.value_a = a_late ? v_late : v_early;
        cex.value_b = a_late ? v_early : v_late;
        result.equivalent = false;
        result.counterexample = cex;
        result.comparisons += static_cast<std::size_t>(lane);
        return result;
      }
      result.comparisons += static_cast<std::size_t>(lanes);
      remaining -= static_cast<std::size_t>(lanes);
    }
    sim_late.clock();
    sim_early.clock();
  }
  return result;
}

std::size_t max_register_depth(const Netlist& n) {
  const auto order = topological_order(n);
  std::vector<std::size_t> depth(n.net_count(), 0);
  const std::size_t limit = n.flops().size();
  for (std::size_t round = 0; round <= limit; ++round) {
    for (std::uint32_t ci : order) {
      const Cell& c = n.cell(ci);
      std::size_t d = 0;
      for (NetId in : c.fanin()) d = std::max(d, depth[in]);
      depth[c.output] = d;
    }
    bool changed = false;
    for (const FlipFlop& f : n.flops()) {
      if (depth[f.q] != depth[f.d] + 1) {
        depth[f.q] = depth[f.d] + 1;
        changed = true;
      }
    }
    if (!changed) break;
    if (round == limit) return limit;
  }
  std::size_t best = 0;
  for (const Bus& b : n.outputs()) {
    for (NetId bit : b.bits) best = std::max(best, depth[bit]);
  }
  return best;
}

}  // namespace nnlogic
