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

// Levelized, cycle-accurate simulation of a Netlist.
//
// Every net holds a 64-bit word; bit l of the word is the net's value in
// lane l, so one pass simulates 64 independent input streams. Per cycle the
// caller sets inputs, calls evaluate(), reads outputs and then clock().

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnlogic/netlist.hpp"

namespace nnlogic {

/// One raw (unsigned, LSB-first) value per bus, in bus declaration order.
using BusValues = std::vector<std::uint64_t>;

class Simulator {
 public:
  static constexpr int kLanes = 64;

  /// Throws CycleError if the netlist has a combinational loop.
  explicit Simulator(const Netlist& n);

  const Netlist& netlist() const { return n_; }

  /// All flops back to 0.
  void reset();

  void set_input_word(std::size_t bus, std::size_t bit, std::uint64_t lanes) {
    values_[n_.inputs()[bus].bits[bit]] = lanes;
  }
  /// Sets one raw bus value per lane (lanes beyond values.size() get 0).
  void set_input_lanes(std::size_t bus, std::span<const std::uint64_t> values);
  /// Same value on every lane.
  void set_input_broadcast(std::size_t bus, std::uint64_t value);

  /// Settles every cell output for the current inputs and flop state.
  void evaluate();
  /// Captures every flop D into Q, all flops at once.
  void clock();

  std::uint64_t net_word(NetId net) const { return values_[net]; }
  const std::vector<std::uint64_t>& net_words() const { return values_; }
  std::uint64_t output_word(std::size_t bus, std::size_t bit) const {
    return values_[n_.outputs()[bus].bits[bit]];
  }
  /// Raw value of an output bus in one lane.
  std::uint64_t output_value(std::size_t bus, int lane) const;

 private:
  struct Op {
    CellKind kind;
    NetId a, b, c, out;
  };

  const Netlist& n_;
  std::vector<Op> ops_;
  std::vector<std::uint64_t> values_;
  std::vector<std::uint64_t> next_q_;
};

/// Runs one stream from reset and returns the output record of every cycle.
/// Each assignment must cover every input bus. Values wider than a bus are
/// truncated to the bus width.
std::vector<BusValues> simulate(const Netlist& n, std::span<const BusValues> stream);

struct EquivOptions {
  /// b's output at cycle t is compared to a's output at t + latency_offset.
  int latency_offset = 0;
  /// Number of compared output records.
  std::size_t trials = 10000;
  /// Comparisons skipped at the start of every lane.
  std::size_t warmup = 0;
  std::uint64_t seed = 1;
};

struct Counterexample {
  int lane = 0;
  /// Cycle index in b's time base.
  std::size_t cycle = 0;
  std::string bus;
  std::uint64_t value_a = 0;
  std::uint64_t value_b = 0;
};

struct EquivResult {
  bool equivalent = true;
  std::size_t comparisons = 0;
  std::optional<Counterexample> counterexample;
};

/// Drives a and b with identical random streams and compares their outputs.
/// Throws DimensionError if the bus signatures differ.
EquivResult check_equiv(const Netlist& a, const Netlist& b, const EquivOptions& options = {});

/// Flop depth bound: the largest number of flops on any input-to-output or
/// flop-to-output path, a safe warm-up window after retiming.
std::size_t max_register_depth(const Netlist& n);

}  // namespace nnlogic
