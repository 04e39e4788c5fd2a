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

// Gate-level sequential netlist.
//
// Nets are dense integer ids. Net 0 and net 1 are the constants and exist in
// every netlist. Each net has exactly one driver: a constant, a primary input
// bit, a cell output or a flip-flop Q. Buses are LSB-first lists of nets and
// carry two's-complement values wherever arithmetic is involved.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nnlogic {

using NetId = std::uint32_t;

inline constexpr NetId kConst0 = 0;
inline constexpr NetId kConst1 = 1;
inline constexpr NetId kNoNet = ~NetId{0};

enum class CellKind : std::uint8_t { kInv, kBuf, kAnd2, kOr2, kNand2, kNor2, kXor2, kXnor2, kMux2 };

inline constexpr int kCellKindCount = 9;
inline constexpr std::array<CellKind, kCellKindCount> kAllCellKinds = {
    CellKind::kInv,  CellKind::kBuf,  CellKind::kAnd2,  CellKind::kOr2, CellKind::kNand2,
    CellKind::kNor2, CellKind::kXor2, CellKind::kXnor2, CellKind::kMux2};

int arity(CellKind kind);
bool is_commutative(CellKind kind);
const char* to_string(CellKind kind);
std::optional<CellKind> cell_kind_from_string(std::string_view name);

/// Evaluates one cell kind on 64 packed lanes. MUX2 selects `b` when `c` is set.
inline std::uint64_t eval_cell(CellKind kind, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  switch (kind) {
    case CellKind::kInv: return ~a;
    case CellKind::kBuf: return a;
    case CellKind::kAnd2: return a & b;
    case CellKind::kOr2: return a | b;
    case CellKind::kNand2: return ~(a & b);
    case CellKind::kNor2: return ~(a | b);
    case CellKind::kXor2: return a ^ b;
    case CellKind::kXnor2: return ~(a ^ b);
    case CellKind::kMux2: return (a & ~c) | (b & c);
  }
  return 0;
}

/// MUX2 inputs are (data0, data1, select).
struct Cell {
  CellKind kind = CellKind::kBuf;
  std::array<NetId, 3> inputs = {kNoNet, kNoNet, kNoNet};
  NetId output = kNoNet;
  /// Pipeline stage (network layer) that produced the cell, -1 if untagged.
  int stage = -1;

  std::span<const NetId> fanin() const { return {inputs.data(), static_cast<std::size_t>(arity(kind))}; }
};

/// D flip-flop with synchronous reset to 0.
struct FlipFlop {
  NetId d = kConst0;
  NetId q = kNoNet;
  int stage = -1;
};

struct Bus {
  std::string name;
  std::vector<NetId> bits;
};

enum class DriverKind : std::uint8_t { kConstant, kInput, kCell, kFlop };

struct Driver {
  DriverKind kind = DriverKind::kConstant;
  /// Cell, flop or input-bus index; constant value for kConstant.
  std::uint32_t index = 0;
  /// Bit position within the input bus.
  std::uint32_t bit = 0;
};

class Netlist {
 public:
  Netlist();

  std::size_t net_count() const { return drivers_.size(); }
  const Driver& driver(NetId net) const { return drivers_.at(net); }
  bool is_constant(NetId net) const { return net == kConst0 || net == kConst1; }

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<FlipFlop>& flops() const { return flops_; }
  const std::vector<Bus>& inputs() const { return inputs_; }
  const std::vector<Bus>& outputs() const { return outputs_; }
  const Cell& cell(std::size_t i) const { return cells_.at(i); }
  const FlipFlop& flop(std::size_t i) const { return flops_.at(i); }

  std::vector<NetId> add_input(std::string name, int width);
  void add_output(std::string name, std::vector<NetId> bits);

  /// Adds a cell without any simplification; use LogicBuilder for folding.
  NetId add_cell(CellKind kind, std::span<const NetId> inputs, int stage = -1);
  NetId add_cell(CellKind kind, std::initializer_list<NetId> inputs, int stage = -1) {
    return add_cell(kind, std::span<const NetId>(inputs.begin(), inputs.size()), stage);
  }
  /// Returns the Q net. D may be rewired later with set_flop_input().
  NetId add_flop(NetId d, int stage = -1);

  void set_flop_input(std::size_t flop, NetId d);
  void set_cell_input(std::size_t cell, int pin, NetId net);
  /// Arity-preserving kind change (used for mutation testing).
  void set_cell_kind(std::size_t cell, CellKind kind);
  void set_output_bit(std::size_t bus, std::size_t bit, NetId net);

  /// Cycles between an input sample and its result at the outputs.
  int latency() const { return latency_; }
  void set_latency(int cycles) { latency_ = cycles; }
  /// Number of distinct layer-stage tags; 0 for an untagged netlist.
  int stage_count() const { return stage_count_; }
  void set_stage_count(int n) { stage_count_ = n; }

  std::size_t input_index(std::string_view name) const;
  std::size_t output_index(std::string_view name) const;

  /// Throws InvariantError or CycleError if the netlist is malformed.
  void validate() const;

 private:
  NetId new_net(Driver d);
  void check_net(NetId net) const;

  std::vector<Driver> drivers_;
  std::vector<Cell> cells_;
  std::vector<FlipFlop> flops_;
  std::vector<Bus> inputs_;
  std::vector<Bus> outputs_;
  int latency_ = 0;
  int stage_count_ = 0;
};

/// Cell indices in an order where every cell follows the cells driving its
/// inputs. Throws CycleError on a combinational loop.
std::vector<std::uint32_t> topological_order(const Netlist& n);

/// Number of loads on every net: cell pins, flop D pins and output bus bits.
std::vector<std::uint32_t> fanout_counts(const Netlist& n);

struct NetlistStats {
  std::array<std::size_t, kCellKindCount> cells_by_kind{};
  std::size_t cell_count = 0;
  std::size_t flop_count = 0;
  std::size_t net_count = 0;
  /// Longest combinational path counted in cells.
  std::size_t max_depth = 0;

  std::size_t count(CellKind k) const { return cells_by_kind[static_cast<std::size_t>(k)]; }
  friend bool operator==(const NetlistStats&, const NetlistStats&) = default;
};

NetlistStats stats(const Netlist& n);

/// Raw two's-complement helpers for bus values of up to 64 bits.
std::int64_t to_signed(std::uint64_t raw, int width);
std::uint64_t to_raw(std::int64_t value, int width);

}  // namespace nnlogic
