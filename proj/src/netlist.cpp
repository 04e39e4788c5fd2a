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

#include "nnlogic/netlist.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "nnlogic/error.hpp"

namespace nnlogic {

int arity(CellKind kind) {
  switch (kind) {
    case CellKind::kInv:
    case CellKind::kBuf: return 1;
    case CellKind::kMux2: return 3;
    default: return 2;
  }
}

bool is_commutative(CellKind kind) { return arity(kind) == 2; }

const char* to_string(CellKind kind) {
  switch (kind) {
    case CellKind::kInv: return "INV";
    case CellKind::kBuf: return "BUF";
    case CellKind::kAnd2: return "AND2";
    case CellKind::kOr2: return "OR2";
    case CellKind::kNand2: return "NAND2";
    case CellKind::kNor2: return "NOR2";
    case CellKind::kXor2: return "XOR2";
    case CellKind::kXnor2: return "XNOR2";
    case CellKind::kMux2: return "MUX2";
  }
  return "?";
}

std::optional<CellKind> cell_kind_from_string(std::string_view name) {
  for (CellKind k : kAllCellKinds) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

Netlist::Netlist() {
  drivers_.push_back({DriverKind::kConstant, 0, 0});
  drivers_.push_back({DriverKind::kConstant, 1, 0});
}

NetId Netlist::new_net(Driver d) {
  drivers_.push_back(d);
  return static_cast<NetId>(drivers_.size() - 1);
}

void Netlist::check_net(NetId net) const {
  if (net >= drivers_.size()) {
    throw InvariantError("reference to undefined net " + std::to_string(net));
  }
}

std::vector<NetId> Netlist::add_input(std::string name, int width) {
  if (width <= 0) throw InvariantError("input bus '" + name + "' must have positive width");
  if (std::any_of(inputs_.begin(), inputs_.end(), [&](const Bus& x) { return x.name == name; })) throw InvariantError("duplicate input bus '" + name + "'");
  const auto bus = static_cast<std::uint32_t>(inputs_.size());
  Bus b{std::move(name), {}};
  for (int i = 0; i < width; ++i) {
    b.bits.push_back(new_net({DriverKind::kInput, bus, static_cast<std::uint32_t>(i)}));
  }
  inputs_.push_back(b);
  return b.bits;
}

void Netlist::add_output(std::string name, std::vector<NetId> bits) {
  if (bits.empty()) throw InvariantError("output bus '" + name + "' must have positive width");
  if (std::any_of(outputs_.begin(), outputs_.end(), [&](const Bus& x) { return x.name == name; })) throw InvariantError("duplicate output bus '" + name + "'");
  for (NetId n : bits) check_net(n);
  outputs_.push_back({std::move(name), std::move(bits)});
}

NetId Netlist::add_cell(CellKind kind, std::span<const NetId> inputs, int stage) {
  if (static_cast<int>(inputs.size()) != arity(kind)) {
    throw InvariantError(std::string(to_string(kind)) + " expects " + std::to_string(arity(kind)) + " inputs");
  }
  Cell c;
  c.kind = kind;
  c.stage = stage;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    check_net(inputs[i]);
    c.inputs[i] = inputs[i];
  }
  c.output = new_net({DriverKind::kCell, static_cast<std::uint32_t>(cells_.size()), 0});
  cells_.push_back(c);
  return c.output;
}

NetId Netlist::add_flop(NetId d, int stage) {
  check_net(d);
  FlipFlop f;
  f.d = d;
  f.stage = stage;
  f.q = new_net({DriverKind::kFlop, static_cast<std::uint32_t>(flops_.size()), 0});
  flops_.push_back(f);
  return f.q;
}

void Netlist::set_flop_input(std::size_t flop, NetId d) {
  check_net(d);
  flops_.at(flop).d = d;
}

void Netlist::set_cell_input(std::size_t cell, int pin, NetId net) {
  check_net(net);
  Cell& c = cells_.at(cell);
  if (pin < 0 || pin >= arity(c.kind)) throw InvariantError("cell pin out of range");
  c.inputs[pin] = net;
}

void Netlist::set_cell_kind(std::size_t cell, CellKind kind) {
  Cell& c = cells_.at(cell);
  if (arity(c.kind) != arity(kind)) throw InvariantError("cell kind change must preserve arity");
  c.kind = kind;
}

void Netlist::set_output_bit(std::size_t bus, std::size_t bit, NetId net) {
  check_net(net);
  outputs_.at(bus).bits.at(bit) = net;
}

std::size_t Netlist::input_index(std::string_view name) const {
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    if (inputs_[i].name == name) return i;
  }
  throw InvariantError("no input bus named '" + std::string(name) + "'");
}

std::size_t Netlist::output_index(std::string_view name) const {
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i].name == name) return i;
  }
  throw InvariantError("no output bus named '" + std::string(name) + "'");
}

void Netlist::validate() const {
  std::unordered_set<std::string> names;
  for (const auto* group : {&inputs_, &outputs_}) {
    for (const Bus& b : *group) {
      if (b.bits.empty()) throw InvariantError("bus '" + b.name + "' has zero width");
      if (!names.insert(b.name).second) throw InvariantError("duplicate bus name '" + b.name + "'");
      for (NetId n : b.bits) check_net(n);
    }
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Cell& c = cells_[i];
    for (NetId n : c.fanin()) check_net(n);
    check_net(c.output);
    const Driver& d = drivers_[c.output];
    if (d.kind != DriverKind::kCell || d.index != i) throw InvariantError("cell output driven twice");
  }
  for (std::size_t i = 0; i < flops_.size(); ++i) {
    check_net(flops_[i].d);
    const Driver& d = drivers_.at(flops_[i].q);
    if (d.kind != DriverKind::kFlop || d.index != i) throw InvariantError("flop output driven twice");
  }
  (void)topological_order(*this);
}

std::vector<std::uint32_t> topological_order(const Netlist& n) {
  const auto& cells = n.cells();
  // Pending fanin count per cell, counting only inputs driven by other cells.
  std::vector<std::uint32_t> pending(cells.size(), 0);
  std::vector<std::uint32_t> head(n.net_count() + 1, 0);
  for (const Cell& c : cells) {
    for (NetId in : c.fanin()) {
      if (n.driver(in).kind == DriverKind::kCell) ++head[in + 1];
    }
  }
  for (std::size_t i = 1; i < head.size(); ++i) head[i] += head[i - 1];
  std::vector<std::uint32_t> edges(head.back());
  std::vector<std::uint32_t> fill(head.begin(), head.end() - 1);
  for (std::uint32_t ci = 0; ci < cells.size(); ++ci) {
    for (NetId in : cells[ci].fanin()) {
      if (n.driver(in).kind == DriverKind::kCell) {
        edges[fill[in]++] = ci;
        ++pending[ci];
      }
    }
  }
  std::vector<std::uint32_t> order;
  order.reserve(cells.size());
  for (std::uint32_t ci = 0; ci < cells.size(); ++ci) {
    if (pending[ci] == 0) order.push_back(ci);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const NetId out = cells[order[k]].output;
    for (std::uint32_t e = head[out]; e < head[out + 1]; ++e) {
      if (--pending[edges[e]] == 0) order.push_back(edges[e]);
    }
  }
  if (order.size() != cells.size()) {
    std::ostringstream msg;
    msg << "combinational cycle through " << (cells.size() - order.size()) << " cell(s)";
    throw CycleError(msg.str());
  }
  return order;
}

std::vector<std::uint32_t> fanout_counts(const Netlist& n) {
  std::vector<std::uint32_t> fanout(n.net_count(), 0);
  for (const Cell& c : n.cells()) {
    for (NetId in : c.fanin()) ++fanout[in];
  }
  for (const FlipFlop& f : n.flops()) ++fanout[f.d];
  for (const Bus& b : n.outputs()) {
    for (NetId bit : b.bits) ++fanout[bit];
  }
  return fanout;
}

NetlistStats stats(const Netlist& n) {
  NetlistStats s;
  for (const Cell& c : n.cells()) ++s.cells_by_kind[static_cast<std::size_t>(c.kind)];
  s.cell_count = n.cells().size();
  s.flop_count = n.flops().size();
  s.net_count = n.net_count() - 2;
  std::vector<std::size_t> depth(n.net_count(), 0);
  for (std::uint32_t ci : topological_order(n)) {
    const Cell& c = n.cell(ci);
    std::size_t d = 0;
    for (NetId in : c.fanin()) d = std::max(d, depth[in]);
    depth[c.output] = d + 1;
    s.max_depth = std::max(s.max_depth, d + 1);
  }
  return s;
}

std::int64_t to_signed(std::uint64_t raw, int width) {
  if (width >= 64) return static_cast<std::int64_t>(raw);
  const std::uint64_t mask = (std::uint64_t{1} << width) - 1;
  raw &= mask;
  if (raw >> (width - 1)) return static_cast<std::int64_t>(raw | ~mask);
  return static_cast<std::int64_t>(raw);
}

std::uint64_t to_raw(std::int64_t value, int width) {
  if (width >= 64) return static_cast<std::uint64_t>(value);
  return static_cast<std::uint64_t>(value) & ((std::uint64_t{1} << width) - 1);
}

}  // namespace nnlogic
