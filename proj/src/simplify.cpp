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

#include "nnlogic/simplify.hpp"

#include <unordered_map>
#include <utility>

#include "nnlogic/logic_builder.hpp"

namespace nnlogic {

namespace {

// Marks cells and flops in the transitive fanin of any primary output.
void mark_live(const Netlist& n, std::vector<char>& live_cell, std::vector<char>& live_flop) {
  live_cell.assign(n.cells().size(), 0);
  live_flop.assign(n.flops().size(), 0);
  std::vector<NetId> stack;
  std::vector<char> seen(n.net_count(), 0);
  auto push = [&](NetId net) {
    if (!seen[net]) {
      seen[net] = 1;
      stack.push_back(net);
    }
  };
  for (const Bus& b : n.outputs()) {
    for (NetId bit : b.bits) push(bit);
  }
  while (!stack.empty()) {
    const NetId net = stack.back();
    stack.pop_back();
    const Driver& d = n.driver(net);
    if (d.kind == DriverKind::kCell) {
      live_cell[d.index] = 1;
      for (NetId in : n.cell(d.index).fanin()) push(in);
    } else if (d.kind == DriverKind::kFlop) {
      live_flop[d.index] = 1;
      push(n.flop(d.index).d);
    }
  }
}

// One rebuild pass; sets `changed` when any rewrite, merge or removal fired.
Netlist rebuild(const Netlist& in, bool& changed) {
  std::vector<char> live_cell;
  std::vector<char> live_flop;
  mark_live(in, live_cell, live_flop);

  Netlist out;
  out.set_latency(in.latency());
  out.set_stage_count(in.stage_count());
  std::vector<NetId> map(in.net_count(), kNoNet);
  map[kConst0] = kConst0;
  map[kConst1] = kConst1;
  for (const Bus& b : in.inputs()) {
    auto bits = out.add_input(b.name, static_cast<int>(b.bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) map[b.bits[i]] = bits[i];
  }

  // Flop outputs are sources of the combinational graph, so they are created
  // first and their D pins connected after the cells exist.
  std::unordered_map<NetId, NetId> flop_by_d;
  std::vector<std::pair<std::size_t, NetId>> pending_d;
  for (std::size_t fi = 0; fi < in.flops().size(); ++fi) {
    const FlipFlop& f = in.flop(fi);
    if (!live_flop[fi]) {
      changed = true;
      continue;
    }
    if (f.d == kConst0) {
      map[f.q] = kConst0;
      changed = true;
      continue;
    }
    if (auto it = flop_by_d.find(f.d); it != flop_by_d.end()) {
      map[f.q] = it->second;
      changed = true;
      continue;
    }
    const NetId q = out.add_flop(kConst0, f.stage);
    map[f.q] = q;
    flop_by_d.emplace(f.d, q);
    pending_d.emplace_back(out.flops().size() - 1, f.d);
  }

  LogicBuilder builder(out);
  for (std::uint32_t ci : topological_order(in)) {
    const Cell& c = in.cell(ci);
    if (!live_cell[ci]) {
      changed = true;
      continue;
    }
    std::array<NetId, 3> ins = {kNoNet, kNoNet, kNoNet};
    for (int p = 0; p < arity(c.kind); ++p) ins[p] = map[c.inputs[p]];
    builder.set_stage(c.stage);
    const std::size_t before = builder.rewrites();
    map[c.output] = builder.gate(c.kind, ins[0], ins[1], ins[2]);
    if (builder.rewrites() != before) changed = true;
  }

  for (const auto& [fi, d] : pending_d) out.set_flop_input(fi, map[d]);
  for (const Bus& b : in.outputs()) {
    std::vector<NetId> bits;
    bits.reserve(b.bits.size());
    for (NetId bit : b.bits) bits.push_back(map[bit]);
    out.add_output(b.name, std::move(bits));
  }
  return out;
}

}  // namespace

Netlist simplify(const Netlist& n) {
  bool changed = false;
  Netlist cur = rebuild(n, changed);
  while (changed) {
    changed = false;
    cur = rebuild(cur, changed);
  }
  return cur;
}

}  // namespace nnlogic
