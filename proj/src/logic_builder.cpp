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

#include "nnlogic/logic_builder.hpp"

#include <utility>

namespace nnlogic {

namespace {

FoldResult wire(NetId net) { return FoldResult{true, net, CellKind::kBuf, {kNoNet, kNoNet, kNoNet}}; }

FoldResult make(CellKind kind, NetId a, NetId b = kNoNet, NetId c = kNoNet) {
  return FoldResult{false, kNoNet, kind, {a, b, c}};
}

NetId constant(bool v) { return v ? kConst1 : kConst0; }

// Input of the inverter driving `net`, or kNoNet.
NetId inverted_from(const Netlist& n, NetId net) {
  const Driver& d = n.driver(net);
  if (d.kind != DriverKind::kCell) return kNoNet;
  const Cell& c = n.cell(d.index);
  return c.kind == CellKind::kInv ? c.inputs[0] : kNoNet;
}

bool complementary(const Netlist& n, NetId a, NetId b) {
  if (n.is_constant(a) && n.is_constant(b)) return a != b;
  return inverted_from(n, a) == b || inverted_from(n, b) == a;
}

}  // namespace

FoldResult fold_gate(const Netlist& n, CellKind kind, std::array<NetId, 3> in) {
  const NetId a = in[0];
  const NetId b = in[1];
  const NetId c = in[2];
  switch (kind) {
    case CellKind::kBuf:
      return wire(a);
    case CellKind::kInv: {
      if (n.is_constant(a)) return wire(constant(a == kConst0));
      if (NetId x = inverted_from(n, a); x != kNoNet) return wire(x);
      break;
    }
    case CellKind::kAnd2:
      if (a == kConst0 || b == kConst0) return wire(kConst0);
      if (a == kConst1) return wire(b);
      if (b == kConst1 || a == b) return wire(a);
      if (complementary(n, a, b)) return wire(kConst0);
      break;
    case CellKind::kOr2:
      if (a == kConst1 || b == kConst1) return wire(kConst1);
      if (a == kConst0) return wire(b);
      if (b == kConst0 || a == b) return wire(a);
      if (complementary(n, a, b)) return wire(kConst1);
      break;
    case CellKind::kNand2:
      if (a == kConst0 || b == kConst0) return wire(kConst1);
      if (a == kConst1) return make(CellKind::kInv, b);
      if (b == kConst1 || a == b) return make(CellKind::kInv, a);
      if (complementary(n, a, b)) return wire(kConst1);
      break;
    case CellKind::kNor2:
      if (a == kConst1 || b == kConst1) return wire(kConst0);
      if (a == kConst0) return make(CellKind::kInv, b);
      if (b == kConst0 || a == b) return make(CellKind::kInv, a);
      if (complementary(n, a, b)) return wire(kConst0);
      break;
    case CellKind::kXor2:
    case CellKind::kXnor2: {
      const bool xnor = kind == CellKind::kXnor2;
      const CellKind dual = xnor ? CellKind::kXor2 : CellKind::kXnor2;
      // XOR(x, 0) = x and XOR(x, 1) = ~x; XNOR swaps the two.
      if (n.is_constant(a) || n.is_constant(b)) {
        const NetId k = n.is_constant(a) ? a : b;
        const NetId x = n.is_constant(a) ? b : a;
        if (n.is_constant(x)) return wire(constant(((k == kConst1) != (x == kConst1)) != xnor));
        return ((k == kConst1) != xnor) ? make(CellKind::kInv, x) : wire(x);
      }
      if (a == b) return wire(constant(xnor));
      if (complementary(n, a, b)) return wire(constant(!xnor));
      if (NetId x = inverted_from(n, a); x != kNoNet) return make(dual, x, b);
      if (NetId x = inverted_from(n, b); x != kNoNet) return make(dual, a, x);
      break;
    }
    case CellKind::kMux2:
      if (c == kConst0) return wire(a);
      if (c == kConst1 || a == b) return wire(b);
      if (a == kConst0 && b == kConst1) return wire(c);
      if (a == kConst1 && b == kConst0) return make(CellKind::kInv, c);
      if (a == kConst0 || a == c) return make(CellKind::kAnd2, c, b);
      if (b == kConst1 || b == c) return make(CellKind::kOr2, c, a);
      if (NetId s = inverted_from(n, c); s != kNoNet) return make(CellKind::kMux2, b, a, s);
      break;
  }
  return FoldResult{false, kNoNet, kind, in};
}

NetId LogicBuilder::gate(CellKind kind, NetId a, NetId b, NetId c) {
  std::array<NetId, 3> in = {a, b, c};
  for (int i = arity(kind); i < 3; ++i) in[i] = kNoNet;
  if (!fold_) return n_.add_cell(kind, std::span<const NetId>(in.data(), arity(kind)), stage_);

  bool rewritten = false;
  for (;;) {
    FoldResult r = fold_gate(n_, kind, in);
    if (r.is_net) {
      ++rewrites_;
      return r.net;
    }
    if (r.kind == kind && r.inputs == in) break;
    rewritten = true;
    kind = r.kind;
    in = r.inputs;
  }
  if (is_commutative(kind) && in[0] > in[1]) std::swap(in[0], in[1]);
  auto [it, inserted] = hash_.try_emplace(Key{kind, in}, kNoNet);
  if (!inserted) {
    ++rewrites_;
    return it->second;
  }
  if (rewritten) ++rewrites_;
  it->second = n_.add_cell(kind, std::span<const NetId>(in.data(), arity(kind)), stage_);
  return it->second;
}

}  // namespace nnlogic
