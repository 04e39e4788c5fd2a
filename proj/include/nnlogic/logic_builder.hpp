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

#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>

#include "nnlogic/netlist.hpp"

namespace nnlogic {

/// Result of applying the local rewrite rules to one gate: either an
/// existing net, or a (possibly different) gate still to be created.
struct FoldResult {
  bool is_net = false;
  NetId net = kNoNet;
  CellKind kind = CellKind::kBuf;
  std::array<NetId, 3> inputs = {kNoNet, kNoNet, kNoNet};
};

/// Constant propagation and local identities (x&x, x^~x, double inversion,
/// XOR of an inverted operand, MUX with constant or equal data inputs).
/// Rules never turn one gate into more than one gate.
FoldResult fold_gate(const Netlist& n, CellKind kind, std::array<NetId, 3> inputs);

/// Gate constructor over a Netlist. With folding on, every gate is passed
/// through fold_gate() and structurally hashed, so constant operands and
/// repeated subexpressions never materialize as cells.
class LogicBuilder {
 public:
  explicit LogicBuilder(Netlist& netlist, bool fold = true) : n_(netlist), fold_(fold) {}

  Netlist& netlist() { return n_; }
  bool folding() const { return fold_; }

  void set_stage(int stage) { stage_ = stage; }
  int stage() const { return stage_; }
  /// Forgets hashed gates so later gates cannot share logic with earlier ones.
  void clear_hash_scope() { hash_.clear(); }

  NetId gate(CellKind kind, NetId a, NetId b = kNoNet, NetId c = kNoNet);
  NetId inv(NetId a) { return gate(CellKind::kInv, a); }
  NetId buf(NetId a) { return gate(CellKind::kBuf, a); }
  NetId and2(NetId a, NetId b) { return gate(CellKind::kAnd2, a, b); }
  NetId or2(NetId a, NetId b) { return gate(CellKind::kOr2, a, b); }
  NetId nand2(NetId a, NetId b) { return gate(CellKind::kNand2, a, b); }
  NetId nor2(NetId a, NetId b) { return gate(CellKind::kNor2, a, b); }
  NetId xor2(NetId a, NetId b) { return gate(CellKind::kXor2, a, b); }
  NetId xnor2(NetId a, NetId b) { return gate(CellKind::kXnor2, a, b); }
  NetId mux2(NetId d0, NetId d1, NetId sel) { return gate(CellKind::kMux2, d0, d1, sel); }

  /// Number of gate requests answered by a rewrite rule or an existing gate.
  std::size_t rewrites() const { return rewrites_; }

 private:
  struct Key {
    CellKind kind;
    std::array<NetId, 3> in;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = static_cast<std::uint64_t>(k.kind) * 0x9E3779B97F4A7C15ull;
      for (NetId x : k.in) h = (h ^ x) * 0xBF58476D1CE4E5B9ull + (h >> 29);
      return static_cast<std::size_t>(h);
    }
  };

  Netlist& n_;
  bool fold_;
  int stage_ = -1;
  std::size_t rewrites_ = 0;
  std::unordered_map<Key, NetId, KeyHash> hash_;
};

}  // namespace nnlogic
