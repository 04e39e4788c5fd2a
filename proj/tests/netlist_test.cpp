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


#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "nnlogic/error.hpp"
#include "nnlogic/logic_builder.hpp"
#include "nnlogic/netlist.hpp"
#include "nnlogic/netlist_io.hpp"
#include "nnlogic/simplify.hpp"
#include "nnlogic/simulator.hpp"
#include "nnlogic/synth.hpp"
#include "support.hpp"

using namespace nnlogic;

namespace {

bool truth(CellKind k, bool a, bool b, bool c) {
  switch (k) {
    case CellKind::kInv: return !a;
    case CellKind::kBuf: return a;
    case CellKind::kAnd2: return a && b;
    case CellKind::kOr2: return a || b;
    case CellKind::kNand2: return !(a && b);
    case CellKind::kNor2: return !(a || b);
    case CellKind::kXor2: return a != b;
    case CellKind::kXnor2: return a == b;
    case CellKind::kMux2: return c ? b : a;
  }
  return false;
}

// One bit per net; cells are swept in storage order until every value is
// known, so no library ordering is involved.
class ScalarSim {
 public:
  explicit ScalarSim(const Netlist& n) : n_(n), state_(n.flops().size(), 0) {}

  std::vector<std::uint64_t> step(const std::vector<std::uint64_t>& inputs) {
    std::vector<int> v(n_.net_count(), -1);
    v[kConst0] = 0;
    v[kConst1] = 1;
    for (std::size_t b = 0; b < n_.inputs().size(); ++b) {
      const auto& bits = n_.inputs()[b].bits;
      for (std::size_t i = 0; i < bits.size(); ++i) v[bits[i]] = static_cast<int>((inputs[b] >> i) & 1u);
    }
    for (std::size_t f = 0; f < n_.flops().size(); ++f) v[n_.flop(f).q] = state_[f];
    for (bool progress = true; progress;) {
      progress = false;
      for (const Cell& c : n_.cells()) {
        if (v[c.output] >= 0) continue;
        int in[3] = {0, 0, 0};
        bool ready = true;
        for (int p = 0; p < arity(c.kind); ++p) {
          in[p] = v[c.inputs[static_cast<std::size_t>(p)]];
          ready = ready && in[p] >= 0;
        }
        if (!ready) continue;
        v[c.output] = truth(c.kind, in[0], in[1], in[2]) ? 1 : 0;
        progress = true;
      }
    }
    std::vector<std::uint64_t> out;
    for (const Bus& b : n_.outputs()) {
      std::uint64_t raw = 0;
      for (std::size_t i = 0; i < b.bits.size(); ++i) raw |= static_cast<std::uint64_t>(v[b.bits[i]]) << i;
      out.push_back(raw);
    }
    for (std::size_t f = 0; f < n_.flops().size(); ++f) state_[f] = v[n_.flop(f).d];
    return out;
  }

 private:
  const Netlist& n_;
  std::vector<int> state_;
};

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nnlogic_netlist_" + name);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

testing::RandomNetlistOptions options(std::mt19937_64& rng) {
  testing::RandomNetlistOptions o;
  o.cells = 5 + static_cast<int>(rng() % 120);
  o.input_bits = 2 + static_cast<int>(rng() % 8);
  o.flop_prob = static_cast<double>(rng() % 40) / 100.0;
  o.const_prob = 0.08;
  return o;
}

}  // namespace

TEST_CASE("netlist construction keeps drivers and metadata consistent") {
  Netlist n;
  const auto a = n.add_input("a", 2);
  const NetId x = n.add_cell(CellKind::kXor2, {a[0], a[1]}, 0);
  const NetId q = n.add_flop(x, 0);
  n.add_output("y", {q, x});
  n.set_latency(1);
  n.set_stage_count(1);
  n.validate();
  CHECK(n.driver(a[1]).kind == DriverKind::kInput);
  CHECK(n.driver(a[1]).bit == 1);
  CHECK(n.driver(x).kind == DriverKind::kCell);
  CHECK(n.driver(q).kind == DriverKind::kFlop);
  CHECK(n.input_index("a") == 0);
  CHECK(n.output_index("y") == 0);
  const NetlistStats s = stats(n);
  CHECK(s.cell_count == 1);
  CHECK(s.flop_count == 1);
  CHECK(s.count(CellKind::kXor2) == 1);
  CHECK(s.max_depth == 1);
  CHECK(fanout_counts(n)[x] == 2);

  CHECK_THROWS_AS(n.add_input("a", 1), InvariantError);
  CHECK_THROWS_AS(n.add_cell(CellKind::kAnd2, {a[0]}), InvariantError);
}

TEST_CASE("combinational loops are reported as CycleError") {
  Netlist n;
  const auto a = n.add_input("a", 1);
  const NetId g1 = n.add_cell(CellKind::kAnd2, {a[0], a[0]});
  const NetId g2 = n.add_cell(CellKind::kOr2, {g1, a[0]});
  n.add_output("y", {g2});
  n.set_cell_input(0, 1, g2);
  CHECK_THROWS_AS(n.validate(), CycleError);
  CHECK_THROWS_AS(topological_order(n), CycleError);
}

TEST_CASE("a loop through a flop is not combinational") {
  Netlist n;
  const auto a = n.add_input("a", 1);
  const NetId q = n.add_flop(kConst0);
  const NetId g = n.add_cell(CellKind::kXor2, {a[0], q});
  n.set_flop_input(0, g);
  n.add_output("y", {g});
  n.validate();
  // Running XOR of the input stream.
  std::vector<BusValues> stream = {{1}, {0}, {1}, {1}};
  const auto out = simulate(n, stream);
  CHECK(out[0][0] == 1);
  CHECK(out[1][0] == 1);
  CHECK(out[2][0] == 0);
  CHECK(out[3][0] == 1);
}

TEST_CASE("signed conversions") {
  CHECK(to_signed(0xFF, 8) == -1);
  CHECK(to_signed(0x7F, 8) == 127);
  CHECK(to_raw(-2, 4) == 0xE);
  for (int v = -128; v < 128; ++v) REQUIRE(to_signed(to_raw(v, 8), 8) == v);
}

TEST_CASE("folding builder computes the requested function for every operand mix") {
  // Operand pool: constants, two inputs and their complements.
  for (CellKind kind : kAllCellKinds) {
    for (int i0 = 0; i0 < 6; ++i0) {
      for (int i1 = 0; i1 < 6; ++i1) {
        for (int i2 = 0; i2 < 6; ++i2) {
          Netlist n;
          const auto in = n.add_input("x", 2);
          LogicBuilder b(n);
          const NetId pool[6] = {kConst0, kConst1, in[0], in[1], b.inv(in[0]), b.inv(in[1])};
          const std::size_t before = n.cells().size();
          const NetId out = b.gate(kind, pool[i0], arity(kind) > 1 ? pool[i1] : kNoNet,
                                   arity(kind) > 2 ? pool[i2] : kNoNet);
          REQUIRE(n.cells().size() <= before + 1);
          n.add_output("y", {out});
          n.validate();
          ScalarSim sim(n);
          for (std::uint64_t xv = 0; xv < 4; ++xv) {
            const bool x0 = xv & 1u;
            const bool x1 = (xv >> 1) & 1u;
            const bool val[6] = {false, true, x0, x1, !x0, !x1};
            const bool expect = truth(kind, val[i0], val[i1], val[i2]);
            REQUIRE(sim.step({xv})[0] == (expect ? 1u : 0u));
          }
        }
      }
    }
  }
}

TEST_CASE("structural hashing reuses gates, also with swapped commutative inputs") {
  Netlist n;
  const auto in = n.add_input("x", 3);
  LogicBuilder b(n);
  const NetId g = b.and2(in[0], in[1]);
  CHECK(b.and2(in[0], in[1]) == g);
  CHECK(b.and2(in[1], in[0]) == g);
  CHECK(b.mux2(in[0], in[1], in[2]) != b.mux2(in[1], in[0], in[2]));
  CHECK(n.cells().size() == 3);
  b.clear_hash_scope();
  CHECK(b.and2(in[0], in[1]) != g);

  Netlist raw;
  const auto r = raw.add_input("x", 2);
  LogicBuilder nb(raw, false);
  nb.and2(r[0], kConst1);
  nb.and2(r[0], kConst1);
  CHECK(raw.cells().size() == 2);
}

TEST_CASE("the 64-lane simulator agrees with a scalar oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const Netlist n = testing::random_netlist(rng, options(rng));
    Simulator sim(n);
    std::vector<ScalarSim> lanes;
    for (int l = 0; l < 4; ++l) lanes.emplace_back(n);
    const std::uint64_t mask = (std::uint64_t{1} << n.inputs()[0].bits.size()) - 1;
    for (int cycle = 0; cycle < 12; ++cycle) {
      std::vector<std::uint64_t> values(4);
      for (auto& v : values) v = rng() & mask;
      sim.set_input_lanes(0, values);
      sim.evaluate();
      for (int l = 0; l < 4; ++l) {
        const auto expect = lanes[static_cast<std::size_t>(l)].step({values[static_cast<std::size_t>(l)]});
        for (std::size_t b = 0; b < n.outputs().size(); ++b) REQUIRE(sim.output_value(b, l) == expect[b]);
      }
      sim.clock();
    }
  }
}

TEST_CASE("simplify is sound, idempotent and never grows the netlist") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 60; ++trial) {
    const Netlist n = testing::random_netlist(rng, options(rng));
    const Netlist s = simplify(n);
    CHECK(s.cells().size() <= n.cells().size());
    CHECK(s.flops().size() <= n.flops().size());
    const std::size_t warmup = std::max(max_register_depth(n), max_register_depth(s));
    const EquivResult r = check_equiv(n, s, {0, 2000, warmup, static_cast<std::uint64_t>(trial)});
    REQUIRE(r.equivalent);
    const Netlist again = simplify(s);
    REQUIRE(netlist_to_json(again) == netlist_to_json(s));
  }
}

TEST_CASE("simplify removes dead logic and constant-fed flops") {
  Netlist n;
  const auto a = n.add_input("a", 2);
  const NetId dead = n.add_cell(CellKind::kAnd2, {a[0], a[1]});
  (void)dead;
  const NetId zero_q = n.add_flop(kConst0);
  const NetId live = n.add_cell(CellKind::kOr2, {a[0], zero_q});
  const NetId q1 = n.add_flop(live);
  const NetId q2 = n.add_flop(live);
  const NetId y = n.add_cell(CellKind::kXor2, {q1, q2});
  n.add_output("y", {y, live});
  const Netlist s = simplify(n);
  // OR with constant 0 folds to a wire, the two flops merge, and XOR of equal
  // nets is constant 0.
  CHECK(s.cells().empty());
  CHECK(s.flops().empty());
  CHECK(s.outputs()[0].bits[0] == kConst0);
  CHECK(s.outputs()[0].bits[1] == s.inputs()[0].bits[0]);
}

TEST_CASE("check_equiv reports a counterexample for an inverted output") {
  std::mt19937_64 rng(8);
  const Netlist n = testing::random_netlist(rng, {30, 6, 0.2, 0.0});
  Netlist m = n;
  const NetId out = m.outputs()[0].bits[0];
  REQUIRE(m.driver(out).kind == DriverKind::kCell);
  const std::size_t ci = m.driver(out).index;
  const CellKind flipped[] = {CellKind::kBuf,  CellKind::kInv,   CellKind::kNand2, CellKind::kNor2, CellKind::kAnd2,
                              CellKind::kOr2, CellKind::kXnor2, CellKind::kXor2,  CellKind::kMux2};
  const CellKind k = m.cell(ci).kind;
  if (k == CellKind::kMux2) {
    const NetId d0 = m.cell(ci).inputs[0];
    m.set_cell_input(ci, 0, m.cell(ci).inputs[1]);
    m.set_cell_input(ci, 1, d0);
  } else {
    m.set_cell_kind(ci, flipped[static_cast<std::size_t>(k)]);
  }
  const std::size_t warmup = max_register_depth(n);
  const EquivResult r = check_equiv(n, m, {0, 4000, warmup, 1});
  if (k != CellKind::kMux2) {
    REQUIRE_FALSE(r.equivalent);
    REQUIRE(r.counterexample.has_value());
    CHECK(r.counterexample->bus == "y0");
    CHECK(r.counterexample->value_a != r.counterexample->value_b);
  }
  CHECK(check_equiv(n, n, {0, 1000, warmup, 1}).equivalent);
}

TEST_CASE("netlist JSON round-trips with identical net ids") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    Netlist n = testing::random_netlist(rng, options(rng));
    n.set_latency(trial % 3);
    const std::string text = netlist_to_json(n);
    const Netlist back = netlist_from_json(text);
    REQUIRE(netlist_to_json(back) == text);
    REQUIRE(back.net_count() == n.net_count());
    REQUIRE(back.latency() == n.latency());
    REQUIRE(check_equiv(n, back, {0, 500, 0, 2}).equivalent);
  }
  const auto path = temp_file("rt.json");
  const Netlist g = gen_const_mult(-3, 4);
  save_netlist(g, path);
  CHECK(netlist_to_json(load_netlist(path)) == netlist_to_json(g));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(netlist_from_json("{"), FormatError);
  CHECK_THROWS_AS(netlist_from_json("{\"format\":\"other\"}"), FormatError);
  const std::string bad_kind = std::string(netlist_to_json(g)).replace(netlist_to_json(g).find("\"INV\"") == std::string::npos
                                                                           ? netlist_to_json(g).find("\"XOR2\"")
                                                                           : netlist_to_json(g).find("\"INV\""),
                                                                       5, "\"BAD");
  CHECK_THROWS_AS(netlist_from_json(bad_kind), FormatError);
}

TEST_CASE("Verilog output matches the golden file") {
  const Netlist n = gen_const_mult(-2, 2);
  const std::string golden = read_text(std::filesystem::path(NNLOGIC_TEST_DIR) / "golden" / "const_mult_m2_w2.v");
  CHECK(emit_verilog(n, "const_mult_m2") == golden);
}

TEST_CASE("Verilog registers flops in one clocked block with reset") {
  Netlist n;
  const auto a = n.add_input("a", 1);
  const NetId q = n.add_flop(a[0]);
  n.add_output("y", {q});
  const std::string v = emit_verilog(n, "reg1");
  CHECK(v.find("always @(posedge clk)") != std::string::npos);
  CHECK(v.find("if (rst)") != std::string::npos);
  CHECK(v.find("input wire a,") != std::string::npos);
  CHECK(v.find("reg n") != std::string::npos);
}
