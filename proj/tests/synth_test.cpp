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


#include <bit>
#include <random>

#include "doctest.h"
#include "nnlogic/cost.hpp"
#include "nnlogic/error.hpp"
#include "nnlogic/simplify.hpp"
#include "nnlogic/simulator.hpp"
#include "nnlogic/synth.hpp"
#include "nnlogic/verify.hpp"
#include "support.hpp"

using namespace nnlogic;

namespace {

std::int64_t digits_value(const CsdDigits& d) {
  std::int64_t v = 0;
  for (const CsdDigit& x : d) v += static_cast<std::int64_t>(x.sign) * (std::int64_t{1} << x.position);
  return v;
}

// Non-zero digit count of the non-adjacent form: the bits where n and 3n
// differ, excluding bit 0.
int naf_weight(std::int64_t w) {
  const auto n = static_cast<std::uint64_t>(w < 0 ? -w : w);
  return std::popcount(((3 * n) ^ n) >> 1);
}

// Drives every record through a combinational block and returns output bus 0
// as signed values.
std::vector<std::int64_t> run_block(const Netlist& n, const std::vector<BusValues>& records) {
  const auto out = simulate(n, records);
  const int width = static_cast<int>(n.outputs()[0].bits.size());
  std::vector<std::int64_t> v;
  for (const auto& r : out) v.push_back(to_signed(r[0], width));
  return v;
}

std::vector<BusValues> all_values(int width) {
  std::vector<BusValues> r;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << width); ++x) r.push_back({x});
  return r;
}

}  // namespace

TEST_CASE("CSD digits are exact, non-adjacent and minimal") {
  for (std::int64_t w = -40000; w <= 40000; ++w) {
    const CsdDigits d = csd_encode(w);
    REQUIRE(digits_value(d) == w);
    REQUIRE(static_cast<int>(d.size()) == naf_weight(w));
    for (std::size_t i = 1; i < d.size(); ++i) REQUIRE(d[i].position >= d[i - 1].position + 2);
    REQUIRE(digits_value(binary_encode(w)) == w);
  }
  CHECK(csd_encode(0).empty());
  CHECK(csd_encode(7) == CsdDigits{{0, -1}, {3, 1}});
}

TEST_CASE("range_width") {
  CHECK(range_width(0, 0) == 1);
  CHECK(range_width(-1, 0) == 1);
  CHECK(range_width(0, 1) == 2);
  CHECK(range_width(-128, 127) == 8);
  CHECK(range_width(-129, 0) == 9);
  CHECK(range_width(0, 128) == 9);
}

TEST_CASE("constant multipliers are exact for every 8-bit weight and input") {
  const auto inputs = all_values(8);
  for (int w = -128; w < 128; ++w) {
    const Netlist n = gen_const_mult(w, 8);
    CHECK(n.flops().empty());
    const auto y = run_block(n, inputs);
    for (std::uint64_t x = 0; x < 256; ++x) REQUIRE(y[x] == w * to_signed(x, 8));
  }
  CHECK(gen_const_mult(0, 8).cells().empty());
  CHECK(gen_const_mult(1, 8).cells().empty());
  CHECK(gen_const_mult(64, 8).cells().empty());
}

TEST_CASE("wide constant multipliers use CSD") {
  for (std::int64_t w : {1000, -12345, 32767, 4097}) {
    const Netlist n = gen_const_mult(w, 6);
    const auto y = run_block(n, all_values(6));
    for (std::uint64_t x = 0; x < 64; ++x) REQUIRE(y[x] == w * to_signed(x, 6));
  }
}

TEST_CASE("the generic multiplier is exact and larger than every constant one") {
  const Netlist g = gen_generic_mult(8, 8);
  CHECK(g.outputs()[0].bits.size() == 16);
  std::vector<BusValues> rec;
  for (std::uint64_t x = 0; x < 256; ++x) {
    for (std::uint64_t w = 0; w < 256; ++w) rec.push_back({x, w});
  }
  const auto y = run_block(g, rec);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    REQUIRE(y[i] == to_signed(rec[i][0], 8) * to_signed(rec[i][1], 8));
  }
  const double generic = estimate_area(g);
  for (int w = -128; w < 128; ++w) REQUIRE(estimate_area(gen_const_mult(w, 8)) < generic);
}

TEST_CASE("tying the weight input of a generic multiplier gives the same function") {
  const Netlist g = gen_generic_mult(8, 8);
  for (int w : {-128, -77, -1, 0, 3, 100, 127}) {
    const Netlist t = tie_input(g, "w", static_cast<std::int64_t>(to_raw(w, 8)));
    REQUIRE(t.inputs().size() == 1);
    const auto y = run_block(t, all_values(8));
    for (std::uint64_t x = 0; x < 256; ++x) REQUIRE(y[x] == w * to_signed(x, 8));
    CHECK(t.cells().size() < g.cells().size());
  }
  CHECK_THROWS_AS(tie_input(g, "nope", 0), InvariantError);
}

TEST_CASE("adder trees are exact and saturate when asked") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const int count = 1 + static_cast<int>(rng() % 6);
    std::vector<int> widths;
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    for (int i = 0; i < count; ++i) {
      widths.push_back(2 + static_cast<int>(rng() % 7));
      lo -= std::int64_t{1} << (widths.back() - 1);
      hi += (std::int64_t{1} << (widths.back() - 1)) - 1;
    }
    const int exact = range_width(lo, hi);
    const bool sat = trial % 2 == 1;
    const int out_width = sat ? std::max(2, exact - 2) : exact;
    const Netlist n = gen_adder_tree(widths, out_width, sat);
    std::vector<BusValues> rec(600, BusValues(widths.size()));
    for (auto& r : rec) {
      for (auto& v : r) v = rng();
    }
    const auto y = run_block(n, rec);
    for (std::size_t t = 0; t < rec.size(); ++t) {
      std::int64_t sum = 0;
      for (std::size_t i = 0; i < widths.size(); ++i) {
        const std::uint64_t mask = (std::uint64_t{1} << widths[i]) - 1;
        sum += to_signed(rec[t][i] & mask, widths[i]);
      }
      REQUIRE(y[t] == (sat ? saturate(sum, out_width) : sum));
    }
  }
  const std::vector<int> w = {8, 8};
  CHECK_THROWS_AS(gen_adder_tree(w, 8, false), ConfigError);
  CHECK_THROWS_AS(gen_adder_tree(std::vector<int>{}, 8, false), DimensionError);
}

TEST_CASE("relu and requantization blocks match the integer reference") {
  const Netlist r = gen_relu(10);
  const auto ry = run_block(r, all_values(10));
  for (std::uint64_t x = 0; x < 1024; ++x) REQUIRE(ry[x] == std::max<std::int64_t>(0, to_signed(x, 10)));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const double scale = std::exp(-std::uniform_real_distribution<double>(0.05, 9.0)(rng));
    const RequantParams p = derive_requant_params(scale);
    const int width = 8 + static_cast<int>(rng() % 6);
    const Netlist n = gen_requant(p, width);
    const auto y = run_block(n, all_values(width));
    for (std::uint64_t x = 0; x < y.size(); ++x) REQUIRE(y[x] == requantize(to_signed(x, width), p));
  }
}

TEST_CASE("word arithmetic tracks exact ranges") {
  Netlist n;
  LogicBuilder b(n);
  const Word x = bus_word(n.add_input("x", 4));
  const Word y = bus_word(n.add_input("y", 3), 0, 3);
  const Word s = add_words(b, x, y);
  const Word d = sub_words(b, x, y);
  const Word g = negate_word(b, x);
  CHECK(s.lo == -8);
  CHECK(s.hi == 10);
  CHECK(d.lo == -11);
  CHECK(d.hi == 7);
  CHECK(g.lo == -7);
  CHECK(g.hi == 8);
  n.add_output("s", extend(s, 6));
  n.add_output("d", extend(d, 6));
  n.add_output("g", extend(g, 6));
  std::vector<BusValues> rec;
  for (std::uint64_t a = 0; a < 16; ++a) {
    for (std::uint64_t c = 0; c < 4; ++c) rec.push_back({a, c});
  }
  const auto out = simulate(n, rec);
  for (std::size_t t = 0; t < rec.size(); ++t) {
    const std::int64_t a = to_signed(rec[t][0], 4);
    const auto c = static_cast<std::int64_t>(rec[t][1]);
    REQUIRE(to_signed(out[t][0], 6) == a + c);
    REQUIRE(to_signed(out[t][1], 6) == a - c);
    REQUIRE(to_signed(out[t][2], 6) == -a);
  }
}

TEST_CASE("flattened networks match the integer reference in every build style") {
  std::mt19937_64 rng(17);
  const std::vector<std::vector<int>> archs = {{3, 2}, {4, 3, 2}, {6, 5, 4, 3}, {2, 2, 2, 2, 1}};
  const FlattenOptions styles[] = {
      {BuildStyle::kEmbedded, true, true},
      {BuildStyle::kEmbedded, false, false},
      {BuildStyle::kBaseline, false, true},
  };
  for (const auto& arch : archs) {
    const QuantizedMLP m = testing::random_model(arch, rng);
    for (const FlattenOptions& o : styles) {
      const FlattenResult f = flatten(m, o);
      REQUIRE(f.netlist.latency() == static_cast<int>(arch.size()) - 1);
      REQUIRE(f.netlist.inputs().size() == arch.front());
      REQUIRE(f.netlist.outputs().size() == arch.back());
      ReferenceOptions ro;
      ro.trials = 3000;
      ro.warmup = f.warmup;
      const ReferenceResult r = verify_against_reference(f.netlist, m, ro);
      REQUIRE(r.equivalent);
      CHECK(r.comparisons >= 3000);
    }
  }
}

TEST_CASE("embedded builds skip zero weights and beat the baseline") {
  std::mt19937_64 rng(23);
  const QuantizedMLP m = testing::random_model({8, 6, 3}, rng);
  std::size_t nonzero = 0;
  std::size_t total = 0;
  for (const QLayer& l : m.layers) {
    for (int w : l.weights) {
      total += 1;
      nonzero += w != 0 ? 1 : 0;
    }
  }
  const FlattenResult e = flatten(m, {BuildStyle::kEmbedded, false, false});
  const FlattenResult base = flatten(m, {BuildStyle::kBaseline, false, true});
  CHECK(e.multiplier_blocks == nonzero);
  CHECK(base.multiplier_blocks == total);
  CHECK(e.warmup == 0);
  CHECK(base.warmup == 1);
  CHECK(estimate_area(e.netlist) < estimate_area(base.netlist));
  const FlattenResult shared = flatten(m);
  CHECK(estimate_area(shared.netlist) <= estimate_area(e.netlist));
}

TEST_CASE("stage tags follow the layer index") {
  std::mt19937_64 rng(5);
  const QuantizedMLP m = testing::random_model({4, 3, 3, 2}, rng);
  const Netlist n = flatten_network(m);
  CHECK(n.stage_count() == 3);
  for (const Cell& c : n.cells()) REQUIRE((c.stage >= 0 && c.stage < 3));
  for (const FlipFlop& f : n.flops()) REQUIRE((f.stage >= 0 && f.stage < 3));
}
