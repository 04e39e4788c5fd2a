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


#include <random>

#include "doctest.h"
#include "nnlogic/cost.hpp"
#include "nnlogic/error.hpp"
#include "nnlogic/simplify.hpp"
#include "nnlogic/synth.hpp"
#include "support.hpp"

using namespace nnlogic;

namespace {

// Rank correlation without ties: 1 - 6 sum(d^2) / (n (n^2 - 1)).
double spearman_no_ties(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      r[i] = 1;
      for (double x : v) r[i] += x < v[i] ? 1 : 0;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  const double n = static_cast<double>(a.size());
  return 1 - 6 * d2 / (n * (n * n - 1));
}

}  // namespace

TEST_CASE("area counts transistors of every cell and flop") {
  Netlist n;
  const auto a = n.add_input("a", 2);
  const NetId i = n.add_cell(CellKind::kInv, {a[0]});
  const NetId g = n.add_cell(CellKind::kAnd2, {i, a[1]});
  const NetId m = n.add_cell(CellKind::kMux2, {g, a[0], a[1]});
  n.add_output("y", {n.add_flop(m)});
  CHECK(estimate_area(n) == 2 + 6 + 12 + 24);
  CostModel c;
  c.transistors.fill(1);
  c.flop_transistors = 10;
  CHECK(estimate_area(n, c) == 13);
  CHECK(estimate_area(Netlist{}) == 0);
}

TEST_CASE("an inverter on an alternating bit toggles every cycle but the first") {
  Netlist n;
  const auto a = n.add_input("a", 1);
  n.add_output("y", {n.add_cell(CellKind::kInv, {a[0]})});
  std::vector<BusValues> stim;
  for (int t = 0; t < 10; ++t) stim.push_back({static_cast<std::uint64_t>(t & 1)});
  // 9 toggles, weight 2 per toggle times (1 + one output pin), over 10 cycles.
  CHECK(estimate_power(n, stim) == doctest::Approx(9.0 * 2 * 2 / 10));
  // Warm-up of 3 cycles: toggles at cycles 4..9 over 7 cycles.
  CHECK(estimate_power(n, stim, {}, 3) == doctest::Approx(6.0 * 4 / 7));
  std::vector<BusValues> still(10, BusValues{1});
  CHECK(estimate_power(n, still) == 0);
  CHECK_THROWS_AS(estimate_power(n, std::vector<BusValues>{}), DimensionError);
  CHECK_THROWS_AS(estimate_power(n, stim, {}, 10), DimensionError);
  CHECK_THROWS_AS(estimate_power(n, std::vector<BusValues>(3, BusValues{0, 0})), DimensionError);
}

TEST_CASE("flops pay a clock term every cycle and toggle weight on Q") {
  Netlist n;
  const auto a = n.add_input("a", 1);
  const NetId q = n.add_flop(a[0]);
  n.add_output("y", {q});
  std::vector<BusValues> stim;
  for (int t = 0; t < 8; ++t) stim.push_back({static_cast<std::uint64_t>(t & 1)});
  // Q follows the input one cycle late: toggles at cycles 2..7.
  CHECK(estimate_power(n, stim) == doctest::Approx(6.0 * 24 * 2 / 8 + 6));
  CostModel c;
  c.flop_clock_energy = 0;
  c.flop_toggle_weight = 1;
  CHECK(estimate_power(n, stim, c) == doctest::Approx(6.0 * 2 / 8));
}

TEST_CASE("cost model validation") {
  CostModel c;
  CHECK_NOTHROW(c.validate());
  c.transistors[4] = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CostModel d;
  d.flop_clock_energy = -0.5;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("random stimulus stays within bus widths and is reproducible") {
  Netlist n;
  n.add_input("a", 3);
  n.add_input("b", 64);
  const auto s = random_stimulus(n, 100, 4);
  CHECK(s == random_stimulus(n, 100, 4));
  CHECK(s != random_stimulus(n, 100, 5));
  for (const auto& r : s) REQUIRE(r[0] < 8);
}

TEST_CASE("the weight area table ranks every 8-bit weight") {
  const WeightAreaTable t = rank_weight_areas();
  REQUIRE(t.entries.size() == 256);
  std::vector<int> seen;
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const WeightArea& e = t.entries[i];
    REQUIRE(e.rank == static_cast<int>(i) + 1);
    REQUIRE(e.area == estimate_area(gen_const_mult(e.weight, 8)));
    if (i > 0) {
      const WeightArea& p = t.entries[i - 1];
      REQUIRE(p.area <= e.area);
      if (p.area == e.area) {
        REQUIRE((std::abs(p.weight) < std::abs(e.weight) || (std::abs(p.weight) == std::abs(e.weight) && p.weight < e.weight)));
      }
    }
    seen.push_back(e.weight);
  }
  std::sort(seen.begin(), seen.end());
  for (int w = -128; w < 128; ++w) REQUIRE(seen[static_cast<std::size_t>(w + 128)] == w);
  CHECK(t.entries.front().weight == 0);
  CHECK(t.area_of(0) == 0);
  CHECK(t.area_of(-16) < t.area_of(107));
  CHECK_THROWS_AS(t.area_of(128), DimensionError);

  const std::string csv = weight_area_csv(t);
  CHECK(csv.rfind("weight,area,rank\n0,0,1\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 257);
}

TEST_CASE("top-n selection") {
  const WeightAreaTable t = rank_weight_areas();
  const auto s40 = select_top_n(t, 40);
  REQUIRE(s40.size() == 40);
  CHECK(std::is_sorted(s40.begin(), s40.end()));
  CHECK(std::adjacent_find(s40.begin(), s40.end()) == s40.end());
  for (int w : {0, 1, -1, 2, -2, 4, -4, 8, -8, 16, -16, 32, -32, 64, -64, -128}) {
    REQUIRE(std::binary_search(s40.begin(), s40.end(), w));
  }
  const auto s50 = select_top_n(t, 50);
  for (int w : s40) REQUIRE(std::binary_search(s50.begin(), s50.end(), w));
  CHECK(select_top_n(t, 256).size() == 256);
  CHECK(select_top_n(t, 1) == std::vector<int>{0});
  CHECK_THROWS_AS(select_top_n(t, 0), ConfigError);
  CHECK_THROWS_AS(select_top_n(t, 257), ConfigError);
}

TEST_CASE("spearman agrees with the closed form and handles ties") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(20);
    std::vector<double> b(20);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<double>(i) + 0.5 * static_cast<double>(rng() % 1000) / 1000.0 * (trial % 3);
      b[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    }
    REQUIRE(spearman(a, b) == doctest::Approx(spearman_no_ties(a, b)));
  }
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {10, 20, 20, 40};
  // Ranks of y: 1, 2.5, 2.5, 4. Pearson on ranks gives 4.5 / sqrt(5 * 4.5).
  CHECK(spearman(x, y) == doctest::Approx(4.5 / std::sqrt(5 * 4.5)));
  const std::vector<double> z = {4, 3, 2, 1};
  CHECK(spearman(x, z) == doctest::Approx(-1));
  CHECK(spearman(x, x) == doctest::Approx(1));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), DimensionError);
}

TEST_CASE("simplify never raises power on flattened models") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 12; ++trial) {
    const QuantizedMLP m = testing::random_model({3 + trial % 4, 4, 2}, rng);
    const Netlist raw = flatten(m, {BuildStyle::kEmbedded, false, false}).netlist;
    const Netlist s = simplify(raw);
    const auto stim = random_stimulus(raw, 500, static_cast<std::uint64_t>(trial));
    REQUIRE(estimate_power(s, stim) <= estimate_power(raw, stim) + 1e-9);
    REQUIRE(estimate_area(s) <= estimate_area(raw));
  }
}
