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

// Area in transistors and a relative, toggle-based power figure.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nnlogic/netlist.hpp"
#include "nnlogic/simulator.hpp"

namespace nnlogic {

struct CostModel {
  /// Static CMOS transistor counts, in CellKind order.
  std::array<double, kCellKindCount> transistors = {2, 4, 6, 6, 4, 4, 10, 10, 12};
  double flop_transistors = 24;
  /// Energy per output toggle of each cell kind.
  std::array<double, kCellKindCount> toggle_weight = {2, 4, 6, 6, 4, 4, 10, 10, 12};
  double flop_toggle_weight = 24;
  /// Clock energy charged per flop per cycle.
  double flop_clock_energy = 6;

  double area_of(CellKind k) const { return transistors[static_cast<std::size_t>(k)]; }
  double toggle_of(CellKind k) const { return toggle_weight[static_cast<std::size_t>(k)]; }
  /// Throws ConfigError on negative entries.
  void validate() const;
};

double estimate_area(const Netlist& n, const CostModel& c = {});

/// Per-net output toggles over the cycles after `warmup`, each weighted by
/// its driver's toggle weight and (1 + fanout), divided by the number of
/// counted cycles, plus the flop clock term. Inputs and constants cost 0.
double estimate_power(const Netlist& n, std::span<const BusValues> stimulus, const CostModel& c = {},
                      std::size_t warmup = 0);

/// Uniformly random raw bus values, one record per cycle.
std::vector<BusValues> random_stimulus(const Netlist& n, std::size_t cycles, std::uint64_t seed);

struct WeightArea {
  int weight = 0;
  double area = 0;
  /// 1 for the cheapest weight.
  int rank = 0;
};

struct WeightAreaTable {
  /// Sorted by rank.
  std::vector<WeightArea> entries;

  double area_of(int weight) const;
};

/// Area of every simplified 8-bit constant multiplier, ranked ascending with
/// ties broken by |w| and then negative first.
WeightAreaTable rank_weight_areas(const CostModel& c = {});

/// The n cheapest weights, ascending by value; 0 is always included.
std::vector<int> select_top_n(const WeightAreaTable& table, int n);

/// CSV with header weight,area,rank in rank order.
std::string weight_area_csv(const WeightAreaTable& table);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace nnlogic
