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

#include "nnlogic/cost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "nnlogic/error.hpp"
#include "nnlogic/qmodel.hpp"
#include "nnlogic/synth.hpp"

namespace nnlogic {

void CostModel::validate() const {
  for (CellKind k : kAllCellKinds) {
    if (!(area_of(k) >= 0) || !(toggle_of(k) >= 0)) {
      throw ConfigError(std::string("negative cost entry for ") + to_string(k));
    }
  }
  if (!(flop_transistors >= 0) || !(flop_toggle_weight >= 0) || !(flop_clock_energy >= 0)) {
    throw ConfigError("flop cost entries must be non-negative");
  }
}

double estimate_area(const Netlist& n, const CostModel& c) {
  double area = 0;
  for (const Cell& cell : n.cells()) area += c.area_of(cell.kind);
  return area + c.flop_transistors * static_cast<double>(n.flops().size());
}

double estimate_power(const Netlist& n, std::span<const BusValues> stimulus, const CostModel& c,
                      std::size_t warmup) {
  if (stimulus.empty()) throw DimensionError("power estimation needs a non-empty stimulus");
  if (warmup >= stimulus.size()) throw DimensionError("warm-up covers the whole stimulus");

  // Weight of one toggle on each net: driver energy times (1 + fanout).
  const auto fanout = fanout_counts(n);
  std::vector<double> weight(n.net_count(), 0.0);
  for (const Cell& cell : n.cells()) weight[cell.output] = c.toggle_of(cell.kind) * (1.0 + fanout[cell.output]);
  for (const FlipFlop& f : n.flops()) weight[f.q] = c.flop_toggle_weight * (1.0 + fanout[f.q]);

  Simulator sim(n);
  std::vector<std::uint64_t> prev;
  double energy = 0;
  for (std::size_t t = 0; t < stimulus.size(); ++t) {
    if (stimulus[t].size() != n.inputs().size()) throw DimensionError("stimulus record has the wrong bus count");
    for (std::size_t b = 0; b < stimulus[t].size(); ++b) sim.set_input_broadcast(b, stimulus[t][b]);
    sim.evaluate();
    const auto& now = sim.net_words();
    if (t > warmup) {
      for (std::size_t net = 0; net < now.size(); ++net) {
        if ((now[net] ^ prev[net]) & 1u) energy += weight[net];
      }
    }
    prev = now;
    sim.clock();
  }
  const auto cycles = static_cast<double>(stimulus.size() - warmup);
  return energy / cycles + c.flop_clock_energy * static_cast<double>(n.flops().size());
}

std::vector<BusValues> random_stimulus(const Netlist& n, std::size_t cycles, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BusValues> out(cycles, BusValues(n.inputs().size()));
  for (auto& rec : out) {
    for (std::size_t b = 0; b < rec.size(); ++b) {
      const std::size_t w = n.inputs()[b].bits.size();
      rec[b] = rng() & (w >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << w) - 1));
    }
  }
  return out;
}

double WeightAreaTable::area_of(int weight) const {
  for (const WeightArea& e : entries) {
    if (e.weight == weight) return e.area;
  }
  throw DimensionError("weight " + std::to_string(weight) + " is not in the table");
}

WeightAreaTable rank_weight_areas(const CostModel& c) {
  WeightAreaTable t;
  for (int w = -128; w < 128; ++w) t.entries.push_back({w, estimate_area(gen_const_mult(w, kActivationWidth), c), 0});
  std::sort(t.entries.begin(), t.entries.end(), [](const WeightArea& a, const WeightArea& b) {
    if (a.area != b.area) return a.area < b.area;
    if (std::abs(a.weight) != std::abs(b.weight)) return std::abs(a.weight) < std::abs(b.weight);
    return a.weight < b.weight;
  });
  for (std::size_t i = 0; i < t.entries.size(); ++i) t.entries[i].rank = static_cast<int>(i) + 1;
  return t;
}

std::vector<int> select_top_n(const WeightAreaTable& table, int n) {
  if (n < 1 || n > static_cast<int>(table.entries.size())) {
    throw ConfigError("selection size must be within 1.." + std::to_string(table.entries.size()));
  }
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(table.entries[static_cast<std::size_t>(i)].weight);
  if (std::find(out.begin(), out.end(), 0) == out.end()) out.back() = 0;
  std::sort(out.begin(), out.end());
  return out;
}

std::string weight_area_csv(const WeightAreaTable& table) {
  std::ostringstream out;
  out << "weight,area,rank\n";
  for (const WeightArea& e : table.entries) out << e.weight << ',' << e.area << ',' << e.rank << '\n';
  return out.str();
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DimensionError("spearman needs two equal-length samples");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0;
  double saa = 0;
  double sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace nnlogic
