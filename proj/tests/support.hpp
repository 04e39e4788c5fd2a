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

// Random models and netlists shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nnlogic/netlist.hpp"
#include "nnlogic/qmodel.hpp"

namespace nnlogic::testing {

struct RandomModelOptions {
  double sparsity = 0.3;
  bool per_neuron_requant = true;
  bool bias = true;
  /// Probability that a neuron gets an accumulator narrower than its worst case.
  double narrow_acc = 0.3;
};

inline QuantizedMLP random_model(const std::vector<int>& arch, std::mt19937_64& rng,
                                 const RandomModelOptions& opt = {}) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> wdist(-128, 127);
  QuantizedMLP m;
  m.name = "random";
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const bool last = l + 2 == arch.size();
    QLayer layer = make_layer(arch[l], arch[l + 1], last ? Activation::kNone : Activation::kRelu);
    for (int& w : layer.weights) w = u(rng) < opt.sparsity ? 0 : wdist(rng);
    if (opt.bias) {
      layer.bias.resize(static_cast<std::size_t>(layer.out_features));
      for (auto& b : layer.bias) b = std::uniform_int_distribution<int>(-2000, 2000)(rng);
    }
    // Scale so that typical accumulators land near the 8-bit output range.
    const double typical = 64.0 * 64.0 * std::sqrt(static_cast<double>(arch[l]));
    auto draw = [&] {
      const double scale = std::min(0.99, 127.0 / typical * std::exp(u(rng) * 3.0 - 1.5));
      return derive_requant_params(scale);
    };
    layer.requant.clear();
    const int nreq = opt.per_neuron_requant ? layer.out_features : 1;
    for (int j = 0; j < nreq; ++j) layer.requant.push_back(draw());
    for (int j = 0; j < layer.out_features; ++j) {
      const int worst = worst_case_acc_width(layer, j);
      layer.acc_widths[static_cast<std::size_t>(j)] =
          u(rng) < opt.narrow_acc ? std::max(kMinAccWidth, worst - 1 - static_cast<int>(u(rng) * 4)) : worst;
    }
    m.layers.push_back(std::move(layer));
  }
  m.validate();
  return m;
}

struct RandomNetlistOptions {
  int cells = 40;
  int input_bits = 6;
  /// Chance of a flop (or, a third of the time, two) after each cell.
  double flop_prob = 0.25;
  /// Chance of a constant on any cell pin.
  double const_prob = 0.03;
};

/// Feed-forward netlist over one input bus "x". Every cell and flop output
/// is used by a cell or an output bus (buses "y0", "y1", ... of up to 32 bits).
inline Netlist random_netlist(std::mt19937_64& rng, const RandomNetlistOptions& opt = {}) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Netlist n;
  const auto x = n.add_input("x", opt.input_bits);
  std::vector<NetId> pool(x.begin(), x.end());
  std::vector<bool> used(x.size(), false);
  auto pick = [&]() -> std::size_t {
    if (u(rng) < 0.7) {
      const std::size_t span = std::min<std::size_t>(pool.size(), 12);
      return pool.size() - 1 - static_cast<std::size_t>(rng() % span);
    }
    return static_cast<std::size_t>(rng() % pool.size());
  };
  std::vector<NetId> sinks;
  for (int i = 0; i < opt.cells; ++i) {
    const CellKind kind = kAllCellKinds[rng() % kCellKindCount];
    std::array<NetId, 3> pins{};
    for (int p = 0; p < arity(kind); ++p) {
      if (u(rng) < opt.const_prob) {
        pins[static_cast<std::size_t>(p)] = u(rng) < 0.5 ? kConst0 : kConst1;
      } else {
        const std::size_t k = pick();
        used[k] = true;
        pins[static_cast<std::size_t>(p)] = pool[k];
      }
    }
    NetId out = n.add_cell(kind, std::span<const NetId>(pins.data(), static_cast<std::size_t>(arity(kind))));
    if (u(rng) < opt.flop_prob) {
      out = n.add_flop(out);
      if (u(rng) < 1.0 / 3.0) out = n.add_flop(out);
    }
    pool.push_back(out);
    used.push_back(false);
  }
  for (std::size_t k = x.size(); k < pool.size(); ++k) {
    if (!used[k]) sinks.push_back(pool[k]);
  }
  if (sinks.empty()) sinks.push_back(pool.back());
  for (std::size_t b = 0; b * 32 < sinks.size(); ++b) {
    const auto first = sinks.begin() + static_cast<std::ptrdiff_t>(b * 32);
    const auto last = sinks.begin() + static_cast<std::ptrdiff_t>(std::min(sinks.size(), (b + 1) * 32));
    n.add_output("y" + std::to_string(b), std::vector<NetId>(first, last));
  }
  n.validate();
  return n;
}

}  // namespace nnlogic::testing
