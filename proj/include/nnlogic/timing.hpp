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

// Static timing, pipeline stage insertion and minimum-period retiming.
//
// Primary inputs are launched like flop outputs (at clk_to_q) and primary
// outputs are captured like flop inputs (setup before the edge), so the
// clock period is clk_to_q + longest combinational path + setup.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nnlogic/netlist.hpp"

namespace nnlogic {

struct TimingModel {
  std::array<double, kCellKindCount> delay = {1, 1, 1, 1, 1, 1, 1, 1, 1};
  double clk_to_q = 3;
  double setup = 1;

  double delay_of(CellKind k) const { return delay[static_cast<std::size_t>(k)]; }
  /// Throws ConfigError on negative values.
  void validate() const;
};

struct TimingReport {
  double period = 0;
  /// Longest register-to-register combinational delay.
  double comb_delay = 0;
  /// Cell indices along one longest path, source first.
  std::vector<std::uint32_t> critical_path;
};

/// Throws CycleError on a combinational loop.
TimingReport sta_min_period(const Netlist& n, const TimingModel& t = {});

/// Appends k flop ranks after the output flops of every layer (flops with a
/// stage tag and a non-constant D). Latency grows by k per layer. Throws
/// InvariantError if the netlist carries no stage tags.
Netlist insert_pipeline_stages(const Netlist& n, int k);

struct RetimingResult {
  Netlist netlist;
  double period = 0;
  /// Label r of every cell; an edge u -> v ends up with w(e) + r(v) - r(u)
  /// flops. The I/O boundary has label 0.
  std::vector<int> labels;
  /// False when no retiming was applied.
  bool changed = false;
};

/// Minimum-period retiming: binary search over periods with a relaxation
/// feasibility check. I/O latency is preserved; cell kinds and counts are
/// untouched; flop chains leaving one net are shared. Constant-driven flop
/// chains are replaced by the constant.
RetimingResult retime(const Netlist& n, const TimingModel& t = {});

struct StageRow {
  int k = 0;
  double period = 0;
  std::size_t flops = 0;
};

/// For k = 0..max_k: insert k ranks per layer, retime and record.
std::vector<StageRow> explore_stages(const Netlist& n, const TimingModel& t, int max_k);

/// CSV with header k,period,flops.
std::string stage_table_csv(const std::vector<StageRow>& rows);

}  // namespace nnlogic
