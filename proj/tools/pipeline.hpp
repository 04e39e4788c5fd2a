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


// The nnlogic command-line pipeline: train, hat, compile, verify, report.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "nnlogic/cost.hpp"
#include "nnlogic/timing.hpp"
#include "nnlogic/train.hpp"

namespace nnlogic::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInvariant = 3;

/// Canonical stage order; a run executes a subsequence of it.
inline const std::vector<std::string> kStageOrder = {"train", "hat", "compile", "verify", "report"};

struct PipelineConfig {
  std::filesystem::path dataset;
  /// Model to compile, verify and report on; empty means the newest one in out_dir.
  std::filesystem::path model;
  std::filesystem::path netlist;
  std::filesystem::path out_dir = "out";

  std::vector<int> arch;
  Task task = Task::kClassification;

  TrainConfig train;
  double prune = 0;
  int finetune_epochs = 10;
  /// 0 keeps worst-case accumulator widths.
  double profile_quantile = 0;

  TrainConfig hat_train;
  HatConfig hat;

  int pipeline = 0;
  bool retime = true;

  std::size_t verify_trials = 10000;
  std::uint64_t verify_seed = 1;
  bool verify_dataset = true;

  TimingModel timing;
  CostModel cost;

  int max_stages = 4;
  std::size_t power_cycles = 2000;
  std::uint64_t power_seed = 1;

  std::vector<std::string> stages = kStageOrder;
  int jobs = 1;
};

/// Relative paths in the file resolve against `base_dir`. Throws ConfigError
/// on unknown keys and out-of-range values.
PipelineConfig make_pipeline_config(const Config& c, const std::filesystem::path& base_dir);

void cmd_train(const PipelineConfig& p, std::ostream& log);
void cmd_hat(const PipelineConfig& p, std::ostream& log);
void cmd_compile(const PipelineConfig& p, std::ostream& log);
/// False when the netlist disagrees with the model; the counterexample goes to `log`.
bool cmd_verify(const PipelineConfig& p, std::ostream& log);
void cmd_report(const PipelineConfig& p, std::ostream& log);
void cmd_rank_weights(const PipelineConfig& p, std::ostream& log);
void cmd_explore_stages(const PipelineConfig& p, std::ostream& log);

/// Parses the command line and runs it; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nnlogic::cli
