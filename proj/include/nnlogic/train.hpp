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

// Quantization-aware and hardware-aware training of small MLPs.
//
// The forward pass runs the exact integer arithmetic of infer_reference():
// weights are rounded to 8 bits with a per-layer scale, activations are
// requantized with parameters derived from the running activation ranges.
// Gradients flow straight through every rounding step.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nnlogic/cost.hpp"
#include "nnlogic/dataset.hpp"
#include "nnlogic/qmodel.hpp"

namespace nnlogic {

enum class Task { kClassification, kRegression };
enum class Metric { kAccuracy, kMse, kBerProxy };

const char* to_string(Task t);
const char* to_string(Metric m);
/// Throws ConfigError for unknown names.
Task task_from_string(const std::string& s);
Metric metric_from_string(const std::string& s);
/// Whether larger values of the metric are better.
bool higher_is_better(Metric m);

struct FloatLayer {
  int in_features = 0;
  int out_features = 0;
  /// Latent weights, row-major [out][in].
  std::vector<double> weights;
  std::vector<double> bias;
  /// 1 where the weight is trainable, 0 where pruning froze it at 0. Empty
  /// means no mask.
  std::vector<std::uint8_t> mask;
  Activation activation = Activation::kRelu;
  /// Weight quantization step. 0 means max|W| / 127 recomputed every pass.
  double weight_scale = 0;
  /// Running maximum of the layer output magnitude, in real units.
  double act_range = 0;

  double effective_weight_scale() const;
  friend bool operator==(const FloatLayer&, const FloatLayer&) = default;
};

struct FloatMLP {
  std::vector<FloatLayer> layers;
  /// Real value of one input LSB inside the float model.
  double input_scale = 1.0 / 128.0;
  Task task = Task::kClassification;

  int input_count() const { return layers.empty() ? 0 : layers.front().in_features; }
  int output_count() const { return layers.empty() ? 0 : layers.back().out_features; }
  friend bool operator==(const FloatMLP&, const FloatMLP&) = default;
};

/// He-uniform initialization; arch lists layer widths, inputs first.
FloatMLP init_mlp(const std::vector<int>& arch, Task task, std::mt19937_64& rng);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Learning rate multiplied by decay_factor every decay_every epochs;
  /// 0 means a third of the epochs.
  int decay_every = 0;
  double decay_factor = 0.1;
  /// Momentum of the running activation ranges.
  double range_momentum = 0.9;
  std::uint64_t seed = 1;
  Metric metric = Metric::kAccuracy;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0;
  double val_metric = 0;
  int set_size = 256;
};

struct TrainResult {
  FloatMLP latent;
  QuantizedMLP model;
  std::vector<EpochLog> log;
};

/// Integer model the latent model currently computes. Accumulator widths are
/// the worst-case widths.
QuantizedMLP export_quantized(const FloatMLP& m, double data_input_scale = 1.0);

/// Trains `m` in place. Throws DivergenceError on a non-finite loss.
TrainResult train_qat(FloatMLP m, const Dataset& data, const TrainConfig& cfg);
/// Convenience: init_mlp with cfg.seed, then train_qat.
TrainResult train_qat(const Dataset& data, const std::vector<int>& arch, Task task, const TrainConfig& cfg);

/// Zeroes the given fraction of all weights with the smallest magnitude
/// (one global ranking, ties by position) and freezes them with the mask.
FloatMLP prune_unstructured(FloatMLP m, double sparsity);

/// Width needed by a sample of accumulator values once the largest
/// magnitudes beyond the nearest-rank quantile are dropped; at least 9.
int profile_width(std::span<const std::int64_t> sample, double quantile);

/// Profiles every neuron over the training split with unbounded
/// accumulators, writes the widths into `m` and returns them per layer.
std::vector<std::vector<int>> profile_adder_widths(QuantizedMLP& m, const Dataset& data, double quantile);

/// Closest element of `set` to w / scale; ties go to the smaller multiplier
/// area in `table`, then to the smaller magnitude, then the smaller value.
int project_to_set(double w, std::span<const int> set, double scale, const WeightAreaTable& table);

struct HatConfig {
  int initial_size = 40;
  int step = 10;
  /// Allowed shortfall of the validation metric against the QAT baseline.
  double epsilon = 0.01;
  /// Project weights in every forward pass (straight-through backward).
  bool project_forward = true;
  /// Replace latent weights by their projections at every epoch end.
  bool replace_at_epoch_end = true;
  /// Start every set size from the QAT weights instead of continuing.
  bool restart_each_size = false;
  /// Refit each layer's weight scale to the first set before training.
  bool fit_scale = true;
};

struct SelectionState {
  std::vector<int> selected;
  int iteration = 0;
  /// (set size, validation metric) after each set size.
  std::vector<std::pair<int, double>> history;
  double epsilon = 0;
  double baseline = 0;
  bool converged = false;
};

struct HatResult {
  FloatMLP latent;
  QuantizedMLP model;
  SelectionState state;
  std::vector<EpochLog> log;
};

/// Hardware-aware training from a QAT-trained model: sets of 40, 50, ...
/// cheapest weights until the validation metric is within epsilon of the
/// QAT baseline (or all 256 weights are allowed).
HatResult train_hat(const FloatMLP& m, const Dataset& data, const WeightAreaTable& table, const TrainConfig& cfg,
                    const HatConfig& hat);

/// Deterministic metric of the integer model over one split. Classification
/// predicts the lowest index among the largest outputs. The ber-proxy is the
/// fraction of samples whose predicted and true values differ in sign.
double evaluate(const QuantizedMLP& m, const Dataset& data, Metric metric, Split split = Split::kVal);

// Synthetic tasks. All samples get the default split assignment.

struct PlantedTask {
  Dataset data;
  QuantizedMLP teacher;
};

/// Labels uniform random inputs with a teacher whose weights are 0 or
/// powers of two; classification over the teacher's output count.
PlantedTask make_planted_teacher(const std::vector<int>& arch, std::size_t samples, std::uint64_t seed);
/// Two classes split by a random hyperplane with an empty margin around it.
Dataset make_separable_blobs(int features, std::size_t samples, std::uint64_t seed);
Dataset make_random_labels(int features, int classes, std::size_t samples, std::uint64_t seed);

std::string float_model_to_json(const FloatMLP& m);
FloatMLP float_model_from_json(const std::string& text);
void save_float_model(const FloatMLP& m, const std::filesystem::path& path);
FloatMLP load_float_model(const std::filesystem::path& path);

/// CSV with header epoch,loss,val_metric,set_size.
std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace nnlogic
