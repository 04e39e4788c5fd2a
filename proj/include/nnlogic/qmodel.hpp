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

// Integer MLP data model and the bit-exact fixed-point reference inference.
//
// Every generated circuit is checked against infer_reference(), so the
// arithmetic here is the contract: exact integer dot products, saturation
// into the profiled accumulator width, optional ReLU, then multiply-round-
// shift-clamp requantization back to 8 bits. Quantization is symmetric with
// zero point 0 everywhere.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nnlogic {

inline constexpr int kActivationWidth = 8;
inline constexpr int kMinAccWidth = 9;
inline constexpr int kMaxAccWidth = 40;
inline constexpr std::uint32_t kRequantMultiplierLimit = 1u << 15;
inline constexpr int kMaxRequantShift = 31;

enum class Activation { kNone, kRelu };

const char* to_string(Activation a);

/// Fixed-point scale m / 2^shift applied by the requantizer.
struct RequantParams {
  std::uint32_t m = 1;
  int shift = 0;
  int out_width = kActivationWidth;

  friend bool operator==(const RequantParams&, const RequantParams&) = default;
};

/// Minimum two's-complement width that can hold `v` (at least 1).
int bits_needed_signed(std::int64_t v);

/// Clamps `v` into the range of a `width`-bit two's-complement integer.
std::int64_t saturate(std::int64_t v, int width);

/// clamp_[-128,127]((acc * m + 2^(s-1)) >> s), arithmetic shift, no rounding
/// addend when s == 0. Requires |acc| < 2^40.
std::int8_t requantize(std::int64_t acc, const RequantParams& p);

/// Encodes 0 < scale < 1 as m / 2^s with m in [2^14, 2^15) whenever the
/// shift limit allows it. Throws ConfigError outside (0, 1).
RequantParams derive_requant_params(double scale);

struct QLayer {
  int in_features = 0;
  int out_features = 0;
  /// Row-major [out][in], each entry in [-128, 127].
  std::vector<int> weights;
  /// Saturation width of each neuron's accumulator.
  std::vector<int> acc_widths;
  /// Either one shared entry or one per output neuron.
  std::vector<RequantParams> requant;
  Activation activation = Activation::kRelu;
  /// Empty, or one constant per output neuron added into the accumulator.
  std::vector<std::int64_t> bias;

  int weight(int out, int in) const { return weights[static_cast<std::size_t>(out) * in_features + in]; }
  int& weight(int out, int in) { return weights[static_cast<std::size_t>(out) * in_features + in]; }
  const RequantParams& requant_for(int out) const {
    return requant.size() == 1 ? requant.front() : requant[out];
  }
  std::int64_t bias_for(int out) const { return bias.empty() ? 0 : bias[out]; }

  friend bool operator==(const QLayer&, const QLayer&) = default;
};

/// Layered integer network. Inputs and every layer output are 8-bit signed.
struct QuantizedMLP {
  std::string name;
  std::vector<QLayer> layers;
  /// Real value of one input LSB. Not used by the integer inference path.
  double input_scale = 1.0;
  /// Real value of one output LSB, used to read regression outputs.
  double output_scale = 1.0;

  int input_count() const { return layers.empty() ? 0 : layers.front().in_features; }
  int output_count() const { return layers.empty() ? 0 : layers.back().out_features; }

  /// Throws InvariantError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const QuantizedMLP&, const QuantizedMLP&) = default;
};

/// Builds a layer with zero weights, one shared identity requant (m=1, s=0)
/// and the minimum accumulator width that holds the worst-case sum.
QLayer make_layer(int in_features, int out_features, Activation act);

/// Smallest accumulator width that can never overflow for this neuron,
/// floored at kMinAccWidth.
int worst_case_acc_width(const QLayer& layer, int out);

/// Sets every accumulator width of the model to its worst-case width.
void fit_acc_widths(QuantizedMLP& model);

enum class AccumulatorMode { kSaturating, kUnbounded };

/// Raw accumulator values (sum of w*x plus bias, before saturation) of each
/// layer for one input. In kUnbounded mode no layer saturates, which is the
/// view profiling needs.
std::vector<std::vector<std::int64_t>> accumulator_trace(const QuantizedMLP& model,
                                                         std::span<const std::int8_t> x,
                                                         AccumulatorMode mode);

/// Bit-exact integer inference. Throws DimensionError on size mismatch.
std::vector<std::int8_t> infer_reference(const QuantizedMLP& model, std::span<const std::int8_t> x);

std::string model_to_json(const QuantizedMLP& model);
QuantizedMLP model_from_json(const std::string& text);
void save_model(const QuantizedMLP& model, const std::filesystem::path& path);
QuantizedMLP load_model(const std::filesystem::path& path);

}  // namespace nnlogic
