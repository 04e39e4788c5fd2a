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

// Arithmetic generators and the network flattener.
//
// Generators work on Words: two's-complement bit vectors inside a netlist
// under construction, annotated with the exact range of values they can
// carry. The range sets every adder width, so no bit is built that can only
// ever hold a copy of the sign.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nnlogic/logic_builder.hpp"
#include "nnlogic/netlist.hpp"
#include "nnlogic/qmodel.hpp"

namespace nnlogic {

struct CsdDigit {
  int position = 0;
  int sign = 1;
  friend bool operator==(const CsdDigit&, const CsdDigit&) = default;
};
using CsdDigits = std::vector<CsdDigit>;

/// Canonical signed-digit form, lowest position first.
CsdDigits csd_encode(std::int64_t w);
/// Plain two's-complement digits: +1 per set bit, -1 for the sign bit.
CsdDigits binary_encode(std::int64_t w);

struct Word {
  std::vector<NetId> bits;
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  int width() const { return static_cast<int>(bits.size()); }
};

/// Smallest two's-complement width holding every value in [lo, hi].
int range_width(std::int64_t lo, std::int64_t hi);

Word constant_word(std::int64_t value);
/// A bus read as a full-range signed value.
Word bus_word(std::span<const NetId> bits);
/// Same word with explicit range, e.g. for values known to be non-negative.
Word bus_word(std::span<const NetId> bits, std::int64_t lo, std::int64_t hi);
/// Sign-extends (or, if the range allows it, truncates) to `width` bits.
std::vector<NetId> extend(const Word& x, int width);

Word add_words(LogicBuilder& b, const Word& x, const Word& y);
Word sub_words(LogicBuilder& b, const Word& x, const Word& y);
Word negate_word(LogicBuilder& b, const Word& x);
/// Shift-add constant multiplier. 8-bit weights use whichever of the CSD and
/// the two's-complement recoding needs fewer gate input pins; wider constants use CSD.
Word mult_const(LogicBuilder& b, const Word& x, std::int64_t w);
/// Baugh-Wooley array multiplier of two full-width signed operands.
Word mult_generic(LogicBuilder& b, const Word& x, const Word& w);
/// Balanced binary tree of ripple-carry adders; exact.
Word sum_words(LogicBuilder& b, std::vector<Word> operands);
/// Clamps into the `width`-bit two's-complement range.
Word saturate_word(LogicBuilder& b, const Word& x, int width);
Word relu_word(LogicBuilder& b, const Word& x);
/// Multiply by m, add the rounding constant, drop `shift` bits, clamp.
Word requant_word(LogicBuilder& b, const Word& acc, const RequantParams& p);

// Stand-alone blocks. Single-operand blocks read bus "x" and drive bus "y".

/// w * x for in_width-bit signed x, simplified. Output width is the width of
/// the worst-case product.
Netlist gen_const_mult(std::int64_t w, int in_width);
/// x * w for two signed buses "x" and "w"; output in_width + w_width bits.
Netlist gen_generic_mult(int in_width, int w_width);
/// Inputs a0..a{k-1}. Without saturation out_width must hold the worst case.
Netlist gen_adder_tree(std::span<const int> operand_widths, int out_width, bool saturate);
Netlist gen_relu(int width);
Netlist gen_requant(const RequantParams& p, int in_width);

/// Replaces input bus `bus` by the constant `value` and simplifies.
Netlist tie_input(const Netlist& n, std::string_view bus, std::int64_t value);

enum class BuildStyle {
  /// Weights folded into constant multipliers; zero weights emit nothing.
  kEmbedded,
  /// Generic multipliers fed from weight registers, every weight present.
  kBaseline,
};

struct FlattenOptions {
  BuildStyle style = BuildStyle::kEmbedded;
  /// Structural hashing across neurons (and layers).
  bool share_across_neurons = true;
  bool simplify = true;
};

struct FlattenResult {
  Netlist netlist;
  /// Number of multiplier instances generated.
  std::size_t multiplier_blocks = 0;
  /// Cycles after reset before outputs are valid beyond the latency. Weight
  /// registers of the baseline style need one cycle to load.
  std::size_t warmup = 0;
};

/// Input buses x0..x{n-1} and output buses y0..y{m-1}, all 8 bits. One rank
/// of flops closes every layer; cells and flops carry the layer index as
/// their stage, and latency equals the layer count.
FlattenResult flatten(const QuantizedMLP& model, const FlattenOptions& options = {});
inline Netlist flatten_network(const QuantizedMLP& model) { return flatten(model).netlist; }

}  // namespace nnlogic
