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

#include "nnlogic/synth.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "nnlogic/error.hpp"
#include "nnlogic/simplify.hpp"

namespace nnlogic {

CsdDigits csd_encode(std::int64_t w) {
  CsdDigits out;
  int pos = 0;
  while (w != 0) {
    if (w & 1) {
      // w mod 4 == 1 -> digit +1, w mod 4 == 3 -> digit -1.
      const int d = (w & 3) == 1 ? 1 : -1;
      out.push_back({pos, d});
      w -= d;
    }
    w >>= 1;
    ++pos;
  }
  return out;
}

int range_width(std::int64_t lo, std::int64_t hi) {
  return std::max(bits_needed_signed(lo), bits_needed_signed(hi));
}

namespace {

using Bits = std::vector<NetId>;

// The top bit of a word whose range excludes one sign is a known constant.
Word finish(Bits bits, std::int64_t lo, std::int64_t hi) {
  const int w = range_width(lo, hi);
  if (static_cast<int>(bits.size()) > w) bits.resize(static_cast<std::size_t>(w));
  if (lo >= 0) bits.back() = kConst0;
  if (hi < 0) bits.back() = kConst1;
  return Word{std::move(bits), lo, hi};
}

std::pair<NetId, NetId> full_adder(LogicBuilder& b, NetId x, NetId y, NetId c) {
  // With one constant operand the cell is a half adder (or its dual).
  std::array<NetId, 3> in = {x, y, c};
  for (int k = 0; k < 3; ++k) {
    if (in[k] != kConst0 && in[k] != kConst1) continue;
    const NetId u = in[(k + 1) % 3];
    const NetId v = in[(k + 2) % 3];
    if (in[k] == kConst0) return {b.xor2(u, v), b.and2(u, v)};
    return {b.xnor2(u, v), b.or2(u, v)};
  }
  const NetId p = b.xor2(x, y);
  return {b.xor2(p, c), b.mux2(x, c, p)};
}

Bits ripple(LogicBuilder& b, const Bits& x, const Bits& y, NetId carry) {
  Bits out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [s, c] = full_adder(b, x[i], y[i], carry);
    out[i] = s;
    carry = c;
  }
  return out;
}

Bits invert(LogicBuilder& b, Bits x) {
  for (NetId& bit : x) bit = b.inv(bit);
  return x;
}

Bits shifted(const Bits& x, int by, int width) {
  Bits out(static_cast<std::size_t>(width), kConst0);
  for (int i = by; i < width; ++i) out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i - by)];
  return out;
}

std::int64_t floor_shift(std::int64_t v, int s) { return s >= 63 ? (v < 0 ? -1 : 0) : (v >> s); }

}  // namespace

Word constant_word(std::int64_t value) {
  const int w = bits_needed_signed(value);
  Bits bits(static_cast<std::size_t>(w));
  for (int i = 0; i < w; ++i) bits[static_cast<std::size_t>(i)] = ((value >> i) & 1) ? kConst1 : kConst0;
  return Word{std::move(bits), value, value};
}

Word bus_word(std::span<const NetId> bits) {
  const int w = static_cast<int>(bits.size());
  if (w < 1 || w > 62) throw DimensionError("bus width " + std::to_string(w) + " is outside 1..62");
  return Word{Bits(bits.begin(), bits.end()), -(std::int64_t{1} << (w - 1)), (std::int64_t{1} << (w - 1)) - 1};
}

Word bus_word(std::span<const NetId> bits, std::int64_t lo, std::int64_t hi) {
  Word full = bus_word(bits);
  if (lo > hi || lo < full.lo || hi > full.hi) throw InvariantError("declared range does not fit the bus");
  return finish(std::move(full.bits), lo, hi);
}

std::vector<NetId> extend(const Word& x, int width) {
  if (width < range_width(x.lo, x.hi)) {
    throw InvariantError("cannot narrow a " + std::to_string(x.width()) + "-bit word to " + std::to_string(width));
  }
  Bits out(x.bits);
  out.resize(static_cast<std::size_t>(width), x.bits.back());
  return out;
}

Word add_words(LogicBuilder& b, const Word& x, const Word& y) {
  const std::int64_t lo = x.lo + y.lo;
  const std::int64_t hi = x.hi + y.hi;
  const int w = std::max({range_width(lo, hi), x.width(), y.width()});
  return finish(ripple(b, extend(x, w), extend(y, w), kConst0), lo, hi);
}

Word sub_words(LogicBuilder& b, const Word& x, const Word& y) {
  const std::int64_t lo = x.lo - y.hi;
  const std::int64_t hi = x.hi - y.lo;
  const int w = std::max({range_width(lo, hi), x.width(), y.width()});
  return finish(ripple(b, extend(x, w), invert(b, extend(y, w)), kConst1), lo, hi);
}

Word negate_word(LogicBuilder& b, const Word& x) { return sub_words(b, constant_word(0), x); }

CsdDigits binary_encode(std::int64_t w) {
  CsdDigits out;
  const int width = bits_needed_signed(w);
  for (int i = 0; i + 1 < width; ++i) {
    if ((w >> i) & 1) out.push_back({i, 1});
  }
  if (w < 0) out.push_back({width - 1, -1});
  return out;
}

namespace {

Word mult_digits(LogicBuilder& b, const Word& x, std::int64_t w, const CsdDigits& digits);

// For 8-bit weights the cheaper (in gate input pins) of the canonical and the
// plain two's-complement recoding, measured once on a full-range operand.
const CsdDigits& weight_digits(std::int64_t w) {
  static const std::vector<CsdDigits> table = [] {
    std::vector<CsdDigits> t;
    for (int v = -128; v < 128; ++v) {
      CsdDigits best = csd_encode(v);
      const CsdDigits alt = binary_encode(v);
      if (alt != best) {
        auto cells = [v](const CsdDigits& d) {
          Netlist n;
          LogicBuilder b(n);
          const Word y = mult_digits(b, bus_word(n.add_input("x", kActivationWidth)), v, d);
          n.add_output("y", y.bits);
          std::size_t pins = 0;
          for (const Cell& c : simplify(n).cells()) pins += static_cast<std::size_t>(arity(c.kind));
          return pins;
        };
        if (cells(alt) < cells(best)) best = alt;
      }
      t.push_back(std::move(best));
    }
    return t;
  }();
  return table[static_cast<std::size_t>(w + 128)];
}

}  // namespace

Word mult_const(LogicBuilder& b, const Word& x, std::int64_t w) {
  if (w >= -128 && w < 128) return mult_digits(b, x, w, weight_digits(w));
  return mult_digits(b, x, w, csd_encode(w));
}

namespace {

Word mult_digits(LogicBuilder& b, const Word& x, std::int64_t w, const CsdDigits& digits) {
  if (w == 0) return constant_word(0);
  const std::int64_t lo = std::min(x.lo * w, x.hi * w);
  const std::int64_t hi = std::max(x.lo * w, x.hi * w);
  // Shift-add modulo 2^width: the product fits, so wrapped partial sums are harmless.
  const int width = std::max(range_width(lo, hi), x.width());
  const Bits xe = extend(x, width);

  // Positive and negative digits are summed separately so that only one
  // subtraction (and one rank of inverters) is needed.
  auto group = [&](int sign) {
    Bits acc;
    for (const CsdDigit& d : digits) {
      if (d.sign != sign) continue;
      Bits term = shifted(xe, d.position, width);
      acc = acc.empty() ? std::move(term) : ripple(b, acc, term, kConst0);
    }
    return acc;
  };
  Bits pos = group(1);
  const Bits neg = group(-1);
  if (pos.empty()) pos.assign(static_cast<std::size_t>(width), kConst0);
  if (!neg.empty()) pos = ripple(b, pos, invert(b, neg), kConst1);
  return finish(std::move(pos), lo, hi);
}

}  // namespace

Word mult_generic(LogicBuilder& b, const Word& x, const Word& w) {
  const int n = x.width();
  const int m = w.width();
  if (n < 2 || m < 2) throw DimensionError("generic multiplier operands need at least 2 bits");
  const int width = n + m;
  const auto& xb = x.bits;
  const auto& wb = w.bits;
  auto at = [](Bits& row, int col, NetId net) { row[static_cast<std::size_t>(col)] = net; };

  // Baugh-Wooley: sign-weighted partial products enter complemented and the
  // correction constant 2^(n-1) + 2^(m-1) + 2^(n+m-1) is added as one row.
  std::vector<Bits> rows;
  for (int j = 0; j < m; ++j) {
    Bits row(static_cast<std::size_t>(width), kConst0);
    for (int i = 0; i < n; ++i) {
      const bool sx = i == n - 1;
      const bool sw = j == m - 1;
      const NetId pp = (sx != sw) ? b.nand2(xb[i], wb[j]) : b.and2(xb[i], wb[j]);
      at(row, i + j, pp);
    }
    rows.push_back(std::move(row));
  }
  const std::uint64_t mask = (width >= 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
  const std::uint64_t corr =
      ((std::uint64_t{1} << (n - 1)) + (std::uint64_t{1} << (m - 1)) + (std::uint64_t{1} << (width - 1))) & mask;
  Bits crow(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) crow[static_cast<std::size_t>(i)] = ((corr >> i) & 1) ? kConst1 : kConst0;

  Bits acc = rows[0];
  for (int j = 1; j < m; ++j) acc = ripple(b, acc, rows[static_cast<std::size_t>(j)], kConst0);
  acc = ripple(b, acc, crow, kConst0);

  const std::int64_t c[4] = {x.lo * w.lo, x.lo * w.hi, x.hi * w.lo, x.hi * w.hi};
  const std::int64_t lo = *std::min_element(c, c + 4);
  const std::int64_t hi = *std::max_element(c, c + 4);
  Word out{std::move(acc), lo, hi};
  if (lo >= 0) out.bits.back() = kConst0;
  if (hi < 0) out.bits.back() = kConst1;
  return out;
}

Word sum_words(LogicBuilder& b, std::vector<Word> operands) {
  if (operands.empty()) return constant_word(0);
  while (operands.size() > 1) {
    std::vector<Word> next;
    next.reserve((operands.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < operands.size(); i += 2) next.push_back(add_words(b, operands[i], operands[i + 1]));
    if (operands.size() % 2) next.push_back(std::move(operands.back()));
    operands = std::move(next);
  }
  return std::move(operands.front());
}

Word saturate_word(LogicBuilder& b, const Word& x, int width) {
  if (width < 2) throw DimensionError("saturation width must be at least 2");
  const std::int64_t min_v = -(std::int64_t{1} << (width - 1));
  const std::int64_t max_v = (std::int64_t{1} << (width - 1)) - 1;
  const std::int64_t lo = std::clamp(x.lo, min_v, max_v);
  const std::int64_t hi = std::clamp(x.hi, min_v, max_v);
  if (range_width(x.lo, x.hi) <= width) return Word{extend(x, width), x.lo, x.hi};

  const NetId sign = x.bits.back();
  NetId ovf = kConst0;
  for (int i = width - 1; i < x.width() - 1; ++i) ovf = b.or2(ovf, b.xor2(x.bits[static_cast<std::size_t>(i)], sign));
  const NetId fill = b.inv(sign);
  Bits out(static_cast<std::size_t>(width));
  for (int i = 0; i < width - 1; ++i) out[static_cast<std::size_t>(i)] = b.mux2(x.bits[static_cast<std::size_t>(i)], fill, ovf);
  out.back() = b.mux2(x.bits[static_cast<std::size_t>(width - 1)], sign, ovf);
  Word r{std::move(out), lo, hi};
  if (lo >= 0) r.bits.back() = kConst0;
  if (hi < 0) r.bits.back() = kConst1;
  return r;
}

Word relu_word(LogicBuilder& b, const Word& x) {
  if (x.lo >= 0) return x;
  if (x.hi <= 0) return constant_word(0);
  const NetId keep = b.inv(x.bits.back());
  Bits out(x.bits.size());
  for (std::size_t i = 0; i + 1 < x.bits.size(); ++i) out[i] = b.and2(x.bits[i], keep);
  out.back() = kConst0;
  return finish(std::move(out), 0, x.hi);
}

Word requant_word(LogicBuilder& b, const Word& acc, const RequantParams& p) {
  if (p.m == 0 || p.m >= kRequantMultiplierLimit || p.shift < 0 || p.shift > kMaxRequantShift) {
    throw InvariantError("requant parameters out of range");
  }
  Word t = mult_const(b, acc, p.m);
  if (p.shift > 0) t = add_words(b, t, constant_word(std::int64_t{1} << (p.shift - 1)));
  const std::int64_t lo = floor_shift(t.lo, p.shift);
  const std::int64_t hi = floor_shift(t.hi, p.shift);
  const int w = range_width(lo, hi);
  Bits bits(static_cast<std::size_t>(w));
  for (int k = 0; k < w; ++k) {
    const int idx = p.shift + k;
    bits[static_cast<std::size_t>(k)] = idx < t.width() ? t.bits[static_cast<std::size_t>(idx)] : t.bits.back();
  }
  return saturate_word(b, finish(std::move(bits), lo, hi), p.out_width);
}

// --- blocks -------------------------------------------------------------------

namespace {

Netlist finish_block(Netlist& n, const Word& y, int width) {
  n.add_output("y", extend(y, width));
  return simplify(n);
}

}  // namespace

Netlist gen_const_mult(std::int64_t w, int in_width) {
  if (in_width < 2) throw DimensionError("constant multiplier input needs at least 2 bits");
  Netlist n;
  LogicBuilder b(n);
  const Word x = bus_word(n.add_input("x", in_width));
  const Word y = mult_const(b, x, w);
  return finish_block(n, y, y.width());
}

Netlist gen_generic_mult(int in_width, int w_width) {
  Netlist n;
  LogicBuilder b(n);
  const Word x = bus_word(n.add_input("x", in_width));
  const Word w = bus_word(n.add_input("w", w_width));
  const Word y = mult_generic(b, x, w);
  n.add_output("y", y.bits);
  return n;
}

Netlist gen_adder_tree(std::span<const int> operand_widths, int out_width, bool saturate) {
  if (operand_widths.empty()) throw DimensionError("adder tree needs at least one operand");
  Netlist n;
  LogicBuilder b(n);
  std::vector<Word> ops;
  for (std::size_t i = 0; i < operand_widths.size(); ++i) {
    ops.push_back(bus_word(n.add_input("a" + std::to_string(i), operand_widths[i])));
  }
  Word sum = sum_words(b, std::move(ops));
  if (saturate) {
    sum = saturate_word(b, sum, out_width);
  } else if (range_width(sum.lo, sum.hi) > out_width) {
    throw ConfigError("adder tree output of " + std::to_string(out_width) + " bits cannot hold the worst case of " +
                      std::to_string(range_width(sum.lo, sum.hi)) + " bits");
  }
  return finish_block(n, sum, out_width);
}

Netlist gen_relu(int width) {
  if (width < 2) throw DimensionError("relu needs at least 2 bits");
  Netlist n;
  LogicBuilder b(n);
  const Word x = bus_word(n.add_input("x", width));
  return finish_block(n, relu_word(b, x), width);
}

Netlist gen_requant(const RequantParams& p, int in_width) {
  Netlist n;
  LogicBuilder b(n);
  const Word x = bus_word(n.add_input("x", in_width));
  return finish_block(n, requant_word(b, x, p), p.out_width);
}

Netlist tie_input(const Netlist& n, std::string_view bus, std::int64_t value) {
  const std::size_t tied = n.input_index(bus);
  Netlist out;
  out.set_latency(n.latency());
  out.set_stage_count(n.stage_count());
  std::vector<NetId> map(n.net_count(), kNoNet);
  map[kConst0] = kConst0;
  map[kConst1] = kConst1;
  for (std::size_t i = 0; i < n.inputs().size(); ++i) {
    const Bus& in = n.inputs()[i];
    if (i == tied) {
      for (std::size_t k = 0; k < in.bits.size(); ++k) map[in.bits[k]] = ((value >> k) & 1) ? kConst1 : kConst0;
      continue;
    }
    auto bits = out.add_input(in.name, static_cast<int>(in.bits.size()));
    for (std::size_t k = 0; k < bits.size(); ++k) map[in.bits[k]] = bits[k];
  }
  for (const FlipFlop& f : n.flops()) map[f.q] = out.add_flop(kConst0, f.stage);
  for (std::uint32_t ci : topological_order(n)) {
    const Cell& c = n.cell(ci);
    std::array<NetId, 3> ins{};
    for (int p = 0; p < arity(c.kind); ++p) ins[p] = map[c.inputs[p]];
    map[c.output] = out.add_cell(c.kind, std::span<const NetId>(ins.data(), arity(c.kind)), c.stage);
  }
  for (std::size_t i = 0; i < n.flops().size(); ++i) out.set_flop_input(i, map[n.flop(i).d]);
  for (const Bus& o : n.outputs()) {
    Bits bits;
    for (NetId net : o.bits) bits.push_back(map[net]);
    out.add_output(o.name, std::move(bits));
  }
  return simplify(out);
}

// --- network ------------------------------------------------------------------

FlattenResult flatten(const QuantizedMLP& model, const FlattenOptions& options) {
  model.validate();
  FlattenResult result;
  Netlist& n = result.netlist;
  LogicBuilder b(n);
  const bool baseline = options.style == BuildStyle::kBaseline;

  std::vector<Word> act;
  for (int i = 0; i < model.input_count(); ++i) act.push_back(bus_word(n.add_input("x" + std::to_string(i), kActivationWidth)));

  const int layers = static_cast<int>(model.layers.size());
  for (int l = 0; l < layers; ++l) {
    const QLayer& layer = model.layers[static_cast<std::size_t>(l)];
    b.set_stage(l);
    std::vector<Word> next;
    for (int j = 0; j < layer.out_features; ++j) {
      if (!options.share_across_neurons) b.clear_hash_scope();
      std::vector<Word> terms;
      for (int i = 0; i < layer.in_features; ++i) {
        const int w = layer.weight(j, i);
        if (baseline) {
          Bits reg(kActivationWidth);
          for (int k = 0; k < kActivationWidth; ++k) reg[k] = n.add_flop(((w >> k) & 1) ? kConst1 : kConst0, l);
          terms.push_back(mult_generic(b, Word{extend(act[i], kActivationWidth), act[i].lo, act[i].hi}, bus_word(reg)));
        } else {
          if (w == 0) continue;
          terms.push_back(mult_const(b, act[i], w));
        }
        ++result.multiplier_blocks;
      }
      if (layer.bias_for(j) != 0) terms.push_back(constant_word(layer.bias_for(j)));
      Word acc = saturate_word(b, sum_words(b, std::move(terms)), layer.acc_widths[j]);
      if (layer.activation == Activation::kRelu) acc = relu_word(b, acc);
      const Word q = requant_word(b, acc, layer.requant_for(j));
      Bits regs(kActivationWidth);
      const Bits d = extend(q, kActivationWidth);
      for (int k = 0; k < kActivationWidth; ++k) regs[k] = n.add_flop(d[k], l);
      // Flops hold 0 after reset, so 0 stays inside the declared range.
      next.push_back(Word{std::move(regs), std::min<std::int64_t>(q.lo, 0), std::max<std::int64_t>(q.hi, 0)});
      if (next.back().lo >= 0) next.back().bits.back() = kConst0;
    }
    act = std::move(next);
  }
  for (std::size_t j = 0; j < act.size(); ++j) n.add_output("y" + std::to_string(j), act[j].bits);
  n.set_latency(layers);
  n.set_stage_count(layers);
  result.warmup = baseline ? 1 : 0;
  if (options.simplify) n = simplify(n);
  return result;
}

}  // namespace nnlogic
