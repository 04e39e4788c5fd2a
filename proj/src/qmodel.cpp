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

#include "nnlogic/qmodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nnlogic/error.hpp"

namespace nnlogic {

using json = nlohmann::json;

const char* to_string(Activation a) { return a == Activation::kRelu ? "relu" : "none"; }

int bits_needed_signed(std::int64_t v) {
  const auto magnitude = static_cast<std::uint64_t>(v < 0 ? ~v : v);
  return std::bit_width(magnitude) + 1;
}

std::int64_t saturate(std::int64_t v, int width) {
  if (width >= 64) return v;
  const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
  const std::int64_t lo = -hi - 1;
  return std::clamp(v, lo, hi);
}

std::int8_t requantize(std::int64_t acc, const RequantParams& p) {
  std::int64_t v = acc * static_cast<std::int64_t>(p.m);
  if (p.shift > 0) v += std::int64_t{1} << (p.shift - 1);
  v >>= p.shift;
  return static_cast<std::int8_t>(saturate(v, p.out_width));
}

RequantParams derive_requant_params(double scale) {
  if (!(scale > 0.0 && scale < 1.0)) {
    std::ostringstream msg;
    msg << "requantization scale must lie in (0, 1), got " << scale;
    throw ConfigError(msg.str());
  }
  int exponent = 0;
  std::frexp(scale, &exponent);  // scale in [2^(e-1), 2^e)
  RequantParams p;
  p.shift = std::min(15 - exponent, kMaxRequantShift);
  auto m = static_cast<std::uint64_t>(std::llround(std::ldexp(scale, p.shift)));
  if (m >= kRequantMultiplierLimit) {
    m >>= 1;
    --p.shift;
  }
  if (m == 0) {
    std::ostringstream msg;
    msg << "requantization scale " << scale << " underflows a 2^-" << kMaxRequantShift << " grid";
    throw ConfigError(msg.str());
  }
  p.m = static_cast<std::uint32_t>(m);
  return p;
}

QLayer make_layer(int in_features, int out_features, Activation act) {
  QLayer layer;
  layer.in_features = in_features;
  layer.out_features = out_features;
  layer.weights.assign(static_cast<std::size_t>(in_features) * out_features, 0);
  layer.acc_widths.assign(out_features, kMinAccWidth);
  layer.requant = {RequantParams{}};
  layer.activation = act;
  return layer;
}

int worst_case_acc_width(const QLayer& layer, int out) {
  // Inputs span [-128, 127]; the extremes pick the sign that maximises each term.
  std::int64_t hi = layer.bias_for(out);
  std::int64_t lo = hi;
  for (int i = 0; i < layer.in_features; ++i) {
    const std::int64_t w = layer.weight(out, i);
    hi += std::max(w * 127, w * -128);
    lo += std::min(w * 127, w * -128);
  }
  return std::max({bits_needed_signed(hi), bits_needed_signed(lo), kMinAccWidth});
}

void fit_acc_widths(QuantizedMLP& model) {
  for (auto& layer : model.layers) {
    for (int j = 0; j < layer.out_features; ++j) layer.acc_widths[j] = worst_case_acc_width(layer, j);
  }
}

void QuantizedMLP::validate() const {
  auto fail = [&](std::size_t li, const std::string& what) {
    std::ostringstream msg;
    msg << "model '" << name << "' layer " << li << ": " << what;
    throw InvariantError(msg.str());
  };
  if (layers.empty()) throw InvariantError("model '" + name + "' has no layers");
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const QLayer& l = layers[li];
    if (l.in_features < 1 || l.out_features < 1) fail(li, "empty weight matrix");
    if (l.weights.size() != static_cast<std::size_t>(l.in_features) * l.out_features) {
      fail(li, "weight matrix size does not match its dimensions");
    }
    for (int w : l.weights) {
      if (w < -128 || w > 127) fail(li, "weight " + std::to_string(w) + " outside [-128, 127]");
    }
    if (l.acc_widths.size() != static_cast<std::size_t>(l.out_features)) {
      fail(li, "expected one accumulator width per neuron");
    }
    for (int w : l.acc_widths) {
      if (w < kMinAccWidth || w > kMaxAccWidth) {
        fail(li, "accumulator width " + std::to_string(w) + " outside [9, 40]");
      }
    }
    if (l.requant.size() != 1 && l.requant.size() != static_cast<std::size_t>(l.out_features)) {
      fail(li, "requant parameters must be shared or per neuron");
    }
    for (const auto& p : l.requant) {
      if (p.m >= kRequantMultiplierLimit) fail(li, "requant multiplier exceeds 15 bits");
      if (p.shift < 0 || p.shift > kMaxRequantShift) fail(li, "requant shift outside [0, 31]");
      if (p.out_width != kActivationWidth) fail(li, "requant output width must be 8");
    }
    if (!l.bias.empty()) {
      if (l.bias.size() != static_cast<std::size_t>(l.out_features)) fail(li, "bias size mismatch");
      for (auto b : l.bias) {
        if (b < -(std::int64_t{1} << 31) || b >= (std::int64_t{1} << 31)) fail(li, "bias outside 32 bits");
      }
    }
    if (li + 1 < layers.size() && layers[li + 1].in_features != l.out_features) {
      fail(li, "output count differs from next layer's input count");
    }
  }
  if (layers.back().activation != Activation::kNone) {
    fail(layers.size() - 1, "final layer must not have an activation");
  }
}

std::vector<std::vector<std::int64_t>> accumulator_trace(const QuantizedMLP& model,
                                                         std::span<const std::int8_t> x,
                                                         AccumulatorMode mode) {
  if (static_cast<int>(x.size()) != model.input_count()) {
    std::ostringstream msg;
    msg << "input has " << x.size() << " entries, model expects " << model.input_count();
    throw DimensionError(msg.str());
  }
  std::vector<std::vector<std::int64_t>> trace;
  trace.reserve(model.layers.size());
  std::vector<std::int8_t> act(x.begin(), x.end());
  for (const QLayer& layer : model.layers) {
    std::vector<std::int64_t> acc(layer.out_features);
    std::vector<std::int8_t> next(layer.out_features);
    for (int j = 0; j < layer.out_features; ++j) {
      std::int64_t sum = layer.bias_for(j);
      const int* row = &layer.weights[static_cast<std::size_t>(j) * layer.in_features];
      for (int i = 0; i < layer.in_features; ++i) sum += static_cast<std::int64_t>(row[i]) * act[i];
      acc[j] = sum;
      std::int64_t v = mode == AccumulatorMode::kSaturating ? saturate(sum, layer.acc_widths[j]) : sum;
      if (layer.activation == Activation::kRelu) v = std::max<std::int64_t>(v, 0);
      next[j] = requantize(v, layer.requant_for(j));
    }
    trace.push_back(std::move(acc));
    act = std::move(next);
  }
  return trace;
}

std::vector<std::int8_t> infer_reference(const QuantizedMLP& model, std::span<const std::int8_t> x) {
  if (static_cast<int>(x.size()) != model.input_count()) {
    std::ostringstream msg;
    msg << "input has " << x.size() << " entries, model expects " << model.input_count();
    throw DimensionError(msg.str());
  }
  std::vector<std::int8_t> act(x.begin(), x.end());
  std::vector<std::int8_t> next;
  for (const QLayer& layer : model.layers) {
    next.assign(layer.out_features, 0);
    for (int j = 0; j < layer.out_features; ++j) {
      std::int64_t sum = layer.bias_for(j);
      const int* row = &layer.weights[static_cast<std::size_t>(j) * layer.in_features];
      for (int i = 0; i < layer.in_features; ++i) sum += static_cast<std::int64_t>(row[i]) * act[i];
      sum = saturate(sum, layer.acc_widths[j]);
      if (layer.activation == Activation::kRelu) sum = std::max<std::int64_t>(sum, 0);
      next[j] = requantize(sum, layer.requant_for(j));
    }
    act.swap(next);
  }
  return act;
}

// --- serialization ---------------------------------------------------------

namespace {

json requant_to_json(const RequantParams& p) { return json{{"m", p.m}, {"s", p.shift}}; }

template <typename T>
T get_integer(const json& j, const char* what) {
  if (!j.is_number_integer()) throw FormatError(std::string("expected an integer for ") + what);
  return j.get<T>();
}

RequantParams requant_from_json(const json& j) {
  if (!j.is_object() || !j.contains("m") || !j.contains("s")) {
    throw FormatError("requant entry must be an object with integer fields m and s");
  }
  RequantParams p;
  const auto m = get_integer<std::int64_t>(j["m"], "requant.m");
  if (m < 0 || m >= kRequantMultiplierLimit) throw InvariantError("requant.m outside [0, 2^15)");
  p.m = static_cast<std::uint32_t>(m);
  p.shift = get_integer<int>(j["s"], "requant.s");
  return p;
}

}  // namespace

std::string model_to_json(const QuantizedMLP& model) {
  json layers = json::array();
  for (const QLayer& l : model.layers) {
    json rows = json::array();
    for (int j = 0; j < l.out_features; ++j) {
      rows.push_back(std::vector<int>(l.weights.begin() + static_cast<std::ptrdiff_t>(j) * l.in_features,
                                      l.weights.begin() + static_cast<std::ptrdiff_t>(j + 1) * l.in_features));
    }
    json layer{{"weights", rows}, {"acc_widths", l.acc_widths}, {"activation", to_string(l.activation)}};
    if (l.requant.size() == 1) {
      layer["requant"] = requant_to_json(l.requant.front());
    } else {
      json arr = json::array();
      for (const auto& p : l.requant) arr.push_back(requant_to_json(p));
      layer["requant"] = arr;
    }
    if (!l.bias.empty()) layer["bias"] = l.bias;
    layers.push_back(std::move(layer));
  }
  json doc{{"name", model.name}, {"layers", layers}};
  if (model.input_scale != 1.0) doc["input_scale"] = model.input_scale;
  if (model.output_scale != 1.0) doc["output_scale"] = model.output_scale;
  return doc.dump(1) + "\n";
}

QuantizedMLP model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array()) {
    throw FormatError("model document needs a 'layers' array");
  }
  QuantizedMLP model;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw FormatError("'name' must be a string");
    model.name = doc["name"].get<std::string>();
  }
  if (doc.contains("input_scale")) model.input_scale = doc["input_scale"].get<double>();
  if (doc.contains("output_scale")) model.output_scale = doc["output_scale"].get<double>();

  for (const json& jl : doc["layers"]) {
    if (!jl.is_object() || !jl.contains("weights") || !jl["weights"].is_array()) {
      throw FormatError("each layer needs a 'weights' matrix");
    }
    QLayer l;
    const json& rows = jl["weights"];
    l.out_features = static_cast<int>(rows.size());
    for (const json& row : rows) {
      if (!row.is_array()) throw FormatError("weight rows must be arrays");
      if (l.weights.empty() && l.in_features == 0) l.in_features = static_cast<int>(row.size());
      if (static_cast<int>(row.size()) != l.in_features) throw InvariantError("ragged weight matrix");
      for (const json& w : row) l.weights.push_back(get_integer<int>(w, "weight"));
    }
    if (!jl.contains("acc_widths") || !jl["acc_widths"].is_array()) throw FormatError("layer needs 'acc_widths'");
    for (const json& w : jl["acc_widths"]) l.acc_widths.push_back(get_integer<int>(w, "acc_width"));
    if (!jl.contains("requant")) throw FormatError("layer needs 'requant'");
    if (jl["requant"].is_array()) {
      for (const json& p : jl["requant"]) l.requant.push_back(requant_from_json(p));
    } else {
      l.requant.push_back(requant_from_json(jl["requant"]));
    }
    const std::string act = jl.value("activation", "none");
    if (act == "relu") {
      l.activation = Activation::kRelu;
    } else if (act == "none") {
      l.activation = Activation::kNone;
    } else {
      throw FormatError("unknown activation '" + act + "'");
    }
    if (jl.contains("bias")) {
      if (!jl["bias"].is_array()) throw FormatError("'bias' must be an array");
      for (const json& b : jl["bias"]) l.bias.push_back(get_integer<std::int64_t>(b, "bias"));
    }
    model.layers.push_back(std::move(l));
  }
  model.validate();
  return model;
}

void save_model(const QuantizedMLP& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model file " + path.string());
  out << model_to_json(model);
}

QuantizedMLP load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace nnlogic
