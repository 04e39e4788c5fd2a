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

#include "nnlogic/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "nnlogic/error.hpp"

namespace nnlogic {

const char* to_string(Task t) { return t == Task::kClassification ? "classification" : "regression"; }

const char* to_string(Metric m) {
  switch (m) {
    case Metric::kAccuracy: return "accuracy";
    case Metric::kMse: return "mse";
    case Metric::kBerProxy: return "ber-proxy";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "classification") return Task::kClassification;
  if (s == "regression") return Task::kRegression;
  throw ConfigError("unknown task '" + s + "' (expected classification or regression)");
}

Metric metric_from_string(const std::string& s) {
  if (s == "accuracy") return Metric::kAccuracy;
  if (s == "mse") return Metric::kMse;
  if (s == "ber-proxy" || s == "ber") return Metric::kBerProxy;
  throw ConfigError("unknown metric '" + s + "' (expected accuracy, mse or ber-proxy)");
}

bool higher_is_better(Metric m) { return m == Metric::kAccuracy; }

double FloatLayer::effective_weight_scale() const {
  if (weight_scale > 0) return weight_scale;
  double mx = 0;
  for (double w : weights) mx = std::max(mx, std::abs(w));
  return mx > 0 ? mx / 127.0 : 1.0 / 127.0;
}

FloatMLP init_mlp(const std::vector<int>& arch, Task task, std::mt19937_64& rng) {
  if (arch.size() < 2) throw ConfigError("architecture needs at least an input and an output width");
  for (int w : arch) {
    if (w < 1) throw ConfigError("layer widths must be positive");
  }
  if (task == Task::kRegression && arch.back() != 1) throw ConfigError("regression models have one output");
  FloatMLP m;
  m.task = task;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    FloatLayer layer;
    layer.in_features = arch[l];
    layer.out_features = arch[l + 1];
    layer.activation = l + 2 == arch.size() ? Activation::kNone : Activation::kRelu;
    const double limit = std::sqrt(6.0 / arch[l]);
    std::uniform_real_distribution<double> u(-limit, limit);
    layer.weights.resize(static_cast<std::size_t>(arch[l]) * arch[l + 1]);
    for (double& w : layer.weights) w = u(rng);
    layer.bias.assign(arch[l + 1], 0.0);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

namespace {

constexpr double kMaxRequantScale = 0.999;
constexpr double kMinRequantScale = 1.0 / (1u << 30);
constexpr std::int64_t kBiasLimit = (std::int64_t{1} << 31) - 1;

void check_model(const FloatMLP& m) {
  if (m.layers.empty()) throw InvariantError("float model has no layers");
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const FloatLayer& L = m.layers[l];
    const auto n = static_cast<std::size_t>(L.in_features) * L.out_features;
    if (L.in_features < 1 || L.out_features < 1 || L.weights.size() != n ||
        L.bias.size() != static_cast<std::size_t>(L.out_features) || (!L.mask.empty() && L.mask.size() != n)) {
      throw InvariantError("float layer " + std::to_string(l) + " has inconsistent dimensions");
    }
    if (l > 0 && m.layers[l - 1].out_features != L.in_features) {
      throw InvariantError("float layer " + std::to_string(l) + " does not match its predecessor");
    }
  }
}

// Selected weights with their areas, for projection.
struct WeightSet {
  std::vector<int> values;
  std::array<double, 256> area{};
};

int project_value(double v, const WeightSet& s) {
  int best = s.values.front();
  double best_d = std::abs(v - best);
  for (int c : s.values) {
    const double d = std::abs(v - c);
    if (d < best_d) {
      best = c;
      best_d = d;
      continue;
    }
    if (d > best_d) continue;
    const double ac = s.area[static_cast<std::size_t>(c + 128)];
    const double ab = s.area[static_cast<std::size_t>(best + 128)];
    if (ac < ab || (ac == ab && (std::abs(c) < std::abs(best) || (std::abs(c) == std::abs(best) && c < best)))) {
      best = c;
    }
  }
  return best;
}

// Integer view of one layer as the forward pass sees it.
struct LayerQ {
  double s_w = 1;
  double s_in = 1;
  double s_out = 1;
  std::vector<int> wq;
  std::vector<std::int64_t> bias;
  RequantParams rq;
};

std::vector<LayerQ> quantize(const FloatMLP& m, const WeightSet* set) {
  std::vector<LayerQ> out(m.layers.size());
  double s_in = m.input_scale;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const FloatLayer& L = m.layers[l];
    LayerQ& q = out[l];
    q.s_w = L.effective_weight_scale();
    q.s_in = s_in;
    q.wq.resize(L.weights.size());
    for (std::size_t k = 0; k < L.weights.size(); ++k) {
      if (!L.mask.empty() && !L.mask[k]) {
        q.wq[k] = 0;
        continue;
      }
      const double v = L.weights[k] / q.s_w;
      q.wq[k] = set ? project_value(v, *set) : static_cast<int>(std::clamp(std::nearbyint(v), -128.0, 127.0));
    }
    const double unit = q.s_w * s_in;
    q.bias.resize(L.bias.size());
    for (std::size_t j = 0; j < L.bias.size(); ++j) {
      const double b = std::nearbyint(L.bias[j] / unit);
      q.bias[j] = static_cast<std::int64_t>(std::clamp(b, -static_cast<double>(kBiasLimit), static_cast<double>(kBiasLimit)));
    }
    const double range = L.act_range > 0 ? L.act_range : 1.0;
    const double ratio = std::clamp(unit / (range / 127.0), kMinRequantScale, kMaxRequantScale);
    q.rq = derive_requant_params(ratio);
    q.s_out = unit / std::ldexp(static_cast<double>(q.rq.m), -q.rq.shift);
    s_in = q.s_out;
  }
  return out;
}

QuantizedMLP to_integer(const FloatMLP& m, const std::vector<LayerQ>& q, double data_input_scale) {
  QuantizedMLP out;
  out.name = "mlp";
  out.input_scale = data_input_scale;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    QLayer layer = make_layer(m.layers[l].in_features, m.layers[l].out_features, m.layers[l].activation);
    layer.weights = q[l].wq;
    layer.requant = {q[l].rq};
    if (std::any_of(q[l].bias.begin(), q[l].bias.end(), [](std::int64_t b) { return b != 0; })) layer.bias = q[l].bias;
    out.layers.push_back(std::move(layer));
  }
  out.output_scale = q.back().s_out;
  fit_acc_widths(out);
  out.validate();
  return out;
}

WeightSet make_set(std::span<const int> values, const WeightAreaTable& table) {
  if (values.empty()) throw ConfigError("weight set is empty");
  WeightSet s;
  s.values.assign(values.begin(), values.end());
  for (int v : s.values) {
    if (v < -128 || v > 127) throw ConfigError("weight set entry " + std::to_string(v) + " outside [-128, 127]");
  }
  s.area.fill(std::numeric_limits<double>::infinity());
  for (const WeightArea& e : table.entries) {
    if (e.weight >= -128 && e.weight < 128) s.area[static_cast<std::size_t>(e.weight + 128)] = e.area;
  }
  return s;
}

struct Trace {
  // Integer input activations of every layer, then the final outputs.
  std::vector<std::vector<int>> act;
  // Real pre-activation of every layer.
  std::vector<std::vector<double>> z;
};

void forward(const FloatMLP& m, const std::vector<LayerQ>& q, std::span<const std::int8_t> x, Trace& t) {
  t.act.resize(m.layers.size() + 1);
  t.z.resize(m.layers.size());
  t.act[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const FloatLayer& L = m.layers[l];
    const LayerQ& Q = q[l];
    const auto& in = t.act[l];
    auto& z = t.z[l];
    auto& out = t.act[l + 1];
    z.resize(L.out_features);
    out.resize(L.out_features);
    for (int j = 0; j < L.out_features; ++j) {
      std::int64_t acc = Q.bias[j];
      const int* row = &Q.wq[static_cast<std::size_t>(j) * L.in_features];
      for (int i = 0; i < L.in_features; ++i) acc += static_cast<std::int64_t>(row[i]) * in[i];
      z[j] = static_cast<double>(acc) * Q.s_w * Q.s_in;
      if (L.activation == Activation::kRelu) acc = std::max<std::int64_t>(acc, 0);
      out[j] = requantize(acc, Q.rq);
    }
  }
}

struct Adam {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  long step = 0;

  explicit Adam(const FloatMLP& m) {
    for (const FloatLayer& L : m.layers) {
      mw.emplace_back(L.weights.size(), 0.0);
      vw.emplace_back(L.weights.size(), 0.0);
      mb.emplace_back(L.bias.size(), 0.0);
      vb.emplace_back(L.bias.size(), 0.0);
    }
  }
};

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& mo, std::vector<double>& ve,
                 double lr, const TrainConfig& cfg, long step, const std::vector<std::uint8_t>* mask) {
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (mask && !mask->empty() && !(*mask)[k]) {
      p[k] = 0;
      continue;
    }
    mo[k] = cfg.beta1 * mo[k] + (1 - cfg.beta1) * g[k];
    ve[k] = cfg.beta2 * ve[k] + (1 - cfg.beta2) * g[k] * g[k];
    p[k] -= lr * (mo[k] / c1) / (std::sqrt(ve[k] / c2) + cfg.adam_eps);
  }
}

void check_config(const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
  if (!(cfg.learning_rate > 0)) throw ConfigError("learning rate must be positive");
  if (!(cfg.beta1 >= 0 && cfg.beta1 < 1) || !(cfg.beta2 >= 0 && cfg.beta2 < 1)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg.adam_eps > 0)) throw ConfigError("Adam epsilon must be positive");
  if (cfg.decay_every < 0 || !(cfg.decay_factor > 0 && cfg.decay_factor <= 1)) {
    throw ConfigError("decay schedule must have decay_every >= 0 and decay_factor in (0, 1]");
  }
  if (!(cfg.range_momentum >= 0 && cfg.range_momentum < 1)) throw ConfigError("range momentum must lie in [0, 1)");
}

void check_data(const FloatMLP& m, const Dataset& data) {
  if (data.count(Split::kTrain) == 0) throw DimensionError("dataset has no training samples");
  for (const Sample& s : data.samples) {
    if (static_cast<int>(s.inputs.size()) != m.input_count()) {
      throw DimensionError("sample has " + std::to_string(s.inputs.size()) + " features, model expects " +
                           std::to_string(m.input_count()));
    }
    if (m.task == Task::kClassification) {
      const double c = s.target;
      if (c != std::floor(c) || c < 0 || c >= m.output_count()) {
        throw DimensionError("class label " + std::to_string(c) + " outside 0.." + std::to_string(m.output_count() - 1));
      }
    }
  }
  if (m.task == Task::kRegression && m.output_count() != 1) throw DimensionError("regression models have one output");
}

// Sets unset activation ranges from a float pass over training samples.
void calibrate(FloatMLP& m, const std::vector<Sample>& train) {
  const bool need = std::any_of(m.layers.begin(), m.layers.end(), [](const FloatLayer& L) { return !(L.act_range > 0); });
  if (!need) return;
  std::vector<double> mx(m.layers.size(), 0.0);
  const std::size_t n = std::min<std::size_t>(train.size(), 1024);
  std::vector<double> a;
  std::vector<double> next;
  for (std::size_t s = 0; s < n; ++s) {
    a.assign(train[s].inputs.begin(), train[s].inputs.end());
    for (double& v : a) v *= m.input_scale;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      const FloatLayer& L = m.layers[l];
      next.assign(L.out_features, 0.0);
      for (int j = 0; j < L.out_features; ++j) {
        double z = L.bias[j];
        for (int i = 0; i < L.in_features; ++i) {
          const std::size_t k = static_cast<std::size_t>(j) * L.in_features + i;
          if (L.mask.empty() || L.mask[k]) z += L.weights[k] * a[i];
        }
        if (L.activation == Activation::kRelu) z = std::max(z, 0.0);
        mx[l] = std::max(mx[l], std::abs(z));
        next[j] = z;
      }
      a.swap(next);
    }
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    if (!(m.layers[l].act_range > 0)) m.layers[l].act_range = mx[l] > 1e-6 ? mx[l] : 1.0;
  }
}

// Scale within a factor of two of max|W| / 127 with the smallest squared
// projection error onto the set.
double fit_scale(const FloatLayer& L, const WeightSet& set) {
  const double base = L.effective_weight_scale();
  double best = base;
  double best_err = std::numeric_limits<double>::infinity();
  for (int i = -32; i <= 32; ++i) {
    const double s = base * std::exp2(i / 32.0);
    double err = 0;
    for (std::size_t k = 0; k < L.weights.size(); ++k) {
      if (!L.mask.empty() && !L.mask[k]) continue;
      const double d = L.weights[k] - s * project_value(L.weights[k] / s, set);
      err += d * d;
    }
    if (err < best_err) {
      best_err = err;
      best = s;
    }
  }
  return best;
}

Split metric_split(const Dataset& data) { return data.count(Split::kVal) > 0 ? Split::kVal : Split::kTrain; }

// Runs cfg.epochs epochs. With a set, weights are projected onto it.
void run_epochs(FloatMLP& m, const Dataset& data, const TrainConfig& cfg, const WeightSet* set, bool replace,
                int set_size, std::mt19937_64& rng, std::vector<EpochLog>& log) {
  const std::vector<Sample> train = data.split(Split::kTrain);
  const Split val = metric_split(data);
  const std::size_t L = m.layers.size();
  Adam opt(m);
  const int decay_every = cfg.decay_every > 0 ? cfg.decay_every : std::max(1, cfg.epochs / 3);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> gw(L);
  std::vector<std::vector<double>> gb(L);
  std::vector<std::vector<double>> dz(L);
  Trace tr;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.decay_factor, epoch / decay_every);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double loss_sum = 0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto q = quantize(m, set);
      for (std::size_t l = 0; l < L; ++l) {
        gw[l].assign(m.layers[l].weights.size(), 0.0);
        gb[l].assign(m.layers[l].bias.size(), 0.0);
      }
      std::vector<double> batch_max(L, 0.0);
      double batch_loss = 0;

      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = train[order[b]];
        forward(m, q, s.inputs, tr);
        for (std::size_t l = 0; l < L; ++l) {
          for (double z : tr.z[l]) {
            const double v = m.layers[l].activation == Activation::kRelu ? std::max(z, 0.0) : std::abs(z);
            batch_max[l] = std::max(batch_max[l], v);
          }
        }

        // Loss gradient with respect to the last layer's real output.
        const auto& zL = tr.z[L - 1];
        auto& d = dz[L - 1];
        d.assign(zL.size(), 0.0);
        if (m.task == Task::kClassification) {
          const double mx = *std::max_element(zL.begin(), zL.end());
          double sum = 0;
          for (std::size_t j = 0; j < zL.size(); ++j) sum += std::exp(zL[j] - mx);
          const auto label = static_cast<std::size_t>(s.target);
          batch_loss += -(zL[label] - mx - std::log(sum));
          for (std::size_t j = 0; j < zL.size(); ++j) d[j] = std::exp(zL[j] - mx) / sum - (j == label ? 1.0 : 0.0);
        } else {
          const double e = zL[0] - s.target;
          batch_loss += e * e;
          d[0] = 2 * e;
        }

        for (std::size_t l = L; l-- > 0;) {
          const FloatLayer& FL = m.layers[l];
          const LayerQ& Q = q[l];
          const auto& in = tr.act[l];
          for (int j = 0; j < FL.out_features; ++j) {
            const double g = dz[l][j];
            if (g == 0) continue;
            gb[l][j] += g;
            double* row = &gw[l][static_cast<std::size_t>(j) * FL.in_features];
            for (int i = 0; i < FL.in_features; ++i) row[i] += g * in[i] * Q.s_in;
          }
          if (l == 0) break;
          // Back through the previous layer's activation and requantizer.
          const FloatLayer& PL = m.layers[l - 1];
          const LayerQ& PQ = q[l - 1];
          auto& dp = dz[l - 1];
          dp.assign(PL.out_features, 0.0);
          for (int j = 0; j < FL.out_features; ++j) {
            const double g = dz[l][j];
            if (g == 0) continue;
            const int* row = &Q.wq[static_cast<std::size_t>(j) * FL.in_features];
            for (int i = 0; i < FL.in_features; ++i) dp[i] += g * row[i] * Q.s_w;
          }
          for (int i = 0; i < PL.out_features; ++i) {
            const double z = tr.z[l - 1][i];
            const bool relu_off = PL.activation == Activation::kRelu && z <= 0;
            const bool clipped = std::abs(z) / PQ.s_out > 127.5;
            if (relu_off || clipped) dp[i] = 0;
          }
        }
      }

      const double count = static_cast<double>(end - start);
      batch_loss /= count;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch + 1 << " (loss " << batch_loss << ")";
        throw DivergenceError(msg.str());
      }
      loss_sum += batch_loss;
      ++batches;

      ++opt.step;
      for (std::size_t l = 0; l < L; ++l) {
        for (double& g : gw[l]) g /= count;
        for (double& g : gb[l]) g /= count;
        FloatLayer& FL = m.layers[l];
        adam_update(FL.weights, gw[l], opt.mw[l], opt.vw[l], lr, cfg, opt.step, &FL.mask);
        adam_update(FL.bias, gb[l], opt.mb[l], opt.vb[l], lr, cfg, opt.step, nullptr);
        for (double v : FL.weights) {
          if (!std::isfinite(v)) throw DivergenceError("training diverged: non-finite weight");
        }
        const double mom = cfg.range_momentum;
        FL.act_range = mom * FL.act_range + (1 - mom) * std::max(batch_max[l], 1e-6);
      }
    }

    if (set && replace) {
      const auto q = quantize(m, set);
      for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t k = 0; k < m.layers[l].weights.size(); ++k) m.layers[l].weights[k] = q[l].wq[k] * q[l].s_w;
      }
    }
    const QuantizedMLP snapshot = to_integer(m, quantize(m, set), data.input_scale);
    log.push_back({static_cast<int>(log.size()) + 1, batches ? loss_sum / static_cast<double>(batches) : 0.0,
                   evaluate(snapshot, data, cfg.metric, val), set_size});
  }
}

}  // namespace

QuantizedMLP export_quantized(const FloatMLP& m, double data_input_scale) {
  check_model(m);
  return to_integer(m, quantize(m, nullptr), data_input_scale);
}

TrainResult train_qat(FloatMLP m, const Dataset& data, const TrainConfig& cfg) {
  check_config(cfg);
  check_model(m);
  check_data(m, data);
  calibrate(m, data.split(Split::kTrain));
  std::mt19937_64 rng(cfg.seed);
  TrainResult r;
  run_epochs(m, data, cfg, nullptr, false, 256, rng, r.log);
  r.model = export_quantized(m, data.input_scale);
  r.latent = std::move(m);
  return r;
}

TrainResult train_qat(const Dataset& data, const std::vector<int>& arch, Task task, const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return train_qat(init_mlp(arch, task, rng), data, cfg);
}

FloatMLP prune_unstructured(FloatMLP m, double sparsity) {
  if (!(sparsity >= 0 && sparsity < 1)) throw ConfigError("sparsity must lie in [0, 1)");
  check_model(m);
  struct Ref {
    double mag;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Ref> all;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    FloatLayer& L = m.layers[l];
    if (L.mask.empty()) L.mask.assign(L.weights.size(), 1);
    for (std::size_t k = 0; k < L.weights.size(); ++k) all.push_back({std::abs(L.weights[k]), l, k});
  }
  const auto drop = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(all.size()) + 1e-9));
  std::stable_sort(all.begin(), all.end(), [](const Ref& a, const Ref& b) { return a.mag < b.mag; });
  for (std::size_t i = 0; i < drop; ++i) {
    m.layers[all[i].layer].weights[all[i].index] = 0;
    m.layers[all[i].layer].mask[all[i].index] = 0;
  }
  if (drop == 0) {
    for (FloatLayer& L : m.layers) {
      if (std::all_of(L.mask.begin(), L.mask.end(), [](std::uint8_t b) { return b == 1; })) L.mask.clear();
    }
  }
  return m;
}

int profile_width(std::span<const std::int64_t> sample, double quantile) {
  if (!(quantile > 0.5 && quantile <= 1.0)) throw ConfigError("profiling quantile must lie in (0.5, 1]");
  if (sample.empty()) throw DimensionError("empty activation sample");
  std::vector<std::int64_t> mags(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) mags[i] = sample[i] < 0 ? -sample[i] : sample[i];
  std::sort(mags.begin(), mags.end());
  const double n = static_cast<double>(mags.size());
  auto k = static_cast<std::size_t>(std::ceil(quantile * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, mags.size());
  const std::int64_t limit = mags[k - 1];
  std::int64_t hi = 0;
  std::int64_t lo = 0;
  for (std::int64_t v : sample) {
    const std::int64_t mag = v < 0 ? -v : v;
    if (mag > limit) continue;
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  return std::max({bits_needed_signed(hi), bits_needed_signed(lo), kMinAccWidth});
}

std::vector<std::vector<int>> profile_adder_widths(QuantizedMLP& m, const Dataset& data, double quantile) {
  m.validate();
  const auto train = data.split(Split::kTrain);
  if (train.empty()) throw DimensionError("empty activation sample");
  std::vector<std::vector<std::vector<std::int64_t>>> samples(m.layers.size());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    samples[l].assign(m.layers[l].out_features, {});
    for (auto& v : samples[l]) v.reserve(train.size());
  }
  for (const Sample& s : train) {
    const auto trace = accumulator_trace(m, s.inputs, AccumulatorMode::kUnbounded);
    for (std::size_t l = 0; l < trace.size(); ++l) {
      for (std::size_t j = 0; j < trace[l].size(); ++j) samples[l][j].push_back(trace[l][j]);
    }
  }
  std::vector<std::vector<int>> widths(m.layers.size());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    for (std::size_t j = 0; j < samples[l].size(); ++j) {
      widths[l].push_back(std::min(profile_width(samples[l][j], quantile), kMaxAccWidth));
    }
    m.layers[l].acc_widths = widths[l];
  }
  return widths;
}

int project_to_set(double w, std::span<const int> set, double scale, const WeightAreaTable& table) {
  if (!(scale > 0)) throw ConfigError("projection scale must be positive");
  return project_value(w / scale, make_set(set, table));
}

HatResult train_hat(const FloatMLP& m, const Dataset& data, const WeightAreaTable& table, const TrainConfig& cfg,
                    const HatConfig& hat) {
  check_config(cfg);
  check_model(m);
  check_data(m, data);
  const int total = static_cast<int>(table.entries.size());
  if (hat.initial_size < 1 || hat.initial_size > total || hat.step < 1) {
    throw ConfigError("HAT set sizes must start within 1.." + std::to_string(total) + " with a positive step");
  }
  if (!(hat.epsilon >= 0)) throw ConfigError("HAT tolerance must be non-negative");

  FloatMLP start = m;
  calibrate(start, data.split(Split::kTrain));
  for (FloatLayer& L : start.layers) L.weight_scale = L.effective_weight_scale();

  const Split val = metric_split(data);
  HatResult r;
  r.state.epsilon = hat.epsilon;
  r.state.baseline = evaluate(export_quantized(start, data.input_scale), data, cfg.metric, val);
  if (hat.fit_scale) {
    const WeightSet first = make_set(select_top_n(table, hat.initial_size), table);
    for (FloatLayer& L : start.layers) L.weight_scale = fit_scale(L, first);
  }
  auto within = [&](double v) {
    return higher_is_better(cfg.metric) ? v >= r.state.baseline - hat.epsilon : v <= r.state.baseline + hat.epsilon;
  };

  std::mt19937_64 rng(cfg.seed);
  FloatMLP cur = start;
  for (int n = hat.initial_size;; n = std::min(total, n + hat.step)) {
    if (hat.restart_each_size) cur = start;
    r.state.selected = select_top_n(table, n);
    ++r.state.iteration;
    const WeightSet set = make_set(r.state.selected, table);
    const WeightSet* proj = hat.project_forward ? &set : nullptr;
    run_epochs(cur, data, cfg, proj, hat.replace_at_epoch_end, static_cast<int>(r.state.selected.size()), rng, r.log);
    r.model = to_integer(cur, quantize(cur, &set), data.input_scale);
    const double metric = evaluate(r.model, data, cfg.metric, val);
    r.state.history.emplace_back(static_cast<int>(r.state.selected.size()), metric);
    r.state.converged = within(metric);
    if (r.state.converged || n >= total) break;
  }
  r.latent = std::move(cur);
  return r;
}

double evaluate(const QuantizedMLP& m, const Dataset& data, Metric metric, Split split) {
  m.validate();
  double total = 0;
  std::size_t count = 0;
  for (const Sample& s : data.samples) {
    if (s.split != split) continue;
    const auto out = infer_reference(m, s.inputs);
    ++count;
    if (metric == Metric::kAccuracy) {
      const auto best = std::max_element(out.begin(), out.end()) - out.begin();
      total += static_cast<double>(best) == s.target ? 1.0 : 0.0;
    } else {
      const double pred = out.front() * m.output_scale;
      if (metric == Metric::kMse) {
        total += (pred - s.target) * (pred - s.target);
      } else {
        total += (pred < 0) != (s.target < 0) ? 1.0 : 0.0;
      }
    }
  }
  if (count == 0) throw DimensionError(std::string("the ") + to_string(split) + " split is empty");
  return total / static_cast<double>(count);
}

// --- synthetic tasks ---------------------------------------------------------

namespace {

std::vector<std::int8_t> random_inputs(int features, std::mt19937_64& rng) {
  std::vector<std::int8_t> x(features);
  for (auto& v : x) v = static_cast<std::int8_t>(static_cast<int>(rng() % 256) - 128);
  return x;
}

}  // namespace

PlantedTask make_planted_teacher(const std::vector<int>& arch, std::size_t samples, std::uint64_t seed) {
  if (arch.size() < 2 || arch.back() < 2) throw ConfigError("planted teacher needs at least two classes");
  for (int w : arch) {
    if (w < 1) throw ConfigError("layer widths must be positive");
  }
  if (samples == 0) throw ConfigError("planted teacher needs samples");
  std::mt19937_64 rng(seed);
  PlantedTask t;
  t.data.input_scale = 1.0 / 128.0;
  std::vector<std::vector<std::int8_t>> inputs(samples);
  for (auto& x : inputs) x = random_inputs(arch.front(), rng);

  t.teacher.name = "teacher";
  t.teacher.input_scale = t.data.input_scale;
  auto acts = inputs;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const bool last = l + 2 == arch.size();
    QLayer layer = make_layer(arch[l], arch[l + 1], last ? Activation::kNone : Activation::kRelu);
    for (int& w : layer.weights) {
      if (rng() % 10 < 3) {
        w = 0;
      } else {
        const int mag = 1 << (rng() % 7);
        w = rng() % 2 ? mag : -mag;
      }
    }
    // Scale each layer so the largest accumulator maps onto the 8-bit range.
    std::int64_t peak = 1;
    for (const auto& x : acts) {
      for (int j = 0; j < layer.out_features; ++j) {
        std::int64_t acc = 0;
        for (int i = 0; i < layer.in_features; ++i) acc += static_cast<std::int64_t>(layer.weight(j, i)) * x[i];
        peak = std::max(peak, last ? (acc < 0 ? -acc : acc) : acc);
      }
    }
    layer.requant = {derive_requant_params(std::min(kMaxRequantScale, 127.0 / static_cast<double>(peak)))};
    for (int j = 0; j < layer.out_features; ++j) layer.acc_widths[j] = worst_case_acc_width(layer, j);
    t.teacher.layers.push_back(layer);
    QuantizedMLP one;
    one.layers = {layer};
    for (auto& x : acts) x = infer_reference(one, x);
  }
  t.teacher.validate();

  for (std::size_t s = 0; s < samples; ++s) {
    const auto& out = acts[s];
    const auto label = std::max_element(out.begin(), out.end()) - out.begin();
    t.data.samples.push_back({inputs[s], static_cast<double>(label), Split::kTrain});
  }
  assign_default_splits(t.data);
  return t;
}

Dataset make_separable_blobs(int features, std::size_t samples, std::uint64_t seed) {
  if (features < 1 || samples == 0) throw ConfigError("blobs need features and samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> w(features);
  double norm = 0;
  for (double& v : w) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  constexpr double kMargin = 8.0;
  Dataset d;
  d.input_scale = 1.0 / 128.0;
  while (d.samples.size() < samples) {
    auto x = random_inputs(features, rng);
    double proj = 0;
    for (int i = 0; i < features; ++i) proj += w[i] * x[i];
    proj /= norm;
    if (std::abs(proj) < kMargin) continue;
    d.samples.push_back({std::move(x), proj > 0 ? 1.0 : 0.0, Split::kTrain});
  }
  assign_default_splits(d);
  return d;
}

Dataset make_random_labels(int features, int classes, std::size_t samples, std::uint64_t seed) {
  if (features < 1 || classes < 2 || samples == 0) throw ConfigError("random labels need features, classes and samples");
  std::mt19937_64 rng(seed);
  Dataset d;
  d.input_scale = 1.0 / 128.0;
  for (std::size_t s = 0; s < samples; ++s) {
    auto x = random_inputs(features, rng);
    d.samples.push_back({std::move(x), static_cast<double>(rng() % static_cast<std::uint64_t>(classes)), Split::kTrain});
  }
  assign_default_splits(d);
  return d;
}

// --- serialization -----------------------------------------------------------

std::string float_model_to_json(const FloatMLP& m) {
  nlohmann::json j;
  j["format"] = "nnlogic-float-mlp";
  j["version"] = 1;
  j["task"] = to_string(m.task);
  j["input_scale"] = m.input_scale;
  j["layers"] = nlohmann::json::array();
  for (const FloatLayer& L : m.layers) {
    nlohmann::json l;
    l["in"] = L.in_features;
    l["out"] = L.out_features;
    l["activation"] = to_string(L.activation);
    l["weight_scale"] = L.weight_scale;
    l["act_range"] = L.act_range;
    l["weights"] = L.weights;
    l["bias"] = L.bias;
    if (!L.mask.empty()) l["mask"] = L.mask;
    j["layers"].push_back(std::move(l));
  }
  return j.dump(1) + "\n";
}

FloatMLP float_model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "nnlogic-float-mlp") throw FormatError("not an nnlogic float model");
    if (j.at("version") != 1) throw FormatError("unsupported float model version");
    FloatMLP m;
    m.task = task_from_string(j.at("task").get<std::string>());
    m.input_scale = j.at("input_scale").get<double>();
    for (const auto& l : j.at("layers")) {
      FloatLayer L;
      L.in_features = l.at("in").get<int>();
      L.out_features = l.at("out").get<int>();
      const auto act = l.at("activation").get<std::string>();
      if (act != "relu" && act != "none") throw FormatError("unknown activation '" + act + "'");
      L.activation = act == "relu" ? Activation::kRelu : Activation::kNone;
      L.weight_scale = l.at("weight_scale").get<double>();
      L.act_range = l.at("act_range").get<double>();
      L.weights = l.at("weights").get<std::vector<double>>();
      L.bias = l.at("bias").get<std::vector<double>>();
      if (l.contains("mask")) L.mask = l.at("mask").get<std::vector<std::uint8_t>>();
      m.layers.push_back(std::move(L));
    }
    check_model(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed float model: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  } catch (const InvariantError& e) {
    throw FormatError(e.what());
  }
}

void save_float_model(const FloatMLP& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << float_model_to_json(m);
}

FloatMLP load_float_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return float_model_from_json(buf.str());
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,loss,val_metric,set_size\n" << std::setprecision(10);
  for (const EpochLog& e : log) out << e.epoch << ',' << e.loss << ',' << e.val_metric << ',' << e.set_size << '\n';
  return out.str();
}

}  // namespace nnlogic
