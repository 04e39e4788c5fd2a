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

#include "nnlogic/timing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "nnlogic/error.hpp"

namespace nnlogic {

void TimingModel::validate() const {
  for (CellKind k : kAllCellKinds) {
    if (!(delay_of(k) >= 0)) throw ConfigError(std::string("negative delay for ") + to_string(k));
  }
  if (!(clk_to_q >= 0) || !(setup >= 0)) throw ConfigError("clk_to_q and setup must be non-negative");
}

TimingReport sta_min_period(const Netlist& n, const TimingModel& t) {
  t.validate();
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  // Arrival measured from the launching edge, excluding clk_to_q.
  std::vector<double> arrival(n.net_count(), kNone);
  std::vector<std::uint32_t> from(n.net_count(), ~0u);
  for (const Bus& b : n.inputs()) {
    for (NetId bit : b.bits) arrival[bit] = 0;
  }
  for (const FlipFlop& f : n.flops()) arrival[f.q] = 0;
  for (std::uint32_t ci : topological_order(n)) {
    const Cell& c = n.cell(ci);
    double a = kNone;
    for (NetId in : c.fanin()) a = std::max(a, arrival[in]);
    // Cells fed only by constants launch nothing but still take their delay.
    arrival[c.output] = std::max(a, 0.0) + t.delay_of(c.kind);
    from[c.output] = ci;
  }

  TimingReport r;
  NetId worst = kNoNet;
  auto endpoint = [&](NetId net) {
    if (arrival[net] > r.comb_delay || (worst == kNoNet && arrival[net] >= 0)) {
      r.comb_delay = std::max(r.comb_delay, arrival[net]);
      worst = net;
    }
  };
  for (const FlipFlop& f : n.flops()) endpoint(f.d);
  for (const Bus& b : n.outputs()) {
    for (NetId bit : b.bits) endpoint(bit);
  }
  r.period = t.clk_to_q + r.comb_delay + t.setup;

  // Walk back along the input with the latest arrival.
  NetId net = worst;
  while (net != kNoNet && from[net] != ~0u) {
    const Cell& c = n.cell(from[net]);
    r.critical_path.push_back(from[net]);
    NetId next = kNoNet;
    double best = kNone;
    for (NetId in : c.fanin()) {
      if (arrival[in] > best) {
        best = arrival[in];
        next = in;
      }
    }
    net = next;
  }
  std::reverse(r.critical_path.begin(), r.critical_path.end());
  return r;
}

Netlist insert_pipeline_stages(const Netlist& n, int k) {
  if (k < 0) throw ConfigError("stage count must be non-negative");
  const bool tagged = n.stage_count() > 0 && std::any_of(n.flops().begin(), n.flops().end(),
                                                         [](const FlipFlop& f) { return f.stage >= 0; });
  if (!tagged) throw InvariantError("netlist carries no layer-stage tags");
  Netlist out = n;
  if (k == 0) return out;

  const std::size_t flops = n.flops().size();
  std::unordered_map<NetId, NetId> tail;
  for (std::size_t i = 0; i < flops; ++i) {
    const FlipFlop& f = n.flop(i);
    if (f.stage < 0 || n.is_constant(f.d)) continue;
    NetId q = f.q;
    for (int s = 0; s < k; ++s) q = out.add_flop(q, f.stage);
    tail.emplace(f.q, q);
  }
  auto remap = [&](NetId net) {
    auto it = tail.find(net);
    return it == tail.end() ? net : it->second;
  };
  for (std::size_t ci = 0; ci < n.cells().size(); ++ci) {
    const Cell& c = n.cell(ci);
    for (int p = 0; p < arity(c.kind); ++p) {
      if (NetId m = remap(c.inputs[p]); m != c.inputs[p]) out.set_cell_input(ci, p, m);
    }
  }
  for (std::size_t i = 0; i < flops; ++i) {
    if (NetId m = remap(n.flop(i).d); m != n.flop(i).d) out.set_flop_input(i, m);
  }
  for (std::size_t b = 0; b < n.outputs().size(); ++b) {
    const auto& bits = n.outputs()[b].bits;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (NetId m = remap(bits[i]); m != bits[i]) out.set_output_bit(b, i, m);
    }
  }
  out.set_latency(n.latency() + k * n.stage_count());
  return out;
}

// --- retiming -----------------------------------------------------------------

namespace {

// Leiserson-Saxe graph: one vertex per cell plus the host (the I/O
// boundary). An edge runs from the cell or input driving a chain of w flops
// to one cell pin or output bit.
struct RetimeGraph {
  enum class Sink : std::uint8_t { kCellPin, kOutputBit };
  struct Edge {
    std::uint32_t u;
    std::uint32_t v;
    int w;
    NetId source;
    Sink sink;
    std::uint32_t index;
    std::uint32_t pin;
  };

  std::uint32_t host = 0;
  std::vector<double> delay;
  std::vector<Edge> edges;
  // Pins and output bits fed (possibly through flops) by a constant.
  std::vector<Edge> fixed;
  // Edges grouped by tail vertex.
  std::vector<std::uint32_t> out_start;
  std::vector<std::uint32_t> out_edges;
};

RetimeGraph build_graph(const Netlist& n, const TimingModel& t) {
  RetimeGraph g;
  const auto cells = static_cast<std::uint32_t>(n.cells().size());
  g.host = cells;
  g.delay.resize(cells + 1, 0.0);
  for (std::uint32_t i = 0; i < cells; ++i) g.delay[i] = t.delay_of(n.cell(i).kind);

  // Follows a flop chain back to its source; a chain that never leaves the
  // flops (a register ring) holds its reset value and acts as constant 0.
  auto trace = [&](NetId net, int& w) {
    w = 0;
    while (n.driver(net).kind == DriverKind::kFlop) {
      net = n.flop(n.driver(net).index).d;
      if (++w > static_cast<int>(n.flops().size())) return kConst0;
    }
    return net;
  };
  auto vertex_of = [&](NetId src) {
    const Driver& d = n.driver(src);
    return d.kind == DriverKind::kCell ? d.index : g.host;
  };
  for (std::uint32_t ci = 0; ci < cells; ++ci) {
    const Cell& c = n.cell(ci);
    for (int p = 0; p < arity(c.kind); ++p) {
      int w = 0;
      const NetId src = trace(c.inputs[p], w);
      const RetimeGraph::Edge e{vertex_of(src), ci, w, src, RetimeGraph::Sink::kCellPin, ci, static_cast<std::uint32_t>(p)};
      (n.is_constant(src) ? g.fixed : g.edges).push_back(e);
    }
  }
  for (std::uint32_t b = 0; b < n.outputs().size(); ++b) {
    const auto& bits = n.outputs()[b].bits;
    for (std::uint32_t i = 0; i < bits.size(); ++i) {
      int w = 0;
      const NetId src = trace(bits[i], w);
      const RetimeGraph::Edge e{vertex_of(src), g.host, w, src, RetimeGraph::Sink::kOutputBit, b, i};
      (n.is_constant(src) ? g.fixed : g.edges).push_back(e);
    }
  }
  g.out_start.assign(cells + 2, 0);
  for (const auto& e : g.edges) ++g.out_start[e.u + 1];
  for (std::size_t v = 0; v + 1 < g.out_start.size(); ++v) g.out_start[v + 1] += g.out_start[v];
  g.out_edges.resize(g.edges.size());
  std::vector<std::uint32_t> fill(g.out_start.begin(), g.out_start.end() - 1);
  for (std::uint32_t i = 0; i < g.edges.size(); ++i) g.out_edges[fill[g.edges[i].u]++] = i;
  return g;
}

// Smallest flop count on any path from the host to each vertex (forward) or
// from each vertex to the host (backward), by bucketed Dijkstra.
std::vector<int> host_distances(const RetimeGraph& g, bool forward) {
  const std::size_t nv = g.delay.size();
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> dist(nv, kInf);
  std::vector<std::vector<std::uint32_t>> in_edges;
  if (!forward) {
    in_edges.resize(nv);
    for (std::uint32_t i = 0; i < g.edges.size(); ++i) in_edges[g.edges[i].v].push_back(i);
  }
  // Dijkstra with small integer keys.
  std::vector<std::vector<std::uint32_t>> buckets(1);
  dist[g.host] = 0;
  buckets[0].push_back(g.host);
  for (std::size_t d = 0; d < buckets.size(); ++d) {
    for (std::size_t k = 0; k < buckets[d].size(); ++k) {
      const std::uint32_t v = buckets[d][k];
      if (dist[v] != static_cast<int>(d)) continue;
      auto relax = [&](std::uint32_t x, int w) {
        if (x == g.host) return;
        const int nd = static_cast<int>(d) + w;
        if (nd < dist[x]) {
          dist[x] = nd;
          if (buckets.size() <= static_cast<std::size_t>(nd)) buckets.resize(static_cast<std::size_t>(nd) + 1);
          buckets[static_cast<std::size_t>(nd)].push_back(x);
        }
      };
      if (forward) {
        for (std::uint32_t i = g.out_start[v]; i < g.out_start[v + 1]; ++i) {
          const auto& e = g.edges[g.out_edges[i]];
          relax(e.v, e.w);
        }
      } else {
        for (std::uint32_t i : in_edges[v]) relax(g.edges[i].u, g.edges[i].w);
      }
    }
  }
  return dist;
}

class Feasibility {
 public:
  explicit Feasibility(const RetimeGraph& g) : g_(g) {
    const auto fwd = host_distances(g, true);
    const auto bwd = host_distances(g, false);
    constexpr int kInf = std::numeric_limits<int>::max();
    int a = 0;
    int b = 0;
    int detached = 0;
    for (std::size_t v = 0; v < fwd.size(); ++v) {
      if (v == g.host) continue;
      if (fwd[v] != kInf) a = std::max(a, fwd[v]);
      if (bwd[v] != kInf) b = std::max(b, bwd[v]);
      if (fwd[v] == kInf || bwd[v] == kInf) ++detached;
    }
    // Labels of the least solution are bounded by the flop distances through
    // the host; vertices off every I/O path can add one step each.
    bound_ = a + b + detached + 1;
  }

  // Least non-negative labels meeting period c, or false. Every step raises
  // only labels that some constraint forces up, so the labels never pass the
  // least solution; exceeding the bound therefore proves infeasibility.
  bool check(double c, std::vector<int>& r) const {
    const std::size_t nv = g_.delay.size();
    r.assign(nv, 0);
    std::vector<double> arrival(nv);
    std::vector<std::uint32_t> indeg(nv);
    std::vector<std::uint32_t> queue;
    std::vector<char> raise(nv);
    const std::size_t max_rounds = nv + static_cast<std::size_t>(bound_) + 2;
    for (std::size_t round = 0; round <= max_rounds; ++round) {
      auto wr = [&](const RetimeGraph::Edge& e) { return e.w + r[e.v] - r[e.u]; };
      // Arrival times over zero-weight edges, host as pure source.
      std::fill(indeg.begin(), indeg.end(), 0);
      for (const auto& e : g_.edges) {
        if (e.u != g_.host && e.v != g_.host && wr(e) == 0) ++indeg[e.v];
      }
      queue.clear();
      for (std::uint32_t v = 0; v < nv; ++v) {
        arrival[v] = 0;
        if (v != g_.host && indeg[v] == 0) queue.push_back(v);
      }
      double into_host = 0;
      std::fill(raise.begin(), raise.end(), 0);
      bool violated = false;
      for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const std::uint32_t v = queue[qi];
        arrival[v] += g_.delay[v];
        if (arrival[v] > c) raise[v] = 1, violated = true;
        for (std::uint32_t i = g_.out_start[v]; i < g_.out_start[v + 1]; ++i) {
          const auto& e = g_.edges[g_.out_edges[i]];
          if (wr(e) != 0) continue;
          if (e.v == g_.host) {
            into_host = std::max(into_host, arrival[v]);
            continue;
          }
          arrival[e.v] = std::max(arrival[e.v], arrival[v]);
          if (--indeg[e.v] == 0) queue.push_back(e.v);
        }
      }
      if (queue.size() + 1 < nv) throw CycleError("retiming produced a combinational loop");
      if (into_host > c) {
        raise[g_.host] = 1;
        violated = true;
        // Raising the host takes a flop off every host edge; zero-weight
        // ones must carry their sink along to stay non-negative.
        std::vector<std::uint32_t> stack = {g_.host};
        while (!stack.empty()) {
          const std::uint32_t v = stack.back();
          stack.pop_back();
          for (std::uint32_t i = g_.out_start[v]; i < g_.out_start[v + 1]; ++i) {
            const auto& e = g_.edges[g_.out_edges[i]];
            if (wr(e) == 0 && !raise[e.v]) {
              raise[e.v] = 1;
              stack.push_back(e.v);
            }
          }
        }
      }
      if (!violated) return true;
      for (std::uint32_t v = 0; v < nv; ++v) {
        if (raise[v] && ++r[v] > bound_) return false;
      }
    }
    return false;
  }

 private:
  const RetimeGraph& g_;
  int bound_ = 0;
};

Netlist rebuild(const Netlist& n, const RetimeGraph& g, const std::vector<int>& r) {
  Netlist out;
  out.set_latency(n.latency());
  out.set_stage_count(n.stage_count());
  std::vector<NetId> map(n.net_count(), kNoNet);
  map[kConst0] = kConst0;
  map[kConst1] = kConst1;
  for (const Bus& b : n.inputs()) {
    auto bits = out.add_input(b.name, static_cast<int>(b.bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) map[b.bits[i]] = bits[i];
  }
  // Cells keep their order; inputs are connected once all outputs exist.
  for (const Cell& c : n.cells()) {
    std::array<NetId, 3> placeholder = {kConst0, kConst0, kConst0};
    map[c.output] = out.add_cell(c.kind, std::span<const NetId>(placeholder.data(), arity(c.kind)), c.stage);
  }
  auto weight = [&](const RetimeGraph::Edge& e) {
    const int w = e.w + r[e.v] - r[e.u];
    if (w < 0) throw InvariantError("retiming produced a negative edge weight");
    return w;
  };
  // One shared chain per source net, as long as its deepest tap.
  std::unordered_map<NetId, std::vector<NetId>> chains;
  for (const auto& e : g.edges) {
    auto& chain = chains[e.source];
    const int w = weight(e);
    const int stage = e.u == g.host ? (e.v == g.host ? -1 : n.cell(e.v).stage) : n.cell(e.u).stage;
    while (static_cast<int>(chain.size()) < w) {
      chain.push_back(out.add_flop(chain.empty() ? map[e.source] : chain.back(), stage));
    }
  }
  auto tap = [&](const RetimeGraph::Edge& e) {
    const int w = weight(e);
    return w == 0 ? map[e.source] : chains[e.source][static_cast<std::size_t>(w - 1)];
  };
  std::vector<std::vector<NetId>> outputs;
  for (const Bus& b : n.outputs()) outputs.emplace_back(b.bits.size(), kConst0);
  for (const auto& e : g.fixed) {
    if (e.sink == RetimeGraph::Sink::kCellPin) {
      out.set_cell_input(e.index, static_cast<int>(e.pin), e.source);
    } else {
      outputs[e.index][e.pin] = e.source;
    }
  }
  for (const auto& e : g.edges) {
    if (e.sink == RetimeGraph::Sink::kCellPin) {
      out.set_cell_input(e.index, static_cast<int>(e.pin), tap(e));
    } else {
      outputs[e.index][e.pin] = tap(e);
    }
  }
  for (std::size_t b = 0; b < n.outputs().size(); ++b) out.add_output(n.outputs()[b].name, std::move(outputs[b]));
  return out;
}

bool integral(double x) { return std::floor(x) == x && std::abs(x) < 1e15; }

}  // namespace

RetimingResult retime(const Netlist& n, const TimingModel& t) {
  const TimingReport before = sta_min_period(n, t);
  RetimingResult result;
  result.netlist = n;
  result.period = before.period;
  result.labels.assign(n.cells().size(), 0);
  if (n.cells().empty()) return result;

  const RetimeGraph g = build_graph(n, t);
  const Feasibility feas(g);
  double lo = 0;
  for (std::size_t v = 0; v < n.cells().size(); ++v) lo = std::max(lo, g.delay[v]);
  double hi = before.comb_delay;
  std::vector<int> r;
  std::vector<int> best;
  if (!feas.check(hi, best)) return result;

  bool all_integral = integral(hi);
  for (double d : g.delay) all_integral = all_integral && integral(d);
  if (all_integral) {
    while (lo < hi) {
      const double mid = std::floor((lo + hi) / 2);
      if (feas.check(mid, r)) {
        hi = mid;
        best = r;
      } else {
        lo = mid + 1;
      }
    }
  } else {
    for (int it = 0; it < 60 && hi - lo > 1e-9 * std::max(1.0, hi); ++it) {
      const double mid = (lo + hi) / 2;
      if (feas.check(mid, r)) {
        hi = mid;
        best = r;
      } else {
        lo = mid;
      }
    }
  }

  const int host = best[g.host];
  bool moved = false;
  for (std::size_t v = 0; v < n.cells().size(); ++v) {
    result.labels[v] = best[v] - host;
    moved = moved || result.labels[v] != 0;
  }
  if (!moved) return result;
  std::vector<int> normalized(best.size());
  for (std::size_t v = 0; v < best.size(); ++v) normalized[v] = best[v] - host;
  Netlist retimed = rebuild(n, g, normalized);
  const double period = sta_min_period(retimed, t).period;
  if (period > before.period) {
    result.labels.assign(n.cells().size(), 0);
    return result;
  }
  result.netlist = std::move(retimed);
  result.period = period;
  result.changed = true;
  return result;
}

std::vector<StageRow> explore_stages(const Netlist& n, const TimingModel& t, int max_k) {
  if (max_k < 0) throw ConfigError("max_k must be non-negative");
  std::vector<StageRow> rows;
  for (int k = 0; k <= max_k; ++k) {
    const RetimingResult r = retime(insert_pipeline_stages(n, k), t);
    rows.push_back({k, r.period, r.netlist.flops().size()});
  }
  return rows;
}

std::string stage_table_csv(const std::vector<StageRow>& rows) {
  std::ostringstream out;
  out << "k,period,flops\n";
  for (const StageRow& r : rows) out << r.k << ',' << r.period << ',' << r.flops << '\n';
  return out.str();
}

}  // namespace nnlogic
