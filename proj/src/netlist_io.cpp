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

#include "nnlogic/netlist_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nnlogic/error.hpp"

namespace nnlogic {

using json = nlohmann::json;

namespace {

std::string net_ref(const Netlist& n, NetId net) {
  const Driver& d = n.driver(net);
  switch (d.kind) {
    case DriverKind::kConstant: return net == kConst1 ? "1'b1" : "1'b0";
    case DriverKind::kInput: {
      const Bus& b = n.inputs()[d.index];
      return b.bits.size() == 1 ? b.name : b.name + "[" + std::to_string(d.bit) + "]";
    }
    default: return "n" + std::to_string(net);
  }
}

std::string port_range(const Bus& b) {
  return b.bits.size() == 1 ? std::string() : "[" + std::to_string(b.bits.size() - 1) + ":0] ";
}

std::string cell_expr(const Netlist& n, const Cell& c) {
  const std::string a = net_ref(n, c.inputs[0]);
  const std::string b = arity(c.kind) > 1 ? net_ref(n, c.inputs[1]) : std::string();
  switch (c.kind) {
    case CellKind::kInv: return "~" + a;
    case CellKind::kBuf: return a;
    case CellKind::kAnd2: return a + " & " + b;
    case CellKind::kOr2: return a + " | " + b;
    case CellKind::kNand2: return "~(" + a + " & " + b + ")";
    case CellKind::kNor2: return "~(" + a + " | " + b + ")";
    case CellKind::kXor2: return a + " ^ " + b;
    case CellKind::kXnor2: return "~(" + a + " ^ " + b + ")";
    case CellKind::kMux2: return net_ref(n, c.inputs[2]) + " ? " + b + " : " + a;
  }
  return a;
}

}  // namespace

std::string emit_verilog(const Netlist& n, const std::string& module_name) {
  std::ostringstream v;
  v << "module " << module_name << " (\n  input wire clk,\n  input wire rst";
  for (const Bus& b : n.inputs()) v << ",\n  input wire " << port_range(b) << b.name;
  for (const Bus& b : n.outputs()) v << ",\n  output wire " << port_range(b) << b.name;
  v << "\n);\n";

  for (const Cell& c : n.cells()) v << "  wire n" << c.output << ";\n";
  for (const FlipFlop& f : n.flops()) v << "  reg n" << f.q << ";\n";
  if (!n.cells().empty() || !n.flops().empty()) v << "\n";

  for (const Cell& c : n.cells()) v << "  assign n" << c.output << " = " << cell_expr(n, c) << ";\n";
  for (const Bus& b : n.outputs()) {
    v << "  assign " << b.name << " = ";
    if (b.bits.size() == 1) {
      v << net_ref(n, b.bits[0]);
    } else {
      v << "{";
      for (std::size_t i = b.bits.size(); i-- > 0;) v << net_ref(n, b.bits[i]) << (i ? ", " : "");
      v << "}";
    }
    v << ";\n";
  }

  if (!n.flops().empty()) {
    v << "\n  always @(posedge clk) begin\n    if (rst) begin\n";
    for (const FlipFlop& f : n.flops()) v << "      n" << f.q << " <= 1'b0;\n";
    v << "    end else begin\n";
    for (const FlipFlop& f : n.flops()) v << "      n" << f.q << " <= " << net_ref(n, f.d) << ";\n";
    v << "    end\n  end\n";
  }
  v << "endmodule\n";
  return v.str();
}

std::string netlist_to_json(const Netlist& n) {
  json doc;
  doc["format"] = "nnlogic-netlist";
  doc["version"] = 1;
  doc["nets"] = n.net_count();
  doc["latency"] = n.latency();
  doc["stages"] = n.stage_count();
  auto buses = [](const std::vector<Bus>& list) {
    json arr = json::array();
    for (const Bus& b : list) arr.push_back({{"name", b.name}, {"bits", b.bits}});
    return arr;
  };
  doc["inputs"] = buses(n.inputs());
  doc["outputs"] = buses(n.outputs());
  json cells = json::array();
  for (const Cell& c : n.cells()) {
    std::vector<NetId> in(c.fanin().begin(), c.fanin().end());
    cells.push_back({{"kind", to_string(c.kind)}, {"in", in}, {"out", c.output}, {"stage", c.stage}});
  }
  doc["cells"] = std::move(cells);
  json flops = json::array();
  for (const FlipFlop& f : n.flops()) flops.push_back({{"d", f.d}, {"q", f.q}, {"stage", f.stage}});
  doc["flops"] = std::move(flops);
  return doc.dump() + "\n";
}

Netlist netlist_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("netlist file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "nnlogic-netlist") throw FormatError("not an nnlogic netlist document");
    const auto net_count = doc.at("nets").get<std::size_t>();

    // Recreate drivers in net-id order so that ids survive the round trip;
    // forward references are patched once every net exists.
    enum class Kind { kNone, kInput, kCell, kFlop };
    std::vector<std::pair<Kind, std::size_t>> owner(net_count, {Kind::kNone, 0});
    const json& inputs = doc.at("inputs");
    const json& cells = doc.at("cells");
    const json& flops = doc.at("flops");
    auto claim = [&](NetId net, Kind k, std::size_t idx) {
      if (net < 2 || net >= net_count || owner[net].first != Kind::kNone) {
        throw FormatError("net " + std::to_string(net) + " has an invalid or duplicate driver");
      }
      owner[net] = {k, idx};
    };
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto bits = inputs[i].at("bits").get<std::vector<NetId>>();
      if (bits.empty()) throw FormatError("input bus with zero width");
      for (std::size_t b = 0; b < bits.size(); ++b) {
        if (bits[b] != bits[0] + b) throw FormatError("input bus bits must be consecutive nets");
        claim(bits[b], Kind::kInput, i);
      }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) claim(cells[i].at("out").get<NetId>(), Kind::kCell, i);
    for (std::size_t i = 0; i < flops.size(); ++i) claim(flops[i].at("q").get<NetId>(), Kind::kFlop, i);

    Netlist n;
    n.set_latency(doc.value("latency", 0));
    n.set_stage_count(doc.value("stages", 0));
    std::vector<std::size_t> cell_slot(cells.size());
    std::vector<std::size_t> flop_slot(flops.size());
    std::vector<char> input_done(inputs.size(), 0);
    for (NetId net = 2; net < net_count; ++net) {
      const auto [kind, idx] = owner[net];
      switch (kind) {
        case Kind::kNone: throw FormatError("net " + std::to_string(net) + " has no driver");
        case Kind::kInput:
          if (!input_done[idx]) {
            input_done[idx] = 1;
            n.add_input(inputs[idx].at("name").get<std::string>(), static_cast<int>(inputs[idx].at("bits").size()));
          }
          break;
        case Kind::kCell: {
          const auto k = cell_kind_from_string(cells[idx].at("kind").get<std::string>());
          if (!k) throw FormatError("unknown cell kind " + cells[idx].at("kind").dump());
          std::vector<NetId> placeholder(static_cast<std::size_t>(arity(*k)), kConst0);
          cell_slot[idx] = n.cells().size();
          n.add_cell(*k, placeholder, cells[idx].value("stage", -1));
          break;
        }
        case Kind::kFlop:
          flop_slot[idx] = n.flops().size();
          n.add_flop(kConst0, flops[idx].value("stage", -1));
          break;
      }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto in = cells[i].at("in").get<std::vector<NetId>>();
      const Cell& c = n.cell(cell_slot[i]);
      if (static_cast<int>(in.size()) != arity(c.kind)) throw FormatError("cell input count does not match kind");
      for (std::size_t p = 0; p < in.size(); ++p) n.set_cell_input(cell_slot[i], static_cast<int>(p), in[p]);
    }
    for (std::size_t i = 0; i < flops.size(); ++i) n.set_flop_input(flop_slot[i], flops[i].at("d").get<NetId>());
    for (const json& b : doc.at("outputs")) {
      n.add_output(b.at("name").get<std::string>(), b.at("bits").get<std::vector<NetId>>());
    }
    n.validate();
    return n;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed netlist document: ") + e.what());
  } catch (const InvariantError& e) {
    throw FormatError(std::string("inconsistent netlist document: ") + e.what());
  }
}

void save_netlist(const Netlist& n, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write netlist " + path.string());
  out << netlist_to_json(n);
}

Netlist load_netlist(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open netlist " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return netlist_from_json(buf.str());
}

}  // namespace nnlogic
