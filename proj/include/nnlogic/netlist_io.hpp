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

#pragma once

#include <filesystem>
#include <string>

#include "nnlogic/netlist.hpp"

namespace nnlogic {

/// Structural Verilog: one continuous assignment per cell, one per output
/// bus, and a single clocked block with synchronous reset for all flops.
/// Ports are clk, rst, the input buses, then the output buses. Internal nets
/// are named n<id>, so the text is stable for a given netlist.
std::string emit_verilog(const Netlist& n, const std::string& module_name);

/// JSON dump mirroring the netlist fields. Restoring preserves net ids.
std::string netlist_to_json(const Netlist& n);
Netlist netlist_from_json(const std::string& text);
void save_netlist(const Netlist& n, const std::filesystem::path& path);
Netlist load_netlist(const std::filesystem::path& path);

}  // namespace nnlogic
