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

#include <cstdint>
#include <optional>
#include <vector>

#include "nnlogic/netlist.hpp"
#include "nnlogic/qmodel.hpp"

namespace nnlogic {

struct ReferenceOptions {
  /// Random input vectors, on top of the explicit ones.
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  /// Output records skipped after reset on top of the latency.
  std::size_t warmup = 0;
  /// Compared first, in order.
  std::vector<std::vector<std::int8_t>> vectors;
  /// Overrides the latency recorded in the netlist when set.
  std::optional<int> latency;
};

struct ReferenceMismatch {
  std::vector<std::int8_t> input;
  std::vector<std::int8_t> expected;
  std::vector<std::int8_t> actual;
};

struct ReferenceResult {
  bool equivalent = true;
  std::size_t comparisons = 0;
  std::optional<ReferenceMismatch> mismatch;
};

/// Streams inputs through the netlist (64 lanes per cycle) and compares
/// every output record, `latency` cycles later, with infer_reference().
/// The netlist must have the flattener's bus layout.
ReferenceResult verify_against_reference(const Netlist& n, const QuantizedMLP& model,
                                         const ReferenceOptions& options = {});

}  // namespace nnlogic
