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

#include "nnlogic/netlist.hpp"

namespace nnlogic {

/// Rewrites a netlist to the fixpoint of constant propagation, structural
/// hashing (commutative inputs sorted, shared across stage tags) and removal
/// of cells and flops with no path to a primary output. Flops whose D is
/// constant 0 become constant 0; flops with the same D are merged.
/// Primary I/O, latency and stage metadata are preserved; cell and flop
/// counts never increase.
Netlist simplify(const Netlist& n);

}  // namespace nnlogic
