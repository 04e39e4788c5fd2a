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
#include <filesystem>
#include <string>
#include <vector>

namespace nnlogic {

enum class Split { kTrain, kVal, kTest };

const char* to_string(Split s);

struct Sample {
  std::vector<std::int8_t> inputs;
  /// Class index for classification tasks, real value for regression.
  double target = 0.0;
  Split split = Split::kTrain;
};

struct Dataset {
  std::vector<Sample> samples;
  /// Real value of one input LSB (1.0 when the source was already integer).
  double input_scale = 1.0;

  int feature_count() const { return samples.empty() ? 0 : static_cast<int>(samples.front().inputs.size()); }
  std::vector<Sample> split(Split s) const;
  std::size_t count(Split s) const;
};

/// Assigns splits by position: of every 20 samples, 14 train, 3 val, 3 test.
void assign_default_splits(Dataset& data);

/// Reads the dataset CSV: a header row, feature columns, and the target as the
/// final column. An optional column named `split` (train/val/test) overrides
/// the default split assignment. Integer features must lie in [-128, 127];
/// if any feature is non-integer all features are quantized symmetrically
/// with a single recorded scale.
Dataset load_dataset_csv(const std::filesystem::path& path);
void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace nnlogic
