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

#include "nnlogic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nnlogic/error.hpp"

namespace nnlogic {

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::vector<Sample> Dataset::split(Split s) const {
  std::vector<Sample> out;
  for (const auto& sample : samples) {
    if (sample.split == s) out.push_back(sample);
  }
  return out;
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [s](const Sample& x) { return x.split == s; }));
}

void assign_default_splits(Dataset& data) {
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const std::size_t r = i % 20;
    data.samples[i].split = r < 14 ? Split::kTrain : (r < 17 ? Split::kVal : Split::kTest);
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("dataset row " + std::to_string(row) + ": '" + s + "' is not a number");
  }
}

}  // namespace

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset " + path.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw FormatError("dataset needs at least one feature and one target column");
  int split_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "split") split_col = static_cast<int>(c);
  }

  std::vector<std::vector<double>> features;
  std::vector<double> targets;
  std::vector<Split> splits;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw FormatError("dataset row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " columns, header has " + std::to_string(header.size()));
    }
    std::vector<double> values;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (static_cast<int>(c) == split_col) {
        if (cells[c] == "train") {
          splits.push_back(Split::kTrain);
        } else if (cells[c] == "val") {
          splits.push_back(Split::kVal);
        } else if (cells[c] == "test") {
          splits.push_back(Split::kTest);
        } else {
          throw FormatError("dataset row " + std::to_string(row) + ": unknown split '" + cells[c] + "'");
        }
        continue;
      }
      values.push_back(parse_number(cells[c], row));
    }
    targets.push_back(values.back());
    values.pop_back();
    features.push_back(std::move(values));
  }
  if (features.empty()) throw FormatError("dataset " + path.string() + " has no rows");

  bool integral = true;
  double max_abs = 0.0;
  for (const auto& f : features) {
    for (double v : f) {
      integral = integral && v == std::round(v) && v >= -128 && v <= 127;
      max_abs = std::max(max_abs, std::abs(v));
    }
  }
  Dataset data;
  data.input_scale = integral || max_abs == 0.0 ? 1.0 : max_abs / 127.0;
  for (std::size_t r = 0; r < features.size(); ++r) {
    Sample s;
    s.target = targets[r];
    for (double v : features[r]) {
      const double q = integral ? v : std::round(v / data.input_scale);
      s.inputs.push_back(static_cast<std::int8_t>(std::clamp(q, -128.0, 127.0)));
    }
    data.samples.push_back(std::move(s));
  }
  if (split_col >= 0) {
    for (std::size_t r = 0; r < splits.size(); ++r) data.samples[r].split = splits[r];
  } else {
    assign_default_splits(data);
  }
  return data;
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write dataset " + path.string());
  out.precision(17);
  const int n = data.feature_count();
  for (int i = 0; i < n; ++i) out << "x" << i << ",";
  out << "split,target\n";
  for (const auto& s : data.samples) {
    for (auto v : s.inputs) out << static_cast<int>(v) << ",";
    out << to_string(s.split) << "," << s.target << "\n";
  }
}

}  // namespace nnlogic
