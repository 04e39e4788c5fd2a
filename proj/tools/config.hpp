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

// A small TOML subset: [section] headers, key = value lines, '#' comments.
// Values are quoted strings, numbers, true/false or flat arrays of those.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nnlogic::cli {

class Config {
 public:
  /// Throws ConfigError with the line number on malformed input.
  static Config parse(const std::string& text, const std::string& origin = "config");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Replaces a value; `literal` uses the file syntax.
  void set(const std::string& key, const std::string& literal);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Throws ConfigError naming the first key nobody asked for.
  void check_all_used() const;

 private:
  struct Value {
    bool is_array = false;
    // Raw scalar tokens; strings keep their quotes.
    std::vector<std::string> items;
    int line = 0;
  };

  const Value* find(const std::string& key) const;

  std::map<std::string, Value> values_;
  mutable std::set<std::string> used_;
  std::string origin_;
};

}  // namespace nnlogic::cli
