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


#include "config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nnlogic/error.hpp"

namespace nnlogic::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (s[i] == '#' && !quoted) {
      return s.substr(0, i);
    }
  }
  return s;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

// Dotted table names such as "a.b".
bool valid_section(const std::string& k) {
  std::size_t start = 0;
  for (;;) {
    const auto dot = k.find('.', start);
    if (!valid_key(k.substr(start, dot == std::string::npos ? std::string::npos : dot - start))) return false;
    if (dot == std::string::npos) return true;
    start = dot + 1;
  }
}

// Splits "a, "b,c", 3" on top-level commas.
std::vector<std::string> split_items(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\' && quoted && i + 1 < s.size()) {
      cur += c;
      cur += s[++i];
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur += c;
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

bool is_quoted(const std::string& tok) { return tok.size() >= 2 && tok.front() == '"' && tok.back() == '"'; }

std::string unquote(const std::string& tok) {
  std::string out;
  for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
    if (tok[i] == '\\' && i + 2 < tok.size()) {
      const char e = tok[++i];
      out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
    } else {
      out += tok[i];
    }
  }
  return out;
}

std::optional<double> to_number(const std::string& tok) {
  double v = 0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_section(section)) fail("bad section name '" + section + "'");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (!valid_key(key)) fail("bad key '" + key + "'");
    if (val.empty()) fail("missing value for '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (c.values_.count(full)) fail("duplicate key '" + full + "'");
    Value v;
    v.line = line;
    if (val.front() == '[') {
      if (val.back() != ']') fail("unterminated array for '" + full + "'");
      v.is_array = true;
      v.items = split_items(val.substr(1, val.size() - 2));
      for (const auto& item : v.items) {
        if (item.empty()) fail("empty array element in '" + full + "'");
      }
    } else {
      v.items = {val};
    }
    for (const auto& item : v.items) {
      if (item.front() == '"' && !is_quoted(item)) fail("unterminated string in '" + full + "'");
      if (!is_quoted(item) && item != "true" && item != "false" && !to_number(item)) {
        fail("cannot read value '" + item + "' for '" + full + "'");
      }
    }
    c.values_[full] = std::move(v);
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void Config::set(const std::string& key, const std::string& literal) {
  Config one = parse("x = " + literal, "override of " + key);
  values_[key] = one.values_.at("x");
}

const Config::Value* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (v->is_array || !is_quoted(v->items[0])) throw ConfigError(origin_ + ": '" + key + "' must be a quoted string");
  return unquote(v->items[0]);
}

double Config::get_number(const std::string& key, double fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  const auto n = v->is_array ? std::nullopt : to_number(v->items[0]);
  if (!n) throw ConfigError(origin_ + ": '" + key + "' must be a number");
  return *n;
}

int Config::get_int(const std::string& key, int fallback) const {
  const double d = get_number(key, fallback);
  if (d != static_cast<double>(static_cast<long long>(d)) || d < -2147483648.0 || d > 2147483647.0) {
    throw ConfigError(origin_ + ": '" + key + "' must be an integer");
  }
  return static_cast<int>(d);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (!v->is_array && v->items[0] == "true") return true;
  if (!v->is_array && v->items[0] == "false") return false;
  throw ConfigError(origin_ + ": '" + key + "' must be true or false");
}

std::vector<double> Config::get_numbers(const std::string& key, const std::vector<double>& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (!v->is_array) throw ConfigError(origin_ + ": '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& item : v->items) {
    const auto n = to_number(item);
    if (!n) throw ConfigError(origin_ + ": '" + key + "' must be an array of numbers");
    out.push_back(*n);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (!v->is_array) throw ConfigError(origin_ + ": '" + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v->items) {
    if (!is_quoted(item)) throw ConfigError(origin_ + ": '" + key + "' must be an array of strings");
    out.push_back(unquote(item));
  }
  return out;
}

void Config::check_all_used() const {
  for (const auto& [key, v] : values_) {
    if (!used_.count(key)) {
      throw ConfigError(origin_ + ":" + std::to_string(v.line) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace nnlogic::cli
