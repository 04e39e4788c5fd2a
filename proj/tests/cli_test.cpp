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


#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "nnlogic/dataset.hpp"
#include "nnlogic/error.hpp"
#include "nnlogic/netlist_io.hpp"
#include "nnlogic/synth.hpp"
#include "nnlogic/train.hpp"
#include "config.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace nnlogic;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "nnlogic");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Outcome o;
  o.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kConfig = R"(# small end-to-end run
[paths]
dataset = "data.csv"
out_dir = "out"

[model]
arch = [8, 4, 2]
task = "classification"

[train]
epochs = 8
learning_rate = 0.01
seed = 3

[hat]
epochs = 3
learning_rate = 0.01

[compile]
pipeline = 1

[verify]
trials = 2000

[report]
max_stages = 2
power_cycles = 300
)";

// A scratch directory with a dataset and a config file.
fs::path workspace(const std::string& name, const std::string& config = kConfig) {
  const fs::path dir = fs::temp_directory_path() / ("nnlogic_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_dataset_csv(make_planted_teacher({8, 4, 2}, 1500, 3).data, dir / "data.csv");
  write_text(dir / "run.toml", config);
  return dir;
}

std::string cfg(const fs::path& dir) { return (dir / "run.toml").string(); }

}  // namespace

TEST_CASE("config parser") {
  const cli::Config c = cli::Config::parse(R"(
top = 1
[a]
s = "x\ty"   # comment
n = -2.5e1
b = true
v = [1, 2, 3]
w = ["p", "q"]
[b.c]
k = 7
)",
                                           "test");
  CHECK(c.get_int("top", 0) == 1);
  CHECK(c.get_string("a.s", "") == "x\ty");
  CHECK(c.get_number("a.n", 0) == -25);
  CHECK(c.get_bool("a.b", false));
  CHECK(c.get_numbers("a.v", {}) == std::vector<double>{1, 2, 3});
  CHECK(c.get_strings("a.w", {}) == std::vector<std::string>{"p", "q"});
  CHECK(c.get_int("b.c.k", 0) == 7);
  CHECK(c.get_int("missing", 9) == 9);
  CHECK(c.has("a.s"));
  CHECK_NOTHROW(c.check_all_used());

  CHECK_THROWS_AS(cli::Config::parse("a = ", "t"), ConfigError);
  CHECK_THROWS_AS(cli::Config::parse("[a\nb = 1", "t"), ConfigError);
  CHECK_THROWS_AS(cli::Config::parse("a = 1\na = 2", "t"), ConfigError);
  CHECK_THROWS_AS(cli::Config::parse("a = \"open", "t"), ConfigError);
  const cli::Config t = cli::Config::parse("a = \"text\"\nb = 1", "t");
  CHECK_THROWS_AS(t.get_int("a", 0), ConfigError);
  CHECK_THROWS_AS(t.check_all_used(), ConfigError);
  try {
    cli::Config::parse("x = 1\ny = @", "file.toml");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("file.toml:2") != std::string::npos);
  }
}

TEST_CASE("a missing dataset is a configuration error naming the key") {
  const fs::path dir = workspace("missing");
  fs::remove(dir / "data.csv");
  const Outcome o = run({"--config", cfg(dir), "train"});
  CHECK(o.code == cli::kExitConfig);
  CHECK(o.err.find("paths.dataset") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unknown keys, bad values and bad stage lists are configuration errors") {
  const fs::path dir = workspace("badcfg", std::string(kConfig) + "\n[extra]\nfoo = 1\n");
  Outcome o = run({"--config", cfg(dir), "train"});
  CHECK(o.code == cli::kExitConfig);
  CHECK(o.err.find("extra.foo") != std::string::npos);

  write_text(dir / "run.toml", std::regex_replace(kConfig, std::regex("epochs = 8"), "epochs = -1"));
  CHECK(run({"--config", cfg(dir), "train"}).code == cli::kExitConfig);

  write_text(dir / "run.toml", kConfig);
  o = run({"--config", cfg(dir), "--stages", "compile,train", "run"});
  CHECK(o.code == cli::kExitConfig);
  CHECK(o.err.find("order") != std::string::npos);
  CHECK(run({"--config", cfg(dir), "--stages", "train,lint", "run"}).code == cli::kExitConfig);
  CHECK(run({"--config", cfg(dir), "frobnicate"}).code == cli::kExitConfig);
  CHECK(run({"--config", (dir / "absent.toml").string(), "train"}).code == cli::kExitConfig);
  CHECK(run({"--config", cfg(dir), "hat"}).code == cli::kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("a full run writes every artifact and is reproducible") {
  const fs::path a = workspace("full_a");
  const fs::path b = workspace("full_b");
  const Outcome oa = run({"--config", cfg(a), "run"});
  REQUIRE_MESSAGE(oa.code == cli::kExitOk, oa.err);
  REQUIRE(run({"--config", cfg(b), "run"}).code == cli::kExitOk);

  const std::vector<std::string> files = {
      "model_qat.json", "model_qat_float.json", "train_log.csv",  "model_hat.json",      "model_hat_float.json",
      "hat_log.csv",    "selected_set.txt",     "netlist.json",   "design.v",            "stats.json",
      "weight_area.csv", "explore_stages.csv",  "comparison.csv"};
  for (const auto& f : files) {
    REQUIRE_MESSAGE(fs::exists(a / "out" / f), f);
    CHECK_MESSAGE(read_text(a / "out" / f) == read_text(b / "out" / f), f);
  }

  // Selected set: sorted, unique, contains 0.
  std::istringstream sel(read_text(a / "out" / "selected_set.txt"));
  std::vector<int> set;
  for (int w; sel >> w;) set.push_back(w);
  CHECK(set.size() >= 40);
  CHECK(std::is_sorted(set.begin(), set.end()));
  CHECK(std::adjacent_find(set.begin(), set.end()) == set.end());
  CHECK(std::binary_search(set.begin(), set.end(), 0));

  const std::string hat_log = read_text(a / "out" / "hat_log.csv");
  CHECK(hat_log.rfind("epoch,loss,val_metric,set_size\n", 0) == 0);
  CHECK(hat_log.find(",40\n") != std::string::npos);

  const std::string table = read_text(a / "out" / "weight_area.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 257);

  const std::string stages = read_text(a / "out" / "explore_stages.csv");
  CHECK(std::count(stages.begin(), stages.end(), '\n') == 4);

  // comparison.csv: build,area,power,cells,flops
  std::istringstream cmp(read_text(a / "out" / "comparison.csv"));
  std::string line;
  std::getline(cmp, line);
  CHECK(line == "build,area,power,cells,flops");
  std::map<std::string, std::pair<double, double>> rows;
  while (std::getline(cmp, line)) {
    std::istringstream row(line);
    std::string name;
    std::string area;
    std::string power;
    std::getline(row, name, ',');
    std::getline(row, area, ',');
    std::getline(row, power, ',');
    rows[name] = {std::stod(area), std::stod(power)};
  }
  REQUIRE(rows.count("baseline"));
  REQUIRE(rows.count("embedded"));
  REQUIRE(rows.count("embedded_shared"));
  REQUIRE(rows.count("hat"));
  CHECK(rows["embedded"].first < rows["baseline"].first);
  CHECK(rows["embedded"].second < rows["baseline"].second);
  CHECK(rows["embedded_shared"].first <= rows["embedded"].first);

  const Netlist n = load_netlist(a / "out" / "netlist.json");
  CHECK(n.latency() == 4);
  const std::string v = read_text(a / "out" / "design.v");
  CHECK(v.find("module nnlogic_mlp") != std::string::npos);
  CHECK(v.find("endmodule") != std::string::npos);

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("verify fails with a counterexample on a mutated or mislabeled netlist") {
  const fs::path dir = workspace("verify");
  REQUIRE(run({"--config", cfg(dir), "--stages", "train,compile,verify", "run"}).code == cli::kExitOk);
  const fs::path np = dir / "out" / "netlist.json";
  const std::string good = read_text(np);
  CHECK(run({"--config", cfg(dir), "verify"}).code == cli::kExitOk);

  write_text(np, std::regex_replace(good, std::regex("\"XOR2\""), "\"XNOR2\""));
  Outcome o = run({"--config", cfg(dir), "verify"});
  CHECK(o.code == cli::kExitVerifyFailed);
  CHECK((o.out + o.err).find("counterexample input=[") != std::string::npos);

  std::smatch m;
  REQUIRE(std::regex_search(good, m, std::regex("\"latency\":(\\d+)")));
  const int latency = std::stoi(m[1].str());
  write_text(np, std::regex_replace(good, std::regex("\"latency\":\\d+"), "\"latency\":" + std::to_string(latency + 1)));
  o = run({"--config", cfg(dir), "verify"});
  CHECK(o.code == cli::kExitVerifyFailed);

  write_text(np, "{\"format\": 12");
  CHECK(run({"--config", cfg(dir), "verify"}).code == cli::kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("stand-alone commands and overrides") {
  const fs::path dir = workspace("single");
  CHECK(run({"--config", cfg(dir), "--out-dir", (dir / "o2").string(), "rank-weights"}).code == cli::kExitOk);
  CHECK(fs::exists(dir / "o2" / "weight_area.csv"));
  CHECK(run({"--config", cfg(dir), "--seed", "9", "--stages", "train", "run"}).code == cli::kExitOk);
  const std::string s9 = read_text(dir / "out" / "model_qat.json");
  CHECK(run({"--config", cfg(dir), "--seed", "3", "train"}).code == cli::kExitOk);
  CHECK(read_text(dir / "out" / "model_qat.json") != s9);
  CHECK(run({"--config", cfg(dir), "compile"}).code == cli::kExitOk);
  CHECK(run({"--config", cfg(dir), "explore-stages"}).code == cli::kExitOk);
  CHECK(fs::exists(dir / "out" / "explore_stages.csv"));
  CHECK(run({"--help"}).code == cli::kExitOk);
  fs::remove_all(dir);
}
