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


#include "pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nnlogic/dataset.hpp"
#include "nnlogic/error.hpp"
#include "nnlogic/netlist_io.hpp"
#include "nnlogic/synth.hpp"
#include "nnlogic/verify.hpp"

namespace nnlogic::cli {

namespace fs = std::filesystem;

namespace {

template <std::size_t N>
void read_array(const Config& c, const std::string& key, std::array<double, N>& dst) {
  const auto v = c.get_numbers(key, std::vector<double>(dst.begin(), dst.end()));
  if (v.size() != N) throw ConfigError("'" + key + "' needs " + std::to_string(N) + " entries in cell-kind order");
  std::copy(v.begin(), v.end(), dst.begin());
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void check_stages(const std::vector<std::string>& stages) {
  std::size_t next = 0;
  for (const auto& s : stages) {
    const auto it = std::find(kStageOrder.begin() + static_cast<std::ptrdiff_t>(next), kStageOrder.end(), s);
    if (it == kStageOrder.end()) {
      throw ConfigError("stage '" + s + "' is unknown or out of order (order: train, hat, compile, verify, report)");
    }
    next = static_cast<std::size_t>(it - kStageOrder.begin()) + 1;
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

Dataset load_data(const PipelineConfig& p) {
  if (p.dataset.empty()) throw ConfigError("paths.dataset is not set");
  if (!fs::exists(p.dataset)) throw ConfigError("paths.dataset: file '" + p.dataset.string() + "' not found");
  return load_dataset_csv(p.dataset);
}

fs::path model_path(const PipelineConfig& p) {
  if (!p.model.empty()) {
    if (!fs::exists(p.model)) throw ConfigError("paths.model: file '" + p.model.string() + "' not found");
    return p.model;
  }
  for (const char* name : {"model_hat.json", "model_qat.json"}) {
    if (fs::exists(p.out_dir / name)) return p.out_dir / name;
  }
  throw ConfigError("paths.model: no model in '" + p.out_dir.string() + "'; run the train stage first");
}

fs::path netlist_path(const PipelineConfig& p) { return p.netlist.empty() ? p.out_dir / "netlist.json" : p.netlist; }

// Registers loaded from constants hold their value only after one clock.
std::size_t warmup_for(const Netlist& n) {
  for (const FlipFlop& f : n.flops()) {
    if (f.d <= 1) return 1;
  }
  return 0;
}

std::string format_vector(const std::vector<std::int8_t>& v) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << static_cast<int>(v[i]);
  out << ']';
  return out.str();
}

void log_metric(std::ostream& log, const char* what, Metric m, double v) {
  log << what << ' ' << to_string(m) << ' ' << std::setprecision(6) << v << '\n';
}

}  // namespace

PipelineConfig make_pipeline_config(const Config& c, const fs::path& base_dir) {
  PipelineConfig p;
  p.dataset = resolve(base_dir, c.get_string("paths.dataset", ""));
  p.model = resolve(base_dir, c.get_string("paths.model", ""));
  p.netlist = resolve(base_dir, c.get_string("paths.netlist", ""));
  p.out_dir = resolve(base_dir, c.get_string("paths.out_dir", "out"));

  for (double w : c.get_numbers("model.arch", {})) {
    if (w < 1 || w != static_cast<int>(w)) throw ConfigError("model.arch entries must be positive integers");
    p.arch.push_back(static_cast<int>(w));
  }
  p.task = task_from_string(c.get_string("model.task", "classification"));

  TrainConfig& t = p.train;
  t.epochs = c.get_int("train.epochs", t.epochs);
  t.batch_size = c.get_int("train.batch_size", t.batch_size);
  t.learning_rate = c.get_number("train.learning_rate", t.learning_rate);
  t.decay_every = c.get_int("train.decay_every", t.decay_every);
  t.decay_factor = c.get_number("train.decay_factor", t.decay_factor);
  t.range_momentum = c.get_number("train.range_momentum", t.range_momentum);
  const int seed = c.get_int("train.seed", static_cast<int>(t.seed));
  if (seed < 0) throw ConfigError("train.seed must be non-negative");
  t.seed = static_cast<std::uint64_t>(seed);
  t.metric = metric_from_string(
      c.get_string("train.metric", p.task == Task::kClassification ? "accuracy" : "mse"));
  p.prune = c.get_number("train.prune", p.prune);
  if (!(p.prune >= 0 && p.prune < 1)) throw ConfigError("train.prune must lie in [0, 1)");
  p.finetune_epochs = c.get_int("train.finetune_epochs", p.finetune_epochs);
  if (p.finetune_epochs < 0) throw ConfigError("train.finetune_epochs must be non-negative");
  p.profile_quantile = c.get_number("train.profile_quantile", p.profile_quantile);
  if (p.profile_quantile != 0 && !(p.profile_quantile > 0.5 && p.profile_quantile <= 1)) {
    throw ConfigError("train.profile_quantile must be 0 (off) or lie in (0.5, 1]");
  }

  p.hat_train = t;
  p.hat_train.epochs = c.get_int("hat.epochs", 10);
  p.hat_train.learning_rate = c.get_number("hat.learning_rate", t.learning_rate);
  p.hat_train.batch_size = c.get_int("hat.batch_size", t.batch_size);
  HatConfig& h = p.hat;
  h.initial_size = c.get_int("hat.initial_size", h.initial_size);
  h.step = c.get_int("hat.step", h.step);
  h.epsilon = c.get_number("hat.epsilon", h.epsilon);
  h.project_forward = c.get_bool("hat.project_forward", h.project_forward);
  h.replace_at_epoch_end = c.get_bool("hat.replace_at_epoch_end", h.replace_at_epoch_end);
  h.restart_each_size = c.get_bool("hat.restart_each_size", h.restart_each_size);
  h.fit_scale = c.get_bool("hat.fit_scale", h.fit_scale);

  p.pipeline = c.get_int("compile.pipeline", p.pipeline);
  if (p.pipeline < 0) throw ConfigError("compile.pipeline must be non-negative");
  p.retime = c.get_bool("compile.retime", p.retime);

  const int trials = c.get_int("verify.trials", static_cast<int>(p.verify_trials));
  if (trials < 0) throw ConfigError("verify.trials must be non-negative");
  p.verify_trials = static_cast<std::size_t>(trials);
  p.verify_seed = static_cast<std::uint64_t>(c.get_int("verify.seed", 1));
  p.verify_dataset = c.get_bool("verify.use_dataset", p.verify_dataset);

  read_array(c, "timing.delay", p.timing.delay);
  p.timing.clk_to_q = c.get_number("timing.clk_to_q", p.timing.clk_to_q);
  p.timing.setup = c.get_number("timing.setup", p.timing.setup);
  p.timing.validate();

  read_array(c, "cost.transistors", p.cost.transistors);
  read_array(c, "cost.toggle_weight", p.cost.toggle_weight);
  p.cost.flop_transistors = c.get_number("cost.flop_transistors", p.cost.flop_transistors);
  p.cost.flop_toggle_weight = c.get_number("cost.flop_toggle_weight", p.cost.flop_toggle_weight);
  p.cost.flop_clock_energy = c.get_number("cost.flop_clock_energy", p.cost.flop_clock_energy);
  p.cost.validate();

  p.max_stages = c.get_int("report.max_stages", p.max_stages);
  if (p.max_stages < 0) throw ConfigError("report.max_stages must be non-negative");
  const int cycles = c.get_int("report.power_cycles", static_cast<int>(p.power_cycles));
  if (cycles < 2) throw ConfigError("report.power_cycles must be at least 2");
  p.power_cycles = static_cast<std::size_t>(cycles);
  p.power_seed = static_cast<std::uint64_t>(c.get_int("report.power_seed", 1));

  p.stages = c.get_strings("run.stages", p.stages);
  check_stages(p.stages);
  p.jobs = c.get_int("run.jobs", p.jobs);
  if (p.jobs < 1) throw ConfigError("run.jobs must be positive");

  c.check_all_used();
  return p;
}

void cmd_train(const PipelineConfig& p, std::ostream& log) {
  const Dataset data = load_data(p);
  if (p.arch.empty()) throw ConfigError("model.arch is not set");
  if (p.arch.front() != data.feature_count()) {
    throw ConfigError("model.arch starts with " + std::to_string(p.arch.front()) + " inputs but the dataset has " +
                      std::to_string(data.feature_count()) + " features");
  }
  TrainResult r = train_qat(data, p.arch, p.task, p.train);
  if (p.prune > 0) {
    TrainConfig ft = p.train;
    ft.epochs = p.finetune_epochs;
    TrainResult tuned = train_qat(prune_unstructured(r.latent, p.prune), data, ft);
    const int offset = static_cast<int>(r.log.size());
    for (EpochLog e : tuned.log) {
      e.epoch += offset;
      r.log.push_back(e);
    }
    r.latent = std::move(tuned.latent);
    r.model = std::move(tuned.model);
  }
  if (p.profile_quantile > 0) profile_adder_widths(r.model, data, p.profile_quantile);

  fs::create_directories(p.out_dir);
  save_model(r.model, p.out_dir / "model_qat.json");
  save_float_model(r.latent, p.out_dir / "model_qat_float.json");
  write_file(p.out_dir / "train_log.csv", training_log_csv(r.log));
  log_metric(log, "qat validation", p.train.metric, evaluate(r.model, data, p.train.metric));
  log << "wrote " << (p.out_dir / "model_qat.json").string() << '\n';
}

void cmd_hat(const PipelineConfig& p, std::ostream& log) {
  const Dataset data = load_data(p);
  const fs::path latent_path = p.out_dir / "model_qat_float.json";
  if (!fs::exists(latent_path)) throw ConfigError("hat needs '" + latent_path.string() + "'; run the train stage first");
  const FloatMLP latent = load_float_model(latent_path);
  const WeightAreaTable table = rank_weight_areas(p.cost);
  HatResult r = train_hat(latent, data, table, p.hat_train, p.hat);
  if (p.profile_quantile > 0) profile_adder_widths(r.model, data, p.profile_quantile);

  save_model(r.model, p.out_dir / "model_hat.json");
  save_float_model(r.latent, p.out_dir / "model_hat_float.json");
  write_file(p.out_dir / "hat_log.csv", training_log_csv(r.log));
  std::ostringstream set;
  for (int w : r.state.selected) set << w << '\n';
  write_file(p.out_dir / "selected_set.txt", set.str());
  log_metric(log, "qat baseline", p.train.metric, r.state.baseline);
  for (const auto& [size, metric] : r.state.history) {
    log << "set size " << size << ": " << to_string(p.train.metric) << ' ' << metric << '\n';
  }
  log << (r.state.converged ? "recovered" : "did not recover") << " with " << r.state.selected.size() << " weights\n";
}

void cmd_compile(const PipelineConfig& p, std::ostream& log) {
  const fs::path mp = model_path(p);
  const QuantizedMLP model = load_model(mp);
  Netlist n = flatten(model).netlist;
  const TimingReport before = sta_min_period(n, p.timing);
  if (p.pipeline > 0) n = insert_pipeline_stages(n, p.pipeline);
  TimingReport after = sta_min_period(n, p.timing);
  bool retimed = false;
  if (p.retime) {
    RetimingResult r = retime(n, p.timing);
    retimed = r.changed;
    n = std::move(r.netlist);
    after = sta_min_period(n, p.timing);
  }

  fs::create_directories(p.out_dir);
  save_netlist(n, p.out_dir / "netlist.json");
  write_file(p.out_dir / "design.v", emit_verilog(n, "nnlogic_mlp"));

  const NetlistStats s = stats(n);
  nlohmann::json j;
  j["model"] = mp.filename().string();
  j["area"] = estimate_area(n, p.cost);
  j["cells"] = s.cell_count;
  j["flops"] = s.flop_count;
  j["nets"] = s.net_count;
  j["depth"] = s.max_depth;
  j["latency"] = n.latency();
  j["pipeline"] = p.pipeline;
  j["retimed"] = retimed;
  j["period"] = after.period;
  j["comb_delay"] = after.comb_delay;
  j["period_unpipelined"] = before.period;
  for (CellKind k : kAllCellKinds) j["cells_by_kind"][to_string(k)] = s.count(k);
  write_file(p.out_dir / "stats.json", j.dump(2) + "\n");
  log << "compiled " << mp.filename().string() << ": " << s.cell_count << " cells, " << s.flop_count
      << " flops, area " << j["area"].get<double>() << ", period " << after.period << '\n';
}

bool cmd_verify(const PipelineConfig& p, std::ostream& log) {
  const QuantizedMLP model = load_model(model_path(p));
  const fs::path np = netlist_path(p);
  if (!fs::exists(np)) throw ConfigError("paths.netlist: '" + np.string() + "' not found; run the compile stage first");
  const Netlist n = load_netlist(np);
  ReferenceOptions opts;
  opts.trials = p.verify_trials;
  opts.seed = p.verify_seed;
  opts.warmup = warmup_for(n);
  if (p.verify_dataset && !p.dataset.empty() && fs::exists(p.dataset)) {
    for (const Sample& s : load_dataset_csv(p.dataset).samples) {
      if (s.split == Split::kTest) opts.vectors.push_back(s.inputs);
    }
  }
  const ReferenceResult r = verify_against_reference(n, model, opts);
  if (r.equivalent) {
    log << "equivalent over " << r.comparisons << " vectors at latency " << n.latency() << '\n';
    return true;
  }
  log << "MISMATCH after " << r.comparisons << " vectors at latency " << n.latency() << '\n';
  if (r.mismatch) {
    log << "counterexample input=" << format_vector(r.mismatch->input)
        << " expected=" << format_vector(r.mismatch->expected) << " actual=" << format_vector(r.mismatch->actual)
        << '\n';
  }
  return false;
}

void cmd_rank_weights(const PipelineConfig& p, std::ostream& log) {
  fs::create_directories(p.out_dir);
  write_file(p.out_dir / "weight_area.csv", weight_area_csv(rank_weight_areas(p.cost)));
  log << "wrote " << (p.out_dir / "weight_area.csv").string() << '\n';
}

void cmd_explore_stages(const PipelineConfig& p, std::ostream& log) {
  const QuantizedMLP model = load_model(model_path(p));
  const auto rows = explore_stages(flatten(model).netlist, p.timing, p.max_stages);
  fs::create_directories(p.out_dir);
  write_file(p.out_dir / "explore_stages.csv", stage_table_csv(rows));
  for (const StageRow& r : rows) log << "k=" << r.k << " period " << r.period << " flops " << r.flops << '\n';
}

void cmd_report(const PipelineConfig& p, std::ostream& log) {
  cmd_rank_weights(p, log);
  cmd_explore_stages(p, log);

  const fs::path qat_path = fs::exists(p.out_dir / "model_qat.json") ? p.out_dir / "model_qat.json" : model_path(p);
  const QuantizedMLP qat = load_model(qat_path);
  struct Build {
    std::string name;
    const QuantizedMLP* model;
    FlattenOptions options;
  };
  std::vector<Build> builds = {
      {"baseline", &qat, {BuildStyle::kBaseline, false, false}},
      {"embedded", &qat, {BuildStyle::kEmbedded, false, false}},
      {"embedded_shared", &qat, {BuildStyle::kEmbedded, true, true}},
  };
  QuantizedMLP hat;
  if (fs::exists(p.out_dir / "model_hat.json")) {
    hat = load_model(p.out_dir / "model_hat.json");
    builds.push_back({"hat", &hat, {BuildStyle::kEmbedded, true, true}});
  }

  struct Row {
    double area = 0;
    double power = 0;
    std::size_t cells = 0;
    std::size_t flops = 0;
  };
  auto measure = [&](const Build& b) {
    const Netlist n = flatten(*b.model, b.options).netlist;
    const auto stimulus = random_stimulus(n, p.power_cycles, p.power_seed);
    return Row{estimate_area(n, p.cost), estimate_power(n, stimulus, p.cost, 1), n.cells().size(), n.flops().size()};
  };
  std::vector<Row> rows(builds.size());
  for (std::size_t start = 0; start < builds.size(); start += static_cast<std::size_t>(p.jobs)) {
    std::vector<std::future<Row>> pending;
    const std::size_t end = std::min(builds.size(), start + static_cast<std::size_t>(p.jobs));
    for (std::size_t i = start; i < end; ++i) pending.push_back(std::async(std::launch::async, measure, builds[i]));
    for (std::size_t i = start; i < end; ++i) rows[i] = pending[i - start].get();
  }

  std::ostringstream csv;
  csv << "build,area,power,cells,flops\n" << std::setprecision(10);
  for (std::size_t i = 0; i < builds.size(); ++i) {
    csv << builds[i].name << ',' << rows[i].area << ',' << rows[i].power << ',' << rows[i].cells << ','
        << rows[i].flops << '\n';
    log << builds[i].name << ": area " << rows[i].area << ", power " << rows[i].power << '\n';
  }
  write_file(p.out_dir / "comparison.csv", csv.str());
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compile quantized MLPs into weight-embedded gate-level logic.", "nnlogic"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string stages;
  int jobs = 0;
  app.add_option("--config", config_path, "TOML-style pipeline configuration");
  auto* seed_opt = app.add_option("--seed", seed, "Training seed (overrides train.seed)");
  app.add_option("--out-dir", out_dir, "Output directory (overrides paths.out_dir)");
  app.add_option("--stages", stages, "Comma-separated stages for 'run' (overrides run.stages)");
  app.add_option("--jobs", jobs, "Parallel jobs (overrides run.jobs)")->check(CLI::PositiveNumber);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train", "Quantization-aware training"},
      {"hat", "Hardware-aware training with selected weights"},
      {"compile", "Flatten the model into a netlist, pipeline and retime"},
      {"verify", "Check the netlist against integer reference inference"},
      {"report", "Weight-area table, stage exploration and build comparison"},
      {"rank-weights", "Area of every 8-bit constant multiplier"},
      {"explore-stages", "Clock period for 0..max_stages extra ranks per layer"},
      {"run", "Run the configured stages in order"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Config c;
    fs::path base;
    if (!config_path.empty()) {
      c = Config::load(config_path);
      base = fs::path(config_path).parent_path();
    }
    if (*seed_opt) c.set("train.seed", std::to_string(seed));
    PipelineConfig p = make_pipeline_config(c, base);
    if (!out_dir.empty()) p.out_dir = out_dir;
    if (!stages.empty()) {
      p.stages.clear();
      std::istringstream in(stages);
      for (std::string s; std::getline(in, s, ',');) p.stages.push_back(s);
      check_stages(p.stages);
    }
    if (jobs > 0) p.jobs = jobs;

    auto run_one = [&](const std::string& name) {
      if (name == "train") cmd_train(p, out);
      if (name == "hat") cmd_hat(p, out);
      if (name == "compile") cmd_compile(p, out);
      if (name == "verify") return cmd_verify(p, out);
      if (name == "report") cmd_report(p, out);
      if (name == "rank-weights") cmd_rank_weights(p, out);
      if (name == "explore-stages") cmd_explore_stages(p, out);
      return true;
    };
    if (command != "run") return run_one(command) ? kExitOk : kExitVerifyFailed;
    for (const auto& s : p.stages) {
      out << "== " << s << '\n';
      if (!run_one(s)) return kExitVerifyFailed;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
}

}  // namespace nnlogic::cli
