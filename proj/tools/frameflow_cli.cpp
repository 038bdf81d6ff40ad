// frameflow: train, compare, sample, eval, oracle-check.
#include "frameflow/checks.hpp"
#include "frameflow/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace frameflow;

namespace {

constexpr int kConfigExit = 2;

struct RunFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration document");
  cmd->add_option("--set", f.overrides, "key=value override (repeatable)");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--mode", f.mode, "frame | wframe")->check(CLI::IsMember({"frame", "wframe"}));
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunConfig resolve(const RunFlags& f) {
  const json doc = f.config.empty() ? json::object() : read_json(f.config);
  std::vector<std::string> overrides = f.overrides;
  if (f.seed) overrides.push_back("seed=" + std::to_string(*f.seed));
  if (f.out) overrides.push_back("out=" + json(*f.out).dump());
  if (f.mode) overrides.push_back("mode=" + json(*f.mode).dump());
  return RunConfig::resolve(doc, overrides);
}

void report(const RunSummary& s, const fs::path& out) {
  std::cout << s.mode << ": " << s.iterations << " iterations";
  if (s.diverged)
    std::cout << ", diverged (" << s.divergence << ")";
  else
    std::cout << ", final R " << format_double(s.final_response_distance) << ", mean energy "
              << format_double(s.final_energy_mean);
  std::cout << ", " << format_double(std::round(s.wall_seconds * 100) / 100) << " s -> " << out.string() << '\n';
}

int cmd_train(const RunFlags& f) {
  const RunConfig cfg = resolve(f);
  const fs::path out = cfg.out;
  report(run_training(cfg, out).summary, out);
  return 0;
}

std::string csv_cell(const MetricRow* row, double MetricRow::*field) {
  return row ? format_double(row->*field) : "";
}

int cmd_compare(const RunFlags& f) {
  const RunConfig base = resolve(f);
  const fs::path out = base.out;
  std::map<std::string, RunResult> results;
  for (const FlowMode mode : {FlowMode::frame, FlowMode::wframe}) {
    RunConfig cfg = base;
    cfg.learner.mode = mode;
    const fs::path dir = out / to_string(mode);
    cfg.out = dir.string();
    results[to_string(mode)] = run_training(cfg, dir);
    report(results[to_string(mode)].summary, dir);
  }

  const auto& frame_rows = results["frame"].state.trace.rows();
  const auto& wframe_rows = results["wframe"].state.trace.rows();
  static const std::vector<std::pair<const char*, double MetricRow::*>> columns = {
      {"energy_mean", &MetricRow::energy_mean},   {"response_distance", &MetricRow::response_distance},
      {"w2_1d", &MetricRow::w2_1d},               {"theta_norm", &MetricRow::theta_norm},
      {"update_norm", &MetricRow::update_norm}};
  std::ostringstream csv;
  csv << "iter";
  for (const char* mode : {"frame", "wframe"}) {
    for (const auto& [name, _] : columns) csv << ',' << mode << '_' << name;
    csv << ',' << mode << "_diverged";
  }
  csv << '\n';
  const std::size_t n = std::max(frame_rows.size(), wframe_rows.size());
  for (std::size_t i = 0; i < n; ++i) {
    const MetricRow* a = i < frame_rows.size() ? &frame_rows[i] : nullptr;
    const MetricRow* b = i < wframe_rows.size() ? &wframe_rows[i] : nullptr;
    csv << (a ? a->iter : b->iter);
    for (const MetricRow* row : {a, b}) {
      for (const auto& [_, field] : columns) csv << ',' << csv_cell(row, field);
      csv << ',' << (row ? (row->diverged ? "1" : "0") : "");
    }
    csv << '\n';
  }
  write_file_atomic(out / "compare.csv", csv.str());

  // Top row FRAME chains, bottom row wFRAME chains.
  std::vector<Signal> side_by_side = results["frame"].state.chains.chains;
  const auto& w = results["wframe"].state.chains.chains;
  side_by_side.insert(side_by_side.end(), w.begin(), w.end());
  export_sample_grid(side_by_side, out / "compare_final.pgm", w.size());

  write_file_atomic(out / "summary.json",
                    json{{"frame", results["frame"].summary.to_json()},
                         {"wframe", results["wframe"].summary.to_json()},
                         {"config", base.to_json()}}
                            .dump(2) +
                        "\n");
  return 0;
}

struct CheckpointFlags {
  std::string checkpoint;
  std::optional<std::string> out;
  std::optional<std::size_t> count;
  std::optional<long> steps;
  std::string dataset;
};

Checkpoint open_checkpoint(const std::string& path) {
  try {
    return read_checkpoint(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

fs::path default_out(const CheckpointFlags& f, const char* leaf) {
  if (f.out) return *f.out;
  return fs::path(f.checkpoint).parent_path() / leaf;
}

int cmd_sample(const CheckpointFlags& f) {
  const Checkpoint ckpt = open_checkpoint(f.checkpoint);
  ChainState chains = ckpt.state.chains;
  const std::size_t count = f.count.value_or(chains.size());
  if (count < 1 || count > chains.size())
    throw ConfigError("--count must lie in [1, " + std::to_string(chains.size()) + "]");
  chains.chains.resize(count);
  chains.rng.resize(count);
  SamplerConfig cfg = ckpt.sampler;
  cfg.steps_per_iter = f.steps.value_or(cfg.steps_per_iter);
  if (cfg.steps_per_iter < 1) throw ConfigError("--steps must be >= 1");

  const fs::path out = default_out(f, "sample");
  bool diverged = false;
  std::string divergence;
  try {
    run_inner_loop_in_place(chains, ckpt.state.bank, cfg);
  } catch (const DivergenceError& e) {
    diverged = true;
    divergence = e.what();
  }
  export_sample_grid(chains.chains, out / "samples.pgm");
  const double energy = diverged ? std::nan("") : mean_energy(ckpt.state.bank, chains.chains);
  write_file_atomic(out / "summary.json", json{{"count", count},
                                               {"steps", cfg.steps_per_iter},
                                               {"mean_energy", diverged ? json(nullptr) : json(energy)},
                                               {"diverged", diverged},
                                               {"divergence", divergence}}
                                                  .dump(2) +
                                              "\n");
  std::cout << "sampled " << count << " chains for " << cfg.steps_per_iter << " steps"
            << (diverged ? " (diverged)" : "") << " -> " << out.string() << '\n';
  return 0;
}

int cmd_eval(const CheckpointFlags& f) {
  const Checkpoint ckpt = open_checkpoint(f.checkpoint);
  const RunConfig cfg = RunConfig::resolve(ckpt.config);
  const Dataset data = f.dataset.empty() ? cfg.make_dataset()
                                         : load_images(f.dataset, ckpt.state.chains.shape(), cfg.data.normalization);
  const auto& chains = ckpt.state.chains.chains;
  const Bank& bank = ckpt.state.bank;
  const fs::path out = default_out(f, "eval");
  const double r = response_distance(bank, chains, data.items);
  const double e = mean_energy(bank, chains);
  write_file_atomic(out / "summary.json", json{{"response_distance", std::isfinite(r) ? json(r) : json(nullptr)},
                                               {"mean_energy", std::isfinite(e) ? json(e) : json(nullptr)},
                                               {"chains", chains.size()},
                                               {"dataset_items", data.size()},
                                               {"iteration", ckpt.state.completed}}
                                                  .dump(2) +
                                              "\n");
  std::cout << "R " << format_double(r) << ", mean energy " << format_double(e) << " -> " << out.string() << '\n';
  return 0;
}

int cmd_oracle_check(std::uint64_t seed, const std::optional<std::string>& out) {
  int failures = 0;
  json rows = json::array();
  for (const auto& c : checks::oracle_suite(seed)) {
    std::printf("[%s] %-32s %7.2fs  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.seconds, c.detail.c_str());
    failures += !c.passed;
    rows.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"seconds", c.seconds}});
  }
  if (out) write_file_atomic(fs::path(*out) / "oracle_report.json", rows.dump(2) + "\n");
  std::printf("%d/%zu checks passed\n", static_cast<int>(rows.size()) - failures, rows.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-based texture models trained by KL (FRAME) or Wasserstein (wFRAME) flows"};
  app.require_subcommand(1);

  RunFlags train_flags, compare_flags;
  add_run_flags(app.add_subcommand("train", "train one model"), train_flags);
  add_run_flags(app.add_subcommand("compare", "train frame and wframe on shared data and seeds"), compare_flags);

  CheckpointFlags sample_flags, eval_flags;
  auto* sample = app.add_subcommand("sample", "continue the persistent chains of a checkpoint without learning");
  sample->add_option("--checkpoint", sample_flags.checkpoint)->required()->check(CLI::ExistingFile);
  sample->add_option("--count", sample_flags.count, "number of chains to keep");
  sample->add_option("--steps", sample_flags.steps, "Langevin steps");
  sample->add_option("--out", sample_flags.out, "output directory");
  auto* eval = app.add_subcommand("eval", "response distance and mean energy of a checkpoint's chains");
  eval->add_option("--checkpoint", eval_flags.checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", eval_flags.dataset, "directory of PGM images (default: the checkpoint's data)")
      ->check(CLI::ExistingDirectory);
  eval->add_option("--out", eval_flags.out, "output directory");

  std::uint64_t oracle_seed = 7;
  std::optional<std::string> oracle_out;
  auto* oracle = app.add_subcommand("oracle-check", "run the verification suite");
  oracle->add_option("--seed", oracle_seed);
  oracle->add_option("--out", oracle_out, "directory for oracle_report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (app.got_subcommand("train")) return cmd_train(train_flags);
    if (app.got_subcommand("compare")) return cmd_compare(compare_flags);
    if (app.got_subcommand("sample")) return cmd_sample(sample_flags);
    if (app.got_subcommand("eval")) return cmd_eval(eval_flags);
    return cmd_oracle_check(oracle_seed, oracle_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
