// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "frameflow/checks.hpp"
#include "frameflow/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <unistd.h>

using namespace frameflow;
namespace fs = std::filesystem;
using checks::CheckResult;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CheckResult timed(const std::string& name, const std::function<CheckResult()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = fn();
  r.name = name;
  r.seconds = seconds_since(t0);
  return r;
}

CheckResult with_limit(CheckResult r, double limit) {
  if (r.seconds >= limit) {
    r.passed = false;
    r.detail += "; over time limit " + std::to_string(limit) + " s";
  }
  return r;
}

CheckResult both(CheckResult a, const CheckResult& b) {
  a.passed = a.passed && b.passed;
  a.detail += " | " + b.detail;
  return a;
}

RunConfig texture_config(const std::string& preset, const std::string& mode, std::uint64_t seed,
                         std::vector<std::string> extra = {}) {
  std::vector<std::string> o{"preset=" + preset, "mode=" + mode, "seed=" + std::to_string(seed), "data.shape=[16,16]",
                             "bank.kind=gabor", "bank.count=8", "learner.batch_obs=9", "learner.batch_syn=9",
                             "sampler.steps_per_iter=50"};
  o.insert(o.end(), extra.begin(), extra.end());
  return RunConfig::resolve(nlohmann::json::object(), o);
}

CheckResult reduction() {
  CheckResult r;
  const RunResult f = run_training(texture_config("stable-default", "frame", 11, {"learner.iters=50"}));
  const RunResult w = run_training(texture_config("stable-default", "wframe", 11, {"learner.iters=50", "learner.beta=0"}));
  const bool same = f.state.bank.theta() == w.state.bank.theta() && f.state.chains.chains == w.state.chains.chains &&
                    f.state.trace.size() == 50 && w.state.trace.size() == 50;
  bool rows = f.state.trace.size() == w.state.trace.size();
  for (std::size_t i = 0; rows && i < f.state.trace.size(); ++i) {
    const MetricRow &a = f.state.trace.rows()[i], &b = w.state.trace.rows()[i];
    rows = a.energy_mean == b.energy_mean && a.response_distance == b.response_distance && a.w2_1d == b.w2_1d &&
           a.theta_norm == b.theta_norm && a.update_norm == b.update_norm && a.diverged == b.diverged;
  }
  r.passed = same && rows;
  r.detail = std::string("theta/chains ") + (same ? "identical" : "differ") + ", trace " + (rows ? "identical" : "differs");
  return r;
}

struct Pair {
  RunSummary frame, wframe;
  double frame_r10 = 0, wframe_r10 = 0;
};

Pair run_pair(const std::string& preset, std::uint64_t seed) {
  Pair p;
  const RunResult f = run_training(texture_config(preset, "frame", seed, {"learner.iters=100"}));
  const RunResult w = run_training(texture_config(preset, "wframe", seed, {"learner.iters=100"}));
  p.frame = f.summary;
  p.wframe = w.summary;
  const auto r10 = [](const TrainState& s) {
    return s.trace.size() >= 10 ? s.trace.rows()[9].response_distance : std::nan("");
  };
  p.frame_r10 = r10(f.state);
  p.wframe_r10 = r10(w.state);
  return p;
}

CheckResult stability() {
  CheckResult r;
  std::ostringstream d;
  int stress_ok = 0, stable_ok = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Pair p = run_pair("stress", seed);
    const bool frame_bad = p.frame.diverged || !(p.frame.final_response_distance <= p.frame_r10);
    const bool wframe_good = !p.wframe.diverged && p.wframe.iterations == 100 && p.wframe.final_response_distance < p.wframe_r10;
    stress_ok += frame_bad && wframe_good;
    d << "stress s" << seed << " F" << (p.frame.diverged ? "[div@" + std::to_string(p.frame.iterations) + "]" : "")
      << ' ' << p.frame_r10 << "->" << p.frame.final_response_distance << " W" << (p.wframe.diverged ? "[div]" : "") << ' '
      << p.wframe_r10 << "->" << p.wframe.final_response_distance << "; ";
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Pair p = run_pair("stable-default", seed);
    stable_ok += !p.wframe.diverged && p.wframe.final_response_distance <= p.frame.final_response_distance;
    d << "stable s" << seed << " F " << p.frame.final_response_distance << " W " << p.wframe.final_response_distance << "; ";
  }
  r.passed = stress_ok >= 4 && stable_ok >= 4;
  r.detail = "stress " + std::to_string(stress_ok) + "/5, stable " + std::to_string(stable_ok) + "/5 :: " + d.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CheckResult reproducibility() {
  CheckResult r;
  const fs::path root = fs::temp_directory_path() / ("frameflow_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const RunConfig cfg = texture_config("stable-default", "wframe", 21, {"learner.iters=30", "learner.beta=0.0001"});
  run_training(cfg, root / "a");
  run_training(cfg, root / "b");
  const std::string a = slurp(root / "a" / "metrics.csv"), b = slurp(root / "b" / "metrics.csv");
  const bool rerun = !a.empty() && a == b;

  const RunConfig part = texture_config("stable-default", "wframe", 21, {"learner.iters=12", "learner.beta=0.0001"});
  const RunResult head = run_training(part, root / "part");
  Checkpoint ckpt = read_checkpoint(root / "part" / "checkpoint.json");
  ckpt.learner.iters = 30;
  const RunResult resumed = resume_training(ckpt, cfg.make_dataset());
  const RunResult full = run_training(cfg);
  const bool resume = resumed.state.bank.theta() == full.state.bank.theta() &&
                      resumed.state.chains.chains == full.state.chains.chains &&
                      resumed.state.chains.rng == full.state.chains.rng && resumed.state.trace.to_csv() == full.state.trace.to_csv() &&
                      resumed.state.trace.to_csv() == a && head.state.trace.size() == 12;
  fs::remove_all(root);
  r.passed = rerun && resume;
  r.detail = std::string("rerun metrics.csv ") + (rerun ? "byte-identical" : "differs") + ", resume " +
             (resume ? "bit-exact" : "differs");
  return r;
}

}  // namespace

int main() {
  const std::uint64_t seed = 20240601;
  std::vector<CheckResult> results;
  results.push_back(with_limit(timed("1 gradient suite", [&] { return checks::gradient_suite(seed, 1000); }), 30));
  results.push_back(timed("2 zero-beta reduction", reduction));
  results.push_back(timed("3 rectified degeneracy", [&] {
    return both(checks::sq_grad_norm_degeneracy(seed, 100), checks::modified_sde_trajectories(seed));
  }));
  results.push_back(timed("4 piecewise gaussian", [&] { return checks::piecewise_gaussian(seed, 100); }));
  results.push_back(with_limit(timed("5 sampler vs pde", [&] { return checks::sampler_vs_pde(seed); }), 60));
  results.push_back(timed("6 ot equivalence", [&] { return checks::ot_equivalence(seed, 200); }));
  results.push_back(with_limit(timed("7 stability experiment", stability), 300));
  results.push_back(timed("8 reproducibility", reproducibility));

  int failed = 0;
  for (const auto& r : results) {
    failed += !r.passed;
    std::printf("%s  %-26s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
