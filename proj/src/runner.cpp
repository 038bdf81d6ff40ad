#include "frameflow/runner.hpp"

#include <chrono>
#include <cstdio>

namespace frameflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

RunSummary summarize(const TrainState& state, const LearnerConfig& learner) {
  RunSummary s;
  s.mode = to_string(learner.mode);
  s.iterations = state.completed;
  s.diverged = state.diverged;
  if (!state.trace.rows().empty()) {
    const MetricRow& last = state.trace.back();
    s.final_response_distance = last.response_distance;
    s.final_energy_mean = last.energy_mean;
  }
  return s;
}

std::string grid_name(long iter) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "samples_iter_%04ld.pgm", iter);
  return buf;
}

RunResult drive(Trainer& trainer, const RunConfig* config, const std::optional<fs::path>& out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string divergence;
  try {
    while (!trainer.finished()) {
      const MetricRow& row = trainer.step();
      if (out && config && config->sample_every > 0 && row.iter % config->sample_every == 0)
        export_sample_grid(trainer.state().chains.chains, *out / grid_name(row.iter));
    }
  } catch (const DivergenceError& e) {
    divergence = e.what();
  }
  RunResult result{trainer.state(), summarize(trainer.state(), trainer.learner_config())};
  result.summary.divergence = divergence;
  result.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace

json RunSummary::to_json() const {
  return {{"mode", mode},
          {"iterations", iterations},
          {"final_response_distance", nullable(final_response_distance)},
          {"final_energy_mean", nullable(final_energy_mean)},
          {"diverged", diverged},
          {"divergence", divergence},
          {"wall_seconds", wall_seconds}};
}

Checkpoint make_checkpoint(const RunConfig& config, const TrainState& state) {
  return {state, config.sampler, config.learner, config.to_json()};
}

RunResult run_training(const RunConfig& config, const std::optional<fs::path>& out) {
  Dataset data = config.make_dataset();
  if (data.shape() != config.data.shape) throw ConfigError("dataset shape does not match data.shape");
  Trainer trainer(std::move(data), config.make_bank(), config.sampler, config.learner, config.seed, config.init);
  if (out) {
    fs::create_directories(*out);
    write_file_atomic(*out / "config.json", config.to_json().dump(2) + "\n");
  }
  RunResult result = drive(trainer, &config, out);
  if (out) {
    write_file_atomic(*out / "metrics.csv", result.state.trace.to_csv());
    export_sample_grid(result.state.chains.chains, *out / "samples_final.pgm");
    write_checkpoint(*out / "checkpoint.json", make_checkpoint(config, result.state));
    write_file_atomic(*out / "summary.json", result.summary.to_json().dump(2) + "\n");
  }
  return result;
}

RunResult resume_training(const Checkpoint& checkpoint, const Dataset& data) {
  Trainer trainer(data, checkpoint.state, checkpoint.sampler, checkpoint.learner);
  return drive(trainer, nullptr, std::nullopt);
}

}  // namespace frameflow
