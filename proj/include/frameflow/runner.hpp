// One training run driven by a resolved RunConfig, with optional artifacts.
#pragma once

#include "frameflow/checkpoint.hpp"
#include "frameflow/run_config.hpp"

#include <filesystem>
#include <optional>

namespace frameflow {

struct RunSummary {
  std::string mode;
  long iterations = 0;
  double final_response_distance = 0;  // NaN after divergence
  double final_energy_mean = 0;
  bool diverged = false;
  std::string divergence;
  double wall_seconds = 0;

  nlohmann::json to_json() const;
};

struct RunResult {
  TrainState state;
  RunSummary summary;
};

/// Trains to completion or divergence. With `out` set, writes metrics.csv,
/// config.json, checkpoint.json, summary.json, samples_final.pgm, and a
/// samples_iter_NNNN.pgm grid every `sample_every` iterations.
RunResult run_training(const RunConfig& config, const std::optional<std::filesystem::path>& out = std::nullopt);

/// Resumes a checkpoint and trains to its configured iteration count.
RunResult resume_training(const Checkpoint& checkpoint, const Dataset& data);

Checkpoint make_checkpoint(const RunConfig& config, const TrainState& state);

}  // namespace frameflow
