// JSON checkpoints: bank, chains with their random streams, and learner state.
// Doubles are written in shortest round-trip form, so a resumed run continues
// bit-exactly.
#pragma once

#include "frameflow/learner.hpp"

#include <json.hpp>

#include <filesystem>

namespace frameflow {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainState state;
  SamplerConfig sampler;
  LearnerConfig learner;
  nlohmann::json config;  // run configuration echo
};

nlohmann::json bank_to_json(const Bank& bank);
Bank bank_from_json(const nlohmann::json& j);

nlohmann::json chains_to_json(const ChainState& chains);
ChainState chains_from_json(const nlohmann::json& j);

nlohmann::json sampler_to_json(const SamplerConfig& cfg);
SamplerConfig sampler_from_json(const nlohmann::json& j);
nlohmann::json learner_to_json(const LearnerConfig& cfg);
LearnerConfig learner_from_json(const nlohmann::json& j);

nlohmann::json save_checkpoint(const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const nlohmann::json& doc);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace frameflow
