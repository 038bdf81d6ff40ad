// Flat key-value run configuration with named presets.
//
// Resolution order: defaults of the selected preset, then keys from the
// configuration document, then `key=value` overrides. Unknown keys are
// rejected.
#pragma once

#include "frameflow/dataset.hpp"
#include "frameflow/filter_banks.hpp"
#include "frameflow/learner.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace frameflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSpec {
  std::string source = "stripes";  // stripes | checker | noise | mixture | pgm
  std::string path;                // pgm only
  std::size_t count = 64;
  Shape shape{16, 16};
  Normalization normalization = Normalization::per_image;
  std::uint64_t seed = 1;
  std::vector<MixtureComponent> mixture{{-2.0, 0.5, 1.0}, {2.0, 0.5, 1.0}};
};

struct RunConfig {
  std::string preset = "stable-default";
  std::uint64_t seed = 0;
  BankSpec bank;
  SamplerConfig sampler;
  LearnerConfig learner;
  ChainInit init = ChainInit::zeros;
  DataSpec data;
  long sample_every = 0;  // 0: final grid only
  std::string out = "run";

  /// Flat keys, resolved values.
  nlohmann::json to_json() const;

  static RunConfig resolve(const nlohmann::json& doc, const std::vector<std::string>& overrides = {});

  Dataset make_dataset() const;
  Bank make_bank() const;
};

std::vector<std::string> preset_names();
/// Flat key map of a preset; throws ConfigError for unknown names.
nlohmann::json preset_values(const std::string& name);

/// "key=value" -> (key, parsed value). Values parse as JSON when possible,
/// otherwise as a plain string.
std::pair<std::string, nlohmann::json> parse_override(const std::string& text);

}  // namespace frameflow
