#include "frameflow/run_config.hpp"

#include <map>

namespace frameflow {

using nlohmann::json;

namespace {

json base_values() {
  return {
      {"preset", "stable-default"},
      {"seed", 0},
      {"mode", "wframe"},
      {"out", "run"},
      {"sample_every", 0},
      {"learner.lambda", 1e-3},
      {"learner.beta", 0.0},
      {"learner.gamma", "uniform"},
      {"learner.iters", 100},
      {"learner.clip_lo", nullptr},
      {"learner.clip_hi", nullptr},
      {"learner.batch_obs", 9},
      {"learner.batch_syn", 9},
      {"sampler.delta", 0.2},
      {"sampler.steps_per_iter", 50},
      {"sampler.noise_std", 1.0},
      {"sampler.use_reference_drift", true},
      {"sampler.include_w2_drift", false},
      {"sampler.init", "zeros"},
      {"bank.kind", "gabor"},
      {"bank.count", 8},
      {"bank.kernel_size", 5},
      {"bank.wavelength", 4.0},
      {"bank.bias", 0.0},
      {"bank.theta_init", 0.0},
      {"bank.ref_variance", 1.0},
      {"bank.seed", 0},
      {"data.source", "stripes"},
      {"data.path", ""},
      {"data.count", 64},
      {"data.shape", {16, 16}},
      {"data.normalization", "per_image"},
      {"data.seed", 1},
      {"data.mixture", {{-2.0, 0.5, 1.0}, {2.0, 0.5, 1.0}}},
  };
}

// Stress grid: the Langevin step pushed into a range where the sampler bias
// drives FRAME's weights upward until the chains blow up, with and without
// weight clipping. paper-literal ties the reference variance to the squared
// Langevin noise scale.
const std::map<std::string, json>& presets() {
  static const std::map<std::string, json> table = {
      {"stable-default",
       {{"learner.lambda", 1e-3}, {"learner.beta", 3e-5}, {"sampler.delta", 0.5}}},
      {"stress",
       {{"learner.lambda", 1e-3}, {"learner.beta", 1e-3}, {"sampler.delta", 1.0}}},
      {"clip-baseline",
       {{"learner.lambda", 1e-3},
        {"learner.beta", 0.0},
        {"sampler.delta", 1.0},
        {"mode", "frame"},
        {"learner.clip_lo", -0.5},
        {"learner.clip_hi", 0.5}}},
      {"paper-literal",
       {{"learner.lambda", 1e-3},
        {"learner.beta", 60.0},
        {"sampler.delta", 0.2},
        {"sampler.noise_std", 0.01},
        {"bank.ref_variance", 1e-4}}},
  };
  return table;
}

template <typename T>
T get_as(const json& flat, const std::string& key) {
  try {
    return flat.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

Shape parse_shape(const json& v) {
  Shape shape;
  if (v.is_array()) {
    shape = v.get<Shape>();
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const auto next = s.find('x', pos);
      shape.push_back(std::stol(s.substr(pos, next - pos)));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  } else if (v.is_number_integer()) {
    shape = {v.get<Index>()};
  } else {
    throw ConfigError("data.shape must be an array, an integer, or a string like 16x16");
  }
  try {
    check_shape(shape);
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("data.shape: ") + e.what());
  }
  return shape;
}

RunConfig from_flat(const json& flat) {
  RunConfig c;
  c.preset = get_as<std::string>(flat, "preset");
  c.seed = get_as<std::uint64_t>(flat, "seed");
  c.out = get_as<std::string>(flat, "out");
  c.sample_every = get_as<long>(flat, "sample_every");
  if (c.sample_every < 0) throw ConfigError("sample_every must be >= 0");

  auto& l = c.learner;
  l.mode = parse_flow_mode(get_as<std::string>(flat, "mode"));
  l.lambda = get_as<double>(flat, "learner.lambda");
  l.beta = get_as<double>(flat, "learner.beta");
  const json& g = flat.at("learner.gamma");
  l.gamma = g.is_string() ? GammaSource::parse(g.get<std::string>()) : GammaSource::fixed_at(get_as<double>(flat, "learner.gamma"));
  l.iters = get_as<long>(flat, "learner.iters");
  const json& lo = flat.at("learner.clip_lo");
  const json& hi = flat.at("learner.clip_hi");
  if (lo.is_null() != hi.is_null()) throw ConfigError("learner.clip_lo and learner.clip_hi must be set together");
  if (!lo.is_null()) l.clip = ClipBounds{get_as<double>(flat, "learner.clip_lo"), get_as<double>(flat, "learner.clip_hi")};
  l.batch_obs = get_as<long>(flat, "learner.batch_obs");
  l.batch_syn = get_as<long>(flat, "learner.batch_syn");

  auto& s = c.sampler;
  s.delta = get_as<double>(flat, "sampler.delta");
  s.steps_per_iter = get_as<long>(flat, "sampler.steps_per_iter");
  s.noise_std = get_as<double>(flat, "sampler.noise_std");
  s.use_reference_drift = get_as<bool>(flat, "sampler.use_reference_drift");
  s.include_w2_drift = get_as<bool>(flat, "sampler.include_w2_drift");
  c.init = parse_chain_init(get_as<std::string>(flat, "sampler.init"));

  auto& b = c.bank;
  b.kind = get_as<std::string>(flat, "bank.kind");
  b.count = get_as<Index>(flat, "bank.count");
  b.kernel_size = get_as<Index>(flat, "bank.kernel_size");
  b.wavelength = get_as<double>(flat, "bank.wavelength");
  b.bias = get_as<double>(flat, "bank.bias");
  b.theta_init = get_as<double>(flat, "bank.theta_init");
  b.ref_variance = get_as<double>(flat, "bank.ref_variance");
  b.seed = get_as<std::uint64_t>(flat, "bank.seed");

  auto& d = c.data;
  d.source = get_as<std::string>(flat, "data.source");
  d.path = get_as<std::string>(flat, "data.path");
  d.count = get_as<std::size_t>(flat, "data.count");
  d.shape = parse_shape(flat.at("data.shape"));
  d.normalization = parse_normalization(get_as<std::string>(flat, "data.normalization"));
  d.seed = get_as<std::uint64_t>(flat, "data.seed");
  d.mixture.clear();
  for (const auto& m : flat.at("data.mixture")) {
    if (!m.is_array() || m.size() != 3) throw ConfigError("data.mixture entries must be [mean, std, weight]");
    d.mixture.push_back({m[0].get<double>(), m[1].get<double>(), m[2].get<double>()});
  }
  b.rank = static_cast<Index>(d.shape.size());

  static const char* sources[] = {"stripes", "checker", "noise", "mixture", "pgm"};
  if (std::find(std::begin(sources), std::end(sources), d.source) == std::end(sources))
    throw ConfigError("unknown data.source '" + d.source + "'");
  if (d.source == "pgm" && d.path.empty()) throw ConfigError("data.source=pgm needs data.path");
  if (d.count == 0) throw ConfigError("data.count must be >= 1");
  if (b.kind != "gabor" && b.kind != "random") throw ConfigError("bank.kind must be gabor or random");
  if (b.count < 1 || b.kernel_size < 1) throw ConfigError("bank.count and bank.kernel_size must be >= 1");
  try {
    s.validate();
    l.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(b.ref_variance > 0)) throw ConfigError("bank.ref_variance must be positive");
  return c;
}

void merge_checked(json& flat, const std::string& key, const json& value, const std::string& origin) {
  if (!flat.contains(key)) throw ConfigError("unknown config key '" + key + "' in " + origin);
  flat[key] = value;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : presets()) out.push_back(name);
  return out;
}

json preset_values(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError("unknown preset '" + name + "'");
  return it->second;
}

std::pair<std::string, json> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + text + "'");
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

RunConfig RunConfig::resolve(const json& doc, const std::vector<std::string>& overrides) {
  if (!doc.is_object()) throw ConfigError("configuration document must be a JSON object");
  std::vector<std::pair<std::string, json>> parsed;
  for (const auto& o : overrides) parsed.push_back(parse_override(o));

  // The preset is chosen first; later sources override its values.
  std::string preset = "stable-default";
  if (doc.contains("preset")) preset = doc.at("preset").get<std::string>();
  for (const auto& [k, v] : parsed)
    if (k == "preset") preset = v.get<std::string>();

  json flat = base_values();
  const json preset_doc = preset_values(preset);
  for (const auto& [k, v] : preset_doc.items()) merge_checked(flat, k, v, "preset " + preset);
  for (const auto& [k, v] : doc.items()) merge_checked(flat, k, v, "config document");
  for (const auto& [k, v] : parsed) merge_checked(flat, k, v, "overrides");
  flat["preset"] = preset;
  try {
    return from_flat(flat);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

json RunConfig::to_json() const {
  json mixture = json::array();
  for (const auto& m : data.mixture) mixture.push_back({m.mean, m.std_dev, m.weight});
  return {
      {"preset", preset},
      {"seed", seed},
      {"mode", to_string(learner.mode)},
      {"out", out},
      {"sample_every", sample_every},
      {"learner.lambda", learner.lambda},
      {"learner.beta", learner.beta},
      {"learner.gamma", learner.gamma.kind == GammaSource::Kind::uniform01 ? json("uniform") : json(learner.gamma.value)},
      {"learner.iters", learner.iters},
      {"learner.clip_lo", learner.clip ? json(learner.clip->lo) : json(nullptr)},
      {"learner.clip_hi", learner.clip ? json(learner.clip->hi) : json(nullptr)},
      {"learner.batch_obs", learner.batch_obs},
      {"learner.batch_syn", learner.batch_syn},
      {"sampler.delta", sampler.delta},
      {"sampler.steps_per_iter", sampler.steps_per_iter},
      {"sampler.noise_std", sampler.noise_std},
      {"sampler.use_reference_drift", sampler.use_reference_drift},
      {"sampler.include_w2_drift", sampler.include_w2_drift},
      {"sampler.init", to_string(init)},
      {"bank.kind", bank.kind},
      {"bank.count", bank.count},
      {"bank.kernel_size", bank.kernel_size},
      {"bank.wavelength", bank.wavelength},
      {"bank.bias", bank.bias},
      {"bank.theta_init", bank.theta_init},
      {"bank.ref_variance", bank.ref_variance},
      {"bank.seed", bank.seed},
      {"data.source", data.source},
      {"data.path", data.path},
      {"data.count", data.count},
      {"data.shape", data.shape},
      {"data.normalization", to_string(data.normalization)},
      {"data.seed", data.seed},
      {"data.mixture", mixture},
  };
}

Dataset RunConfig::make_dataset() const {
  if (data.source == "pgm") return load_images(data.path, data.shape, data.normalization);
  Dataset d;
  if (data.source == "mixture") {
    if (data.shape.size() != 1) throw ConfigError("mixture data needs a rank-1 data.shape");
    d = gaussian_mixture(data.shape[0], data.mixture, data.seed, data.count);
  } else {
    d = synth_texture(data.source, data.shape, data.seed, data.count);
  }
  d.normalize(data.normalization);
  return d;
}

Bank RunConfig::make_bank() const { return frameflow::make_bank<double>(bank); }

}  // namespace frameflow
