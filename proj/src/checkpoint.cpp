#include "frameflow/checkpoint.hpp"

#include <fstream>
#include <limits>

namespace frameflow {

using nlohmann::json;

namespace {

json vec_to_json(const Vector<double>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector<double> vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  Vector<double> v(static_cast<Index>(values.size()));
  std::copy(values.begin(), values.end(), v.data());
  return v;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_nullable(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json signals_to_json(const std::vector<Signal>& xs) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(vec_to_json(x.values()));
  return out;
}

std::vector<Signal> signals_from_json(const json& j, const Shape& shape) {
  std::vector<Signal> out;
  for (const auto& v : j) out.emplace_back(shape, vec_from_json(v));
  return out;
}

json trace_to_json(const MetricTrace& trace) {
  json rows = json::array();
  for (const auto& r : trace.rows())
    rows.push_back({{"iter", r.iter},
                    {"mode", r.mode},
                    {"energy_mean", nullable(r.energy_mean)},
                    {"response_distance", nullable(r.response_distance)},
                    {"w2_1d", nullable(r.w2_1d)},
                    {"theta_norm", nullable(r.theta_norm)},
                    {"update_norm", nullable(r.update_norm)},
                    {"diverged", r.diverged}});
  return rows;
}

MetricTrace trace_from_json(const json& j) {
  MetricTrace trace;
  for (const auto& r : j) {
    MetricRow row;
    row.iter = r.at("iter").get<long>();
    row.mode = r.at("mode").get<std::string>();
    row.energy_mean = from_nullable(r.at("energy_mean"));
    row.response_distance = from_nullable(r.at("response_distance"));
    row.w2_1d = from_nullable(r.at("w2_1d"));
    row.theta_norm = from_nullable(r.at("theta_norm"));
    row.update_norm = from_nullable(r.at("update_norm"));
    row.diverged = r.at("diverged").get<bool>();
    trace.append(std::move(row));
  }
  return trace;
}

}  // namespace

json bank_to_json(const Bank& bank) {
  json kernels = json::array();
  json biases = json::array();
  for (const auto& f : bank.filters()) {
    kernels.push_back({{"shape", f.kernel.shape()}, {"values", vec_to_json(f.kernel.values())}});
    biases.push_back(f.bias);
  }
  return {{"kind", bank.kind()},
          {"seed", bank.seed()},
          {"ref_variance", bank.ref_variance()},
          {"theta", vec_to_json(bank.theta())},
          {"biases", biases},
          {"kernels", kernels}};
}

Bank bank_from_json(const json& j) {
  const auto& kernels = j.at("kernels");
  const auto& biases = j.at("biases");
  if (kernels.size() != biases.size()) throw std::invalid_argument("checkpoint bank: kernel/bias count mismatch");
  std::vector<Filter<double>> filters;
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    Signal kernel(kernels[k].at("shape").get<Shape>(), vec_from_json(kernels[k].at("values")));
    filters.emplace_back(std::move(kernel), biases[k].get<double>());
  }
  return Bank(std::move(filters), vec_from_json(j.at("theta")), j.at("ref_variance").get<double>(),
              j.at("kind").get<std::string>(), j.at("seed").get<std::uint64_t>());
}

json chains_to_json(const ChainState& chains) {
  json rng = json::array();
  for (const auto& r : chains.rng) rng.push_back(r.save());
  return {{"shape", chains.shape()},
          {"iteration", chains.iteration},
          {"values", signals_to_json(chains.chains)},
          {"rng", rng}};
}

ChainState chains_from_json(const json& j) {
  ChainState out;
  const Shape shape = j.at("shape").get<Shape>();
  out.chains = signals_from_json(j.at("values"), shape);
  out.iteration = j.at("iteration").get<long>();
  for (const auto& r : j.at("rng")) out.rng.push_back(RandomStream::load(r.get<std::string>()));
  out.validate();
  return out;
}

json sampler_to_json(const SamplerConfig& cfg) {
  return {{"delta", cfg.delta},
          {"steps_per_iter", cfg.steps_per_iter},
          {"noise_std", cfg.noise_std},
          {"use_reference_drift", cfg.use_reference_drift},
          {"include_w2_drift", cfg.include_w2_drift}};
}

SamplerConfig sampler_from_json(const json& j) {
  SamplerConfig cfg;
  cfg.delta = j.at("delta").get<double>();
  cfg.steps_per_iter = j.at("steps_per_iter").get<long>();
  cfg.noise_std = j.at("noise_std").get<double>();
  cfg.use_reference_drift = j.at("use_reference_drift").get<bool>();
  cfg.include_w2_drift = j.at("include_w2_drift").get<bool>();
  cfg.validate();
  return cfg;
}

json learner_to_json(const LearnerConfig& cfg) {
  json clip = cfg.clip ? json{{"lo", cfg.clip->lo}, {"hi", cfg.clip->hi}} : json(nullptr);
  json gamma = cfg.gamma.kind == GammaSource::Kind::uniform01 ? json("uniform") : json(cfg.gamma.value);
  return {{"mode", to_string(cfg.mode)}, {"lambda", cfg.lambda},       {"beta", cfg.beta},
          {"gamma", gamma},               {"iters", cfg.iters},         {"clip", clip},
          {"batch_obs", cfg.batch_obs},   {"batch_syn", cfg.batch_syn}};
}

LearnerConfig learner_from_json(const json& j) {
  LearnerConfig cfg;
  cfg.mode = parse_flow_mode(j.at("mode").get<std::string>());
  cfg.lambda = j.at("lambda").get<double>();
  cfg.beta = j.at("beta").get<double>();
  const auto& g = j.at("gamma");
  cfg.gamma = g.is_string() ? GammaSource::parse(g.get<std::string>()) : GammaSource::fixed_at(g.get<double>());
  cfg.iters = j.at("iters").get<long>();
  if (!j.at("clip").is_null()) cfg.clip = ClipBounds{j.at("clip").at("lo").get<double>(), j.at("clip").at("hi").get<double>()};
  cfg.batch_obs = j.at("batch_obs").get<long>();
  cfg.batch_syn = j.at("batch_syn").get<long>();
  cfg.validate();
  return cfg;
}

json save_checkpoint(const Checkpoint& c) {
  const TrainState& s = c.state;
  json history = json::array();
  for (const auto& t : s.theta_history) history.push_back(vec_to_json(t));
  json learner = {{"mode", to_string(c.learner.mode)},
                  {"iteration", s.completed},
                  {"diverged", s.diverged},
                  {"config", learner_to_json(c.learner)},
                  {"theta_history", history},
                  {"gamma_rng", s.gamma_rng.save()},
                  {"batch_rng", s.batch_rng.save()},
                  {"prev_snapshot", signals_to_json(s.prev_snapshot)},
                  {"trace", trace_to_json(s.trace)}};
  return {{"format", "frameflow-checkpoint"},
          {"version", kCheckpointVersion},
          {"bank", bank_to_json(s.bank)},
          {"chains", chains_to_json(s.chains)},
          {"sampler", sampler_to_json(c.sampler)},
          {"learner", learner},
          {"config", c.config}};
}

Checkpoint load_checkpoint(const json& doc) {
  if (doc.value("format", "") != "frameflow-checkpoint") throw std::invalid_argument("not a frameflow checkpoint");
  if (doc.at("version").get<int>() != kCheckpointVersion)
    throw std::invalid_argument("unsupported checkpoint version " + doc.at("version").dump());
  Checkpoint c;
  c.sampler = sampler_from_json(doc.at("sampler"));
  const auto& l = doc.at("learner");
  c.learner = learner_from_json(l.at("config"));
  c.config = doc.value("config", json::object());
  TrainState& s = c.state;
  s.bank = bank_from_json(doc.at("bank"));
  s.chains = chains_from_json(doc.at("chains"));
  s.prev_snapshot = signals_from_json(l.at("prev_snapshot"), s.chains.shape());
  s.trace = trace_from_json(l.at("trace"));
  s.gamma_rng = RandomStream::load(l.at("gamma_rng").get<std::string>());
  s.batch_rng = RandomStream::load(l.at("batch_rng").get<std::string>());
  s.completed = l.at("iteration").get<long>();
  s.diverged = l.at("diverged").get<bool>();
  for (const auto& t : l.at("theta_history")) s.theta_history.push_back(vec_from_json(t));
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, save_checkpoint(checkpoint).dump(1) + "\n");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(json::parse(in));
}

}  // namespace frameflow
