#include "frameflow/learner.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace frameflow {

namespace {
constexpr std::uint64_t kBatchStream = (1ull << 32) + 1;
constexpr std::uint64_t kGammaStream = (1ull << 32) + 2;
}  // namespace

FlowMode parse_flow_mode(const std::string& name) {
  if (name == "frame") return FlowMode::frame;
  if (name == "wframe") return FlowMode::wframe;
  throw std::invalid_argument("unknown mode '" + name + "' (expected frame or wframe)");
}

std::string to_string(FlowMode mode) { return mode == FlowMode::frame ? "frame" : "wframe"; }

GammaSource GammaSource::parse(const std::string& text) {
  if (text == "uniform" || text == "uniform01") return uniform();
  char* end = nullptr;
  const double g = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw std::invalid_argument("gamma must be 'uniform' or a number");
  if (!(g >= 0 && g <= 1)) throw std::invalid_argument("fixed gamma must lie in [0, 1]");
  return fixed_at(g);
}

std::string GammaSource::to_string() const {
  return kind == Kind::uniform01 ? "uniform" : format_double(value);
}

void LearnerConfig::validate() const {
  if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
  if (!(beta >= 0)) throw std::invalid_argument("beta must be non-negative");
  if (gamma.kind == GammaSource::Kind::fixed && !(gamma.value >= 0 && gamma.value <= 1))
    throw std::invalid_argument("fixed gamma must lie in [0, 1]");
  if (iters < 1) throw std::invalid_argument("iters must be >= 1");
  if (clip && !(clip->lo < clip->hi)) throw std::invalid_argument("clip bounds need lo < hi");
  if (batch_obs < 1 || batch_syn < 1) throw std::invalid_argument("batch sizes must be >= 1");
}

double sample_gamma(const GammaSource& source, RandomStream& rng) {
  if (source.kind == GammaSource::Kind::fixed) return source.value;
  return rng.uniform();
}

Trainer::Trainer(Dataset data, Bank bank, SamplerConfig sampler, LearnerConfig learner, std::uint64_t seed,
                 ChainInit init)
    : data_(std::move(data)), sampler_(sampler), learner_(learner) {
  data_.validate();
  sampler_.validate();
  learner_.validate();
  state_.chains = initialize_chains(data_.shape(), static_cast<std::size_t>(learner_.batch_syn), seed, init,
                                    bank.ref_variance());
  state_.bank = std::move(bank);
  state_.gamma_rng = RandomStream(seed, kGammaStream);
  state_.batch_rng = RandomStream(seed, kBatchStream);
  state_.theta_history.push_back(state_.bank.theta());
  cache_data();
}

Trainer::Trainer(Dataset data, TrainState state, SamplerConfig sampler, LearnerConfig learner)
    : data_(std::move(data)), sampler_(sampler), learner_(learner), state_(std::move(state)) {
  data_.validate();
  sampler_.validate();
  learner_.validate();
  state_.chains.validate();
  if (state_.chains.shape() != data_.shape()) throw ShapeError("checkpoint chains do not match the dataset shape");
  if (static_cast<long>(state_.chains.size()) != learner_.batch_syn)
    throw std::invalid_argument("checkpoint chain count does not match batch_syn");
  cache_data();
}

void Trainer::cache_data() {
  item_responses_.clear();
  item_responses_.reserve(data_.size());
  for (const auto& y : data_.items) item_responses_.push_back(filter_responses(state_.bank, y));
  data_mean_responses_ = normalized_mean_responses(state_.bank, data_.items);
  std::vector<Signal> eval;
  for (long i = 0; i < learner_.batch_syn; ++i) eval.push_back(data_.items[static_cast<std::size_t>(i) % data_.size()]);
  eval_projection_ = pixel_means(eval);
}

std::vector<std::size_t> Trainer::draw_batch() {
  std::vector<std::size_t> batch;
  std::vector<std::size_t> order(data_.size());
  while (static_cast<long>(batch.size()) < learner_.batch_obs) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state_.batch_rng.engine());
    for (std::size_t i : order) {
      if (static_cast<long>(batch.size()) == learner_.batch_obs) break;
      batch.push_back(i);
    }
  }
  return batch;
}

const MetricRow& Trainer::step() {
  if (state_.diverged) throw std::logic_error("cannot step a diverged run");
  const long iter = state_.completed + 1;
  Bank& bank = state_.bank;
  const Vector<double> theta = bank.theta();

  StepRecord rec;
  rec.iter = iter;
  rec.theta_before = theta;
  rec.batch = draw_batch();
  rec.h_obs = Vector<double>::Zero(bank.size());
  for (std::size_t i : rec.batch) rec.h_obs += item_responses_[i];
  rec.h_obs /= static_cast<double>(rec.batch.size());

  state_.prev_snapshot = state_.chains.chains;
  try {
    run_inner_loop_in_place(state_.chains, bank, sampler_);
  } catch (const DivergenceError& e) {
    state_.diverged = true;
    MetricRow row;
    row.iter = iter;
    row.mode = to_string(learner_.mode);
    row.energy_mean = row.response_distance = row.w2_1d = std::numeric_limits<double>::quiet_NaN();
    row.theta_norm = theta.norm();
    row.update_norm = 0;
    row.diverged = true;
    state_.trace.append(row);
    last_ = std::move(rec);
    throw e.at_iteration(iter);
  }

  const auto& chains = state_.chains.chains;
  rec.h_syn = mean_filter_responses(bank, chains);
  Vector<double> next;
  if (learner_.mode == FlowMode::wframe) {
    rec.p_t = mean_grad_theta_sq_grad_norm(bank, chains);
    rec.p_prev = state_.completed == 0 ? rec.p_t : mean_grad_theta_sq_grad_norm(bank, state_.prev_snapshot);
    rec.gamma = sample_gamma(learner_.gamma, state_.gamma_rng);
    next = wframe_update(theta, rec.h_obs, rec.h_syn, rec.p_t, rec.p_prev, rec.gamma, learner_.beta,
                         learner_.lambda);
  } else {
    next = frame_update(theta, rec.h_obs, rec.h_syn, learner_.lambda);
  }
  next = clip_weights(next, learner_.clip);
  rec.theta_after = next;

  MetricRow row;
  row.iter = iter;
  row.mode = to_string(learner_.mode);
  row.energy_mean = mean_energy(bank, chains);
  row.response_distance =
      response_distance_from_means(normalized_mean_responses(bank, chains), data_mean_responses_);
  row.w2_1d = empirical_w2_1d(pixel_means(chains), eval_projection_);
  row.theta_norm = next.norm();
  row.update_norm = (next - theta).norm();
  row.diverged = !next.allFinite();

  bank.set_theta(next);
  state_.theta_history.push_back(next);
  if (state_.theta_history.size() > kThetaHistoryLength)
    state_.theta_history.erase(state_.theta_history.begin());
  state_.completed = iter;
  last_ = std::move(rec);
  if (row.diverged) {
    state_.diverged = true;
    row.energy_mean = row.response_distance = row.w2_1d = std::numeric_limits<double>::quiet_NaN();
    state_.trace.append(row);
    throw DivergenceError(0, sampler_.steps_per_iter, iter,
                          "iteration " + std::to_string(iter) + ": filter weights became non-finite");
  }
  state_.trace.append(row);
  return state_.trace.back();
}

const TrainState& Trainer::run() {
  while (!finished()) step();
  return state_;
}

TrainState train(const Dataset& data, const Bank& bank, const SamplerConfig& sampler, const LearnerConfig& learner,
                 std::uint64_t seed) {
  Trainer trainer(data, bank, sampler, learner, seed);
  trainer.run();
  return trainer.state();
}

}  // namespace frameflow
