// Parameter updates of the KL flow (FRAME) and of its Wasserstein/JKO variant
// (wFRAME), and the persistent learn-and-sample loop driving both.
#pragma once

#include "frameflow/dataset.hpp"
#include "frameflow/metrics.hpp"
#include "frameflow/sampler.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace frameflow {

enum class FlowMode { frame, wframe };

FlowMode parse_flow_mode(const std::string& name);
std::string to_string(FlowMode mode);

struct GammaSource {
  enum class Kind { uniform01, fixed } kind = Kind::uniform01;
  double value = 0.5;

  static GammaSource uniform() { return {}; }
  static GammaSource fixed_at(double g) { return {Kind::fixed, g}; }
  /// "uniform" or a number in [0, 1].
  static GammaSource parse(const std::string& text);
  std::string to_string() const;
};

struct ClipBounds {
  double lo = -1;
  double hi = 1;
};

struct LearnerConfig {
  double lambda = 1e-3;
  double beta = 0.0;
  GammaSource gamma;
  long iters = 100;
  std::optional<ClipBounds> clip;
  FlowMode mode = FlowMode::wframe;
  long batch_obs = 9;
  long batch_syn = 9;

  void validate() const;
};

namespace detail {
template <typename Scalar>
void check_lengths(const Vector<Scalar>& theta, std::initializer_list<const Vector<Scalar>*> others) {
  for (const auto* v : others)
    if (v->size() != theta.size()) throw std::invalid_argument("update vectors must all have length K");
}
}  // namespace detail

/// theta + lambda * (H_obs - H_syn)
template <typename Scalar>
Vector<Scalar> frame_update(const Vector<Scalar>& theta, const Vector<Scalar>& h_obs, const Vector<Scalar>& h_syn,
                            Scalar lambda) {
  detail::check_lengths(theta, {&h_obs, &h_syn});
  return theta + lambda * (h_obs - h_syn);
}

/// theta + lambda * (H_obs - H_syn) - (beta / 2) * ((1 - gamma) P_prev + gamma P_t).
/// With beta = 0 the result is frame_update's, bit for bit.
template <typename Scalar>
Vector<Scalar> wframe_update(const Vector<Scalar>& theta, const Vector<Scalar>& h_obs, const Vector<Scalar>& h_syn,
                             const Vector<Scalar>& p_t, const Vector<Scalar>& p_prev, Scalar gamma, Scalar beta,
                             Scalar lambda) {
  detail::check_lengths(theta, {&h_obs, &h_syn, &p_t, &p_prev});
  if (!(gamma >= Scalar{0} && gamma <= Scalar{1})) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(beta >= Scalar{0})) throw std::invalid_argument("beta must be non-negative");
  Vector<Scalar> out = frame_update(theta, h_obs, h_syn, lambda);
  if (beta == Scalar{0}) return out;
  out -= (beta / Scalar{2}) * ((Scalar{1} - gamma) * p_prev + gamma * p_t);
  return out;
}

template <typename Scalar>
Vector<Scalar> clip_weights(const Vector<Scalar>& theta, const std::optional<ClipBounds>& bounds) {
  if (!bounds) return theta;
  return theta.cwiseMax(static_cast<Scalar>(bounds->lo)).cwiseMin(static_cast<Scalar>(bounds->hi));
}

double sample_gamma(const GammaSource& source, RandomStream& rng);

/// Quantities entering one parameter update, kept for inspection.
struct StepRecord {
  long iter = 0;
  Vector<double> theta_before;
  Vector<double> theta_after;
  Vector<double> h_obs;
  Vector<double> h_syn;
  Vector<double> p_t;
  Vector<double> p_prev;
  double gamma = 0;
  std::vector<std::size_t> batch;
};

struct TrainState {
  Bank bank;
  ChainState chains;
  /// Chains as they stood before the latest inner loop (x_{tL}).
  std::vector<Signal> prev_snapshot;
  MetricTrace trace;
  RandomStream gamma_rng;
  RandomStream batch_rng;
  long completed = 0;
  bool diverged = false;
  /// Most recent theta vectors, oldest first.
  std::vector<Vector<double>> theta_history;
};

inline constexpr std::size_t kThetaHistoryLength = 16;

class Trainer {
 public:
  Trainer(Dataset data, Bank bank, SamplerConfig sampler, LearnerConfig learner, std::uint64_t seed,
          ChainInit init = ChainInit::zeros);
  /// Resume from a saved state.
  Trainer(Dataset data, TrainState state, SamplerConfig sampler, LearnerConfig learner);

  /// One learning iteration. On chain divergence a flagged row is recorded
  /// and the error is rethrown annotated with the 1-based iteration.
  const MetricRow& step();
  /// Steps until learner.iters iterations are complete.
  const TrainState& run();

  bool finished() const { return state_.completed >= learner_.iters || state_.diverged; }
  const TrainState& state() const { return state_; }
  const StepRecord& last_step() const { return last_; }
  const Dataset& data() const { return data_; }
  const SamplerConfig& sampler_config() const { return sampler_; }
  const LearnerConfig& learner_config() const { return learner_; }

 private:
  void cache_data();
  std::vector<std::size_t> draw_batch();

  Dataset data_;
  SamplerConfig sampler_;
  LearnerConfig learner_;
  TrainState state_;
  StepRecord last_;
  std::vector<Vector<double>> item_responses_;
  Vector<double> data_mean_responses_;
  std::vector<double> eval_projection_;
};

/// Runs the full loop; divergence propagates as DivergenceError.
TrainState train(const Dataset& data, const Bank& bank, const SamplerConfig& sampler, const LearnerConfig& learner,
                 std::uint64_t seed);

}  // namespace frameflow
