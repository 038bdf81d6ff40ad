// Persistent Langevin chains.
//
// One sub-step moves every chain by
//   x <- x + (delta^2 / 2) * (grad_x Phi(x) - x / sigma_ref^2) + delta * noise_std * xi,
// with xi ~ N(0, I) drawn from the chain's own stream, so results never
// depend on the order in which chains are advanced.
#pragma once

#include "frameflow/signal.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace frameflow {

using Signal = GridSignal<double>;
using Bank = FilterBank<double>;

/// Raised when a chain leaves the finite range; carries where it happened.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t chain, long step, long iteration, const std::string& what)
      : std::runtime_error(what), chain_(chain), step_(step), iteration_(iteration) {}

  std::size_t chain() const { return chain_; }
  long step() const { return step_; }
  /// -1 when raised outside a training loop.
  long iteration() const { return iteration_; }

  DivergenceError at_iteration(long iteration) const;

 private:
  std::size_t chain_;
  long step_;
  long iteration_;
};

/// Any |value| above this is treated as divergence.
inline constexpr double kDivergenceBound = 1e6;

/// Seedable normal stream whose full state round-trips through text.
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::mt19937_64& engine() { return engine_; }

  std::string save() const;
  static RandomStream load(const std::string& text);

  friend bool operator==(const RandomStream& a, const RandomStream& b) {
    return a.engine_ == b.engine_ && a.normal_ == b.normal_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

struct SamplerConfig {
  double delta = 0.2;
  long steps_per_iter = 50;
  double noise_std = 1.0;
  bool use_reference_drift = true;
  bool include_w2_drift = false;

  void validate() const;
};

enum class ChainInit { zeros, gaussian };

ChainInit parse_chain_init(const std::string& name);
std::string to_string(ChainInit init);

struct ChainState {
  std::vector<Signal> chains;
  long iteration = 0;
  std::vector<RandomStream> rng;

  std::size_t size() const { return chains.size(); }
  const Shape& shape() const { return chains.front().shape(); }
  void validate() const;
};

/// M chains of one shape; gaussian init draws N(0, ref_variance) per entry
/// from each chain's own stream.
ChainState initialize_chains(const Shape& shape, std::size_t count, std::uint64_t seed, ChainInit init,
                             double ref_variance = 1.0);

/// One sub-step for every chain, in place. `step` only labels errors.
void advance_chains(ChainState& state, const Bank& bank, const SamplerConfig& cfg, long step = 0);

ChainState langevin_step(ChainState state, const Bank& bank, const SamplerConfig& cfg, long step = 0);

/// L sub-steps followed by iteration += 1.
ChainState run_inner_loop(ChainState state, const Bank& bank, const SamplerConfig& cfg);
void run_inner_loop_in_place(ChainState& state, const Bank& bank, const SamplerConfig& cfg);

/// Energy exposing grad Phi and grad |grad Phi|^2, for the modified SDE.
struct SmoothEnergy {
  std::function<Signal(const Signal&)> grad;
  std::function<Signal(const Signal&)> grad_sq_grad_norm;
  double ref_variance = 1.0;
};

/// Adapter for the rectified bank energy. grad |grad Phi|^2 is returned as the
/// exact zero field: grad Phi is piecewise constant in x.
SmoothEnergy bank_energy(const Bank& bank);

/// Phi(x) = -a |x|^2 / 2, so grad Phi = -a x and grad |grad Phi|^2 = 2 a^2 x.
SmoothEnergy quadratic_energy(double a, double ref_variance = 1.0);

/// One step of
///   x <- x + h * (grad Phi - [grad |grad Phi|^2] - [x / sigma_ref^2]) + delta * noise_std * xi
/// with h = delta^2 / 2; bracketed terms follow include_w2_drift and
/// use_reference_drift. delta = sqrt(2), noise_std = 1 gives unit step size.
Signal euler_maruyama_modified(const Signal& x, const SmoothEnergy& energy, const SamplerConfig& cfg,
                               RandomStream& rng, long step = 0);

bool is_diverged(const Signal& x);

}  // namespace frameflow
