// Randomized verification suite pairing each analytic quantity with an
// independent numerical reference. Shared by `frameflow oracle-check` and the
// acceptance tests.
#pragma once

#include "frameflow/sampler.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace frameflow::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

/// Small random bank (rank 1 or 2, odd and even kernels, random biases and
/// weights) with a signal that fits it.
struct RandomDraw {
  Bank bank;
  Signal x;
};
RandomDraw random_draw(std::mt19937_64& rng);

/// Redraws the signal until every pre-activation sits at least `margin` away
/// from zero (in unit coordinate steps).
RandomDraw random_interior_draw(std::mt19937_64& rng, double margin);

/// ||a - b|| / max(||a||, ||b||), or 0 when both vanish.
double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// grad_x, grad_theta, and the Gram form of grad_theta |grad_x Phi|^2 against
/// central differences over `draws` random pattern-interior draws.
CheckResult gradient_suite(std::uint64_t seed, int draws = 1000);

/// Finite-difference grad_x |grad_x Phi|^2 vanishes at pattern-interior points.
CheckResult sq_grad_norm_degeneracy(std::uint64_t seed, int points = 100);

/// Euler-Maruyama with and without the grad |grad Phi|^2 drift, and the plain
/// Langevin step, give bit-identical trajectories for a rectified bank.
CheckResult modified_sde_trajectories(std::uint64_t seed, int steps = 25);

/// Second differences of the log density along within-pattern segments are constant.
CheckResult piecewise_gaussian(std::uint64_t seed, int segments = 100);

/// OU-drift Langevin draws against the Fokker-Planck stationary density (KS)
/// and the AR(1) stationary variance.
CheckResult sampler_vs_pde(std::uint64_t seed);

/// Sorted-coupling W2 equals exhaustive search for n <= 6.
CheckResult ot_equivalence(std::uint64_t seed, int instances = 200);

/// Modified and plain Fokker-Planck agree for a piecewise-linear energy.
CheckResult modified_fp_equivalence();

std::vector<CheckResult> oracle_suite(std::uint64_t seed);

}  // namespace frameflow::checks
