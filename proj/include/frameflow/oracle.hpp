// Independent references used to check the implementation: central finite
// differences, an explicit 1-D Fokker-Planck solver, and exhaustive optimal
// transport for small samples. Nothing here calls into the sampler or the
// energy code.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace frameflow::oracle {

/// (f(x + h e_i) - f(x - h e_i)) / (2h) for every coordinate.
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                 double h);

/// Cell-averaged density on [lo, hi] with reflecting walls.
struct DensityGrid {
  double lo = 0;
  double hi = 1;
  Eigen::VectorXd values;
  /// Cells clipped from slightly negative values to zero during evolution.
  long clipped = 0;

  DensityGrid() = default;
  DensityGrid(double lo, double hi, Eigen::Index cells);

  /// Samples `density` at cell centers and renormalizes to unit mass.
  static DensityGrid from_function(double lo, double hi, Eigen::Index cells, const std::function<double(double)>& density);

  Eigen::Index cells() const { return values.size(); }
  double cell_width() const { return (hi - lo) / static_cast<double>(values.size()); }
  double center(Eigen::Index i) const { return lo + (static_cast<double>(i) + 0.5) * cell_width(); }
  double mass() const { return values.sum() * cell_width(); }
  double mean() const;
  double variance() const;
  /// CDF assuming constant density inside each cell.
  double cdf(double x) const;
  void write_csv(std::ostream& os) const;
};

/// Explicit centered-flux scheme for d rho/dt = -d/dx(rho * drift) + d^2 rho/dx^2.
/// Requires dt <= cell_width^2 / 2; throws std::invalid_argument otherwise.
DensityGrid fokker_planck_1d(const std::function<double(double)>& drift, DensityGrid grid, double dt, long steps);

/// 1-D energy with derivative callbacks for the modified flow.
struct SmoothEnergy1D {
  std::function<double(double)> grad;             // Phi'
  std::function<double(double)> grad_sq_grad_norm;  // (|Phi'|^2)'
};

/// Fokker-Planck evolution with drift Phi' - (|Phi'|^2)'.
DensityGrid modified_fp_1d(const SmoothEnergy1D& energy, DensityGrid grid, double dt, long steps);

/// Minimum over all n! pairings of sqrt(mean squared pairwise cost).
template <typename Scalar>
Scalar brute_force_w2(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("brute_force_w2 needs equal sample counts");
  if (a.empty()) throw std::invalid_argument("brute_force_w2 needs at least one sample");
  if (a.size() > 9) throw std::invalid_argument("brute_force_w2 enumerates n!; keep n <= 9");
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Scalar best = std::numeric_limits<Scalar>::infinity();
  do {
    Scalar cost{0};
    for (std::size_t i = 0; i < a.size(); ++i) cost += (a[i] - b[perm[i]]) * (a[i] - b[perm[i]]);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<Scalar>(a.size()));
}

/// Kolmogorov-Smirnov distance between an empirical sample and a CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Standard normal CDF scaled to variance `var`.
double normal_cdf(double x, double var = 1.0);

}  // namespace frameflow::oracle
