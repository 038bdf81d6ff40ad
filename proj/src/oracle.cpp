#include "frameflow/oracle.hpp"

#include <ostream>

namespace frameflow::oracle {

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                 double h) {
  if (!(h > 0)) throw std::invalid_argument("finite difference step must be positive");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

DensityGrid::DensityGrid(double lo_, double hi_, Eigen::Index cells) : lo(lo_), hi(hi_) {
  if (!(hi > lo)) throw std::invalid_argument("density grid needs lo < hi");
  if (cells < 1) throw std::invalid_argument("density grid needs at least one cell");
  values = Eigen::VectorXd::Zero(cells);
}

DensityGrid DensityGrid::from_function(double lo, double hi, Eigen::Index cells,
                                       const std::function<double(double)>& density) {
  DensityGrid g(lo, hi, cells);
  for (Eigen::Index i = 0; i < cells; ++i) g.values[i] = std::max(0.0, density(g.center(i)));
  const double m = g.mass();
  if (!(m > 0)) throw std::invalid_argument("initial density has zero mass on the grid");
  g.values /= m;
  return g;
}

double DensityGrid::mean() const {
  double acc = 0;
  for (Eigen::Index i = 0; i < cells(); ++i) acc += center(i) * values[i];
  return acc * cell_width() / mass();
}

double DensityGrid::variance() const {
  const double mu = mean();
  double acc = 0;
  // Cell-uniform density adds h^2 / 12 of within-cell variance.
  for (Eigen::Index i = 0; i < cells(); ++i) acc += (center(i) - mu) * (center(i) - mu) * values[i];
  const double h = cell_width();
  return acc * h / mass() + h * h / 12.0;
}

double DensityGrid::cdf(double x) const {
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  const double h = cell_width();
  const double pos = (x - lo) / h;
  const auto full = static_cast<Eigen::Index>(pos);
  double acc = values.head(full).sum() * h;
  if (full < cells()) acc += values[full] * (pos - static_cast<double>(full)) * h;
  return std::clamp(acc / mass(), 0.0, 1.0);
}

void DensityGrid::write_csv(std::ostream& os) const {
  os << "x,density\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < cells(); ++i) os << center(i) << ',' << values[i] << '\n';
}

DensityGrid fokker_planck_1d(const std::function<double(double)>& drift, DensityGrid grid, double dt, long steps) {
  const double h = grid.cell_width();
  if (!(dt > 0) || dt > 0.5 * h * h)
    throw std::invalid_argument("explicit Fokker-Planck step violates dt <= cell_width^2 / 2");
  const Eigen::Index n = grid.cells();
  // Drift at interior interfaces i + 1/2; walls carry no flux.
  Eigen::VectorXd nu(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index i = 0; i + 1 < n; ++i) nu[i] = drift(grid.lo + static_cast<double>(i + 1) * h);
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(n + 1);
  auto& rho = grid.values;
  const double ratio = dt / h;
  for (long s = 0; s < steps; ++s) {
    for (Eigen::Index i = 0; i + 1 < n; ++i)
      flux[i + 1] = nu[i] * 0.5 * (rho[i] + rho[i + 1]) - (rho[i + 1] - rho[i]) / h;
    for (Eigen::Index i = 0; i < n; ++i) rho[i] -= ratio * (flux[i + 1] - flux[i]);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rho[i] < 0) {
        rho[i] = 0;
        ++grid.clipped;
      }
    }
  }
  return grid;
}

DensityGrid modified_fp_1d(const SmoothEnergy1D& energy, DensityGrid grid, double dt, long steps) {
  auto drift = [&energy](double x) { return energy.grad(x) - energy.grad_sq_grad_norm(x); };
  return fokker_planck_1d(drift, std::move(grid), dt, steps);
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double normal_cdf(double x, double var) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * var)); }

}  // namespace frameflow::oracle
