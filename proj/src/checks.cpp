#include "frameflow/checks.hpp"

#include "frameflow/filter_banks.hpp"
#include "frameflow/metrics.hpp"
#include "frameflow/oracle.hpp"

#include <chrono>
#include <sstream>

namespace frameflow::checks {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Signal random_signal(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Signal x(shape);
  for (Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
  return x;
}

}  // namespace

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0 ? 0.0 : (a - b).norm() / scale;
}

RandomDraw random_draw(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rank_dist(1, 2), k_dist(1, 4), ksize_dist(1, 3), extent_dist(3, 7);
  std::normal_distribution<double> normal;
  const Index rank = rank_dist(rng);
  const Index k = k_dist(rng);
  const Shape shape = rank == 1 ? Shape{extent_dist(rng) * 2} : Shape{extent_dist(rng), extent_dist(rng)};
  std::vector<Filter<double>> filters;
  for (Index i = 0; i < k; ++i) {
    const Index kr = rank == 1 ? 1 : ksize_dist(rng);
    const Index kc = ksize_dist(rng);
    const Shape kshape = rank == 1 ? Shape{kc} : Shape{kr, kc};
    filters.emplace_back(random_signal(kshape, rng), 0.5 * normal(rng));
  }
  Vector<double> theta(k);
  for (Index i = 0; i < k; ++i) theta[i] = normal(rng);
  const double ref_variance = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  Bank bank(std::move(filters), std::move(theta), ref_variance, "random");
  return {std::move(bank), random_signal(shape, rng)};
}

RandomDraw random_interior_draw(std::mt19937_64& rng, double margin) {
  for (;;) {
    RandomDraw d = random_draw(rng);
    for (int attempt = 0; attempt < 20; ++attempt) {
      if (activation_margin(d.bank, d.x) > margin) return d;
      d.x = random_signal(d.x.shape(), rng);
    }
  }
}

CheckResult gradient_suite(std::uint64_t seed, int draws) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  constexpr double hx = 1e-5, htheta = 1e-3, hgram = 1e-4;
  double worst_x = 0, worst_theta = 0, worst_gram = 0;
  for (int n = 0; n < draws; ++n) {
    const RandomDraw d = random_interior_draw(rng, 10 * hx);
    const Bank& bank = d.bank;
    const Shape shape = d.x.shape();

    const auto fx = [&](const Eigen::VectorXd& v) { return energy(bank, Signal(shape, v)); };
    const Eigen::VectorXd fd_x = oracle::finite_diff_grad(fx, d.x.values(), hx);
    worst_x = std::max(worst_x, relative_error(grad_x_energy(bank, d.x).values(), fd_x));

    const auto ftheta = [&](const Eigen::VectorXd& t) { return energy(bank.with_theta(t), d.x); };
    const Eigen::VectorXd fd_theta = oracle::finite_diff_grad(ftheta, bank.theta(), htheta);
    worst_theta = std::max(worst_theta, relative_error(grad_theta_energy(bank, d.x), fd_theta));

    const auto fgram = [&](const Eigen::VectorXd& t) {
      return grad_x_energy(bank.with_theta(t), d.x).values().squaredNorm();
    };
    const Eigen::VectorXd fd_gram = oracle::finite_diff_grad(fgram, bank.theta(), hgram);
    worst_gram = std::max(worst_gram, relative_error(grad_theta_sq_grad_norm(bank, d.x), fd_gram));
  }
  CheckResult r;
  r.name = "gradient suite";
  r.seconds = seconds_since(t0);
  r.passed = worst_x < 1e-5 && worst_theta < 1e-8 && worst_gram < 1e-6;
  r.detail = std::to_string(draws) + " draws; worst rel err grad_x " + fmt(worst_x) + " (<1e-5), grad_theta " +
             fmt(worst_theta) + " (<1e-8), gram " + fmt(worst_gram) + " (<1e-6)";
  return r;
}

CheckResult sq_grad_norm_degeneracy(std::uint64_t seed, int points) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  constexpr double h = 1e-5;
  double worst = 0;
  for (int n = 0; n < points; ++n) {
    const RandomDraw d = random_interior_draw(rng, 10 * h);
    const auto f = [&](const Eigen::VectorXd& v) {
      return grad_x_energy(d.bank, Signal(d.x.shape(), v)).values().squaredNorm();
    };
    worst = std::max(worst, oracle::finite_diff_grad(f, d.x.values(), h).cwiseAbs().maxCoeff());
  }
  CheckResult r;
  r.name = "sq-grad-norm degeneracy";
  r.seconds = seconds_since(t0);
  r.passed = worst < 1e-8;
  r.detail = std::to_string(points) + " points; max |fd grad_x |grad_x Phi|^2| = " + fmt(worst) + " (<1e-8)";
  return r;
}

CheckResult modified_sde_trajectories(std::uint64_t seed, int steps) {
  const auto t0 = Clock::now();
  BankSpec spec;
  spec.count = 8;
  spec.kernel_size = 5;
  spec.theta_init = 0.5;
  Bank bank = make_bank<double>(spec);
  Vector<double> theta(8);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (Index k = 0; k < 8; ++k) theta[k] = normal(rng);
  bank.set_theta(theta);

  SamplerConfig with_w2{0.2, 1, 1.0, true, true};
  SamplerConfig without_w2 = with_w2;
  without_w2.include_w2_drift = false;
  const SmoothEnergy e = bank_energy(bank);

  ChainState plain = initialize_chains({16, 16}, 1, seed, ChainInit::gaussian);
  Signal a = plain.chains[0], b = plain.chains[0];
  RandomStream ra = plain.rng[0], rb = plain.rng[0];
  bool identical = true;
  for (int s = 0; s < steps; ++s) {
    a = euler_maruyama_modified(a, e, with_w2, ra, s);
    b = euler_maruyama_modified(b, e, without_w2, rb, s);
    advance_chains(plain, bank, without_w2, s);
    identical = identical && a == b && a == plain.chains[0];
  }
  CheckResult r;
  r.name = "modified SDE trajectories";
  r.seconds = seconds_since(t0);
  r.passed = identical;
  r.detail = std::to_string(steps) + " steps on a 16x16 Gabor bank; with/without w2 drift and Langevin step " +
             (identical ? "bit-identical" : "differ");
  return r;
}

CheckResult piecewise_gaussian(std::uint64_t seed, int segments) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0;
  bool patterns_held = true;
  for (int n = 0; n < segments; ++n) {
    const RandomDraw d = random_interior_draw(rng, 1e-3);
    Signal dir(d.x.shape());
    for (Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
    dir.values().normalize();
    // Largest |t| keeping every pre-activation's sign along x + t * dir.
    double t_max = std::numeric_limits<double>::infinity();
    for (const auto& f : d.bank.filters()) {
      const Vector<double> pre = detail::preactivation(f, d.x);
      const Vector<double> slope = detail::preactivation(Filter<double>(f.kernel, 0.0), dir);
      for (Index p = 0; p < pre.size(); ++p)
        if (slope[p] != 0) t_max = std::min(t_max, std::abs(pre[p] / slope[p]));
    }
    t_max = std::min(0.9 * t_max, 1.0);
    constexpr int kPoints = 9;
    const double step = 2 * t_max / (kPoints - 1);
    std::vector<double> f;
    const auto base = activation_pattern(d.bank, d.x);
    for (int i = 0; i < kPoints; ++i) {
      Signal y = d.x;
      y.values() += (-t_max + step * i) * dir.values();
      patterns_held = patterns_held && activation_pattern(d.bank, y) == base;
      f.push_back(log_density_unnorm(d.bank, y));
    }
    const double first = f[2] - 2 * f[1] + f[0];
    for (int i = 2; i + 1 < kPoints; ++i) worst = std::max(worst, std::abs(f[i + 1] - 2 * f[i] + f[i - 1] - first));
  }
  CheckResult r;
  r.name = "piecewise-Gaussian log density";
  r.seconds = seconds_since(t0);
  r.passed = patterns_held && worst < 1e-8;
  r.detail = std::to_string(segments) + " segments; max second-difference spread " + fmt(worst) +
             " (<1e-8); patterns " + (patterns_held ? "constant" : "changed");
  return r;
}

CheckResult sampler_vs_pde(std::uint64_t seed) {
  const auto t0 = Clock::now();
  // Reference: Fokker-Planck with drift -x from an off-center start.
  auto grid = oracle::DensityGrid::from_function(-6.0, 6.0, 480, [](double x) { return std::exp(-(x - 1) * (x - 1)); });
  const double h = grid.cell_width();
  const double dt = 0.4 * h * h;
  grid = oracle::fokker_planck_1d([](double x) { return -x; }, grid, dt, static_cast<long>(10.0 / dt));

  // theta = 0, sigma_ref = 1: the chain is AR(1) with a = 1 - delta^2 / 2.
  const Bank bank({Filter<double>(Signal::from_list({1}, {1.0}), 0.0)}, Vector<double>::Zero(1), 1.0);
  const SamplerConfig cfg{0.1, 1, 1.0, true, false};
  ChainState state = initialize_chains({625}, 16, seed, ChainInit::zeros);
  for (long s = 0; s < 3000; ++s) advance_chains(state, bank, cfg, s);
  std::vector<double> draws;
  for (const auto& c : state.chains) draws.insert(draws.end(), c.values().data(), c.values().data() + c.size());
  const double ks = oracle::ks_distance(draws, [&](double x) { return grid.cdf(x); });

  const double a = 1 - 0.5 * cfg.delta * cfg.delta;
  const double expected_var = cfg.delta * cfg.delta / (1 - a * a);
  double var_acc = 0;
  constexpr int kSnapshots = 10;
  for (int snap = 0; snap < kSnapshots; ++snap) {
    for (long s = 0; s < 200; ++s) advance_chains(state, bank, cfg, s);
    double sq = 0;
    long n = 0;
    for (const auto& c : state.chains) {
      sq += c.values().squaredNorm();
      n += c.size();
    }
    var_acc += sq / static_cast<double>(n);
  }
  const double var = var_acc / kSnapshots;
  const double var_err = std::abs(var - expected_var) / expected_var;

  CheckResult r;
  r.name = "sampler vs Fokker-Planck";
  r.seconds = seconds_since(t0);
  r.passed = ks < 0.05 && var_err < 0.03;
  r.detail = "KS " + fmt(ks) + " (<0.05) over " + std::to_string(draws.size()) + " draws; variance " + fmt(var) +
             " vs " + fmt(expected_var) + " rel err " + fmt(var_err) + " (<0.03)";
  return r;
}

CheckResult ot_equivalence(std::uint64_t seed, int instances) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size_dist(1, 6);
  std::normal_distribution<double> normal;
  double worst = 0;
  for (int n = 0; n < instances; ++n) {
    const int size = size_dist(rng);
    std::vector<double> a(size), b(size);
    for (auto& v : a) v = normal(rng);
    for (auto& v : b) v = 2 * normal(rng) + 0.5;
    worst = std::max(worst, std::abs(empirical_w2_1d(a, b) - oracle::brute_force_w2(a, b)));
  }
  CheckResult r;
  r.name = "1-D OT equivalence";
  r.seconds = seconds_since(t0);
  r.passed = worst <= 1e-12;
  r.detail = std::to_string(instances) + " instances n<=6; max |sorted - brute force| " + fmt(worst) + " (<=1e-12)";
  return r;
}

CheckResult modified_fp_equivalence() {
  const auto t0 = Clock::now();
  // Phi(x) = 2 ReLU(x - 0.3137) - 1.5 ReLU(-x - 0.7213) - 0.5 x: piecewise
  // linear, kinks away from the cell interfaces.
  const auto grad = [](double x) { return (x > 0.3137 ? 2.0 : 0.0) + (-x - 0.7213 > 0 ? 1.5 : 0.0) - 0.5; };
  const auto sq_fd = [&](double x) {
    constexpr double h = 1e-6;
    const double up = grad(x + h), down = grad(x - h);
    return (up * up - down * down) / (2 * h);
  };
  auto grid = oracle::DensityGrid::from_function(-5.0, 5.0, 200, [](double x) { return std::exp(-x * x / 2); });
  const double dt = 0.4 * grid.cell_width() * grid.cell_width();
  const auto plain = oracle::fokker_planck_1d(grad, grid, dt, 5000);
  const auto modified = oracle::modified_fp_1d({grad, sq_fd}, grid, dt, 5000);
  const double diff = (plain.values - modified.values).cwiseAbs().maxCoeff();
  CheckResult r;
  r.name = "modified vs plain Fokker-Planck";
  r.seconds = seconds_since(t0);
  r.passed = diff < 1e-9;
  r.detail = "piecewise-linear energy, 5000 steps; max cell difference " + fmt(diff) + " (<1e-9)";
  return r;
}

std::vector<CheckResult> oracle_suite(std::uint64_t seed) {
  return {gradient_suite(seed),
          sq_grad_norm_degeneracy(seed + 1),
          modified_sde_trajectories(seed + 2),
          piecewise_gaussian(seed + 3),
          sampler_vs_pde(seed + 4),
          ot_equivalence(seed + 5),
          modified_fp_equivalence()};
}

}  // namespace frameflow::checks
