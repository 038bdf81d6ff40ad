#include "frameflow/checks.hpp"
#include "frameflow/filter_banks.hpp"
#include "frameflow/oracle.hpp"

#include <doctest.h>

using namespace frameflow;

namespace {

Bank zero_bank(double ref_variance = 1.0) {
  return Bank({Filter<double>(Signal::from_list({1}, {1.0}), 0.0)}, Vector<double>::Zero(1), ref_variance);
}

ChainState single(const Signal& x, std::uint64_t seed = 1) {
  ChainState s = initialize_chains(x.shape(), 1, seed, ChainInit::zeros);
  s.chains[0] = x;
  return s;
}

Bank gabor_bank(double theta) {
  BankSpec spec;
  spec.theta_init = theta;
  return make_bank<double>(spec);
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(SamplerConfig{}.validate());
  CHECK_THROWS(SamplerConfig{0.0, 1, 1.0, true, false}.validate());
  CHECK_THROWS(SamplerConfig{0.1, 0, 1.0, true, false}.validate());
  CHECK_THROWS(SamplerConfig{0.1, 1, -1.0, true, false}.validate());
}

TEST_CASE("langevin step: reference drift only") {
  const SamplerConfig cfg{0.2, 1, 0.0, true, false};
  const ChainState out = langevin_step(single(Signal::from_list({1}, {1.0})), zero_bank(), cfg);
  CHECK(out.chains[0][0] == doctest::Approx(0.98).epsilon(1e-15));
  CHECK(out.iteration == 0);
}

TEST_CASE("langevin step: no drift and no noise leaves chains unchanged") {
  const SamplerConfig cfg{0.2, 1, 0.0, false, false};
  const Signal x = Signal::from_list({3}, {1.5, -2, 7});
  CHECK(langevin_step(single(x), zero_bank(), cfg).chains[0] == x);
}

TEST_CASE("langevin step with energy drift") {
  // x = [3], theta = 2: drift (delta^2 / 2) * (2 - 3) = -0.02.
  const Bank bank({Filter<double>(Signal::from_list({1}, {1.0}), 0.0)}, Vector<double>::Constant(1, 2.0), 1.0);
  const SamplerConfig cfg{0.2, 1, 0.0, true, false};
  CHECK(langevin_step(single(Signal::from_list({1}, {3.0})), bank, cfg).chains[0][0] ==
        doctest::Approx(2.98).epsilon(1e-15));
}

TEST_CASE("fixed seed gives bit-identical chains") {
  const Bank bank = gabor_bank(0.3);
  const SamplerConfig cfg;
  const ChainState a = run_inner_loop(initialize_chains({16, 16}, 4, 42, ChainInit::gaussian), bank, cfg);
  const ChainState b = run_inner_loop(initialize_chains({16, 16}, 4, 42, ChainInit::gaussian), bank, cfg);
  CHECK(a.chains == b.chains);
  CHECK(a.rng == b.rng);
  CHECK(a.iteration == 1);
  const ChainState c = run_inner_loop(initialize_chains({16, 16}, 4, 43, ChainInit::gaussian), bank, cfg);
  CHECK_FALSE(a.chains == c.chains);
}

TEST_CASE("chains are independent of how many are advanced together") {
  const Bank bank = gabor_bank(0.3);
  const SamplerConfig cfg;
  ChainState all = initialize_chains({16, 16}, 4, 7, ChainInit::gaussian);
  ChainState third = all;
  third.chains = {all.chains[2]};
  third.rng = {all.rng[2]};
  run_inner_loop_in_place(all, bank, cfg);
  run_inner_loop_in_place(third, bank, cfg);
  CHECK(all.chains[2] == third.chains[0]);
}

TEST_CASE("noise off is deterministic regardless of seed") {
  const Bank bank = gabor_bank(0.5);
  SamplerConfig cfg;
  cfg.noise_std = 0;
  ChainState a = initialize_chains({8, 8}, 2, 1, ChainInit::zeros);
  ChainState b = initialize_chains({8, 8}, 2, 99, ChainInit::zeros);
  a.chains[0][5] = b.chains[0][5] = 1.0;
  run_inner_loop_in_place(a, bank, cfg);
  run_inner_loop_in_place(b, bank, cfg);
  CHECK(a.chains == b.chains);
}

TEST_CASE("initialization") {
  const ChainState z = initialize_chains({4, 5}, 3, 1, ChainInit::zeros);
  CHECK(z.size() == 3);
  CHECK(z.rng.size() == 3);
  for (const auto& c : z.chains) CHECK(c.values().isZero(0));
  const ChainState g = initialize_chains({400}, 2, 1, ChainInit::gaussian, 4.0);
  const double var = g.chains[0].values().squaredNorm() / 400;
  CHECK(var == doctest::Approx(4.0).epsilon(0.25));
  CHECK_FALSE(g.chains[0] == g.chains[1]);
  CHECK(parse_chain_init("gaussian") == ChainInit::gaussian);
  CHECK_THROWS(parse_chain_init("uniform"));
}

TEST_CASE("stability threshold") {
  // |a| = |1 - delta^2 / (2 sigma^2)| >= 1 once delta^2 >= 4 sigma^2.
  const Bank bank = zero_bank(1.0);
  SamplerConfig cfg{2.05, 1, 0.0, true, false};
  ChainState s = single(Signal::from_list({2}, {1.0, -1.0}));
  bool threw = false;
  try {
    for (long i = 0; i < 2000; ++i) advance_chains(s, bank, cfg, i);
  } catch (const DivergenceError& e) {
    threw = true;
    CHECK(e.chain() == 0);
    CHECK(e.step() > 0);
  }
  CHECK(threw);

  cfg.delta = 1.9;
  ChainState stable = single(Signal::from_list({2}, {1.0, -1.0}));
  for (long i = 0; i < 2000; ++i) advance_chains(stable, bank, cfg, i);
  CHECK(stable.chains[0].values().cwiseAbs().maxCoeff() < 1e-10);

  // A smaller reference variance moves the threshold.
  cfg.delta = 0.5;
  ChainState narrow = single(Signal::from_list({1}, {1.0}));
  CHECK_THROWS_AS(
      [&] {
        for (long i = 0; i < 2000; ++i) advance_chains(narrow, zero_bank(0.05), cfg, i);
      }(),
      DivergenceError);
}

TEST_CASE("divergence names chain and step") {
  const Bank bank = zero_bank(1.0);
  ChainState s = initialize_chains({1}, 3, 1, ChainInit::zeros);
  s.chains[1][0] = 2e6;
  try {
    advance_chains(s, bank, SamplerConfig{0.1, 1, 0.0, false, false}, 17);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.chain() == 1);
    CHECK(e.step() == 17);
    CHECK(e.iteration() == -1);
    CHECK(e.at_iteration(4).iteration() == 4);
  }
}

TEST_CASE("modified Euler-Maruyama on a quadratic energy") {
  // Unit step scale: h = delta^2 / 2 = 1.
  const SamplerConfig cfg{std::sqrt(2.0), 1, 0.0, false, true};
  RandomStream rng(1, 0);
  const Signal out = euler_maruyama_modified(Signal::from_list({1}, {1.0}), quadratic_energy(0.5), cfg, rng);
  CHECK(std::abs(out[0]) < 1e-15);

  const Signal x = Signal::from_list({3}, {0.3, -4, 2});
  CHECK(euler_maruyama_modified(x, quadratic_energy(0.0), cfg, rng) == x);

  // The analytic grad |grad Phi|^2 = 2 a^2 x agrees with finite differences.
  const double a = 0.7;
  const SmoothEnergy e = quadratic_energy(a);
  const auto sq = [&](const Eigen::VectorXd& v) {
    return e.grad(Signal(x.shape(), v)).values().squaredNorm();
  };
  const Eigen::VectorXd fd = oracle::finite_diff_grad(sq, x.values(), 1e-5);
  CHECK(checks::relative_error(fd, e.grad_sq_grad_norm(x).values()) < 1e-9);
}

TEST_CASE("modified Euler-Maruyama matches Langevin for the rectified bank") {
  const auto r = checks::modified_sde_trajectories(5, 50);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("OU stationarity against the Fokker-Planck reference") {
  const auto r = checks::sampler_vs_pde(3);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("random stream state round-trips through text") {
  RandomStream a(5, 2);
  for (int i = 0; i < 3; ++i) a.normal();  // leaves a cached Box-Muller value
  RandomStream b = RandomStream::load(a.save());
  CHECK(a == b);
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
  CHECK_THROWS(RandomStream::load("not a stream"));
}
