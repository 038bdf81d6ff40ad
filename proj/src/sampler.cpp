#include "frameflow/sampler.hpp"

#include <sstream>

namespace frameflow {

DivergenceError DivergenceError::at_iteration(long iteration) const {
  std::string msg = "iteration " + std::to_string(iteration) + ": " + what();
  return DivergenceError(chain_, step_, iteration, msg);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

std::string RandomStream::save() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_;
  return os.str();
}

RandomStream RandomStream::load(const std::string& text) {
  RandomStream out;
  std::istringstream is(text);
  is >> out.engine_ >> out.normal_;
  if (!is) throw std::invalid_argument("malformed random stream state");
  return out;
}

void SamplerConfig::validate() const {
  if (!(delta > 0)) throw std::invalid_argument("sampler delta must be positive");
  if (steps_per_iter < 1) throw std::invalid_argument("sampler steps_per_iter must be >= 1");
  if (!(noise_std >= 0)) throw std::invalid_argument("sampler noise_std must be non-negative");
}

ChainInit parse_chain_init(const std::string& name) {
  if (name == "zeros") return ChainInit::zeros;
  if (name == "gaussian") return ChainInit::gaussian;
  throw std::invalid_argument("unknown chain init '" + name + "'");
}

std::string to_string(ChainInit init) { return init == ChainInit::zeros ? "zeros" : "gaussian"; }

void ChainState::validate() const {
  if (chains.empty()) throw std::invalid_argument("chain state needs at least one chain");
  if (rng.size() != chains.size()) throw std::invalid_argument("one random stream per chain required");
  for (const auto& c : chains)
    if (c.shape() != chains.front().shape()) throw ShapeError("chains must share one shape");
}

ChainState initialize_chains(const Shape& shape, std::size_t count, std::uint64_t seed, ChainInit init,
                             double ref_variance) {
  if (count < 1) throw std::invalid_argument("need at least one chain");
  if (!(ref_variance > 0)) throw std::invalid_argument("ref_variance must be positive");
  ChainState state;
  state.chains.reserve(count);
  state.rng.reserve(count);
  const double std_dev = std::sqrt(ref_variance);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng(seed, i);
    Signal x(shape);
    if (init == ChainInit::gaussian)
      for (Index j = 0; j < x.size(); ++j) x[j] = std_dev * rng.normal();
    state.chains.push_back(std::move(x));
    state.rng.push_back(std::move(rng));
  }
  return state;
}

bool is_diverged(const Signal& x) {
  for (Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceBound) return true;
  return false;
}

namespace {

void check_chain(const Signal& x, std::size_t chain, long step) {
  if (is_diverged(x))
    throw DivergenceError(chain, step, -1,
                          "chain " + std::to_string(chain) + " diverged at step " + std::to_string(step));
}

}  // namespace

void advance_chains(ChainState& state, const Bank& bank, const SamplerConfig& cfg, long step) {
  cfg.validate();
  state.validate();
  const double h = 0.5 * cfg.delta * cfg.delta;
  const double inv_var = 1.0 / bank.ref_variance();
  const double noise = cfg.delta * cfg.noise_std;
  for (std::size_t i = 0; i < state.chains.size(); ++i) {
    Signal& x = state.chains[i];
    Vector<double> drift = grad_x_energy(bank, x).values();
    if (cfg.use_reference_drift) drift -= inv_var * x.values();
    x.values() += h * drift;
    if (noise > 0) {
      auto& rng = state.rng[i];
      for (Index j = 0; j < x.size(); ++j) x[j] += noise * rng.normal();
    }
    check_chain(x, i, step);
  }
}

ChainState langevin_step(ChainState state, const Bank& bank, const SamplerConfig& cfg, long step) {
  advance_chains(state, bank, cfg, step);
  return state;
}

void run_inner_loop_in_place(ChainState& state, const Bank& bank, const SamplerConfig& cfg) {
  for (long j = 0; j < cfg.steps_per_iter; ++j) advance_chains(state, bank, cfg, j);
  ++state.iteration;
}

ChainState run_inner_loop(ChainState state, const Bank& bank, const SamplerConfig& cfg) {
  run_inner_loop_in_place(state, bank, cfg);
  return state;
}

SmoothEnergy bank_energy(const Bank& bank) {
  SmoothEnergy e;
  e.grad = [bank](const Signal& x) { return grad_x_energy(bank, x); };
  e.grad_sq_grad_norm = [](const Signal& x) { return Signal(x.shape()); };
  e.ref_variance = bank.ref_variance();
  return e;
}

SmoothEnergy quadratic_energy(double a, double ref_variance) {
  SmoothEnergy e;
  e.grad = [a](const Signal& x) { return Signal(x.shape(), -a * x.values()); };
  e.grad_sq_grad_norm = [a](const Signal& x) { return Signal(x.shape(), 2 * a * a * x.values()); };
  e.ref_variance = ref_variance;
  return e;
}

Signal euler_maruyama_modified(const Signal& x, const SmoothEnergy& energy, const SamplerConfig& cfg,
                               RandomStream& rng, long step) {
  cfg.validate();
  const double h = 0.5 * cfg.delta * cfg.delta;
  Vector<double> drift = energy.grad(x).values();
  if (cfg.include_w2_drift) drift -= energy.grad_sq_grad_norm(x).values();
  if (cfg.use_reference_drift) drift -= (1.0 / energy.ref_variance) * x.values();
  Signal out = x;
  out.values() += h * drift;
  const double noise = cfg.delta * cfg.noise_std;
  if (noise > 0)
    for (Index j = 0; j < out.size(); ++j) out[j] += noise * rng.normal();
  check_chain(out, 0, step);
  return out;
}

}  // namespace frameflow
