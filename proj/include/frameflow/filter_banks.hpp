// Fixed filter banks: oriented Gabor pairs and seeded random kernels.
#pragma once

#include "frameflow/signal.hpp"

#include <numbers>
#include <random>

namespace frameflow {

struct BankSpec {
  std::string kind = "gabor";  // gabor | random
  Index count = 8;
  Index kernel_size = 5;
  Index rank = 2;
  double wavelength = 4.0;  // gabor only
  double bias = 0.0;
  double theta_init = 0.0;
  double ref_variance = 1.0;
  std::uint64_t seed = 0;  // random only
};

namespace detail {

// Zero mean, unit L2 norm.
template <typename Scalar>
void normalize_kernel(Vector<Scalar>& k) {
  k.array() -= k.mean();
  const Scalar n = k.norm();
  if (n > Scalar{0}) k /= n;
}

}  // namespace detail

/// Gabor kernels; filter k has orientation pi * (k / 2) / ceil(K / 2) and
/// alternates between even (cosine) and odd (sine) phase. For rank-1 banks the
/// orientation only modulates the frequency.
template <typename Scalar = double>
std::vector<Filter<Scalar>> gabor_filters(Index count, Index size, Index rank, double wavelength, double bias) {
  if (count < 1 || size < 1) throw std::invalid_argument("gabor bank needs count >= 1 and size >= 1");
  const Index orientations = (count + 1) / 2;
  const double sigma = 0.5 * wavelength;
  const double center = 0.5 * static_cast<double>(size - 1);
  const Shape shape = rank == 1 ? Shape{size} : Shape{size, size};
  const Index rows = rank == 1 ? 1 : size;
  std::vector<Filter<Scalar>> out;
  for (Index k = 0; k < count; ++k) {
    const double angle = std::numbers::pi * static_cast<double>(k / 2) / static_cast<double>(orientations);
    const double phase = (k % 2) ? 0.5 * std::numbers::pi : 0.0;
    Vector<Scalar> v(shape_size(shape));
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < size; ++c) {
        const double y = rank == 1 ? 0.0 : static_cast<double>(r) - center;
        const double x = static_cast<double>(c) - center;
        const double u = x * std::cos(angle) + y * std::sin(angle);
        const double envelope = std::exp(-(x * x + y * y) / (2 * sigma * sigma));
        v[r * size + c] =
            static_cast<Scalar>(envelope * std::cos(2 * std::numbers::pi * u / wavelength + phase));
      }
    }
    detail::normalize_kernel(v);
    out.emplace_back(GridSignal<Scalar>(shape, std::move(v)), static_cast<Scalar>(bias));
  }
  return out;
}

template <typename Scalar = double>
std::vector<Filter<Scalar>> random_filters(Index count, Index size, Index rank, double bias, std::uint64_t seed) {
  if (count < 1 || size < 1) throw std::invalid_argument("random bank needs count >= 1 and size >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Shape shape = rank == 1 ? Shape{size} : Shape{size, size};
  std::vector<Filter<Scalar>> out;
  for (Index k = 0; k < count; ++k) {
    Vector<Scalar> v(shape_size(shape));
    for (Index i = 0; i < v.size(); ++i) v[i] = static_cast<Scalar>(normal(rng));
    if (v.size() > 1) detail::normalize_kernel(v);
    out.emplace_back(GridSignal<Scalar>(shape, std::move(v)), static_cast<Scalar>(bias));
  }
  return out;
}

template <typename Scalar = double>
FilterBank<Scalar> make_bank(const BankSpec& spec) {
  if (spec.rank != 1 && spec.rank != 2) throw std::invalid_argument("bank rank must be 1 or 2");
  std::vector<Filter<Scalar>> filters;
  if (spec.kind == "gabor")
    filters = gabor_filters<Scalar>(spec.count, spec.kernel_size, spec.rank, spec.wavelength, spec.bias);
  else if (spec.kind == "random")
    filters = random_filters<Scalar>(spec.count, spec.kernel_size, spec.rank, spec.bias, spec.seed);
  else
    throw std::invalid_argument("unknown bank kind '" + spec.kind + "'");
  Vector<Scalar> theta = Vector<Scalar>::Constant(spec.count, static_cast<Scalar>(spec.theta_init));
  return FilterBank<Scalar>(std::move(filters), std::move(theta), static_cast<Scalar>(spec.ref_variance),
                            spec.kind, spec.seed);
}

}  // namespace frameflow
