// Grid signals, linear filters, and the rectified filter-bank energy
//
//   Phi(x; theta) = sum_k theta_k * sum_p ReLU((w_k * x)(p) + b_k)
//
// together with every analytic derivative the sampler and the learners need.
// Convolutions use zero padding and "same" output shape, so all response maps
// and all per-filter gradient fields share the signal's shape.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace frameflow {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2)
    throw ShapeError("signal rank must be 1 or 2, got shape " + shape_string(shape));
  for (Index e : shape)
    if (e <= 0) throw ShapeError("non-positive extent in shape " + shape_string(shape));
}

/// Real-valued array of rank 1 or 2 stored row-major in a dense vector.
template <typename Scalar>
class GridSignal {
 public:
  using Values = Vector<Scalar>;

  GridSignal() = default;

  explicit GridSignal(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    values_ = Values::Zero(shape_size(shape_));
  }

  GridSignal(Shape shape, Values values) : shape_(std::move(shape)), values_(std::move(values)) {
    check_shape(shape_);
    if (shape_size(shape_) != values_.size())
      throw ShapeError("shape " + shape_string(shape_) + " does not match " +
                       std::to_string(values_.size()) + " values");
    if (!values_.allFinite()) throw std::invalid_argument("grid signal contains non-finite values");
  }

  static GridSignal from_list(Shape shape, std::initializer_list<Scalar> values) {
    Values v(static_cast<Index>(values.size()));
    std::copy(values.begin(), values.end(), v.data());
    return GridSignal(std::move(shape), std::move(v));
  }

  const Shape& shape() const { return shape_; }
  Index size() const { return values_.size(); }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  Index cols() const { return shape_.empty() ? 0 : shape_.back(); }

  const Values& values() const { return values_; }
  Values& values() { return values_; }

  Scalar operator[](Index i) const { return values_[i]; }
  Scalar& operator[](Index i) { return values_[i]; }
  Scalar operator()(Index r, Index c) const { return values_[r * cols() + c]; }
  Scalar& operator()(Index r, Index c) { return values_[r * cols() + c]; }

  bool all_finite() const { return values_.allFinite(); }

  friend bool operator==(const GridSignal& a, const GridSignal& b) {
    return a.shape_ == b.shape_ && a.values_.size() == b.values_.size() &&
           (a.values_.array() == b.values_.array()).all();
  }

 private:
  Shape shape_;
  Values values_;
};

/// Linear filter: a small kernel plus a scalar bias.
template <typename Scalar>
struct Filter {
  GridSignal<Scalar> kernel;
  Scalar bias{0};

  Filter() = default;
  Filter(GridSignal<Scalar> k, Scalar b) : kernel(std::move(k)), bias(b) {
    if (kernel.size() == 0) throw ShapeError("filter kernel is empty");
    if (!std::isfinite(static_cast<double>(bias))) throw std::invalid_argument("filter bias is not finite");
  }
};

/// K fixed filters, their learnable weights theta, and the variance of the
/// Gaussian reference density the energy tilts. Filters cannot change after
/// construction; only theta is mutable.
template <typename Scalar>
class FilterBank {
 public:
  FilterBank() = default;

  FilterBank(std::vector<Filter<Scalar>> filters, Vector<Scalar> theta, Scalar ref_variance,
             std::string kind = "custom", std::uint64_t seed = 0)
      : filters_(std::move(filters)), theta_(std::move(theta)), ref_variance_(ref_variance),
        kind_(std::move(kind)), seed_(seed) {
    if (filters_.empty()) throw std::invalid_argument("filter bank needs at least one filter");
    if (static_cast<std::size_t>(theta_.size()) != filters_.size())
      throw std::invalid_argument("theta length " + std::to_string(theta_.size()) +
                                  " does not match filter count " + std::to_string(filters_.size()));
    if (!(ref_variance_ > 0)) throw std::invalid_argument("ref_variance must be positive");
    const Index rank = filters_.front().kernel.rank();
    for (const auto& f : filters_)
      if (f.kernel.rank() != rank) throw ShapeError("all kernels in a bank must share one rank");
  }

  Index size() const { return static_cast<Index>(filters_.size()); }
  const std::vector<Filter<Scalar>>& filters() const { return filters_; }
  const Filter<Scalar>& filter(Index k) const { return filters_[static_cast<std::size_t>(k)]; }

  const Vector<Scalar>& theta() const { return theta_; }
  void set_theta(Vector<Scalar> theta) {
    if (theta.size() != theta_.size()) throw std::invalid_argument("theta length mismatch");
    theta_ = std::move(theta);
  }

  Scalar ref_variance() const { return ref_variance_; }
  const std::string& kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  Index kernel_rank() const { return filters_.front().kernel.rank(); }

  /// Same filters with different weights.
  FilterBank with_theta(Vector<Scalar> theta) const {
    FilterBank out = *this;
    out.set_theta(std::move(theta));
    return out;
  }

 private:
  std::vector<Filter<Scalar>> filters_;
  Vector<Scalar> theta_;
  Scalar ref_variance_{1};
  std::string kind_ = "custom";
  std::uint64_t seed_ = 0;
};

/// Per-filter masks of strictly positive pre-activation. Signals with equal
/// patterns lie in the same Gaussian piece of the model density.
struct ActivationPattern {
  Shape shape;
  std::vector<std::vector<bool>> masks;

  friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
};

namespace detail {

template <typename Scalar>
void check_compatible(const GridSignal<Scalar>& signal, const GridSignal<Scalar>& kernel) {
  if (signal.size() == 0) throw ShapeError("empty signal");
  if (kernel.rank() != signal.rank())
    throw ShapeError("kernel shape " + shape_string(kernel.shape()) + " incompatible with signal shape " +
                     shape_string(signal.shape()));
  if (kernel.rows() > signal.rows() || kernel.cols() > signal.cols())
    throw ShapeError("kernel " + shape_string(kernel.shape()) + " larger than signal " +
                     shape_string(signal.shape()));
}

// out(r, c) = sum_{i,j} k(i, j) * x(r + i - ar, c + j - ac) with zeros outside x.
template <typename Scalar>
void correlate_same(const GridSignal<Scalar>& x, const GridSignal<Scalar>& k, Scalar* out) {
  const Index rows = x.rows(), cols = x.cols();
  const Index kr = k.rows(), kc = k.cols();
  const Index ar = (kr - 1) / 2, ac = (kc - 1) / 2;
  const Scalar* xv = x.values().data();
  const Scalar* kv = k.values().data();
  for (Index r = 0; r < rows; ++r) {
    const Index i0 = std::max<Index>(0, ar - r), i1 = std::min<Index>(kr, rows - r + ar);
    for (Index c = 0; c < cols; ++c) {
      const Index j0 = std::max<Index>(0, ac - c), j1 = std::min<Index>(kc, cols - c + ac);
      Scalar acc{0};
      for (Index i = i0; i < i1; ++i) {
        const Scalar* xrow = xv + (r + i - ar) * cols + (c - ac);
        const Scalar* krow = kv + i * kc;
        for (Index j = j0; j < j1; ++j) acc += krow[j] * xrow[j];
      }
      out[r * cols + c] = acc;
    }
  }
}

// Adjoint of correlate_same restricted to active positions:
// g(q) += scale * sum_{p active} k(q - p + a).
template <typename Scalar>
void scatter_transpose(const std::vector<bool>& mask, Index rows, Index cols, const GridSignal<Scalar>& k,
                       Scalar scale, Scalar* g) {
  const Index kr = k.rows(), kc = k.cols();
  const Index ar = (kr - 1) / 2, ac = (kc - 1) / 2;
  const Scalar* kv = k.values().data();
  for (Index r = 0; r < rows; ++r) {
    const Index i0 = std::max<Index>(0, ar - r), i1 = std::min<Index>(kr, rows - r + ar);
    for (Index c = 0; c < cols; ++c) {
      if (!mask[static_cast<std::size_t>(r * cols + c)]) continue;
      const Index j0 = std::max<Index>(0, ac - c), j1 = std::min<Index>(kc, cols - c + ac);
      for (Index i = i0; i < i1; ++i) {
        Scalar* grow = g + (r + i - ar) * cols + (c - ac);
        const Scalar* krow = kv + i * kc;
        for (Index j = j0; j < j1; ++j) grow[j] += scale * krow[j];
      }
    }
  }
}

template <typename Scalar>
Vector<Scalar> preactivation(const Filter<Scalar>& filter, const GridSignal<Scalar>& x) {
  check_compatible(x, filter.kernel);
  Vector<Scalar> out(x.size());
  correlate_same(x, filter.kernel, out.data());
  out.array() += filter.bias;
  return out;
}

inline std::vector<bool> positive_mask(const auto& pre) {
  std::vector<bool> mask(static_cast<std::size_t>(pre.size()));
  for (Index i = 0; i < pre.size(); ++i) mask[static_cast<std::size_t>(i)] = pre[i] > 0;
  return mask;
}

template <typename Scalar>
void check_bank_input(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  if (bank.size() == 0) throw std::invalid_argument("empty filter bank");
  for (const auto& f : bank.filters()) check_compatible(x, f.kernel);
}

}  // namespace detail

/// Zero-padded "same" cross-correlation plus bias.
template <typename Scalar>
GridSignal<Scalar> convolve(const GridSignal<Scalar>& signal, const Filter<Scalar>& filter) {
  return GridSignal<Scalar>(signal.shape(), detail::preactivation(filter, signal));
}

/// F_k(x) = sum_p ReLU(response_k(p)) for every filter; also the gradient of
/// the energy with respect to theta, which Phi is linear in.
template <typename Scalar>
Vector<Scalar> filter_responses(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  detail::check_bank_input(bank, x);
  Vector<Scalar> out(bank.size());
  for (Index k = 0; k < bank.size(); ++k)
    out[k] = detail::preactivation(bank.filter(k), x).array().max(Scalar{0}).sum();
  return out;
}

template <typename Scalar>
Vector<Scalar> grad_theta_energy(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  return filter_responses(bank, x);
}

template <typename Scalar>
Scalar energy(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  return bank.theta().dot(filter_responses(bank, x));
}

/// Phi(x) - |x|^2 / (2 sigma_ref^2); the normalizer Z(theta) is never formed.
template <typename Scalar>
Scalar log_density_unnorm(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  return energy(bank, x) - x.values().squaredNorm() / (Scalar{2} * bank.ref_variance());
}

template <typename Scalar>
ActivationPattern activation_pattern(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  detail::check_bank_input(bank, x);
  ActivationPattern out{x.shape(), {}};
  out.masks.reserve(static_cast<std::size_t>(bank.size()));
  for (Index k = 0; k < bank.size(); ++k)
    out.masks.push_back(detail::positive_mask(detail::preactivation(bank.filter(k), x)));
  return out;
}

/// Smallest distance (in units of a unit coordinate step) between any
/// pre-activation and zero: min_{k,p} |pre_k(p)| / max_j |w_k(j)|. Moving any
/// single coordinate by less than this keeps the activation pattern fixed.
template <typename Scalar>
Scalar activation_margin(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  detail::check_bank_input(bank, x);
  Scalar margin = std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < bank.size(); ++k) {
    const Scalar wmax = bank.filter(k).kernel.values().cwiseAbs().maxCoeff();
    if (wmax == Scalar{0}) continue;
    const Scalar pmin = detail::preactivation(bank.filter(k), x).cwiseAbs().minCoeff();
    margin = std::min(margin, pmin / wmax);
  }
  return margin;
}

/// g_k = grad_x sum_p ReLU(response_k(p)). At zero pre-activation the unit is
/// treated as inactive.
template <typename Scalar>
std::vector<GridSignal<Scalar>> filter_grad_fields(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  detail::check_bank_input(bank, x);
  std::vector<GridSignal<Scalar>> out;
  out.reserve(static_cast<std::size_t>(bank.size()));
  for (Index k = 0; k < bank.size(); ++k) {
    const auto& f = bank.filter(k);
    const auto mask = detail::positive_mask(detail::preactivation(f, x));
    GridSignal<Scalar> g(x.shape());
    detail::scatter_transpose(mask, x.rows(), x.cols(), f.kernel, Scalar{1}, g.values().data());
    out.push_back(std::move(g));
  }
  return out;
}

/// Columns are the per-filter gradient fields g_k, so grad_x Phi = D * theta.
template <typename Scalar>
Matrix<Scalar> grad_field_matrix(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  const auto fields = filter_grad_fields(bank, x);
  Matrix<Scalar> d(x.size(), bank.size());
  for (Index k = 0; k < bank.size(); ++k) d.col(k) = fields[static_cast<std::size_t>(k)].values();
  return d;
}

template <typename Scalar>
GridSignal<Scalar> grad_x_energy(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  detail::check_bank_input(bank, x);
  GridSignal<Scalar> g(x.shape());
  for (Index k = 0; k < bank.size(); ++k) {
    const Scalar weight = bank.theta()[k];
    if (weight == Scalar{0}) continue;
    const auto& f = bank.filter(k);
    const auto mask = detail::positive_mask(detail::preactivation(f, x));
    detail::scatter_transpose(mask, x.rows(), x.cols(), f.kernel, weight, g.values().data());
  }
  return g;
}

/// G_jk = <g_j(x), g_k(x)>; symmetric positive semi-definite.
template <typename Scalar>
Matrix<Scalar> gram_matrix(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  const Matrix<Scalar> d = grad_field_matrix(bank, x);
  return d.transpose() * d;
}

/// grad_theta |grad_x Phi(x)|^2 = 2 G theta.
template <typename Scalar>
Vector<Scalar> grad_theta_sq_grad_norm(const FilterBank<Scalar>& bank, const GridSignal<Scalar>& x) {
  return Scalar{2} * (gram_matrix(bank, x) * bank.theta());
}

/// Batch means of per-filter quantities.
template <typename Scalar, typename Fn>
Vector<Scalar> batch_mean(const std::vector<GridSignal<Scalar>>& batch, Index k, Fn&& per_item) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  Vector<Scalar> acc = Vector<Scalar>::Zero(k);
  for (const auto& x : batch) acc += per_item(x);
  return acc / static_cast<Scalar>(batch.size());
}

template <typename Scalar>
Vector<Scalar> mean_filter_responses(const FilterBank<Scalar>& bank, const std::vector<GridSignal<Scalar>>& batch) {
  return batch_mean<Scalar>(batch, bank.size(), [&](const auto& x) { return filter_responses(bank, x); });
}

template <typename Scalar>
Vector<Scalar> mean_grad_theta_sq_grad_norm(const FilterBank<Scalar>& bank,
                                            const std::vector<GridSignal<Scalar>>& batch) {
  return batch_mean<Scalar>(batch, bank.size(), [&](const auto& x) { return grad_theta_sq_grad_norm(bank, x); });
}

}  // namespace frameflow
