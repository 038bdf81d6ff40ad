#pragma once

#include "frameflow/signal.hpp"

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

namespace frameflow {

/// Per-filter mean responses of a batch, each divided by the response-map
/// size so filters are comparable across signal sizes.
template <typename Scalar>
Vector<Scalar> normalized_mean_responses(const FilterBank<Scalar>& bank, const std::vector<GridSignal<Scalar>>& batch) {
  if (batch.empty()) throw std::invalid_argument("response statistics need a non-empty batch");
  return mean_filter_responses(bank, batch) / static_cast<Scalar>(batch.front().size());
}

/// R = (1/K) sum_k |mean_X F_k - mean_Y F_k|, on map-size normalized responses.
template <typename Scalar>
Scalar response_distance_from_means(const Vector<Scalar>& mean_x, const Vector<Scalar>& mean_y) {
  if (mean_x.size() != mean_y.size() || mean_x.size() == 0)
    throw std::invalid_argument("response vectors must have equal, non-zero length");
  return (mean_x - mean_y).cwiseAbs().sum() / static_cast<Scalar>(mean_x.size());
}

template <typename Scalar>
Scalar response_distance(const FilterBank<Scalar>& bank, const std::vector<GridSignal<Scalar>>& x,
                         const std::vector<GridSignal<Scalar>>& y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("response_distance needs non-empty batches");
  return response_distance_from_means(normalized_mean_responses(bank, x), normalized_mean_responses(bank, y));
}

template <typename Scalar>
Scalar mean_energy(const FilterBank<Scalar>& bank, const std::vector<GridSignal<Scalar>>& batch) {
  if (batch.empty()) throw std::invalid_argument("mean_energy needs a non-empty batch");
  Scalar acc{0};
  for (const auto& x : batch) acc += energy(bank, x);
  return acc / static_cast<Scalar>(batch.size());
}

/// Exact W2 between two equal-size 1-D empirical measures (sorted coupling).
template <typename Scalar>
Scalar empirical_w2_1d(std::vector<Scalar> a, std::vector<Scalar> b) {
  if (a.size() != b.size()) throw std::invalid_argument("empirical_w2_1d needs equal sample counts");
  if (a.empty()) throw std::invalid_argument("empirical_w2_1d needs at least one sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  Scalar acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<Scalar>(a.size()));
}

/// Scalar projection used for the W2 trace column: mean value of each signal.
template <typename Scalar>
std::vector<Scalar> pixel_means(const std::vector<GridSignal<Scalar>>& batch) {
  std::vector<Scalar> out;
  out.reserve(batch.size());
  for (const auto& x : batch) out.push_back(x.values().mean());
  return out;
}

struct MetricRow {
  long iter = 0;
  std::string mode;
  double energy_mean = 0;
  double response_distance = 0;
  double w2_1d = 0;
  double theta_norm = 0;
  double update_norm = 0;
  bool diverged = false;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

inline constexpr const char* kMetricsCsvHeader =
    "iter,mode,energy_mean,response_distance,w2_1d,theta_norm,update_norm,diverged";

/// Per-iteration time series; iterations strictly increase.
class MetricTrace {
 public:
  void append(MetricRow row);
  const std::vector<MetricRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const MetricRow& back() const { return rows_.back(); }
  bool diverged() const { return !rows_.empty() && rows_.back().diverged; }

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;

  friend bool operator==(const MetricTrace&, const MetricTrace&) = default;

 private:
  std::vector<MetricRow> rows_;
};

/// Shortest round-trip decimal for a double; "nan"/"inf" spelled out.
std::string format_double(double v);

}  // namespace frameflow
