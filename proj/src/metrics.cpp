#include "frameflow/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace frameflow {

void MetricTrace::append(MetricRow row) {
  if (!rows_.empty() && row.iter <= rows_.back().iter)
    throw std::invalid_argument("metric trace iterations must strictly increase");
  if (!row.diverged) {
    for (double v : {row.energy_mean, row.response_distance, row.w2_1d, row.theta_norm, row.update_norm})
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite metric in a non-diverged row");
  }
  rows_.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void MetricTrace::write_csv(std::ostream& os) const {
  os << kMetricsCsvHeader << '\n';
  for (const auto& r : rows_) {
    os << r.iter << ',' << r.mode << ',' << format_double(r.energy_mean) << ','
       << format_double(r.response_distance) << ',' << format_double(r.w2_1d) << ','
       << format_double(r.theta_norm) << ',' << format_double(r.update_norm) << ',' << (r.diverged ? 1 : 0)
       << '\n';
  }
}

std::string MetricTrace::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

}  // namespace frameflow
