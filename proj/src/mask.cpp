#include "hydrostat/mask.hpp"

#include <algorithm>
#include <vector>

namespace hydrostat::mask {

namespace {

ColumnInterval resolve_roi(const std::optional<ColumnInterval>& roi, Index width) {
  if (!roi) return ColumnInterval{0, width};
  if (roi->begin < 0 || roi->end > width || roi->begin >= roi->end)
    throw EmptyRoi("roi does not select any columns");
  return *roi;
}

}  // namespace

Vector column_density(const WaterMask& m) {
  return m.cast<double>().colwise().sum().transpose();
}

Vector slope_correct(const Vector& profile, double slope, std::optional<double> x_ref) {
  const double ref = x_ref.value_or(static_cast<double>(profile.size()) / 2.0);
  Vector corrected(profile.size());
  for (Index x = 0; x < profile.size(); ++x)
    corrected(x) = profile(x) - slope * (static_cast<double>(x) - ref);
  return corrected;
}

double quality_score(const Vector& corrected, std::optional<ColumnInterval> roi) {
  const ColumnInterval r = resolve_roi(roi, corrected.size());
  return population_variance(corrected.segment(r.begin, r.size()));
}

bool accept(double q, double threshold) { return q <= threshold; }

double level_from_mask(const WaterMask& m, const LevelCalibration& cal,
                       std::optional<ColumnInterval> roi) {
  if (cal.gain == 0.0) throw Error("level calibration gain must be nonzero");
  const ColumnInterval r = resolve_roi(roi, m.cols());

  std::vector<double> boundary;
  boundary.reserve(static_cast<std::size_t>(r.size()));
  for (Index x = r.begin; x < r.end; ++x) {
    Index top = -1;
    for (Index row = 0; row < m.rows(); ++row) {
      if (m(row, x) != 0) {
        top = row;
        break;
      }
    }
    if (top < 0 || top < cal.row_lo || top > cal.row_hi) continue;
    boundary.push_back(static_cast<double>(top));
  }

  if (static_cast<Index>(boundary.size()) * 4 < r.size())
    throw InsufficientWaterColumns("fewer than 25% of roi columns carry water");

  const std::size_t n = boundary.size();
  auto mid = boundary.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(boundary.begin(), mid, boundary.end());
  double median = *mid;
  if (n % 2 == 0) {
    const double lower = *std::max_element(boundary.begin(), mid);
    median = 0.5 * (median + lower);
  }
  return cal.gain * median + cal.offset;
}

QualityReport evaluate_mask(const WaterMask& m, double prior_slope, double threshold,
                            std::optional<ColumnInterval> roi, std::optional<double> x_ref) {
  QualityReport report;
  report.roi = resolve_roi(roi, m.cols());
  report.corrected = slope_correct(column_density(m), prior_slope, x_ref);
  report.q = quality_score(report.corrected, report.roi);
  report.accepted = accept(report.q, threshold);
  return report;
}

}  // namespace hydrostat::mask
