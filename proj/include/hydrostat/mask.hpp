#pragma once

#include "hydrostat/types.hpp"

#include <limits>
#include <optional>

namespace hydrostat::mask {

using WaterMask = MaskMatrix;

struct EmptyRoi : Error {
  using Error::Error;
};
struct InsufficientWaterColumns : Error {
  using Error::Error;
};

/// Half-open [begin, end) range of mask columns.
struct ColumnInterval {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

/// Per-column count of water pixels.
Vector column_density(const WaterMask& m);

/// Removes the shoreline prior from a column profile:
/// corrected[x] = profile[x] - slope * (x - x_ref). x_ref defaults to W/2.
Vector slope_correct(const Vector& profile, double slope,
                     std::optional<double> x_ref = {});

/// Population variance of the corrected profile over the roi columns
/// (all columns when omitted). Lower means closer to the prior.
double quality_score(const Vector& corrected, std::optional<ColumnInterval> roi = {});

/// Boundary-inclusive acceptance: q <= threshold.
bool accept(double q, double threshold);

/// Affine map from a mask row to a water level in meters.
struct LevelCalibration {
  double gain = 0.0;    // m per pixel row, nonzero
  double offset = 0.0;  // m
  Index row_lo = 0;     // valid boundary-row range, inclusive
  Index row_hi = std::numeric_limits<Index>::max();
};

/// Water level from the median topmost-water row over the roi columns.
/// Columns without water, or whose boundary row falls outside the calibrated
/// range, are skipped; at least 25% of the roi columns must remain.
double level_from_mask(const WaterMask& m, const LevelCalibration& cal,
                       std::optional<ColumnInterval> roi = {});

struct QualityReport {
  double q = 0.0;
  Vector corrected;
  bool accepted = false;
  ColumnInterval roi;
};

/// column_density -> slope_correct -> quality_score -> accept in one call.
QualityReport evaluate_mask(const WaterMask& m, double prior_slope, double threshold,
                            std::optional<ColumnInterval> roi = {},
                            std::optional<double> x_ref = {});

}  // namespace hydrostat::mask
