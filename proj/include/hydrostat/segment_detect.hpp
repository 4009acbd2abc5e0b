#pragma once

#include "hydrostat/types.hpp"

#include <vector>

namespace hydrostat::stiv {

struct DetectorParams {
  /// Level-line alignment tolerance for region growing.
  double angle_tolerance = deg2rad(22.5);
  /// Minimum segment length in pixels; 0 selects 0.05 * sqrt(rows * cols).
  double min_length = 0.0;
  /// Minimum region density inside the fitted rectangle.
  double min_density = 0.7;
  /// Gradient quantization bound on the 0..255 scale; the gradient
  /// threshold is quantization / sin(angle_tolerance).
  double quantization = 2.0;
  /// Gaussian pre-smoothing applied after contrast normalization. Off by
  /// default; enable (with a longer min_length) for heavy pixel noise.
  double blur_sigma = 0.0;
};

/// Oriented segment in image coordinates (x = column, y = row).
struct RawSegment {
  Vector2 p0;
  Vector2 p1;
  double width = 0.0;
  Index support = 0;  // region pixel count
};

/// Gradient region-growing detector: pixels are grouped by level-line
/// orientation, each region is fitted with its inertia rectangle, and
/// rectangles failing the length or density thresholds are dropped. The
/// image is contrast-normalized internally, so absolute scale does not
/// matter. Returns an empty list for flat images.
std::vector<RawSegment> detect_raw_segments(const Matrix& image, const DetectorParams& params = {});

}  // namespace hydrostat::stiv
