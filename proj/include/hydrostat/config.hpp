#pragma once

#include "hydrostat/geometry.hpp"
#include "hydrostat/impute.hpp"
#include "hydrostat/mask.hpp"
#include "hydrostat/sti.hpp"
#include "hydrostat/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hydrostat::config {

struct ConfigError : Error {
  using Error::Error;
};

/// Surveyed points for on-site pitch calibration.
struct SurveyPoints {
  geometry::GroundPoint camera_position;
  geometry::GroundPoint pitch_reference;
  std::optional<geometry::GroundPoint> verify_reference;
  double tolerance = deg2rad(0.5);
};

struct MaskParams {
  double prior_slope = 0.0;
  double quality_threshold = 25.0;  // squared pixels
  std::optional<double> x_ref;
  std::optional<mask::ColumnInterval> roi;
  mask::LevelCalibration calibration;
};

/// Cross-section polyline in rectified-frame pixels. Search lines are laid
/// perpendicular to the polyline (along the flow), centered on it, with the
/// segment s covering the arclength span between consecutive boundaries.
struct CrossSectionSpec {
  std::vector<Vector2> polyline;
  std::vector<double> boundaries;  // ascending arclength fractions in (0, 1)
  Index lines_per_segment = 3;
  Index line_length = 64;
  double flow_sign = 1.0;  // flip to reverse the flow-direction convention
};

std::vector<stiv::SearchLine> lines_from_cross_section(const CrossSectionSpec& spec);

struct StivParams {
  double angle_min = deg2rad(2.0);
  double angle_max = deg2rad(80.0);
  stiv::DetectorParams detector;
  std::vector<stiv::SearchLine> lines;  // explicit lines, or derived from the cross-section
  std::optional<CrossSectionSpec> cross_section;
};

struct KdeParams {
  double confidence_threshold = 0.3;
};

struct MrfParams {
  Index min_samples = 5;
  mrf::ImputeOptions options;
};

struct RatingParams {
  double rel_threshold = 0.20;
  int max_iter = 20;
  double lambda = 1e-8;
};

/// Site-specific priors and thresholds; every pipeline knob lives here.
struct SiteConfig {
  std::optional<geometry::CameraModel> camera;
  std::optional<SurveyPoints> survey;
  MaskParams mask;
  StivParams stiv;
  KdeParams kde;
  MrfParams mrf;
  RatingParams rating;
  std::optional<mrf::CrossSectionGeometry> geometry;
  std::vector<std::string> segment_names;
};

/// Angles are degrees in the file and radians in memory.
SiteConfig load_site_config(const std::filesystem::path& path);

/// Replaces the camera-reported pitch with the surveyed one and checks the
/// verify reference when present.
geometry::CameraModel apply_survey(geometry::CameraModel cam, const SurveyPoints& survey);

}  // namespace hydrostat::config
