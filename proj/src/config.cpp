#include "hydrostat/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace hydrostat::config {

namespace {

using nlohmann::json;

geometry::GroundPoint ground_point(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("ground point must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

geometry::CameraModel camera_model(const json& j) {
  geometry::CameraModel cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.pitch = deg2rad(j.at("pitch_deg").get<double>());
  cam.yaw = deg2rad(j.value("yaw_deg", 0.0));
  cam.roll = deg2rad(j.value("roll_deg", 0.0));
  cam.height = j.at("height").get<double>();
  if (cam.fx <= 0.0 || cam.fy <= 0.0) throw ConfigError("focal lengths must be positive");
  if (cam.height <= 0.0) throw ConfigError("camera height must be positive");
  return cam;
}

SurveyPoints survey_points(const json& j) {
  SurveyPoints s;
  s.camera_position = ground_point(j.at("camera_position"));
  s.pitch_reference = ground_point(j.at("pitch_reference"));
  if (j.contains("verify_reference")) s.verify_reference = ground_point(j.at("verify_reference"));
  s.tolerance = deg2rad(j.value("tolerance_deg", 0.5));
  return s;
}

MaskParams mask_params(const json& j) {
  MaskParams p;
  p.prior_slope = j.value("prior_slope", 0.0);
  p.quality_threshold = j.value("quality_threshold", 25.0);
  if (p.quality_threshold <= 0.0) throw ConfigError("quality threshold must be positive");
  if (j.contains("x_ref")) p.x_ref = j.at("x_ref").get<double>();
  if (j.contains("roi")) {
    const auto& r = j.at("roi");
    if (!r.is_array() || r.size() != 2) throw ConfigError("roi must be [begin, end]");
    p.roi = mask::ColumnInterval{r[0].get<Index>(), r[1].get<Index>()};
  }
  p.calibration.gain = j.value("level_gain", 0.0);
  p.calibration.offset = j.value("level_offset", 0.0);
  if (j.contains("row_range")) {
    const auto& r = j.at("row_range");
    if (!r.is_array() || r.size() != 2) throw ConfigError("row_range must be [lo, hi]");
    p.calibration.row_lo = r[0].get<Index>();
    p.calibration.row_hi = r[1].get<Index>();
  }
  return p;
}

CrossSectionSpec cross_section_spec(const json& j) {
  CrossSectionSpec spec;
  for (const auto& pj : j.at("polyline")) {
    if (!pj.is_array() || pj.size() != 2) throw ConfigError("polyline points must be [u, v]");
    spec.polyline.emplace_back(pj[0].get<double>(), pj[1].get<double>());
  }
  if (spec.polyline.size() < 2) throw ConfigError("polyline needs at least two points");
  if (j.contains("boundaries"))
    spec.boundaries = j.at("boundaries").get<std::vector<double>>();
  spec.lines_per_segment = j.value("lines_per_segment", Index{3});
  spec.line_length = j.value("line_length", Index{64});
  spec.flow_sign = j.value("flow_sign", 1.0);
  if (spec.lines_per_segment < 1) throw ConfigError("lines_per_segment must be positive");
  if (spec.line_length < 8) throw ConfigError("line_length must be >= 8");
  return spec;
}

StivParams stiv_params(const json& j) {
  StivParams p;
  p.angle_min = deg2rad(j.value("angle_min_deg", 2.0));
  p.angle_max = deg2rad(j.value("angle_max_deg", 80.0));
  if (!(p.angle_min < p.angle_max)) throw ConfigError("empty stiv angle window");
  p.detector.angle_tolerance = deg2rad(j.value("grow_tolerance_deg", 22.5));
  p.detector.min_length = j.value("min_length", 0.0);
  p.detector.min_density = j.value("min_density", 0.7);
  p.detector.blur_sigma = j.value("blur_sigma", 0.0);
  if (j.contains("search_lines")) {
    for (const auto& lj : j.at("search_lines")) {
      stiv::SearchLine line;
      const auto& origin = lj.at("origin");
      const auto& dir = lj.at("direction");
      if (!origin.is_array() || origin.size() != 2 || !dir.is_array() || dir.size() != 2)
        throw ConfigError("search line origin/direction must be [u, v]");
      line.origin = Vector2(origin[0].get<double>(), origin[1].get<double>());
      line.direction = Vector2(dir[0].get<double>(), dir[1].get<double>()).normalized();
      line.length = lj.value("length", Index{64});
      line.segment = lj.at("segment").get<int>();
      if (line.length < 8) throw ConfigError("search line length must be >= 8");
      p.lines.push_back(line);
    }
  }
  if (j.contains("cross_section")) {
    p.cross_section = cross_section_spec(j.at("cross_section"));
    if (p.lines.empty()) p.lines = lines_from_cross_section(*p.cross_section);
  }
  return p;
}

mrf::CrossSectionGeometry geometry_table(const json& j) {
  const auto& lv = j.at("levels");
  const auto& ar = j.at("areas");
  if (!lv.is_array() || !ar.is_array() || ar.empty())
    throw ConfigError("geometry table needs levels and areas arrays");
  Vector levels(static_cast<Index>(lv.size()));
  for (std::size_t i = 0; i < lv.size(); ++i) levels(static_cast<Index>(i)) = lv[i].get<double>();
  Matrix areas(static_cast<Index>(ar.size()), levels.size());
  for (std::size_t k = 0; k < ar.size(); ++k) {
    if (!ar[k].is_array() || ar[k].size() != lv.size())
      throw ConfigError("each area row must match the level grid");
    for (std::size_t i = 0; i < ar[k].size(); ++i)
      areas(static_cast<Index>(k), static_cast<Index>(i)) = ar[k][i].get<double>();
  }
  return mrf::make_geometry(std::move(levels), std::move(areas));
}

}  // namespace

std::vector<stiv::SearchLine> lines_from_cross_section(const CrossSectionSpec& spec) {
  const std::size_t n = spec.polyline.size();
  if (n < 2) throw ConfigError("polyline needs at least two points");
  for (std::size_t i = 0; i < spec.boundaries.size(); ++i) {
    const double b = spec.boundaries[i];
    if (b <= 0.0 || b >= 1.0 || (i > 0 && b <= spec.boundaries[i - 1]))
      throw ConfigError("boundaries must be ascending arclength fractions in (0, 1)");
  }

  std::vector<double> cumulative(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    cumulative[i] = cumulative[i - 1] + (spec.polyline[i] - spec.polyline[i - 1]).norm();
  const double total = cumulative.back();
  if (total <= 0.0) throw ConfigError("polyline has zero length");

  const auto sample = [&](double fraction) {
    const double target = fraction * total;
    std::size_t edge = 1;
    while (edge < n - 1 && cumulative[edge] < target) ++edge;
    const Vector2 a = spec.polyline[edge - 1];
    const Vector2 b = spec.polyline[edge];
    const double span = cumulative[edge] - cumulative[edge - 1];
    const double t = span > 0.0 ? (target - cumulative[edge - 1]) / span : 0.0;
    const Vector2 tangent = (b - a).normalized();
    return std::make_pair(Vector2(a + t * (b - a)), tangent);
  };

  std::vector<double> bounds = {0.0};
  bounds.insert(bounds.end(), spec.boundaries.begin(), spec.boundaries.end());
  bounds.push_back(1.0);

  std::vector<stiv::SearchLine> lines;
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    for (Index i = 0; i < spec.lines_per_segment; ++i) {
      const double f = bounds[s] + (bounds[s + 1] - bounds[s]) *
                                       static_cast<double>(i + 1) /
                                       static_cast<double>(spec.lines_per_segment + 1);
      const auto [point, tangent] = sample(f);
      const Vector2 direction = spec.flow_sign * Vector2(tangent.y(), -tangent.x());
      stiv::SearchLine line;
      line.direction = direction;
      line.origin = point - direction * (static_cast<double>(spec.line_length - 1) / 2.0);
      line.length = spec.line_length;
      line.segment = static_cast<int>(s);
      lines.push_back(line);
    }
  }
  return lines;
}

SiteConfig load_site_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config json: " + std::string(e.what()));
  }

  SiteConfig cfg;
  try {
    if (j.contains("camera")) cfg.camera = camera_model(j.at("camera"));
    if (j.contains("survey")) cfg.survey = survey_points(j.at("survey"));
    if (j.contains("mask")) cfg.mask = mask_params(j.at("mask"));
    if (j.contains("stiv")) cfg.stiv = stiv_params(j.at("stiv"));
    if (j.contains("kde"))
      cfg.kde.confidence_threshold = j.at("kde").value("confidence_threshold", 0.3);
    if (j.contains("mrf")) {
      const auto& m = j.at("mrf");
      cfg.mrf.min_samples = m.value("min_samples", Index{5});
      cfg.mrf.options.max_iterations = m.value("max_iterations", 200);
      cfg.mrf.options.gradient_tolerance = m.value("gradient_tolerance", 1e-6);
    }
    if (j.contains("rating")) {
      const auto& r = j.at("rating");
      cfg.rating.rel_threshold = r.value("rel_threshold", 0.20);
      cfg.rating.max_iter = r.value("max_iterations", 20);
      cfg.rating.lambda = r.value("lambda", 1e-8);
      if (cfg.rating.rel_threshold <= 0.0) throw ConfigError("rel_threshold must be positive");
    }
    if (j.contains("geometry_table")) cfg.geometry = geometry_table(j.at("geometry_table"));
    if (j.contains("segment_names"))
      cfg.segment_names = j.at("segment_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError("malformed config: " + std::string(e.what()));
  }
  return cfg;
}

geometry::CameraModel apply_survey(geometry::CameraModel cam, const SurveyPoints& survey) {
  const double measured =
      geometry::pitch_from_reference(survey.camera_position, survey.pitch_reference);
  std::optional<std::pair<geometry::GroundPoint, geometry::GroundPoint>> verify;
  if (survey.verify_reference)
    verify = std::make_pair(survey.camera_position, *survey.verify_reference);
  const auto corr = geometry::correct_pitch(cam.pitch, measured, verify, survey.tolerance);
  cam.pitch = corr.corrected;
  return cam;
}

}  // namespace hydrostat::config
