#pragma once

#include "hydrostat/segment_detect.hpp"
#include "hydrostat/types.hpp"

#include <vector>

namespace hydrostat::stiv {

struct LineOutOfBounds : Error {
  using Error::Error;
};

/// Rectified grayscale frames at a fixed frame rate and ground resolution.
struct FrameSequence {
  std::vector<Matrix> frames;
  double fps = 25.0;        // frames per second
  double resolution = 1.0;  // meters per pixel
};

/// Pixel line along the flow direction; one space-time image per line.
struct SearchLine {
  Vector2 origin;     // (u, v) in the rectified frame
  Vector2 direction;  // unit vector along flow
  Index length = 0;   // samples along the line
  int segment = 0;    // cross-section position this line measures
};

/// T x L matrix: row = time (increasing downward), column = position along
/// the line. Samples are bilinear; any sample outside the frame aborts the
/// line.
Matrix build_sti(const FrameSequence& seq, const SearchLine& line);

/// Texture streak in STI coordinates. Endpoints are (time, space); the
/// angle is measured from the time axis, so tan(angle) is the displacement
/// in pixels per frame.
struct LineSegment {
  Vector2 p0;
  Vector2 p1;
  double angle = 0.0;  // radians, (-pi/2, pi/2)
  double length = 0.0;
};

std::vector<LineSegment> detect_segments(const Matrix& sti, const DetectorParams& params = {});

/// Keeps segments with angle in [min_angle, max_angle], preserving order.
std::vector<LineSegment> filter_by_angle(const std::vector<LineSegment>& segments,
                                         double min_angle, double max_angle);

/// v = tan(angle) * resolution * fps.
double segment_to_velocity(const LineSegment& seg, double resolution, double fps);

struct VelocitySample {
  int position = 0;    // cross-section index
  double v = 0.0;      // m/s
  double weight = 0.0; // segment length in pixels
};

struct VelocityOptions {
  double angle_min = deg2rad(2.0);
  double angle_max = deg2rad(80.0);
  DetectorParams detector;
};

/// Full per-line pipeline: STI, detection, angular filtering, conversion.
/// Lines whose STI leaves the frame are skipped and reported through
/// `skipped_lines`, not treated as failures.
std::vector<VelocitySample> line_velocities(const FrameSequence& seq,
                                            const std::vector<SearchLine>& lines,
                                            const VelocityOptions& opts = {},
                                            std::vector<int>* skipped_lines = nullptr);

}  // namespace hydrostat::stiv
