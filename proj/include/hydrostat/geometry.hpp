#pragma once

#include "hydrostat/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace hydrostat::geometry {

/// Image coordinates (u, v) = (col, row), real-valued, origin top-left.
using PixelPoint = Vector2;

/// Local level-plane coordinates in meters, z up.
struct GroundPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct TooFewPoints : Error {
  using Error::Error;
};
struct DegenerateConfiguration : Error {
  using Error::Error;
};
struct PointAtInfinity : Error {
  using Error::Error;
};
struct ZeroBaseline : Error {
  using Error::Error;
};
struct VerificationFailed : Error {
  using Error::Error;
};
struct RayAboveHorizon : Error {
  using Error::Error;
};
struct PointBehindCamera : Error {
  using Error::Error;
};
struct RegionOutsideView : Error {
  using Error::Error;
};

/// Plane projective map. Normalized so m(2,2) == 1 when that entry is
/// nonzero, otherwise to unit Frobenius norm.
struct Homography {
  Matrix3 m = Matrix3::Identity();
};

using Correspondence = std::pair<PixelPoint, PixelPoint>;

/// Normalized DLT from >= 4 point correspondences (source -> destination).
/// Points are shifted to their centroid and scaled to mean distance sqrt(2)
/// before the linear solve.
Homography estimate_homography(const std::vector<Correspondence>& correspondences);

PixelPoint apply_homography(const Homography& h, const PixelPoint& p);

Homography inverse(const Homography& h);

/// Depression angle from a surveyed camera position to a reference point;
/// positive when the camera looks down at the reference.
double pitch_from_reference(const GroundPoint& camera, const GroundPoint& reference);

struct PitchCorrection {
  double corrected = 0.0;
  double residual = 0.0;
};

/// Replaces the camera-reported pitch with the surveyed one. When a
/// verification pair (camera position, second reference) is given, the
/// residual is the gap between the corrected pitch and the depression angle
/// of the verify reference, which is surveyed on the principal line of
/// sight. A residual above the tolerance signals bad survey data.
PitchCorrection correct_pitch(double reported, double measured,
                              const std::optional<std::pair<GroundPoint, GroundPoint>>& verify = {},
                              double tolerance = deg2rad(0.5));

/// Pinhole camera above the reference water plane (z = 0). The optical
/// center sits at (0, 0, height). Extrinsic rotation is applied as yaw about
/// the vertical, then pitch about the camera-right axis (positive looks
/// down), then roll about the optical axis. With all angles zero the camera
/// looks along +y with +x to its right. Lens distortion is not modeled.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double pitch = 0.0;  // radians
  double yaw = 0.0;
  double roll = 0.0;
  double height = 1.0;  // meters above the reference water plane
};

/// Camera-to-world rotation for the convention above.
Matrix3 camera_rotation(const CameraModel& cam);

/// Ray-plane intersection with the plane z = water_level. The returned point
/// lies on that plane exactly.
GroundPoint pixel_to_ground(const CameraModel& cam, const PixelPoint& p, double water_level);

/// Forward projection of a ground point into the image.
PixelPoint project_to_pixel(const CameraModel& cam, const GroundPoint& g);

/// Axis-aligned rectangle on the plane z = water_level.
struct GroundRect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  double water_level = 0.0;
};

/// Metric resampling grid. Cell (r, c) covers the ground square centered at
/// origin + ((c + 0.5) res, (r + 0.5) res) and stores the source pixel that
/// the forward camera model assigns to it.
struct RectifiedGrid {
  GroundPoint origin;
  double resolution = 1.0;  // meters per pixel
  Index width = 0;
  Index height = 0;
  Matrix src_u;
  Matrix src_v;
};

RectifiedGrid build_rectified_grid(const CameraModel& cam, const GroundRect& region,
                                   double resolution);

/// Result of pulling a frame through a rectified grid. Cells whose source
/// sample falls outside the frame are marked invalid, not clamped.
struct ResampledImage {
  Matrix values;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> valid;
};

ResampledImage resample(const RectifiedGrid& grid, const Matrix& frame);

}  // namespace hydrostat::geometry
