#include "hydrostat/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>

namespace hydrostat::geometry {

namespace {

// Similarity that shifts points to their centroid and scales the mean
// distance to sqrt(2).
Matrix3 normalizing_transform(const std::vector<PixelPoint>& pts) {
  Vector2 centroid = Vector2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());

  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (mean_dist < 1e-12)
    throw DegenerateConfiguration("all points coincide");

  const double scale = std::numbers::sqrt2 / mean_dist;
  Matrix3 t = Matrix3::Identity();
  t(0, 0) = scale;
  t(1, 1) = scale;
  t(0, 2) = -scale * centroid.x();
  t(1, 2) = -scale * centroid.y();
  return t;
}

bool collinear(const PixelPoint& a, const PixelPoint& b, const PixelPoint& c) {
  const Vector2 ab = b - a;
  const Vector2 ac = c - a;
  const double cross = ab.x() * ac.y() - ab.y() * ac.x();
  return std::abs(cross) <= 1e-9 * std::max(1.0, ab.norm() * ac.norm());
}

Matrix3 normalize_scale(Matrix3 h) {
  if (std::abs(h(2, 2)) > 1e-12) {
    h /= h(2, 2);
  } else {
    h /= h.norm();
  }
  return h;
}

Vector2 apply3(const Matrix3& m, const PixelPoint& p) {
  const Vector3 q = m * Vector3(p.x(), p.y(), 1.0);
  if (std::abs(q.z()) < 1e-12)
    throw PointAtInfinity("mapped point has vanishing homogeneous component");
  return {q.x() / q.z(), q.y() / q.z()};
}

}  // namespace

Homography estimate_homography(const std::vector<Correspondence>& correspondences) {
  const Index n = static_cast<Index>(correspondences.size());
  if (n < 4) throw TooFewPoints("homography needs at least 4 correspondences");

  std::vector<PixelPoint> src, dst;
  src.reserve(n);
  dst.reserve(n);
  for (const auto& [s, d] : correspondences) {
    src.push_back(s);
    dst.push_back(d);
  }

  if (n == 4) {
    for (int skip = 0; skip < 4; ++skip) {
      PixelPoint tri[3];
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != skip) tri[k++] = src[i];
      if (collinear(tri[0], tri[1], tri[2]))
        throw DegenerateConfiguration("three collinear source points");
    }
  }

  const Matrix3 t_src = normalizing_transform(src);
  const Matrix3 t_dst = normalizing_transform(dst);

  Matrix a = Matrix::Zero(2 * n, 9);
  for (Index i = 0; i < n; ++i) {
    const Vector2 s = apply3(t_src, src[static_cast<std::size_t>(i)]);
    const Vector2 d = apply3(t_dst, dst[static_cast<std::size_t>(i)]);
    a.row(2 * i) << -s.x(), -s.y(), -1.0, 0.0, 0.0, 0.0, s.x() * d.x(), s.y() * d.x(), d.x();
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -s.x(), -s.y(), -1.0, s.x() * d.y(), s.y() * d.y(), d.y();
  }

  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  // A unique solution needs rank 8: with 9 columns the nullity-2 case shows
  // up as a vanishing singular value at index 7.
  if (sv(7) <= 1e-10 * sv(0))
    throw DegenerateConfiguration("rank-deficient correspondence system");

  const Vector h = svd.matrixV().col(8);
  Matrix3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Matrix3 result = t_dst.inverse() * hn * t_src;
  result = normalize_scale(result);
  if (std::abs(result.determinant()) <= 1e-12)
    throw DegenerateConfiguration("estimated homography is singular");
  return Homography{result};
}

PixelPoint apply_homography(const Homography& h, const PixelPoint& p) {
  return apply3(h.m, p);
}

Homography inverse(const Homography& h) {
  if (std::abs(h.m.determinant()) <= 1e-12)
    throw DegenerateConfiguration("homography is singular");
  return Homography{normalize_scale(h.m.inverse())};
}

double pitch_from_reference(const GroundPoint& camera, const GroundPoint& reference) {
  const double horizontal = std::hypot(reference.x - camera.x, reference.y - camera.y);
  if (horizontal < 1e-9) throw ZeroBaseline("reference point is above or below the camera");
  return std::atan2(camera.z - reference.z, horizontal);
}

PitchCorrection correct_pitch(double reported, double measured,
                              const std::optional<std::pair<GroundPoint, GroundPoint>>& verify,
                              double tolerance) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (std::abs(reported) >= half_pi || std::abs(measured) >= half_pi)
    throw Error("pitch angles must lie in (-pi/2, pi/2)");

  PitchCorrection out;
  out.corrected = measured;
  out.residual = 0.0;
  if (verify) {
    out.residual = std::abs(out.corrected - pitch_from_reference(verify->first, verify->second));
    if (out.residual > tolerance)
      throw VerificationFailed("verify reference disagrees with the corrected pitch");
  }
  return out;
}

Matrix3 camera_rotation(const CameraModel& cam) {
  // Base orientation: optical axis along +y, camera-right along +x,
  // camera-down along -z.
  Matrix3 base;
  base << 1, 0, 0,
          0, 0, 1,
          0, -1, 0;
  const Matrix3 yaw = Eigen::AngleAxisd(-cam.yaw, Vector3::UnitY()).toRotationMatrix();
  const Matrix3 pitch = Eigen::AngleAxisd(-cam.pitch, Vector3::UnitX()).toRotationMatrix();
  const Matrix3 roll = Eigen::AngleAxisd(cam.roll, Vector3::UnitZ()).toRotationMatrix();
  return base * yaw * pitch * roll;
}

GroundPoint pixel_to_ground(const CameraModel& cam, const PixelPoint& p, double water_level) {
  const Vector3 dir_cam((p.x() - cam.cx) / cam.fx, (p.y() - cam.cy) / cam.fy, 1.0);
  const Vector3 dir = camera_rotation(cam) * dir_cam;
  const double dz = water_level - cam.height;
  if (std::abs(dir.z()) < 1e-12) throw RayAboveHorizon("ray parallel to the water plane");
  const double t = dz / dir.z();
  if (t <= 0.0) throw RayAboveHorizon("ray diverges from the water plane");
  return GroundPoint{t * dir.x(), t * dir.y(), water_level};
}

PixelPoint project_to_pixel(const CameraModel& cam, const GroundPoint& g) {
  const Vector3 rel(g.x, g.y, g.z - cam.height);
  const Vector3 dir_cam = camera_rotation(cam).transpose() * rel;
  if (dir_cam.z() <= 1e-9 * rel.norm())
    throw PointBehindCamera("ground point is behind the camera or at grazing incidence");
  return {cam.fx * dir_cam.x() / dir_cam.z() + cam.cx,
          cam.fy * dir_cam.y() / dir_cam.z() + cam.cy};
}

RectifiedGrid build_rectified_grid(const CameraModel& cam, const GroundRect& region,
                                   double resolution) {
  if (resolution <= 0.0) throw Error("grid resolution must be positive");
  const double span_x = region.x1 - region.x0;
  const double span_y = region.y1 - region.y0;
  if (span_x <= 0.0 || span_y <= 0.0) throw Error("region must have positive extent");

  RectifiedGrid grid;
  grid.origin = GroundPoint{region.x0, region.y0, region.water_level};
  grid.resolution = resolution;
  grid.width = std::max<Index>(1, static_cast<Index>(std::ceil(span_x / resolution - 1e-9)));
  grid.height = std::max<Index>(1, static_cast<Index>(std::ceil(span_y / resolution - 1e-9)));
  grid.src_u.resize(grid.height, grid.width);
  grid.src_v.resize(grid.height, grid.width);

  for (Index r = 0; r < grid.height; ++r) {
    for (Index c = 0; c < grid.width; ++c) {
      const GroundPoint cell{region.x0 + (static_cast<double>(c) + 0.5) * resolution,
                             region.y0 + (static_cast<double>(r) + 0.5) * resolution,
                             region.water_level};
      PixelPoint px;
      try {
        px = project_to_pixel(cam, cell);
      } catch (const PointBehindCamera&) {
        throw RegionOutsideView("grid cell is not visible from the camera");
      }
      grid.src_u(r, c) = px.x();
      grid.src_v(r, c) = px.y();
    }
  }
  return grid;
}

ResampledImage resample(const RectifiedGrid& grid, const Matrix& frame) {
  ResampledImage out;
  out.values = Matrix::Zero(grid.height, grid.width);
  out.valid.setZero(grid.height, grid.width);
  for (Index r = 0; r < grid.height; ++r) {
    for (Index c = 0; c < grid.width; ++c) {
      double value = 0.0;
      if (bilinear_sample(frame, grid.src_u(r, c), grid.src_v(r, c), value)) {
        out.values(r, c) = value;
        out.valid(r, c) = 1;
      }
    }
  }
  return out;
}

}  // namespace hydrostat::geometry
