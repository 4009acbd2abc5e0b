#include "hydrostat/segment_detect.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace hydrostat::stiv {

namespace {

constexpr double kUndefined = -1024.0;
constexpr Index kMinRegionSize = 5;

double angle_diff(double a, double b) {
  double d = a - b;
  while (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
  return std::abs(d);
}

// Separable Gaussian with clamped borders.
Matrix gaussian_blur(const Matrix& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  Vector kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    kernel(i + radius) = std::exp(-0.5 * i * i / (sigma * sigma));
  kernel /= kernel.sum();

  Matrix tmp(img.rows(), img.cols());
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel(i + radius) * img(r, std::clamp<Index>(c + i, 0, img.cols() - 1));
      tmp(r, c) = acc;
    }
  }
  Matrix out(img.rows(), img.cols());
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel(i + radius) * tmp(std::clamp<Index>(r + i, 0, img.rows() - 1), c);
      out(r, c) = acc;
    }
  }
  return out;
}

struct GradientField {
  Matrix magnitude;
  Matrix angle;  // level-line angle, kUndefined below the threshold
  double max_magnitude = 0.0;
};

GradientField compute_gradients(const Matrix& img, double threshold) {
  const Index gr = img.rows() - 1;
  const Index gc = img.cols() - 1;
  GradientField f;
  f.magnitude = Matrix::Zero(gr, gc);
  f.angle = Matrix::Constant(gr, gc, kUndefined);
  for (Index y = 0; y < gr; ++y) {
    for (Index x = 0; x < gc; ++x) {
      const double a = img(y, x);
      const double b = img(y, x + 1);
      const double c = img(y + 1, x);
      const double d = img(y + 1, x + 1);
      const double gx = 0.5 * (b + d - a - c);
      const double gy = 0.5 * (c + d - a - b);
      const double mag = std::hypot(gx, gy);
      f.magnitude(y, x) = mag;
      f.max_magnitude = std::max(f.max_magnitude, mag);
      if (mag >= threshold) f.angle(y, x) = std::atan2(gx, -gy);
    }
  }
  return f;
}

struct Region {
  std::vector<Eigen::Vector2i> pixels;  // (x, y)
  double angle = 0.0;
};

void grow_region(Index seed_x, Index seed_y, const GradientField& field,
                 Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& used,
                 double tolerance, Region& region) {
  region.pixels.clear();
  region.pixels.push_back({static_cast<int>(seed_x), static_cast<int>(seed_y)});
  region.angle = field.angle(seed_y, seed_x);
  double sum_dx = std::cos(region.angle);
  double sum_dy = std::sin(region.angle);
  used(seed_y, seed_x) = 1;

  for (std::size_t i = 0; i < region.pixels.size(); ++i) {
    const auto px = region.pixels[i];
    for (int yy = px.y() - 1; yy <= px.y() + 1; ++yy) {
      for (int xx = px.x() - 1; xx <= px.x() + 1; ++xx) {
        if (xx < 0 || yy < 0 || xx >= field.angle.cols() || yy >= field.angle.rows()) continue;
        if (used(yy, xx)) continue;
        const double a = field.angle(yy, xx);
        if (a == kUndefined || angle_diff(a, region.angle) > tolerance) continue;
        used(yy, xx) = 1;
        region.pixels.push_back({xx, yy});
        sum_dx += std::cos(a);
        sum_dy += std::sin(a);
        region.angle = std::atan2(sum_dy, sum_dx);
      }
    }
  }
}

// Principal direction of the region from the magnitude-weighted inertia
// matrix; flipped by pi when it disagrees with the region's level-line
// orientation.
double region_direction(const Region& region, const GradientField& field, double cx, double cy,
                        double tolerance) {
  double ixx = 0.0, iyy = 0.0, ixy = 0.0;
  for (const auto& px : region.pixels) {
    const double w = field.magnitude(px.y(), px.x());
    const double dx = px.x() - cx;
    const double dy = px.y() - cy;
    ixx += dy * dy * w;
    iyy += dx * dx * w;
    ixy -= dx * dy * w;
  }
  const double lambda = 0.5 * (ixx + iyy - std::sqrt((ixx - iyy) * (ixx - iyy) + 4.0 * ixy * ixy));
  double theta = std::abs(ixx) > std::abs(iyy) ? std::atan2(lambda - ixx, ixy)
                                               : std::atan2(ixy, lambda - iyy);
  if (angle_diff(theta, region.angle) > tolerance) theta += std::numbers::pi;
  return theta;
}

}  // namespace

std::vector<RawSegment> detect_raw_segments(const Matrix& image, const DetectorParams& params) {
  std::vector<RawSegment> out;
  if (image.rows() < 8 || image.cols() < 8) return out;

  const double lo = image.minCoeff();
  const double range = image.maxCoeff() - lo;
  if (range < 1e-12) return out;
  Matrix img = (image.array() - lo) * (255.0 / range);
  if (params.blur_sigma > 0.0) img = gaussian_blur(img, params.blur_sigma);

  const double threshold = params.quantization / std::sin(params.angle_tolerance);
  const GradientField field = compute_gradients(img, threshold);
  const Index gr = field.angle.rows();
  const Index gc = field.angle.cols();

  // Pseudo-ordering: visit strong gradients first.
  constexpr int kBins = 1024;
  std::vector<std::vector<Eigen::Vector2i>> bins(kBins);
  const double bin_scale = field.max_magnitude > 0.0 ? (kBins - 1) / field.max_magnitude : 0.0;
  for (Index y = 0; y < gr; ++y)
    for (Index x = 0; x < gc; ++x)
      if (field.angle(y, x) != kUndefined) {
        const int b = static_cast<int>(field.magnitude(y, x) * bin_scale);
        bins[static_cast<std::size_t>(b)].push_back({static_cast<int>(x), static_cast<int>(y)});
      }

  const double min_length =
      params.min_length > 0.0
          ? params.min_length
          : 0.05 * std::sqrt(static_cast<double>(image.rows() * image.cols()));

  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> used =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(gr, gc);
  Region region;

  for (int b = kBins - 1; b >= 0; --b) {
    for (const auto& seed : bins[static_cast<std::size_t>(b)]) {
      if (used(seed.y(), seed.x())) continue;
      grow_region(seed.x(), seed.y(), field, used, params.angle_tolerance, region);
      if (static_cast<Index>(region.pixels.size()) < kMinRegionSize) continue;

      double cx = 0.0, cy = 0.0, wsum = 0.0;
      for (const auto& px : region.pixels) {
        const double w = field.magnitude(px.y(), px.x());
        cx += px.x() * w;
        cy += px.y() * w;
        wsum += w;
      }
      if (wsum <= 0.0) continue;
      cx /= wsum;
      cy /= wsum;

      const double theta = region_direction(region, field, cx, cy, params.angle_tolerance);
      const double dx = std::cos(theta);
      const double dy = std::sin(theta);
      double l_min = 0.0, l_max = 0.0, w_min = 0.0, w_max = 0.0;
      for (const auto& px : region.pixels) {
        const double rx = px.x() - cx;
        const double ry = px.y() - cy;
        const double l = rx * dx + ry * dy;
        const double w = -rx * dy + ry * dx;
        l_min = std::min(l_min, l);
        l_max = std::max(l_max, l);
        w_min = std::min(w_min, w);
        w_max = std::max(w_max, w);
      }

      const double length = l_max - l_min;
      const double width = std::max(w_max - w_min, 1.0);
      if (length < min_length) continue;
      const double density = static_cast<double>(region.pixels.size()) / (length * width);
      if (density < params.min_density) continue;

      RawSegment seg;
      // Gradient nodes sit on pixel corners; +0.5 moves endpoints back to
      // image coordinates.
      seg.p0 = Vector2(cx + l_min * dx + 0.5, cy + l_min * dy + 0.5);
      seg.p1 = Vector2(cx + l_max * dx + 0.5, cy + l_max * dy + 0.5);
      seg.width = width;
      seg.support = static_cast<Index>(region.pixels.size());
      out.push_back(seg);
    }
  }
  return out;
}

}  // namespace hydrostat::stiv
