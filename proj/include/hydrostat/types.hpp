#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hydrostat {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Index = Eigen::Index;

/// Binary raster, entries in {0,1}; (row, col) indexing with origin top-left.
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Population (1/n) variance of a dense vector expression.
template <typename Derived>
double population_variance(const Eigen::DenseBase<Derived>& values) {
  const auto n = values.size();
  if (n == 0) return 0.0;
  const double mean = values.derived().template cast<double>().mean();
  return (values.derived().template cast<double>().array() - mean).square().sum() /
         static_cast<double>(n);
}

/// Bilinear sample of an image expression at (u, v) = (col, row).
/// Returns false when the sample footprint leaves the image.
template <typename Derived>
bool bilinear_sample(const Eigen::MatrixBase<Derived>& img, double u, double v, double& out) {
  const double max_u = static_cast<double>(img.cols() - 1);
  const double max_v = static_cast<double>(img.rows() - 1);
  if (!(u >= 0.0 && u <= max_u && v >= 0.0 && v <= max_v)) return false;
  Index c0 = static_cast<Index>(u);
  Index r0 = static_cast<Index>(v);
  if (c0 == img.cols() - 1) --c0;
  if (r0 == img.rows() - 1) --r0;
  if (img.cols() == 1) c0 = 0;
  if (img.rows() == 1) r0 = 0;
  const Index c1 = std::min(c0 + 1, img.cols() - 1);
  const Index r1 = std::min(r0 + 1, img.rows() - 1);
  const double fu = u - static_cast<double>(c0);
  const double fv = v - static_cast<double>(r0);
  const double top = (1.0 - fu) * img(r0, c0) + fu * img(r0, c1);
  const double bot = (1.0 - fu) * img(r1, c0) + fu * img(r1, c1);
  out = (1.0 - fv) * top + fv * bot;
  return true;
}

}  // namespace hydrostat
