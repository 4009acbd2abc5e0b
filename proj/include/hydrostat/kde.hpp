#pragma once

#include "hydrostat/types.hpp"

#include <optional>

namespace hydrostat::kde {

struct TooFewSamples : Error {
  using Error::Error;
};
struct EmptyInterval : Error {
  using Error::Error;
};
struct DensityUnderflow : Error {
  using Error::Error;
};

/// Densities below this are treated as vanishing before logarithms.
inline constexpr double kDensityFloor = 1e-300;

/// h = max(0.2 * sample standard deviation, floor). The n-1 convention is
/// used for the standard deviation; the floor keeps degenerate all-equal
/// samples usable.
double auto_bandwidth(const Vector& samples);

/// Gaussian KDE over scalar samples. An empty weights vector means
/// unweighted.
struct Kde1 {
  Vector samples;
  Vector weights;
  double h = 1.0;
};

Kde1 make_kde1(Vector samples, Vector weights = {});
Kde1 make_kde1(Vector samples, Vector weights, double bandwidth);

double pdf1(const Kde1& k, double x);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct ModeEstimate {
  double mode = 0.0;
  double confidence = 0.0;  // weight fraction within +-h of the mode
};

/// Argmax of pdf1 over a 512-point grid, refined by golden-section search to
/// 1e-6 of the interval width. Default interval: [min - 3h, max + 3h].
ModeEstimate mode1(const Kde1& k, std::optional<Interval> search = {});

/// Product-kernel Gaussian KDE over sample pairs (rows of `samples`).
struct Kde2 {
  Matrix samples;  // n x 2
  double hi = 1.0;
  double hj = 1.0;
};

/// Bandwidths default to 0.2 sigma per coordinate (same floor as
/// auto_bandwidth).
Kde2 make_kde2(Matrix pairs);
Kde2 make_kde2(Matrix pairs, double hi, double hj);

double pdf2(const Kde2& k, double vi, double vj);

/// log pdf2 evaluated stably (log-sum-exp); may legitimately fall below
/// log(kDensityFloor) in far tails.
double log_pdf2(const Kde2& k, double vi, double vj);

/// Analytic gradient of log pdf2. Throws DensityUnderflow when the density
/// is below kDensityFloor.
Vector2 grad_log_pdf2(const Kde2& k, double vi, double vj);

}  // namespace hydrostat::kde
