#pragma once

#include "hydrostat/types.hpp"

#include <limits>
#include <vector>

namespace hydrostat::rating {

struct RankDeficient : Error {
  using Error::Error;
};
struct TooFewInliers : Error {
  using Error::Error;
};
struct NonPositiveBase : Error {
  using Error::Error;
};
struct DuplicateControls : Error {
  using Error::Error;
};

struct StageDischargePair {
  double h = 0.0;  // water level, m
  double q = 0.0;  // discharge, m^3/s
  double t = std::numeric_limits<double>::quiet_NaN();  // optional timestamp
};

struct QuadraticCurve {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double operator()(double h) const { return (a * h + b) * h + c; }
  double derivative(double h) const { return 2.0 * a * h + b; }
};

/// Ordinary least squares on the Vandermonde system [h^2 h 1].
QuadraticCurve fit_quadratic(const std::vector<StageDischargePair>& pairs);

struct FitReport {
  QuadraticCurve curve;
  std::vector<int> inliers;
  std::vector<int> outliers;
  int iterations = 0;
  bool used_linear_prefit = false;
};

/// Iterative quadratic fit with relative-residual outlier rejection:
/// a pair is an outlier when |q - Q(h)| / max(|Q(h)|, 1e-6) > rel_threshold,
/// recomputed against the current curve each round until the partition is a
/// fixed point. If the converged quadratic decreases anywhere on the inlier
/// level range, the fit restarts with a linear prefit to shed gross
/// outliers, then reruns the quadratic iteration.
FitReport iterative_fit(const std::vector<StageDischargePair>& pairs,
                        double rel_threshold = 0.20, int max_iter = 20);

struct ControlPoint {
  double h_star = 0.0;
  double q_star = 0.0;  // > 0
};

/// Base curve with a multiplicative log-space RBF correction pinned to the
/// control measurements.
struct CalibratedCurve {
  QuadraticCurve base;
  Vector centers;
  Vector sigmas;
  Vector weights;
  double lambda = 0.0;
};

/// Solves (Phi + lambda I) w = y with y_i = log q_i* - log Q(h_i*).
/// Bandwidths follow the local control spacing, floored at 0.05 m; a single
/// control gets ten times the floor.
CalibratedCurve rbf_calibrate(const QuadraticCurve& base, const std::vector<ControlPoint>& controls,
                              double lambda = 1e-8);

double eval_calibrated(const CalibratedCurve& c, double h);

/// Diagnostic: true when the calibrated curve is nondecreasing on a grid
/// over [h_lo, h_hi]. Reported, never enforced.
bool monotonic_on(const CalibratedCurve& c, double h_lo, double h_hi, int grid = 1000);

}  // namespace hydrostat::rating
