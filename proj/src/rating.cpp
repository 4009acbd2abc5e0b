#include "hydrostat/rating.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace hydrostat::rating {

namespace {

constexpr double kResidualFloor = 1e-6;

Index distinct_levels(const std::vector<StageDischargePair>& pairs, const std::vector<int>& idx) {
  std::vector<double> levels;
  levels.reserve(idx.size());
  for (int i : idx) levels.push_back(pairs[static_cast<std::size_t>(i)].h);
  std::sort(levels.begin(), levels.end());
  Index distinct = levels.empty() ? 0 : 1;
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] - levels[i - 1] > 1e-12 * std::max(1.0, std::abs(levels[i]))) ++distinct;
  return distinct;
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

QuadraticCurve fit_poly(const std::vector<StageDischargePair>& pairs, const std::vector<int>& idx,
                        int degree) {
  if (distinct_levels(pairs, idx) < degree + 1)
    throw RankDeficient("not enough distinct levels for the fit");
  const Index n = static_cast<Index>(idx.size());
  Matrix a(n, degree + 1);
  Vector rhs(n);
  for (Index r = 0; r < n; ++r) {
    const auto& p = pairs[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])];
    double pw = 1.0;
    for (int c = degree; c >= 0; --c) {
      a(r, c) = pw;
      pw *= p.h;
    }
    rhs(r) = p.q;
  }
  const Vector coef = a.colPivHouseholderQr().solve(rhs);
  if (degree == 2) return QuadraticCurve{coef(0), coef(1), coef(2)};
  return QuadraticCurve{0.0, coef(0), coef(1)};
}

double relative_residual(const QuadraticCurve& curve, const StageDischargePair& p) {
  const double fitted = curve(p.h);
  return std::abs(p.q - fitted) / std::max(std::abs(fitted), kResidualFloor);
}

// Reject-and-refit loop for one polynomial degree. Residuals are recomputed
// over every pair each round, so rejected points can re-enter.
struct RoundResult {
  QuadraticCurve curve;
  std::vector<int> inliers;
  int iterations = 0;
};

RoundResult reject_rounds(const std::vector<StageDischargePair>& pairs, std::vector<int> inliers,
                          int degree, double rel_threshold, int max_iter) {
  RoundResult out;
  out.inliers = std::move(inliers);
  for (int iter = 0; iter < max_iter; ++iter) {
    out.curve = fit_poly(pairs, out.inliers, degree);
    ++out.iterations;
    std::vector<int> next;
    next.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (relative_residual(out.curve, pairs[i]) <= rel_threshold) next.push_back(static_cast<int>(i));
    if (static_cast<Index>(next.size()) < 3)
      throw TooFewInliers("outlier rejection left fewer than 3 inliers");
    if (next == out.inliers) break;
    out.inliers = std::move(next);
  }
  return out;
}

bool decreasing_on_inlier_range(const QuadraticCurve& curve,
                                const std::vector<StageDischargePair>& pairs,
                                const std::vector<int>& inliers) {
  double h_lo = pairs[static_cast<std::size_t>(inliers.front())].h;
  double h_hi = h_lo;
  for (int i : inliers) {
    h_lo = std::min(h_lo, pairs[static_cast<std::size_t>(i)].h);
    h_hi = std::max(h_hi, pairs[static_cast<std::size_t>(i)].h);
  }
  // The derivative is linear, so checking the endpoints covers the range.
  return std::min(curve.derivative(h_lo), curve.derivative(h_hi)) < 0.0;
}

}  // namespace

QuadraticCurve fit_quadratic(const std::vector<StageDischargePair>& pairs) {
  if (pairs.size() < 3) throw RankDeficient("quadratic fit needs >= 3 pairs");
  return fit_poly(pairs, all_indices(pairs.size()), 2);
}

FitReport iterative_fit(const std::vector<StageDischargePair>& pairs, double rel_threshold,
                        int max_iter) {
  if (pairs.size() < 4) throw TooFewInliers("iterative fit needs >= 4 pairs");

  FitReport report;
  RoundResult round = reject_rounds(pairs, all_indices(pairs.size()), 2, rel_threshold, max_iter);
  report.iterations = round.iterations;

  if (decreasing_on_inlier_range(round.curve, pairs, round.inliers)) {
    report.used_linear_prefit = true;
    RoundResult prefit =
        reject_rounds(pairs, all_indices(pairs.size()), 1, rel_threshold, max_iter);
    round = reject_rounds(pairs, std::move(prefit.inliers), 2, rel_threshold, max_iter);
    report.iterations += prefit.iterations + round.iterations;
  }

  report.curve = round.curve;
  report.inliers = std::move(round.inliers);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (!std::binary_search(report.inliers.begin(), report.inliers.end(), static_cast<int>(i)))
      report.outliers.push_back(static_cast<int>(i));
  return report;
}

CalibratedCurve rbf_calibrate(const QuadraticCurve& base, const std::vector<ControlPoint>& controls,
                              double lambda) {
  if (controls.empty()) throw Error("calibration needs at least one control point");
  if (lambda < 0.0) throw Error("ridge parameter must be nonnegative");
  const Index n = static_cast<Index>(controls.size());

  constexpr double kSigmaFloor = 0.05;  // meters
  CalibratedCurve cal;
  cal.base = base;
  cal.lambda = lambda;
  cal.centers.resize(n);
  cal.sigmas.resize(n);
  Vector y(n);

  for (Index i = 0; i < n; ++i) {
    const auto& ctrl = controls[static_cast<std::size_t>(i)];
    if (ctrl.q_star <= 0.0) throw Error("control discharge must be positive");
    const double base_q = base(ctrl.h_star);
    if (base_q <= 0.0) throw NonPositiveBase("base curve is nonpositive at a control level");
    cal.centers(i) = ctrl.h_star;
    y(i) = std::log(ctrl.q_star) - std::log(base_q);
  }

  for (Index i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = std::abs(cal.centers(i) - cal.centers(j));
      if (d < 1e-9) throw DuplicateControls("control levels must be distinct");
      nearest = std::min(nearest, d);
    }
    cal.sigmas(i) = (n == 1) ? 10.0 * kSigmaFloor : std::max(nearest, kSigmaFloor);
  }

  Matrix phi(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = cal.centers(i) - cal.centers(j);
      phi(i, j) = std::exp(-d * d / (2.0 * cal.sigmas(j) * cal.sigmas(j)));
    }
  phi.diagonal().array() += lambda;
  cal.weights = phi.colPivHouseholderQr().solve(y);
  return cal;
}

double eval_calibrated(const CalibratedCurve& c, double h) {
  double exponent = 0.0;
  for (Index j = 0; j < c.centers.size(); ++j) {
    const double d = h - c.centers(j);
    exponent += c.weights(j) * std::exp(-d * d / (2.0 * c.sigmas(j) * c.sigmas(j)));
  }
  return c.base(h) * std::exp(exponent);
}

bool monotonic_on(const CalibratedCurve& c, double h_lo, double h_hi, int grid) {
  if (!(h_hi > h_lo) || grid < 2) throw Error("invalid monotonicity range");
  double prev = eval_calibrated(c, h_lo);
  for (int i = 1; i < grid; ++i) {
    const double h = h_lo + (h_hi - h_lo) * static_cast<double>(i) / (grid - 1);
    const double cur = eval_calibrated(c, h);
    if (cur < prev) return false;
    prev = cur;
  }
  return true;
}

}  // namespace hydrostat::rating
