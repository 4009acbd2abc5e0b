#include "hydrostat/kde.hpp"

#include <cmath>
#include <limits>

namespace hydrostat::kde {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double bandwidth_floor(double mean) { return 1e-6 * (1.0 + std::abs(mean)); }

double column_bandwidth(const Vector& col) {
  const Index n = col.size();
  const double mean = col.mean();
  const double var = (col.array() - mean).square().sum() / static_cast<double>(n - 1);
  return std::max(0.2 * std::sqrt(var), bandwidth_floor(mean));
}

double golden_section_max(const Kde1& k, double lo, double hi, double tol) {
  constexpr double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = pdf1(k, x1);
  double f2 = pdf1(k, x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = pdf1(k, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = pdf1(k, x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double auto_bandwidth(const Vector& samples) {
  if (samples.size() < 2) throw TooFewSamples("automatic bandwidth needs >= 2 samples");
  return column_bandwidth(samples);
}

Kde1 make_kde1(Vector samples, Vector weights) {
  const double h = auto_bandwidth(samples);
  return make_kde1(std::move(samples), std::move(weights), h);
}

Kde1 make_kde1(Vector samples, Vector weights, double bandwidth) {
  if (samples.size() == 0) throw TooFewSamples("kde needs at least one sample");
  if (bandwidth <= 0.0) throw Error("bandwidth must be positive");
  if (weights.size() != 0 && weights.size() != samples.size())
    throw Error("weight count does not match sample count");
  if (weights.size() != 0 && (weights.array() < 0.0).any())
    throw Error("weights must be nonnegative");
  return Kde1{std::move(samples), std::move(weights), bandwidth};
}

double pdf1(const Kde1& k, double x) {
  const double inv_h = 1.0 / k.h;
  double num = 0.0;
  double total = 0.0;
  for (Index i = 0; i < k.samples.size(); ++i) {
    const double w = k.weights.size() ? k.weights(i) : 1.0;
    const double z = (x - k.samples(i)) * inv_h;
    num += w * std::exp(-0.5 * z * z);
    total += w;
  }
  if (total <= 0.0) return 0.0;
  return kInvSqrt2Pi * inv_h * num / total;
}

ModeEstimate mode1(const Kde1& k, std::optional<Interval> search) {
  Interval iv;
  if (search) {
    iv = *search;
  } else {
    iv.lo = k.samples.minCoeff() - 3.0 * k.h;
    iv.hi = k.samples.maxCoeff() + 3.0 * k.h;
  }
  if (!(iv.lo < iv.hi)) throw EmptyInterval("search interval is empty");
  bool any_inside = false;
  for (Index i = 0; i < k.samples.size() && !any_inside; ++i)
    any_inside = k.samples(i) >= iv.lo && k.samples(i) <= iv.hi;
  if (!any_inside) throw EmptyInterval("no sample inside the search interval");

  constexpr int kGrid = 512;
  const double width = iv.hi - iv.lo;
  const double step = width / (kGrid - 1);
  int best = 0;
  double best_f = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double f = pdf1(k, iv.lo + step * i);
    if (f > best_f) {
      best_f = f;
      best = i;
    }
  }
  const double lo = iv.lo + step * std::max(0, best - 1);
  const double hi = iv.lo + step * std::min(kGrid - 1, best + 1);

  ModeEstimate est;
  est.mode = golden_section_max(k, lo, hi, 1e-6 * width);

  double inside = 0.0;
  double total = 0.0;
  for (Index i = 0; i < k.samples.size(); ++i) {
    const double w = k.weights.size() ? k.weights(i) : 1.0;
    total += w;
    if (std::abs(k.samples(i) - est.mode) <= k.h) inside += w;
  }
  est.confidence = total > 0.0 ? inside / total : 0.0;
  return est;
}

Kde2 make_kde2(Matrix pairs) {
  if (pairs.rows() < 2 || pairs.cols() != 2)
    throw TooFewSamples("2d kde needs >= 2 sample pairs");
  const double hi = column_bandwidth(pairs.col(0));
  const double hj = column_bandwidth(pairs.col(1));
  return Kde2{std::move(pairs), hi, hj};
}

Kde2 make_kde2(Matrix pairs, double hi, double hj) {
  if (pairs.rows() < 2 || pairs.cols() != 2)
    throw TooFewSamples("2d kde needs >= 2 sample pairs");
  if (hi <= 0.0 || hj <= 0.0) throw Error("bandwidths must be positive");
  return Kde2{std::move(pairs), hi, hj};
}

double pdf2(const Kde2& k, double vi, double vj) {
  return std::exp(log_pdf2(k, vi, vj));
}

double log_pdf2(const Kde2& k, double vi, double vj) {
  const Index n = k.samples.rows();
  const double inv_hi = 1.0 / k.hi;
  const double inv_hj = 1.0 / k.hj;

  double max_e = -std::numeric_limits<double>::infinity();
  Vector exponents(n);
  for (Index t = 0; t < n; ++t) {
    const double zi = (vi - k.samples(t, 0)) * inv_hi;
    const double zj = (vj - k.samples(t, 1)) * inv_hj;
    exponents(t) = -0.5 * (zi * zi + zj * zj);
    max_e = std::max(max_e, exponents(t));
  }
  double acc = 0.0;
  for (Index t = 0; t < n; ++t) acc += std::exp(exponents(t) - max_e);
  const double log_norm =
      std::log(kInvSqrt2Pi * kInvSqrt2Pi * inv_hi * inv_hj / static_cast<double>(n));
  return log_norm + max_e + std::log(acc);
}

Vector2 grad_log_pdf2(const Kde2& k, double vi, double vj) {
  const Index n = k.samples.rows();
  const double inv_hi = 1.0 / k.hi;
  const double inv_hj = 1.0 / k.hj;

  double max_e = -std::numeric_limits<double>::infinity();
  Vector exponents(n);
  for (Index t = 0; t < n; ++t) {
    const double zi = (vi - k.samples(t, 0)) * inv_hi;
    const double zj = (vj - k.samples(t, 1)) * inv_hj;
    exponents(t) = -0.5 * (zi * zi + zj * zj);
    max_e = std::max(max_e, exponents(t));
  }
  if (log_pdf2(k, vi, vj) < std::log(kDensityFloor))
    throw DensityUnderflow("density below floor; gradient is unreliable");

  double acc = 0.0;
  Vector2 grad = Vector2::Zero();
  for (Index t = 0; t < n; ++t) {
    const double r = std::exp(exponents(t) - max_e);
    acc += r;
    grad.x() += r * (k.samples(t, 0) - vi) * inv_hi * inv_hi;
    grad.y() += r * (k.samples(t, 1) - vj) * inv_hj * inv_hj;
  }
  return grad / acc;
}

}  // namespace hydrostat::kde
