#include "hydrostat/lbfgsb.hpp"

#include <cmath>
#include <deque>

namespace hydrostat::opt {

namespace {

Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

Result minimize_bounded(const Objective& f, const Gradient& grad, Vector x0,
                        const Vector& lower, const Vector& upper, const Options& opts) {
  const Index n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw Error("bound dimensions do not match the start point");

  Result res;
  res.x = project(x0, lower, upper);
  res.f = f(res.x);
  res.trace.push_back(res.f);
  Vector g = grad(res.x);

  struct Pair {
    Vector s, y;
    double rho;
  };
  std::deque<Pair> history;
  double gamma = 1.0;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const double pg_norm = (res.x - project(res.x - g, lower, upper)).lpNorm<Eigen::Infinity>();
    if (pg_norm < opts.gradient_tolerance) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
      alpha[i] = history[i].rho * history[i].s.dot(q);
      q -= alpha[i] * history[i].y;
    }
    Vector d = gamma * q;
    for (std::size_t i = 0; i < history.size(); ++i) {
      const double beta = history[i].rho * history[i].y.dot(d);
      d += (alpha[i] - beta) * history[i].s;
    }
    d = -d;
    if (d.dot(g) >= -1e-12 * d.norm() * g.norm()) d = -g;  // fall back to steepest descent

    // Backtracking Armijo search along the projected path.
    constexpr double c1 = 1e-4;
    double step = 1.0;
    Vector x_new;
    double f_new = res.f;
    bool accepted = false;
    while (step > 1e-20) {
      x_new = project(res.x + step * d, lower, upper);
      const Vector dx = x_new - res.x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = f(x_new);
      if (f_new <= res.f + c1 * g.dot(dx)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress possible along this direction

    const Vector g_new = grad(x_new);
    const Vector s = x_new - res.x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      history.push_back(Pair{s, y, 1.0 / sy});
      if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
      gamma = sy / y.squaredNorm();
    }

    res.x = x_new;
    res.f = f_new;
    res.trace.push_back(res.f);
    g = g_new;
    res.iterations = iter + 1;
  }

  if (!res.converged) {
    const double pg_norm = (res.x - project(res.x - g, lower, upper)).lpNorm<Eigen::Infinity>();
    res.converged = pg_norm < opts.gradient_tolerance;
  }
  return res;
}

}  // namespace hydrostat::opt
