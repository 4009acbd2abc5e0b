#pragma once

#include "hydrostat/types.hpp"

#include <functional>

namespace hydrostat::opt {

struct Options {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;  // infinity norm of the projected gradient
  int memory = 8;
};

struct Result {
  Vector x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective value at the start and after each step
};

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;

/// Box-constrained limited-memory quasi-Newton minimizer: two-loop L-BFGS
/// directions with gradient projection onto the box and a backtracking
/// Armijo line search along the projected path. Iterates never leave
/// [lower, upper] and the objective is nonincreasing.
Result minimize_bounded(const Objective& f, const Gradient& grad, Vector x0,
                        const Vector& lower, const Vector& upper, const Options& opts = {});

}  // namespace hydrostat::opt
