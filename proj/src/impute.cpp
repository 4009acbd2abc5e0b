#include "hydrostat/impute.hpp"

#include "hydrostat/lbfgsb.hpp"

#include <cmath>
#include <limits>

namespace hydrostat::mrf {

namespace {

const double kLogFloor = std::log(kde::kDensityFloor);

bool one_side_missing(const PairPotential& p, const ObservedMask& observed) {
  return observed(p.i) != observed(p.j);
}

}  // namespace

EnergyModel learn_potentials(const FlowMatrix& hist, Index min_samples) {
  const Index t = hist.rows();
  const Index n = hist.cols();
  if (n < 2) throw Error("history needs at least two segments");
  if ((hist.array() < 0.0).any()) throw Error("flow history entries must be nonnegative");
  if (t < min_samples) throw NoUsablePairs("history shorter than min_samples");

  EnergyModel model;
  model.n = static_cast<int>(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      Matrix pairs(t, 2);
      Index count = 0;
      for (Index row = 0; row < t; ++row) {
        if (hist(row, i) > 0.0 && hist(row, j) > 0.0) {
          pairs(count, 0) = hist(row, i);
          pairs(count, 1) = hist(row, j);
          ++count;
        }
      }
      if (count < min_samples) continue;
      PairPotential p;
      p.i = static_cast<int>(i);
      p.j = static_cast<int>(j);
      p.support = count;
      p.kde = kde::make_kde2(pairs.topRows(count));
      model.potentials.push_back(std::move(p));
    }
  }
  if (model.potentials.empty())
    throw NoUsablePairs("no segment pair has enough jointly observed rows");
  return model;
}

double energy(const EnergyModel& model, const Vector& v, const ObservedMask& observed) {
  if (v.size() != model.n || observed.size() != model.n)
    throw Error("vector size does not match the model");
  double e = 0.0;
  for (const auto& p : model.potentials) {
    if (!one_side_missing(p, observed)) continue;
    e -= std::max(kde::log_pdf2(p.kde, v(p.i), v(p.j)), kLogFloor);
  }
  return e;
}

Vector energy_gradient(const EnergyModel& model, const Vector& v, const ObservedMask& observed) {
  Vector g = Vector::Zero(model.n);
  for (const auto& p : model.potentials) {
    if (!one_side_missing(p, observed)) continue;
    if (kde::log_pdf2(p.kde, v(p.i), v(p.j)) <= kLogFloor) continue;  // flat plateau
    const Vector2 gl = kde::grad_log_pdf2(p.kde, v(p.i), v(p.j));
    if (!observed(p.i)) g(p.i) -= gl.x();
    if (!observed(p.j)) g(p.j) -= gl.y();
  }
  return g;
}

ImputationResult impute(const EnergyModel& model, const Vector& observation,
                        const ImputeOptions& opts) {
  if (observation.size() != model.n) throw Error("observation size does not match the model");

  const ObservedMask observed = observation.array() > 0.0;
  if (!observed.any()) throw NoObservations("every segment is missing");

  ImputationResult res;
  res.v_star = observation;

  std::vector<int> missing;
  for (int k = 0; k < model.n; ++k)
    if (!observed(k)) missing.push_back(k);

  if (missing.empty()) {
    res.energy_initial = res.energy_final = energy(model, res.v_star, observed);
    res.energy_trace = {res.energy_initial};
    res.converged = true;
    return res;
  }

  double obs_sum = 0.0;
  int obs_count = 0;
  for (int k = 0; k < model.n; ++k) {
    if (observed(k)) {
      obs_sum += observation(k);
      ++obs_count;
    }
  }
  const double init_value = obs_sum / obs_count;

  // A missing segment helps the energy only through potentials that tie it
  // to an observed segment.
  std::vector<int> active;
  for (int m : missing) {
    bool connected = false;
    for (const auto& p : model.potentials) {
      if ((p.i == m && observed(p.j)) || (p.j == m && observed(p.i))) {
        connected = true;
        break;
      }
    }
    if (connected)
      active.push_back(m);
    else
      res.disconnected.push_back(m);
  }

  for (int m : missing) res.v_star(m) = std::max(init_value, opts.lower_bound);
  res.energy_initial = energy(model, res.v_star, observed);

  if (active.empty()) {
    res.energy_final = res.energy_initial;
    res.energy_trace = {res.energy_initial};
    res.converged = true;
    return res;
  }

  const Index dim = static_cast<Index>(active.size());
  auto expand = [&](const Vector& x) {
    Vector full = res.v_star;
    for (Index k = 0; k < dim; ++k) full(active[static_cast<std::size_t>(k)]) = x(k);
    return full;
  };
  auto fun = [&](const Vector& x) { return energy(model, expand(x), observed); };
  auto grad = [&](const Vector& x) {
    const Vector full_grad = energy_gradient(model, expand(x), observed);
    Vector g(dim);
    for (Index k = 0; k < dim; ++k) g(k) = full_grad(active[static_cast<std::size_t>(k)]);
    return g;
  };

  Vector x0(dim);
  for (Index k = 0; k < dim; ++k) x0(k) = res.v_star(active[static_cast<std::size_t>(k)]);
  const Vector lo = Vector::Constant(dim, opts.lower_bound);
  const Vector hi = Vector::Constant(dim, std::numeric_limits<double>::infinity());

  opt::Options oo;
  oo.max_iterations = opts.max_iterations;
  oo.gradient_tolerance = opts.gradient_tolerance;
  const opt::Result r = opt::minimize_bounded(fun, grad, x0, lo, hi, oo);

  for (Index k = 0; k < dim; ++k) res.v_star(active[static_cast<std::size_t>(k)]) = r.x(k);
  res.energy_final = r.f;
  res.energy_trace = r.trace;
  res.iterations = r.iterations;
  res.converged = r.converged;
  return res;
}

CrossSectionGeometry make_geometry(Vector levels, Matrix areas) {
  if (levels.size() < 2) throw Error("geometry table needs >= 2 levels");
  if (areas.cols() != levels.size()) throw Error("area table does not match level grid");
  for (Index i = 1; i < levels.size(); ++i)
    if (!(levels(i) > levels(i - 1))) throw Error("levels must be strictly increasing");
  for (Index k = 0; k < areas.rows(); ++k) {
    if (areas(k, 0) < 0.0) throw Error("areas must be nonnegative");
    for (Index i = 1; i < areas.cols(); ++i)
      if (areas(k, i) < areas(k, i - 1)) throw Error("areas must be nondecreasing in level");
  }
  return CrossSectionGeometry{std::move(levels), std::move(areas)};
}

double total_discharge(const Vector& velocities, const CrossSectionGeometry& geometry,
                       double level) {
  if (velocities.size() != geometry.areas.rows())
    throw Error("velocity count does not match geometry segments");
  const Vector& lv = geometry.levels;
  if (level < lv(0) || level > lv(lv.size() - 1))
    throw LevelOutOfRange("water level outside the geometry table");

  Index hi = 1;
  while (hi < lv.size() - 1 && lv(hi) < level) ++hi;
  const Index lo = hi - 1;
  const double f = (level - lv(lo)) / (lv(hi) - lv(lo));

  double q = 0.0;
  for (Index k = 0; k < velocities.size(); ++k) {
    const double area = (1.0 - f) * geometry.areas(k, lo) + f * geometry.areas(k, hi);
    q += velocities(k) * area;
  }
  return q;
}

}  // namespace hydrostat::mrf
