#include "hydrostat/impute.hpp"
#include "hydrostat/lbfgsb.hpp"
#include "hydrostat/rng.hpp"
#include "hydrostat/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace hydrostat;
using namespace hydrostat::mrf;

namespace {

ObservedMask mask_of(const Vector& v) { return v.array() > 0.0; }

// Direct energy evaluation: loop over all pairs, no model shortcuts.
double brute_energy(const EnergyModel& model, const Vector& v, const ObservedMask& observed) {
  double e = 0.0;
  for (const auto& p : model.potentials) {
    const bool i_missing = !observed(p.i);
    const bool j_missing = !observed(p.j);
    if (i_missing == j_missing) continue;
    const double density = std::max(kde::pdf2(p.kde, v(p.i), v(p.j)), kde::kDensityFloor);
    e -= std::log(density);
  }
  return e;
}

double grid_search_single(const EnergyModel& model, Vector v, Index missing,
                          const ObservedMask& observed, double lo, double hi, int n) {
  double best = lo;
  double best_e = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    v(missing) = x;
    const double e = energy(model, v, observed);
    if (e < best_e) {
      best_e = e;
      best = x;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("bounded minimizer solves a box-constrained quadratic") {
  // f(x) = |x - t|^2 with t outside the box: solution is the projection.
  const Vector target = (Vector(3) << -2.0, 0.5, 7.0).finished();
  const Vector lo = Vector::Constant(3, 0.0);
  const Vector hi = Vector::Constant(3, 2.0);
  const auto r = opt::minimize_bounded(
      [&](const Vector& x) { return (x - target).squaredNorm(); },
      [&](const Vector& x) { return Vector(2.0 * (x - target)); }, Vector::Constant(3, 1.0), lo,
      hi);
  CHECK(r.converged);
  CHECK((r.x - (Vector(3) << 0.0, 0.5, 2.0).finished()).norm() < 1e-6);
}

TEST_CASE("bounded minimizer on the Rosenbrock function") {
  const auto f = [](const Vector& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  const auto g = [](const Vector& x) {
    Vector out(2);
    out(0) = -400.0 * x(0) * (x(1) - x(0) * x(0)) - 2.0 * (1.0 - x(0));
    out(1) = 200.0 * (x(1) - x(0) * x(0));
    return out;
  };
  const Vector lo = Vector::Constant(2, -5.0);
  const Vector hi = Vector::Constant(2, 5.0);
  opt::Options opts;
  opts.max_iterations = 2000;  // the banana valley is slow under backtracking
  const auto r = opt::minimize_bounded(f, g, (Vector(2) << -1.2, 1.0).finished(), lo, hi, opts);
  CHECK(r.converged);
  CHECK((r.x - Vector::Constant(2, 1.0)).norm() < 1e-4);
}

TEST_CASE("learn_potentials counts supports") {
  rng::CounterRng rng(100, 0);
  FlowMatrix hist(100, 3);
  for (Index t = 0; t < 100; ++t) {
    const double base = rng.uniform(0.5, 1.5);
    hist(t, 0) = base;
    hist(t, 1) = 2.0 * base;
    hist(t, 2) = 0.5 * base + 0.1;
  }
  const auto model = learn_potentials(hist);
  CHECK(model.potentials.size() == 3);
  for (const auto& p : model.potentials) CHECK(p.support == 100);
}

TEST_CASE("learn_potentials skips an always-missing segment") {
  rng::CounterRng rng(101, 0);
  FlowMatrix hist(50, 3);
  for (Index t = 0; t < 50; ++t) {
    hist(t, 0) = rng.uniform(0.5, 1.5);
    hist(t, 1) = rng.uniform(0.5, 1.5);
    hist(t, 2) = 0.0;
  }
  const auto model = learn_potentials(hist);
  CHECK(model.potentials.size() == 1);
  CHECK(model.potentials[0].i == 0);
  CHECK(model.potentials[0].j == 1);
}

TEST_CASE("learn_potentials supports match brute-force pair counts") {
  synth::HistorySpec spec;
  spec.rows = 200;
  spec.gains = (Vector(4) << 0.5, 0.8, 1.0, 0.6).finished();
  spec.offsets = Vector::Zero(4);
  spec.jitter = 0.02;
  spec.missing_rate = 0.3;
  const auto gen = synth::gen_history(spec, 2025);

  const auto model = learn_potentials(gen.observed, 5);
  for (const auto& p : model.potentials) {
    Index count = 0;
    for (Index t = 0; t < gen.observed.rows(); ++t)
      if (gen.observed(t, p.i) > 0.0 && gen.observed(t, p.j) > 0.0) ++count;
    CHECK(p.support == count);
  }
}

TEST_CASE("learn_potentials with no usable pairs") {
  FlowMatrix hist = FlowMatrix::Zero(10, 3);
  for (Index t = 0; t < 10; ++t) hist(t, t % 3) = 1.0;  // never two at once
  CHECK_THROWS_AS(learn_potentials(hist), NoUsablePairs);

  CHECK_THROWS_AS(learn_potentials(FlowMatrix::Ones(3, 2), 5), NoUsablePairs);  // too short

  FlowMatrix negative = FlowMatrix::Ones(10, 2);
  negative(4, 1) = -0.2;
  CHECK_THROWS_AS(learn_potentials(negative), Error);
}

TEST_CASE("energy over qualifying pairs only") {
  rng::CounterRng rng(55, 0);
  FlowMatrix hist(80, 3);
  for (Index t = 0; t < 80; ++t) {
    const double base = rng.uniform(0.5, 1.5);
    hist(t, 0) = base;
    hist(t, 1) = 1.5 * base;
    hist(t, 2) = 0.7 * base;
  }
  const auto model = learn_potentials(hist);

  Vector v(3);
  v << 1.0, 1.5, 0.7;
  const ObservedMask all_observed = ObservedMask::Constant(3, true);
  CHECK(energy(model, v, all_observed) == 0.0);

  // Only segment 2 missing: exactly the (0,2) and (1,2) potentials count.
  ObservedMask one_missing = all_observed;
  one_missing(2) = false;
  double expected = 0.0;
  for (const auto& p : model.potentials) {
    if (p.j != 2) continue;
    expected -= std::log(std::max(kde::pdf2(p.kde, v(p.i), v(p.j)), kde::kDensityFloor));
  }
  CHECK(energy(model, v, one_missing) == doctest::Approx(expected).epsilon(1e-14));

  // Random masks against the brute-force loop.
  for (int trial = 0; trial < 10; ++trial) {
    ObservedMask m(3);
    for (Index i = 0; i < 3; ++i) m(i) = rng.bernoulli(0.6);
    Vector q(3);
    for (Index i = 0; i < 3; ++i) q(i) = rng.uniform(0.3, 2.0);
    CHECK(energy(model, q, m) == doctest::Approx(brute_energy(model, q, m)).epsilon(1e-14));
  }
}

TEST_CASE("energy gradient matches central differences") {
  synth::HistorySpec spec;
  spec.rows = 150;
  spec.gains = (Vector(4) << 0.5, 0.8, 1.0, 0.6).finished();
  spec.offsets = Vector::Zero(4);
  spec.jitter = 0.05;
  const auto gen = synth::gen_history(spec, 7);
  const auto model = learn_potentials(gen.observed);

  ObservedMask observed(4);
  observed << true, false, true, false;
  rng::CounterRng rng(8, 0);
  const double step = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    Vector v(4);
    for (Index i = 0; i < 4; ++i) v(i) = rng.uniform(0.4, 1.6);
    const Vector g = energy_gradient(model, v, observed);
    for (Index i = 0; i < 4; ++i) {
      if (observed(i)) {
        CHECK(g(i) == 0.0);
        continue;
      }
      Vector vp = v, vm = v;
      vp(i) += step;
      vm(i) -= step;
      const double fd = (energy(model, vp, observed) - energy(model, vm, observed)) / (2 * step);
      CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("impute: nothing missing returns the observation unchanged") {
  rng::CounterRng rng(9, 0);
  FlowMatrix hist(60, 3);
  for (Index t = 0; t < 60; ++t) {
    const double b = rng.uniform(0.5, 1.5);
    hist(t, 0) = b;
    hist(t, 1) = 2 * b;
    hist(t, 2) = 0.5 * b;
  }
  const auto model = learn_potentials(hist);
  const Vector obs = (Vector(3) << 0.9, 1.8, 0.45).finished();
  const auto res = impute(model, obs);
  CHECK(res.v_star == obs);
  CHECK(res.iterations == 0);
  CHECK(res.converged);
}

TEST_CASE("impute recovers a proportional relation") {
  // v2 = 2 * v1 with 1% jitter; observe v1 = 0.4.
  synth::HistorySpec spec;
  spec.rows = 400;
  spec.gains = (Vector(2) << 1.0, 2.0).finished();
  spec.offsets = Vector::Zero(2);
  spec.base_lo = 0.2;
  spec.base_hi = 1.0;
  spec.jitter = 0.01;
  const auto gen = synth::gen_history(spec, 4242);
  const auto model = learn_potentials(gen.truth);

  const Vector obs = (Vector(2) << 0.4, 0.0).finished();
  const auto res = impute(model, obs);
  CHECK(res.v_star(0) == 0.4);
  CHECK(std::abs(res.v_star(1) - 0.8) / 0.8 < 0.05);
  CHECK(res.energy_final <= res.energy_initial);

  // Grid-search oracle over the single missing coordinate.
  const double oracle = grid_search_single(model, obs, 1, mask_of(obs), 1e-6, 3.0, 10000);
  CHECK(std::abs(res.v_star(1) - oracle) <= 3.0 / 9999.0);
}

TEST_CASE("impute: cross-section scenario with a missing middle segment") {
  // Five positions scaled (0.5, 0.8, 1.0, 0.8, 0.5) from a shared base;
  // middle missing while the others are observed at base 1.
  synth::HistorySpec spec;
  spec.rows = 500;
  spec.gains = (Vector(5) << 0.5, 0.8, 1.0, 0.8, 0.5).finished();
  spec.offsets = Vector::Zero(5);
  spec.base_lo = 0.5;
  spec.base_hi = 1.5;
  spec.jitter = 0.02;
  const auto gen = synth::gen_history(spec, 31415);
  const auto model = learn_potentials(gen.truth);

  const Vector obs = (Vector(5) << 0.5, 0.8, 0.0, 0.8, 0.5).finished();
  const auto res = impute(model, obs);
  CHECK(std::abs(res.v_star(2) - 1.0) <= 0.05);
  CHECK(res.energy_final <= res.energy_initial);

  // The energy trace starts at the initial value, ends at the final one, and
  // never increases.
  REQUIRE(!res.energy_trace.empty());
  CHECK(res.energy_trace.front() == res.energy_initial);
  CHECK(res.energy_trace.back() == res.energy_final);
  for (std::size_t i = 1; i < res.energy_trace.size(); ++i)
    CHECK(res.energy_trace[i] <= res.energy_trace[i - 1]);

  // Observed coordinates are bit-identical.
  for (Index i : {0, 1, 3, 4}) CHECK(res.v_star(i) == obs(i));
  // Imputed coordinate respects the lower bound.
  CHECK(res.v_star(2) >= 1e-6);

  const double oracle = grid_search_single(model, obs, 2, mask_of(obs), 1e-6, 3.0, 10000);
  CHECK(std::abs(res.v_star(2) - oracle) <= 3.0 / 9999.0);
}

TEST_CASE("impute is permutation equivariant") {
  synth::HistorySpec spec;
  spec.rows = 300;
  spec.gains = (Vector(4) << 0.5, 0.8, 1.0, 0.6).finished();
  spec.offsets = Vector::Zero(4);
  spec.jitter = 0.02;
  const auto gen = synth::gen_history(spec, 11);

  const Vector obs = (Vector(4) << 0.55, 0.0, 1.1, 0.0).finished();
  const auto direct = impute(learn_potentials(gen.truth), obs);

  // Reverse the segment order.
  const FlowMatrix reversed_hist = gen.truth.rowwise().reverse();
  const Vector reversed_obs = obs.reverse();
  const auto reversed = impute(learn_potentials(reversed_hist), reversed_obs);

  CHECK((reversed.v_star.reverse() - direct.v_star).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("impute errors and disconnected segments") {
  rng::CounterRng rng(21, 0);
  FlowMatrix hist(60, 4);
  for (Index t = 0; t < 60; ++t) {
    const double b = rng.uniform(0.5, 1.5);
    hist(t, 0) = b;
    hist(t, 1) = 1.2 * b;
    hist(t, 2) = 0.0;  // never observed historically
    hist(t, 3) = 0.9 * b;
  }
  const auto model = learn_potentials(hist);

  CHECK_THROWS_AS(impute(model, Vector::Zero(4)), NoObservations);

  // Segment 2 has no potential at all: flagged, left at the initial value.
  const Vector obs = (Vector(4) << 1.0, 0.0, 0.0, 0.9).finished();
  const auto res = impute(model, obs);
  CHECK(res.disconnected == std::vector<int>{2});
  CHECK(res.v_star(2) == doctest::Approx((1.0 + 0.9) / 2.0));
  CHECK(res.v_star(1) > 0.0);
}

TEST_CASE("total_discharge") {
  const auto geometry = make_geometry(
      (Vector(2) << 0.0, 2.0).finished(),
      (Matrix(2, 2) << 3.0, 3.0, 4.0, 4.0).finished());

  CHECK(total_discharge(Vector::Zero(2), geometry, 1.0) == 0.0);
  CHECK(total_discharge((Vector(2) << 1.0, 2.0).finished(), geometry, 1.0) == doctest::Approx(11.0));

  // Random velocities against a direct dot product with interpolated areas.
  const auto table = make_geometry(
      (Vector(3) << 0.0, 1.0, 2.0).finished(),
      (Matrix(2, 3) << 0.0, 2.0, 5.0, 1.0, 1.5, 2.0).finished());
  rng::CounterRng rng(3, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector v(2);
    v << rng.uniform(0, 2), rng.uniform(0, 2);
    const double level = rng.uniform(0.0, 2.0);
    double expected = 0.0;
    for (Index k = 0; k < 2; ++k) {
      const Index seg = level <= 1.0 ? 0 : 1;
      const double f = (level - table.levels(seg)) / (table.levels(seg + 1) - table.levels(seg));
      expected += v(k) * ((1 - f) * table.areas(k, seg) + f * table.areas(k, seg + 1));
    }
    CHECK(total_discharge(v, table, level) == doctest::Approx(expected).epsilon(1e-12));
  }

  CHECK_THROWS_AS(total_discharge(Vector::Zero(2), geometry, 2.5), LevelOutOfRange);
  CHECK_THROWS_AS(total_discharge(Vector::Zero(2), geometry, -0.1), LevelOutOfRange);
}

TEST_CASE("make_geometry validation") {
  CHECK_THROWS_AS(make_geometry((Vector(2) << 1.0, 0.5).finished(), Matrix::Ones(1, 2)), Error);
  CHECK_THROWS_AS(
      make_geometry((Vector(2) << 0.0, 1.0).finished(),
                    (Matrix(1, 2) << 2.0, 1.0).finished()),
      Error);
}
