#pragma once

#include "hydrostat/kde.hpp"
#include "hydrostat/types.hpp"

#include <vector>

namespace hydrostat::mrf {

struct NoUsablePairs : Error {
  using Error::Error;
};
struct NoObservations : Error {
  using Error::Error;
};
struct LevelOutOfRange : Error {
  using Error::Error;
};

/// T x N history of per-segment velocities in m/s; 0 marks a missing entry,
/// so a true 0 m/s reading is not representable.
using FlowMatrix = Matrix;

using ObservedMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Joint-velocity density for one segment pair, learned from the rows where
/// both segments carry data.
struct PairPotential {
  int i = 0;
  int j = 0;  // i < j
  kde::Kde2 kde;
  Index support = 0;
};

struct EnergyModel {
  int n = 0;
  std::vector<PairPotential> potentials;
};

/// One potential per segment pair with >= min_samples jointly observed rows.
EnergyModel learn_potentials(const FlowMatrix& hist, Index min_samples = 5);

/// Sum of -log densities over pairs with exactly one side missing and a
/// learned potential; densities floored at kde::kDensityFloor.
double energy(const EnergyModel& model, const Vector& v, const ObservedMask& observed);

/// Gradient of `energy` with respect to the missing coordinates (zero in the
/// observed ones). Pairs on the density floor contribute nothing.
Vector energy_gradient(const EnergyModel& model, const Vector& v, const ObservedMask& observed);

struct ImputationResult {
  Vector v_star;
  double energy_initial = 0.0;
  double energy_final = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Energy at initialization and after each optimizer step.
  std::vector<double> energy_trace;
  /// Missing segments with no potential to any observed segment; left at the
  /// initialization value.
  std::vector<int> disconnected;
};

struct ImputeOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double lower_bound = 1e-6;
};

/// Fills the zero entries of `observation` by bound-constrained minimization
/// of the pairwise energy; observed entries pass through bit-identically.
ImputationResult impute(const EnergyModel& model, const Vector& observation,
                        const ImputeOptions& opts = {});

/// Per-segment wetted areas tabulated against water level. areas(k, i) is
/// the area of segment k at levels(i); levels are strictly increasing and
/// each row is nonnegative and nondecreasing.
struct CrossSectionGeometry {
  Vector levels;
  Matrix areas;
};

CrossSectionGeometry make_geometry(Vector levels, Matrix areas);

/// Q = sum_k v_k * A_k(level), with A_k linearly interpolated in the table.
double total_discharge(const Vector& velocities, const CrossSectionGeometry& geometry,
                       double level);

}  // namespace hydrostat::mrf
