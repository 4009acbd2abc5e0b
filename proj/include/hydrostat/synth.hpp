#pragma once

#include "hydrostat/impute.hpp"
#include "hydrostat/mask.hpp"
#include "hydrostat/rating.hpp"
#include "hydrostat/sti.hpp"
#include "hydrostat/types.hpp"

#include <cstdint>
#include <vector>

namespace hydrostat::synth {

struct SpecOutOfRange : Error {
  using Error::Error;
};
struct AdvectionOutOfFrame : Error {
  using Error::Error;
};

/// Shoreline mask with boundary row r0 + slope * (x - W/2), rounded to the
/// pixel grid, then salt-and-pepper flips and full-height column corruption.
struct MaskSpec {
  Index height = 0;
  Index width = 0;
  double boundary_row = 0.0;
  double slope = 0.0;  // pixels per column
  double flip_probability = 0.0;
  std::vector<Index> corrupted_columns;
};

struct GeneratedMask {
  mask::WaterMask mask;
  Vector true_boundary;  // pre-noise boundary row per column
};

GeneratedMask gen_mask(const MaskSpec& spec, std::uint64_t seed);

/// Band-limited texture advected along +x with a per-row velocity profile;
/// one cross-section position per row band.
struct SceneSpec {
  Index frames = 0;
  Index height = 0;
  Index width = 0;
  double fps = 25.0;
  double resolution = 0.02;  // meters per pixel
  Vector row_velocity;       // m/s for each pixel row
  double contrast = 32.0;    // texture standard deviation in gray levels
  double noise_sigma = 0.0;  // additive noise, same units as contrast
};

struct GeneratedScene {
  stiv::FrameSequence seq;
  Vector row_velocity;
};

GeneratedScene gen_frames(const SceneSpec& spec, std::uint64_t seed);

/// Historical flow rows: one shared base draw per row, scaled per segment,
/// with multiplicative jitter and random missingness.
struct HistorySpec {
  Index rows = 0;
  Vector gains;    // per segment, > 0
  Vector offsets;  // per segment
  double base_lo = 0.5;
  double base_hi = 1.5;
  double jitter = 0.0;  // relative; value *= 1 + jitter * N(0,1)
  double missing_rate = 0.0;
};

struct GeneratedHistory {
  mrf::FlowMatrix observed;  // zeros mark masked entries
  mrf::FlowMatrix truth;
};

GeneratedHistory gen_history(const HistorySpec& spec, std::uint64_t seed);

/// Stage-discharge samples from a known quadratic plus relative noise and
/// labeled outliers.
struct RatingSpec {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  Index count = 0;
  double h_lo = 0.0;
  double h_hi = 1.0;
  double noise = 0.0;              // relative
  double outlier_fraction = 0.0;
  double outlier_magnitude = 0.8;  // relative perturbation of q
};

struct GeneratedRating {
  std::vector<rating::StageDischargePair> pairs;
  std::vector<int> outlier_indices;
};

GeneratedRating gen_rating(const RatingSpec& spec, std::uint64_t seed);

}  // namespace hydrostat::synth
