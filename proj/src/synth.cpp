#include "hydrostat/synth.hpp"

#include "hydrostat/rng.hpp"

#include <algorithm>
#include <cmath>

namespace hydrostat::synth {

namespace {

// Stream ids keep per-purpose draws order-independent.
enum Stream : std::uint64_t {
  kMaskFlips = 1,
  kSceneTexture = 2,
  kSceneNoise = 3,
  kHistoryBase = 4,
  kHistoryJitter = 5,
  kHistoryMissing = 6,
  kRatingLevels = 7,
  kRatingNoise = 8,
  kRatingOutliers = 9,
};

}  // namespace

GeneratedMask gen_mask(const MaskSpec& spec, std::uint64_t seed) {
  if (spec.height < 1 || spec.width < 1) throw SpecOutOfRange("mask dimensions must be positive");
  if (spec.boundary_row < 0.0 || spec.boundary_row >= static_cast<double>(spec.height))
    throw SpecOutOfRange("boundary row outside the mask");
  if (spec.flip_probability < 0.0 || spec.flip_probability >= 0.5)
    throw SpecOutOfRange("flip probability must lie in [0, 0.5)");
  for (Index c : spec.corrupted_columns)
    if (c < 0 || c >= spec.width) throw SpecOutOfRange("corrupted column outside the mask");

  GeneratedMask out;
  out.true_boundary.resize(spec.width);
  out.mask.setZero(spec.height, spec.width);

  const double x_ref = static_cast<double>(spec.width) / 2.0;
  for (Index x = 0; x < spec.width; ++x) {
    const double b = spec.boundary_row + spec.slope * (static_cast<double>(x) - x_ref);
    const auto row = static_cast<Index>(std::llround(b));
    if (row < 0 || row > spec.height)
      throw SpecOutOfRange("boundary leaves the mask at some column");
    out.true_boundary(x) = static_cast<double>(row);
    for (Index r = row; r < spec.height; ++r) out.mask(r, x) = 1;
  }

  if (spec.flip_probability > 0.0) {
    rng::CounterRng flips(seed, kMaskFlips);
    for (Index r = 0; r < spec.height; ++r)
      for (Index x = 0; x < spec.width; ++x)
        if (flips.bernoulli(spec.flip_probability)) out.mask(r, x) ^= 1;
  }

  for (Index c : spec.corrupted_columns)
    for (Index r = 0; r < spec.height; ++r) out.mask(r, c) = 1;

  return out;
}

GeneratedScene gen_frames(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.frames < 2) throw SpecOutOfRange("scene needs at least two frames");
  if (spec.height < 1 || spec.width < 1) throw SpecOutOfRange("frame dimensions must be positive");
  if (spec.fps <= 0.0 || spec.resolution <= 0.0)
    throw SpecOutOfRange("fps and resolution must be positive");
  if (spec.row_velocity.size() != spec.height)
    throw SpecOutOfRange("velocity profile must cover every row");
  if (spec.contrast <= 0.0) throw SpecOutOfRange("contrast must be positive");
  if (spec.noise_sigma < 0.0) throw SpecOutOfRange("noise sigma must be nonnegative");

  const double max_speed = spec.row_velocity.cwiseAbs().maxCoeff();
  const double travel_m = max_speed * static_cast<double>(spec.frames) / spec.fps;
  if (travel_m > static_cast<double>(spec.width) * spec.resolution)
    throw AdvectionOutOfFrame("texture would cross the whole frame");

  const double px_per_frame_scale = 1.0 / (spec.fps * spec.resolution);
  double shift_max = 0.0, shift_min = 0.0;
  for (Index y = 0; y < spec.height; ++y) {
    const double total = spec.row_velocity(y) * static_cast<double>(spec.frames - 1) / spec.fps /
                         spec.resolution;
    shift_max = std::max(shift_max, total);
    shift_min = std::min(shift_min, total);
  }
  const Index margin_left = static_cast<Index>(std::ceil(shift_max)) + 2;
  const Index margin_right = static_cast<Index>(std::ceil(-shift_min)) + 2;
  const Index base_cols = spec.width + margin_left + margin_right + 4;

  // Low-pass texture: white noise box-filtered with a width-4 kernel.
  constexpr Index kKernel = 4;
  rng::CounterRng tex_rng(seed, kSceneTexture);
  Matrix white(spec.height + kKernel - 1, base_cols + kKernel - 1);
  for (Index r = 0; r < white.rows(); ++r)
    for (Index c = 0; c < white.cols(); ++c) white(r, c) = tex_rng.uniform(-1.0, 1.0);

  Matrix texture = Matrix::Zero(spec.height, base_cols);
  for (Index r = 0; r < spec.height; ++r)
    for (Index c = 0; c < base_cols; ++c)
      texture(r, c) = white.block(r, c, kKernel, kKernel).sum();
  const double mean = texture.mean();
  const double sd = std::sqrt((texture.array() - mean).square().mean());
  texture = (texture.array() - mean) / std::max(sd, 1e-12);

  GeneratedScene out;
  out.row_velocity = spec.row_velocity;
  out.seq.fps = spec.fps;
  out.seq.resolution = spec.resolution;
  out.seq.frames.reserve(static_cast<std::size_t>(spec.frames));

  rng::CounterRng noise_rng(seed, kSceneNoise);
  for (Index t = 0; t < spec.frames; ++t) {
    Matrix frame(spec.height, spec.width);
    for (Index y = 0; y < spec.height; ++y) {
      const double shift = spec.row_velocity(y) * static_cast<double>(t) * px_per_frame_scale;
      for (Index x = 0; x < spec.width; ++x) {
        const double src = static_cast<double>(x + margin_left) - shift;
        const auto i0 = static_cast<Index>(std::floor(src));
        const double f = src - static_cast<double>(i0);
        const double value = (1.0 - f) * texture(y, i0) + f * texture(y, i0 + 1);
        frame(y, x) = 128.0 + spec.contrast * value;
      }
    }
    if (spec.noise_sigma > 0.0)
      for (Index y = 0; y < spec.height; ++y)
        for (Index x = 0; x < spec.width; ++x) frame(y, x) += spec.noise_sigma * noise_rng.normal();
    out.seq.frames.push_back(std::move(frame));
  }
  return out;
}

GeneratedHistory gen_history(const HistorySpec& spec, std::uint64_t seed) {
  const Index n = spec.gains.size();
  if (spec.rows < 1) throw SpecOutOfRange("history needs at least one row");
  if (n < 2) throw SpecOutOfRange("history needs at least two segments");
  if (spec.offsets.size() != n) throw SpecOutOfRange("offsets must match gains");
  if ((spec.gains.array() <= 0.0).any()) throw SpecOutOfRange("gains must be positive");
  if (spec.jitter < 0.0) throw SpecOutOfRange("jitter must be nonnegative");
  if (spec.missing_rate < 0.0 || spec.missing_rate >= 1.0)
    throw SpecOutOfRange("missing rate must lie in [0, 1)");
  if (!(spec.base_lo < spec.base_hi)) throw SpecOutOfRange("empty base range");

  rng::CounterRng base(seed, kHistoryBase);
  rng::CounterRng jitter(seed, kHistoryJitter);
  rng::CounterRng missing(seed, kHistoryMissing);

  GeneratedHistory out;
  out.truth.resize(spec.rows, n);
  out.observed.resize(spec.rows, n);
  for (Index t = 0; t < spec.rows; ++t) {
    const double b = base.uniform(spec.base_lo, spec.base_hi);
    for (Index k = 0; k < n; ++k) {
      double v = spec.gains(k) * b + spec.offsets(k);
      if (spec.jitter > 0.0) v *= 1.0 + spec.jitter * jitter.normal();
      v = std::max(v, 1e-9);
      out.truth(t, k) = v;
      out.observed(t, k) = missing.bernoulli(spec.missing_rate) ? 0.0 : v;
    }
  }
  return out;
}

GeneratedRating gen_rating(const RatingSpec& spec, std::uint64_t seed) {
  if (spec.count < 1) throw SpecOutOfRange("rating spec needs at least one point");
  if (!(spec.h_lo < spec.h_hi)) throw SpecOutOfRange("empty level range");
  if (spec.noise < 0.0 || spec.outlier_fraction < 0.0 || spec.outlier_fraction > 1.0)
    throw SpecOutOfRange("invalid noise or outlier fraction");

  rng::CounterRng levels(seed, kRatingLevels);
  rng::CounterRng noise(seed, kRatingNoise);
  rng::CounterRng pick(seed, kRatingOutliers);

  GeneratedRating out;
  out.pairs.reserve(static_cast<std::size_t>(spec.count));
  for (Index i = 0; i < spec.count; ++i) {
    const double h = levels.uniform(spec.h_lo, spec.h_hi);
    double q = (spec.a * h + spec.b) * h + spec.c;
    if (q <= 0.0) throw SpecOutOfRange("generating curve must be positive on the level range");
    if (spec.noise > 0.0) q *= 1.0 + spec.noise * noise.normal();
    out.pairs.push_back({h, std::max(q, 1e-9), static_cast<double>(i)});
  }

  const auto n_out = static_cast<Index>(std::llround(spec.outlier_fraction *
                                                     static_cast<double>(spec.count)));
  std::vector<int> idx(static_cast<std::size_t>(spec.count));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (Index i = 0; i < n_out; ++i) {
    const auto j = i + static_cast<Index>(pick.below(static_cast<std::uint64_t>(spec.count - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    const int target = idx[static_cast<std::size_t>(i)];
    out.pairs[static_cast<std::size_t>(target)].q *= 1.0 + spec.outlier_magnitude;
    out.outlier_indices.push_back(target);
  }
  std::sort(out.outlier_indices.begin(), out.outlier_indices.end());
  return out;
}

}  // namespace hydrostat::synth
