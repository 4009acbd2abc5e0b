#include "hydrostat/rng.hpp"
#include "hydrostat/sti.hpp"
#include "hydrostat/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace hydrostat;
using namespace hydrostat::stiv;

namespace {

FrameSequence uniform_scene(double v_mps, Index frames, Index height, Index width,
                            std::uint64_t seed, double noise = 0.0, double fps = 25.0,
                            double resolution = 0.04) {
  synth::SceneSpec spec;
  spec.frames = frames;
  spec.height = height;
  spec.width = width;
  spec.fps = fps;
  spec.resolution = resolution;
  spec.row_velocity = Vector::Constant(height, v_mps);
  spec.noise_sigma = noise;
  return synth::gen_frames(spec, seed).seq;
}

std::vector<SearchLine> rows_as_lines(Index height, Index width, int step, int segment = 0) {
  std::vector<SearchLine> lines;
  for (Index row = 4; row < height - 4; row += step)
    lines.push_back({Vector2(2.0, static_cast<double>(row)), Vector2(1.0, 0.0), width - 4, segment});
  return lines;
}

// Integer-shift cross-correlation between two mean-centered rows.
Index best_shift(const Vector& reference, const Vector& row, Index max_shift) {
  const Vector ref = reference.array() - reference.mean();
  const Vector r = row.array() - row.mean();
  Index best = 0;
  double best_score = -1e300;
  for (Index s = -max_shift; s <= max_shift; ++s) {
    double score = 0.0;
    Index count = 0;
    for (Index k = 0; k < ref.size(); ++k) {
      const Index j = k - s;
      if (j < 0 || j >= ref.size()) continue;
      score += r(k) * ref(j);
      ++count;
    }
    if (count > 0) score /= static_cast<double>(count);
    if (score > best_score) {
      best_score = score;
      best = s;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("build_sti: static frames give identical rows") {
  FrameSequence seq = uniform_scene(0.0, 12, 32, 64, 3);
  const SearchLine line{Vector2(2.0, 16.0), Vector2(1.0, 0.0), 48, 0};
  const Matrix sti = build_sti(seq, line);
  for (Index t = 1; t < sti.rows(); ++t) CHECK((sti.row(t) - sti.row(0)).norm() == 0.0);
}

TEST_CASE("build_sti: an advected dot draws a diagonal streak") {
  FrameSequence seq;
  seq.fps = 25.0;
  seq.resolution = 0.04;
  const Index t_count = 16, height = 16, width = 40;
  for (Index t = 0; t < t_count; ++t) {
    Matrix f = Matrix::Zero(height, width);
    f(8, 4 + t) = 255.0;  // one pixel per frame along +x
    seq.frames.push_back(f);
  }
  const SearchLine line{Vector2(0.0, 8.0), Vector2(1.0, 0.0), width, 0};
  const Matrix sti = build_sti(seq, line);
  for (Index t = 0; t < t_count; ++t) {
    Index argmax = 0;
    sti.row(t).maxCoeff(&argmax);
    CHECK(argmax == 4 + t);
  }
}

TEST_CASE("build_sti: advected texture shifts column phase per row") {
  const double v = 1.5;  // m/s -> 1.5 px/frame at fps 25, res 0.04
  FrameSequence seq = uniform_scene(v, 24, 24, 96, 8);
  const SearchLine line{Vector2(2.0, 12.0), Vector2(1.0, 0.0), 90, 0};
  const Matrix sti = build_sti(seq, line);

  const double px_per_frame = v / (seq.fps * seq.resolution);
  const Vector reference = sti.row(0).transpose();
  for (Index t = 4; t <= 20; t += 4) {
    const Index shift = best_shift(reference, sti.row(t).transpose(), 45);
    CHECK(std::abs(static_cast<double>(shift) - px_per_frame * static_cast<double>(t)) <= 1.0);
  }
}

TEST_CASE("build_sti: out-of-frame line raises") {
  FrameSequence seq = uniform_scene(0.0, 8, 16, 32, 1);
  CHECK_THROWS_AS(build_sti(seq, {Vector2(20.0, 8.0), Vector2(1.0, 0.0), 16, 0}), LineOutOfBounds);
}

TEST_CASE("detect_segments: flat image yields nothing") {
  CHECK(detect_segments(Matrix::Constant(32, 32, 7.0)).empty());
}

TEST_CASE("detect_segments: oriented stripes are recovered within 2 degrees") {
  const double angle = deg2rad(30.0);
  const Index t_count = 64, len = 64;
  Matrix sti(t_count, len);
  // Stripes constant along (time, space) direction (cos a, sin a).
  for (Index t = 0; t < t_count; ++t)
    for (Index k = 0; k < len; ++k) {
      const double phase = static_cast<double>(k) * std::cos(angle) -
                           static_cast<double>(t) * std::sin(angle);
      sti(t, k) = 128.0 + 100.0 * std::cos(2.0 * std::numbers::pi * phase / 12.0);
    }
  const auto segments = detect_segments(sti);
  REQUIRE(!segments.empty());
  for (const auto& s : segments) CHECK(std::abs(s.angle - angle) < deg2rad(2.0));

  // Same stripes at a contrast-to-noise ratio of 5, detected with the
  // noisy-conditions configuration: pre-smoothing plus a longer minimum
  // length to reject noise blobs.
  rng::CounterRng rng(3, 0);
  Matrix noisy = sti;
  for (Index t = 0; t < t_count; ++t)
    for (Index k = 0; k < len; ++k) noisy(t, k) += 20.0 * rng.normal();
  DetectorParams noisy_params;
  noisy_params.blur_sigma = 0.8;
  noisy_params.min_length = 16.0;
  const auto noisy_segments = detect_segments(noisy, noisy_params);
  REQUIRE(!noisy_segments.empty());
  for (const auto& s : noisy_segments) CHECK(std::abs(s.angle - angle) < deg2rad(2.0));
}

TEST_CASE("detect_segments: white noise stays mostly uncovered") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    rng::CounterRng rng(seed, 0);
    Matrix noise(64, 64);
    for (Index r = 0; r < 64; ++r)
      for (Index c = 0; c < 64; ++c) noise(r, c) = rng.uniform(0, 255);
    const auto segments = detect_segments(noise);
    double covered = 0.0;
    for (const auto& s : segments) covered += s.length;  // width ~1 by construction
    CHECK(covered / (64.0 * 64.0) < 0.05);
  }
}

TEST_CASE("filter_by_angle") {
  CHECK(filter_by_angle({}, 0.0, 1.0).empty());

  std::vector<LineSegment> segments;
  for (double deg : {10.0, 45.0, 80.0}) {
    LineSegment s;
    s.angle = deg2rad(deg);
    segments.push_back(s);
  }
  const auto kept = filter_by_angle(segments, deg2rad(20.0), deg2rad(70.0));
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].angle == doctest::Approx(deg2rad(45.0)));

  rng::CounterRng rng(7, 0);
  std::vector<LineSegment> random;
  for (int i = 0; i < 50; ++i) {
    LineSegment s;
    s.angle = rng.uniform(-1.5, 1.5);
    random.push_back(s);
  }
  const double lo = -0.3, hi = 0.9;
  const auto got = filter_by_angle(random, lo, hi);
  std::vector<LineSegment> expected;
  for (const auto& s : random)
    if (s.angle >= lo && s.angle <= hi) expected.push_back(s);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].angle == expected[i].angle);

  CHECK_THROWS_AS(filter_by_angle(segments, 1.0, 1.0), Error);
}

TEST_CASE("segment_to_velocity") {
  LineSegment s;
  s.angle = deg2rad(45.0);
  CHECK(segment_to_velocity(s, 0.02, 25.0) == doctest::Approx(0.5));
  s.angle = 0.0;
  CHECK(segment_to_velocity(s, 0.02, 25.0) == 0.0);
  s.angle = std::atan(2.0);
  CHECK(segment_to_velocity(s, 0.01, 30.0) == doctest::Approx(0.6));
}

TEST_CASE("line_velocities on a uniform-flow scene") {
  const double v_true = 1.0;
  FrameSequence seq = uniform_scene(v_true, 64, 48, 96, 11);
  const auto lines = rows_as_lines(48, 96, 5);
  const auto samples = line_velocities(seq, lines);
  REQUIRE(samples.size() >= 8);
  Index good = 0;
  for (const auto& s : samples)
    if (std::abs(s.v - v_true) / v_true < 0.05) ++good;
  CHECK(static_cast<double>(good) / static_cast<double>(samples.size()) >= 0.9);
}

TEST_CASE("line_velocities on a static scene") {
  FrameSequence seq = uniform_scene(0.0, 32, 32, 64, 12);
  const auto samples = line_velocities(seq, rows_as_lines(32, 64, 6));
  // With the default window starting at 2 degrees, stationary texture is
  // filtered out entirely (or reads as ~0 if anything slips through).
  for (const auto& s : samples)
    CHECK(std::abs(s.v) <= seq.resolution * seq.fps * std::tan(deg2rad(2.0)) * 1.01);
}

TEST_CASE("line_velocities separates a two-segment flow") {
  synth::SceneSpec spec;
  spec.frames = 64;
  spec.height = 64;
  spec.width = 96;
  spec.fps = 25.0;
  spec.resolution = 0.04;
  spec.row_velocity = Vector::Zero(64);
  spec.row_velocity.head(32).setConstant(0.5);
  spec.row_velocity.tail(32).setConstant(1.0);
  const auto scene = synth::gen_frames(spec, 21);

  std::vector<SearchLine> lines;
  for (Index row : {8, 12, 16, 20, 24})
    lines.push_back({Vector2(2.0, static_cast<double>(row)), Vector2(1.0, 0.0), 90, 0});
  for (Index row : {40, 44, 48, 52, 56})
    lines.push_back({Vector2(2.0, static_cast<double>(row)), Vector2(1.0, 0.0), 90, 1});

  const auto samples = line_velocities(scene.seq, lines);
  std::map<int, std::pair<double, double>> acc;  // position -> (sum, weight)
  for (const auto& s : samples) {
    acc[s.position].first += s.v * s.weight;
    acc[s.position].second += s.weight;
  }
  REQUIRE(acc.count(0) == 1);
  REQUIRE(acc.count(1) == 1);
  CHECK(std::abs(acc[0].first / acc[0].second - 0.5) / 0.5 < 0.05);
  CHECK(std::abs(acc[1].first / acc[1].second - 1.0) / 1.0 < 0.05);
}

TEST_CASE("line_velocities skips out-of-frame lines as a diagnostic") {
  FrameSequence seq = uniform_scene(0.5, 16, 24, 48, 31);
  std::vector<SearchLine> lines = {
      {Vector2(2.0, 12.0), Vector2(1.0, 0.0), 44, 0},
      {Vector2(40.0, 12.0), Vector2(1.0, 0.0), 44, 1},  // runs off the frame
  };
  std::vector<int> skipped;
  const auto samples = line_velocities(seq, lines, {}, &skipped);
  CHECK(skipped == std::vector<int>{1});
  for (const auto& s : samples) CHECK(s.position == 0);
}

TEST_CASE("time reversal negates velocities") {
  const double v_true = 1.0;
  FrameSequence forward = uniform_scene(v_true, 48, 32, 96, 17);
  FrameSequence reversed = forward;
  std::reverse(reversed.frames.begin(), reversed.frames.end());

  VelocityOptions opts;
  opts.angle_min = deg2rad(-80.0);
  opts.angle_max = deg2rad(80.0);

  const auto lines = rows_as_lines(32, 96, 6);
  const auto fwd = line_velocities(forward, lines, opts);
  const auto rev = line_velocities(reversed, lines, opts);
  REQUIRE(!fwd.empty());
  REQUIRE(!rev.empty());

  auto weighted_mean = [](const std::vector<VelocitySample>& samples) {
    double num = 0.0, den = 0.0;
    for (const auto& s : samples) {
      num += s.v * s.weight;
      den += s.weight;
    }
    return num / den;
  };
  const double vf = weighted_mean(fwd);
  const double vr = weighted_mean(rev);
  const double scale = forward.resolution * forward.fps;
  const double angle_f = std::atan(vf / scale);
  const double angle_r = std::atan(-vr / scale);
  CHECK(std::abs(angle_f - angle_r) < deg2rad(2.0));
}

TEST_CASE("velocities scale linearly with resolution and fps") {
  FrameSequence seq = uniform_scene(0.8, 32, 24, 80, 19);
  const auto lines = rows_as_lines(24, 80, 6);
  const auto base = line_velocities(seq, lines);
  REQUIRE(!base.empty());

  FrameSequence res_scaled = seq;
  res_scaled.resolution *= 3.0;
  const auto res_samples = line_velocities(res_scaled, lines);
  REQUIRE(res_samples.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(res_samples[i].v == doctest::Approx(3.0 * base[i].v).epsilon(1e-12));

  FrameSequence fps_scaled = seq;
  fps_scaled.fps *= 2.0;
  const auto fps_samples = line_velocities(fps_scaled, lines);
  REQUIRE(fps_samples.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(fps_samples[i].v == doctest::Approx(2.0 * base[i].v).epsilon(1e-12));
}
