#include "hydrostat/sti.hpp"

#include <cmath>

namespace hydrostat::stiv {

Matrix build_sti(const FrameSequence& seq, const SearchLine& line) {
  const Index t_count = static_cast<Index>(seq.frames.size());
  if (t_count < 2) throw Error("frame sequence needs at least two frames");
  if (line.length < 2) throw Error("search line too short");
  const Vector2 dir = line.direction.normalized();

  Matrix sti(t_count, line.length);
  for (Index t = 0; t < t_count; ++t) {
    const Matrix& frame = seq.frames[static_cast<std::size_t>(t)];
    for (Index k = 0; k < line.length; ++k) {
      const Vector2 p = line.origin + static_cast<double>(k) * dir;
      double value = 0.0;
      if (!bilinear_sample(frame, p.x(), p.y(), value))
        throw LineOutOfBounds("search line leaves the frame");
      sti(t, k) = value;
    }
  }
  return sti;
}

std::vector<LineSegment> detect_segments(const Matrix& sti, const DetectorParams& params) {
  std::vector<LineSegment> out;
  for (const RawSegment& raw : detect_raw_segments(sti, params)) {
    // Raw coords: x = space along the line, y = time.
    Vector2 a = raw.p0;
    Vector2 b = raw.p1;
    if (b.y() < a.y()) std::swap(a, b);
    const double dt = b.y() - a.y();
    const double dk = b.x() - a.x();
    if (dt < 1e-9) continue;  // instantaneous streak, no finite velocity
    LineSegment seg;
    seg.p0 = Vector2(a.y(), a.x());  // (time, space)
    seg.p1 = Vector2(b.y(), b.x());
    seg.angle = std::atan2(dk, dt);
    seg.length = std::hypot(dk, dt);
    out.push_back(seg);
  }
  return out;
}

std::vector<LineSegment> filter_by_angle(const std::vector<LineSegment>& segments,
                                         double min_angle, double max_angle) {
  if (!(min_angle < max_angle)) throw Error("empty angle window");
  std::vector<LineSegment> out;
  out.reserve(segments.size());
  for (const auto& s : segments)
    if (s.angle >= min_angle && s.angle <= max_angle) out.push_back(s);
  return out;
}

double segment_to_velocity(const LineSegment& seg, double resolution, double fps) {
  return std::tan(seg.angle) * resolution * fps;
}

std::vector<VelocitySample> line_velocities(const FrameSequence& seq,
                                            const std::vector<SearchLine>& lines,
                                            const VelocityOptions& opts,
                                            std::vector<int>* skipped_lines) {
  std::vector<VelocitySample> samples;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    Matrix sti;
    try {
      sti = build_sti(seq, lines[li]);
    } catch (const LineOutOfBounds&) {
      if (skipped_lines) skipped_lines->push_back(static_cast<int>(li));
      continue;
    }
    const auto segments =
        filter_by_angle(detect_segments(sti, opts.detector), opts.angle_min, opts.angle_max);
    for (const auto& seg : segments) {
      VelocitySample s;
      s.position = lines[li].segment;
      s.v = segment_to_velocity(seg, seq.resolution, seq.fps);
      s.weight = seg.length;
      samples.push_back(s);
    }
  }
  return samples;
}

}  // namespace hydrostat::stiv
