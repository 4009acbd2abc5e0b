#include "hydrostat/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hydrostat::io {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Skips whitespace and '#' comments in a PGM header.
void skip_pgm_space(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

long pgm_int(const std::string& s, std::size_t& pos) {
  skip_pgm_space(s, pos);
  long value = 0;
  const auto begin = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    value = value * 10 + (s[pos] - '0');
    ++pos;
  }
  if (pos == begin) throw IoError("malformed pgm header");
  return value;
}

std::vector<double> parse_csv_line(const std::string& line, bool* numeric) {
  std::vector<double> values;
  *numeric = true;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    std::string tok = line.substr(start, end - start);
    // trim
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front()))) tok.erase(0, 1);
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.pop_back();
    double v = std::numeric_limits<double>::quiet_NaN();
    if (tok.empty()) {
      *numeric = false;
    } else {
      const auto* first = tok.data();
      const auto* last = tok.data() + tok.size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) *numeric = false;
    }
    values.push_back(v);
    if (end == line.size()) break;
    start = end + 1;
  }
  return values;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    std::string tok = line.substr(start, end - start);
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front()))) tok.erase(0, 1);
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.pop_back();
    out.push_back(tok);
    if (end == line.size()) break;
    start = end + 1;
  }
  return out;
}

std::string frame_name(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06lld.pgm", static_cast<long long>(i));
  return buf;
}

}  // namespace

Matrix read_pgm(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '2' && data[1] != '5'))
    throw IoError("not a P2/P5 pgm: " + path.string());
  const bool binary = data[1] == '5';
  std::size_t pos = 2;
  const long width = pgm_int(data, pos);
  const long height = pgm_int(data, pos);
  const long maxval = pgm_int(data, pos);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw IoError("unsupported pgm dimensions or maxval: " + path.string());

  Matrix img(height, width);
  if (binary) {
    ++pos;  // single whitespace after maxval
    if (data.size() - pos < static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw IoError("truncated pgm payload: " + path.string());
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c)
        img(r, c) = static_cast<double>(static_cast<unsigned char>(data[pos++]));
  } else {
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c) img(r, c) = static_cast<double>(pgm_int(data, pos));
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Matrix& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c), 0.0, 255.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
    }
}

mask::WaterMask read_mask(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    const Matrix m = read_csv_matrix(path);
    mask::WaterMask out(m.rows(), m.cols());
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) {
        if (m(r, c) != 0.0 && m(r, c) != 1.0)
          throw IoError("mask csv entries must be 0 or 1: " + path.string());
        out(r, c) = static_cast<std::uint8_t>(m(r, c));
      }
    return out;
  }
  const Matrix img = read_pgm(path);
  mask::WaterMask out(img.rows(), img.cols());
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c) out(r, c) = img(r, c) > 127.0 ? 1 : 0;
  return out;
}

void write_mask_pgm(const std::filesystem::path& path, const mask::WaterMask& m) {
  write_pgm(path, m.cast<double>() * 255.0);
}

Matrix read_csv_matrix(const std::filesystem::path& path, std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  if (header) header->clear();

  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    bool numeric = false;
    auto values = parse_csv_line(line, &numeric);
    if (first && !numeric) {
      if (header) *header = split_tokens(line);
      first = false;
      continue;
    }
    first = false;
    if (!numeric) throw IoError("non-numeric csv row in " + path.string());
    if (!rows.empty() && rows.front().size() != values.size())
      throw IoError("ragged csv rows in " + path.string());
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IoError("csv has no data rows: " + path.string());

  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& m,
                      const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      out << header[i] << (i + 1 < header.size() ? "," : "\n");
  }
  out.precision(17);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out << m(r, c) << (c + 1 < m.cols() ? "," : "\n");
}

stiv::FrameSequence read_frames(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw IoError("malformed manifest: " + std::string(e.what()));
  }

  stiv::FrameSequence seq;
  try {
    seq.fps = manifest.at("fps").get<double>();
    seq.resolution = manifest.at("resolution").get<double>();
    const auto count = manifest.at("frames").get<Index>();
    if (seq.fps <= 0.0 || seq.resolution <= 0.0 || count < 2)
      throw IoError("manifest values out of range");
    seq.frames.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) seq.frames.push_back(read_pgm(dir / frame_name(i)));
  } catch (const json::exception& e) {
    throw IoError("malformed manifest: " + std::string(e.what()));
  }
  for (const auto& f : seq.frames)
    if (f.rows() != seq.frames.front().rows() || f.cols() != seq.frames.front().cols())
      throw IoError("frames differ in size");
  return seq;
}

void write_frames(const std::filesystem::path& dir, const stiv::FrameSequence& seq) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i)
    write_pgm(dir / frame_name(static_cast<Index>(i)), seq.frames[i]);
  json manifest;
  manifest["fps"] = seq.fps;
  manifest["resolution"] = seq.resolution;
  manifest["frames"] = seq.frames.size();
  manifest["width"] = seq.frames.empty() ? 0 : seq.frames.front().cols();
  manifest["height"] = seq.frames.empty() ? 0 : seq.frames.front().rows();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest");
  out << manifest.dump(2) << "\n";
}

std::vector<rating::StageDischargePair> read_pairs_csv(const std::filesystem::path& path) {
  const Matrix m = read_csv_matrix(path);
  if (m.cols() != 2 && m.cols() != 3) throw IoError("expected h,q[,t] columns in " + path.string());
  std::vector<rating::StageDischargePair> pairs;
  pairs.reserve(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r) {
    rating::StageDischargePair p;
    p.h = m(r, 0);
    p.q = m(r, 1);
    if (m.cols() == 3) p.t = m(r, 2);
    pairs.push_back(p);
  }
  return pairs;
}

void write_pairs_csv(const std::filesystem::path& path,
                     const std::vector<rating::StageDischargePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "h,q,t\n";
  out.precision(17);
  for (const auto& p : pairs) out << p.h << "," << p.q << "," << p.t << "\n";
}

std::vector<rating::ControlPoint> read_controls_csv(const std::filesystem::path& path) {
  const Matrix m = read_csv_matrix(path);
  if (m.cols() != 2) throw IoError("expected h,q columns in " + path.string());
  std::vector<rating::ControlPoint> controls;
  controls.reserve(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r) controls.push_back({m(r, 0), m(r, 1)});
  return controls;
}

void write_velocity_samples_csv(const std::filesystem::path& path,
                                const std::vector<stiv::VelocitySample>& samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "position,v,weight\n";
  out.precision(17);
  for (const auto& s : samples) out << s.position << "," << s.v << "," << s.weight << "\n";
}

void write_grid_csv(const std::filesystem::path& path, const geometry::RectifiedGrid& grid) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "row,col,u,v\n";
  out.precision(17);
  for (Index r = 0; r < grid.height; ++r)
    for (Index c = 0; c < grid.width; ++c)
      out << r << "," << c << "," << grid.src_u(r, c) << "," << grid.src_v(r, c) << "\n";
}

void write_density_csv(const std::filesystem::path& path, const kde::Kde1& k, double lo, double hi,
                       int points) {
  if (points < 2 || !(lo < hi)) throw IoError("invalid density grid");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "x,density\n";
  out.precision(17);
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    out << x << "," << kde::pdf1(k, x) << "\n";
  }
}

}  // namespace hydrostat::io
