#pragma once

#include "hydrostat/geometry.hpp"
#include "hydrostat/kde.hpp"
#include "hydrostat/mask.hpp"
#include "hydrostat/rating.hpp"
#include "hydrostat/sti.hpp"
#include "hydrostat/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hydrostat::io {

struct IoError : Error {
  using Error::Error;
};

/// PGM (P2/P5, maxval <= 255) as a double matrix.
Matrix read_pgm(const std::filesystem::path& path);
/// Values are clamped to [0, 255] and rounded.
void write_pgm(const std::filesystem::path& path, const Matrix& image);

/// Water mask from .pgm (values > 127 are water) or .csv of 0/1 entries.
mask::WaterMask read_mask(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const mask::WaterMask& m);

/// Numeric CSV. When the first line fails to parse as numbers it is taken
/// as a header and returned through `header`.
Matrix read_csv_matrix(const std::filesystem::path& path, std::vector<std::string>* header = nullptr);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m,
                      const std::vector<std::string>& header = {});

/// Frame directory: frame_%06d.pgm plus manifest.json (fps, resolution).
stiv::FrameSequence read_frames(const std::filesystem::path& dir);
void write_frames(const std::filesystem::path& dir, const stiv::FrameSequence& seq);

/// h,q[,t] rows with an optional header line.
std::vector<rating::StageDischargePair> read_pairs_csv(const std::filesystem::path& path);
void write_pairs_csv(const std::filesystem::path& path,
                     const std::vector<rating::StageDischargePair>& pairs);

std::vector<rating::ControlPoint> read_controls_csv(const std::filesystem::path& path);

void write_velocity_samples_csv(const std::filesystem::path& path,
                                const std::vector<stiv::VelocitySample>& samples);

/// row,col,u,v per grid cell.
void write_grid_csv(const std::filesystem::path& path, const geometry::RectifiedGrid& grid);

/// Diagnostic dump of a 1d density over a uniform grid: x,density rows.
void write_density_csv(const std::filesystem::path& path, const kde::Kde1& k, double lo, double hi,
                       int points);

}  // namespace hydrostat::io
