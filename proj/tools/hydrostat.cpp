// hydrostat: water level, surface velocity, discharge imputation, and
// stage-discharge rating tools over mask/frame/CSV inputs.

#include "hydrostat/config.hpp"
#include "hydrostat/geometry.hpp"
#include "hydrostat/impute.hpp"
#include "hydrostat/io.hpp"
#include "hydrostat/kde.hpp"
#include "hydrostat/mask.hpp"
#include "hydrostat/rating.hpp"
#include "hydrostat/sti.hpp"
#include "hydrostat/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace hydrostat;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitQuality = 3;
constexpr int kExitPipeline = 4;

struct ExitWithCode {
  int code;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw io::IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw io::IoError("malformed json in " + path.string() + ": " + e.what());
  }
}

config::SiteConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return {};
  return config::load_site_config(path);
}

// ---------------------------------------------------------------------------
// level

int cmd_level(const std::string& mask_path, const std::string& config_path,
              const std::string& out_dir) {
  const auto cfg = load_config_or_default(config_path);
  const mask::WaterMask m = io::read_mask(mask_path);

  const auto report = mask::evaluate_mask(m, cfg.mask.prior_slope, cfg.mask.quality_threshold,
                                          cfg.mask.roi, cfg.mask.x_ref);

  json out;
  out["quality"] = report.q;
  out["accepted"] = report.accepted;
  out["threshold"] = cfg.mask.quality_threshold;
  out["roi"] = {report.roi.begin, report.roi.end};
  try {
    const double level = mask::level_from_mask(m, cfg.mask.calibration, cfg.mask.roi);
    out["level_m"] = level;
  } catch (const mask::InsufficientWaterColumns& e) {
    out["level_m"] = nullptr;
    out["error"] = e.what();
    std::cout << out.dump(2) << "\n";
    return kExitPipeline;
  }

  std::cout << out.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "level.json", out);
  }
  return report.accepted ? kExitOk : kExitQuality;
}

// ---------------------------------------------------------------------------
// stiv

struct SegmentVelocity {
  int segment = 0;
  double v = 0.0;
  double confidence = 0.0;
};

std::vector<SegmentVelocity> segment_velocities(const std::vector<stiv::VelocitySample>& samples,
                                                const std::vector<stiv::SearchLine>& lines,
                                                double confidence_threshold) {
  std::set<int> segment_ids;
  for (const auto& l : lines) segment_ids.insert(l.segment);

  std::map<int, std::vector<const stiv::VelocitySample*>> by_segment;
  for (const auto& s : samples) by_segment[s.position].push_back(&s);

  std::vector<SegmentVelocity> out;
  for (int seg : segment_ids) {
    SegmentVelocity sv;
    sv.segment = seg;
    const auto it = by_segment.find(seg);
    if (it == by_segment.end() || it->second.empty()) {
      out.push_back(sv);  // missing
      continue;
    }
    const auto& group = it->second;
    if (group.size() == 1) {
      sv.v = group.front()->v;
      sv.confidence = 1.0;
    } else {
      Vector values(static_cast<Index>(group.size()));
      Vector weights(static_cast<Index>(group.size()));
      for (std::size_t i = 0; i < group.size(); ++i) {
        values(static_cast<Index>(i)) = group[i]->v;
        weights(static_cast<Index>(i)) = group[i]->weight;
      }
      const auto est = kde::mode1(kde::make_kde1(values, weights));
      sv.v = est.mode;
      sv.confidence = est.confidence;
    }
    if (sv.confidence < confidence_threshold) {
      sv.v = 0.0;  // below confidence: report as missing
    }
    out.push_back(sv);
  }
  return out;
}

int cmd_stiv(const std::string& frames_dir, const std::string& config_path,
             const std::string& out_dir) {
  const auto cfg = load_config_or_default(config_path);
  if (cfg.stiv.lines.empty()) throw config::ConfigError("config defines no search lines");
  const stiv::FrameSequence seq = io::read_frames(frames_dir);

  stiv::VelocityOptions opts;
  opts.angle_min = cfg.stiv.angle_min;
  opts.angle_max = cfg.stiv.angle_max;
  opts.detector = cfg.stiv.detector;
  std::vector<int> skipped;
  const auto samples = stiv::line_velocities(seq, cfg.stiv.lines, opts, &skipped);
  for (int li : skipped)
    std::cerr << "warning: search line " << li << " leaves the frame; skipped\n";

  const auto segments = segment_velocities(samples, cfg.stiv.lines, cfg.kde.confidence_threshold);

  std::ostringstream csv;
  csv << "segment,velocity,confidence\n";
  csv.precision(17);
  for (const auto& s : segments) csv << s.segment << "," << s.v << "," << s.confidence << "\n";
  std::cout << csv.str();

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "segments.csv");
    out << csv.str();
    io::write_velocity_samples_csv(fs::path(out_dir) / "samples.csv", samples);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// impute

int cmd_impute(const std::string& history_path, const std::string& observation_path,
               const std::string& config_path, const std::string& out_dir,
               std::optional<double> level) {
  const auto cfg = load_config_or_default(config_path);

  std::vector<std::string> names;
  const Matrix hist = io::read_csv_matrix(history_path, &names);
  std::vector<std::string> obs_names;
  const Matrix obs_rows = io::read_csv_matrix(observation_path, &obs_names);
  if (obs_rows.rows() != 1)
    throw io::IoError("observation csv must contain exactly one data row");
  if (obs_rows.cols() != hist.cols())
    throw io::IoError("observation width does not match the history");
  const Vector observation = obs_rows.row(0).transpose();

  const auto model = mrf::learn_potentials(hist, cfg.mrf.min_samples);
  const auto result = mrf::impute(model, observation, cfg.mrf.options);

  json out;
  out["v_star"] = std::vector<double>(result.v_star.data(),
                                      result.v_star.data() + result.v_star.size());
  out["energy_initial"] = result.energy_initial;
  out["energy_final"] = result.energy_final;
  out["energy_trace"] = result.energy_trace;
  out["iterations"] = result.iterations;
  out["converged"] = result.converged;
  out["disconnected"] = result.disconnected;
  if (!names.empty()) out["segments"] = names;

  if (level) {
    if (!cfg.geometry) throw config::ConfigError("discharge needs a geometry_table in the config");
    out["level_m"] = *level;
    out["discharge_m3s"] = mrf::total_discharge(result.v_star, *cfg.geometry, *level);
  }

  std::cout << out.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "impute.json", out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// rating

json curve_to_json(const rating::FitReport& report) {
  json out;
  out["a"] = report.curve.a;
  out["b"] = report.curve.b;
  out["c"] = report.curve.c;
  out["iterations"] = report.iterations;
  out["used_linear_prefit"] = report.used_linear_prefit;
  out["inliers"] = report.inliers;
  out["outliers"] = report.outliers;
  return out;
}

int cmd_rating_fit(const std::string& pairs_path, const std::string& config_path,
                   const std::string& out_dir) {
  const auto cfg = load_config_or_default(config_path);
  const auto pairs = io::read_pairs_csv(pairs_path);
  const auto report = rating::iterative_fit(pairs, cfg.rating.rel_threshold, cfg.rating.max_iter);

  const json out = curve_to_json(report);
  std::cout << out.dump(2) << "\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "curve.json", out);
    std::vector<rating::StageDischargePair> in_pairs, out_pairs;
    for (int i : report.inliers) in_pairs.push_back(pairs[static_cast<std::size_t>(i)]);
    for (int i : report.outliers) out_pairs.push_back(pairs[static_cast<std::size_t>(i)]);
    io::write_pairs_csv(fs::path(out_dir) / "inliers.csv", in_pairs);
    io::write_pairs_csv(fs::path(out_dir) / "outliers.csv", out_pairs);
  }
  return kExitOk;
}

int cmd_rating_calibrate(const std::string& curve_path, const std::string& controls_path,
                         const std::string& config_path, const std::string& out_dir) {
  const auto cfg = load_config_or_default(config_path);
  const json cj = load_json(curve_path);
  rating::QuadraticCurve base;
  try {
    base.a = cj.at("a").get<double>();
    base.b = cj.at("b").get<double>();
    base.c = cj.at("c").get<double>();
  } catch (const json::exception& e) {
    throw io::IoError("curve json needs a, b, c: " + std::string(e.what()));
  }
  const auto controls = io::read_controls_csv(controls_path);
  const auto cal = rating::rbf_calibrate(
      base, controls, cfg.rating.lambda);

  json out;
  out["base"] = {{"a", base.a}, {"b", base.b}, {"c", base.c}};
  out["centers"] = std::vector<double>(cal.centers.data(), cal.centers.data() + cal.centers.size());
  out["sigmas"] = std::vector<double>(cal.sigmas.data(), cal.sigmas.data() + cal.sigmas.size());
  out["weights"] = std::vector<double>(cal.weights.data(), cal.weights.data() + cal.weights.size());
  out["lambda"] = cal.lambda;
  if (controls.size() >= 2) {
    const double lo = cal.centers.minCoeff();
    const double hi = cal.centers.maxCoeff();
    out["monotonic_on_controls"] = rating::monotonic_on(cal, lo, hi);
  }

  std::cout << out.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "calibrated.json", out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

Vector profile_from_spec(const json& spec, Index height) {
  Vector v = Vector::Zero(height);
  if (spec.contains("velocity")) {
    v.setConstant(spec.at("velocity").get<double>());
    return v;
  }
  for (const auto& band : spec.at("profile")) {
    const auto& rows = band.at("rows");
    const Index lo = rows[0].get<Index>();
    const Index hi = rows[1].get<Index>();
    if (lo < 0 || hi > height || lo >= hi)
      throw synth::SpecOutOfRange("profile band outside the frame");
    for (Index r = lo; r < hi; ++r) v(r) = band.at("v").get<double>();
  }
  return v;
}

int cmd_synth(const std::string& kind, const std::string& spec_path, const std::string& out_dir,
              std::uint64_t seed) {
  const json spec = load_json(spec_path);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  if (kind == "mask") {
    synth::MaskSpec ms;
    ms.height = spec.at("height").get<Index>();
    ms.width = spec.at("width").get<Index>();
    ms.boundary_row = spec.at("boundary_row").get<double>();
    ms.slope = spec.value("slope", 0.0);
    ms.flip_probability = spec.value("flip_probability", 0.0);
    if (spec.contains("corrupted_columns"))
      ms.corrupted_columns = spec.at("corrupted_columns").get<std::vector<Index>>();
    const auto gen = synth::gen_mask(ms, seed);
    io::write_mask_pgm(out / "mask.pgm", gen.mask);
    json truth;
    truth["boundary_row"] = ms.boundary_row;
    truth["slope"] = ms.slope;
    truth["true_boundary"] = std::vector<double>(gen.true_boundary.data(),
                                                 gen.true_boundary.data() + gen.true_boundary.size());
    write_json(out / "truth.json", truth);
    return kExitOk;
  }

  if (kind == "frames") {
    synth::SceneSpec ss;
    ss.frames = spec.at("frames").get<Index>();
    ss.height = spec.at("height").get<Index>();
    ss.width = spec.at("width").get<Index>();
    ss.fps = spec.value("fps", 25.0);
    ss.resolution = spec.value("resolution", 0.02);
    ss.contrast = spec.value("contrast", 32.0);
    ss.noise_sigma = spec.value("noise_sigma", 0.0);
    ss.row_velocity = profile_from_spec(spec, ss.height);
    const auto gen = synth::gen_frames(ss, seed);
    io::write_frames(out / "frames", gen.seq);

    json truth;
    truth["fps"] = ss.fps;
    truth["resolution"] = ss.resolution;
    truth["row_velocity"] = std::vector<double>(gen.row_velocity.data(),
                                                gen.row_velocity.data() + gen.row_velocity.size());
    // Suggested per-band search lines, three per band, along +x.
    if (spec.contains("profile")) {
      json lines = json::array();
      int segment = 0;
      for (const auto& band : spec.at("profile")) {
        const Index lo = band.at("rows")[0].get<Index>();
        const Index hi = band.at("rows")[1].get<Index>();
        const Index mid = (lo + hi) / 2;
        for (Index row : {lo + (hi - lo) / 4, mid, hi - 1 - (hi - lo) / 4}) {
          json l;
          l["origin"] = {4.0, static_cast<double>(row)};
          l["direction"] = {1.0, 0.0};
          l["length"] = std::max<Index>(8, ss.width - 8);
          l["segment"] = segment;
          lines.push_back(l);
        }
        ++segment;
      }
      truth["search_lines"] = lines;
    }
    write_json(out / "truth.json", truth);
    return kExitOk;
  }

  if (kind == "history") {
    synth::HistorySpec hs;
    hs.rows = spec.at("rows").get<Index>();
    const auto gains = spec.at("gains").get<std::vector<double>>();
    hs.gains = Eigen::Map<const Vector>(gains.data(), static_cast<Index>(gains.size()));
    if (spec.contains("offsets")) {
      const auto offsets = spec.at("offsets").get<std::vector<double>>();
      hs.offsets = Eigen::Map<const Vector>(offsets.data(), static_cast<Index>(offsets.size()));
    } else {
      hs.offsets = Vector::Zero(hs.gains.size());
    }
    hs.base_lo = spec.value("base_lo", 0.5);
    hs.base_hi = spec.value("base_hi", 1.5);
    hs.jitter = spec.value("jitter", 0.0);
    hs.missing_rate = spec.value("missing_rate", 0.0);
    const auto gen = synth::gen_history(hs, seed);

    std::vector<std::string> header;
    if (spec.contains("segment_names")) {
      header = spec.at("segment_names").get<std::vector<std::string>>();
    } else {
      for (Index k = 0; k < hs.gains.size(); ++k)
        header.push_back("d" + std::to_string(20 * (k + 1)));
    }
    io::write_csv_matrix(out / "history.csv", gen.observed, header);
    io::write_csv_matrix(out / "truth.csv", gen.truth, header);
    return kExitOk;
  }

  if (kind == "rating") {
    synth::RatingSpec rs;
    rs.a = spec.at("a").get<double>();
    rs.b = spec.at("b").get<double>();
    rs.c = spec.at("c").get<double>();
    rs.count = spec.at("count").get<Index>();
    rs.h_lo = spec.at("h_lo").get<double>();
    rs.h_hi = spec.at("h_hi").get<double>();
    rs.noise = spec.value("noise", 0.0);
    rs.outlier_fraction = spec.value("outlier_fraction", 0.0);
    rs.outlier_magnitude = spec.value("outlier_magnitude", 0.8);
    const auto gen = synth::gen_rating(rs, seed);
    io::write_pairs_csv(out / "pairs.csv", gen.pairs);
    json truth;
    truth["a"] = rs.a;
    truth["b"] = rs.b;
    truth["c"] = rs.c;
    truth["outlier_indices"] = gen.outlier_indices;
    write_json(out / "truth.json", truth);
    return kExitOk;
  }

  throw io::IoError("unknown synth kind: " + kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hydrometry estimation toolkit"};
  app.require_subcommand(1);

  std::string mask_path, frames_dir, history_path, observation_path, pairs_path;
  std::string curve_path, controls_path, spec_path;
  std::string config_path, out_dir;
  std::uint64_t seed = 42;
  double level_value = 0.0;

  auto* level = app.add_subcommand("level", "water level from a segmentation mask");
  level->add_option("--mask", mask_path, "mask file (.pgm or .csv)")->required();
  level->add_option("--config", config_path, "site config json");
  level->add_option("--out", out_dir, "output directory");
  level->add_option("--seed", seed, "unused; accepted for interface uniformity");

  auto* stiv = app.add_subcommand("stiv", "per-segment surface velocities from frames");
  stiv->add_option("--frames", frames_dir, "frame directory with manifest.json")->required();
  stiv->add_option("--config", config_path, "site config json")->required();
  stiv->add_option("--out", out_dir, "output directory");
  stiv->add_option("--seed", seed, "unused; accepted for interface uniformity");

  auto* impute = app.add_subcommand("impute", "fill missing segment velocities");
  impute->add_option("--history", history_path, "historical flow csv")->required();
  impute->add_option("--observation", observation_path, "observation csv (one row)")->required();
  impute->add_option("--config", config_path, "site config json");
  impute->add_option("--out", out_dir, "output directory");
  auto* level_opt = impute->add_option("--level", level_value,
                                       "water level for discharge (needs geometry_table)");
  impute->add_option("--seed", seed, "unused; accepted for interface uniformity");

  auto* rating_cmd = app.add_subcommand("rating", "stage-discharge curve tools");
  rating_cmd->require_subcommand(1);
  auto* fit = rating_cmd->add_subcommand("fit", "iterative quadratic fit with outlier rejection");
  fit->add_option("--pairs", pairs_path, "h,q[,t] csv")->required();
  fit->add_option("--config", config_path, "site config json");
  fit->add_option("--out", out_dir, "output directory");
  fit->add_option("--seed", seed, "unused; accepted for interface uniformity");
  auto* calibrate = rating_cmd->add_subcommand("calibrate", "RBF correction through controls");
  calibrate->add_option("--curve", curve_path, "fitted curve json")->required();
  calibrate->add_option("--controls", controls_path, "h,q csv of control measurements")->required();
  calibrate->add_option("--config", config_path, "site config json");
  calibrate->add_option("--out", out_dir, "output directory");
  calibrate->add_option("--seed", seed, "unused; accepted for interface uniformity");

  auto* synth_cmd = app.add_subcommand("synth", "generate oracle scenes");
  std::string synth_kind;
  synth_cmd->add_option("kind", synth_kind, "mask|frames|history|rating")->required();
  synth_cmd->add_option("--spec", spec_path, "generator spec json")->required();
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (level->parsed()) return cmd_level(mask_path, config_path, out_dir);
    if (stiv->parsed()) return cmd_stiv(frames_dir, config_path, out_dir);
    if (impute->parsed()) {
      std::optional<double> lvl;
      if (level_opt->count() > 0) lvl = level_value;
      return cmd_impute(history_path, observation_path, config_path, out_dir, lvl);
    }
    if (rating_cmd->parsed()) {
      if (fit->parsed()) return cmd_rating_fit(pairs_path, config_path, out_dir);
      if (calibrate->parsed())
        return cmd_rating_calibrate(curve_path, controls_path, config_path, out_dir);
    }
    if (synth_cmd->parsed()) return cmd_synth(synth_kind, spec_path, out_dir, seed);
  } catch (const io::IoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitInput;
  } catch (const synth::SpecOutOfRange& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitInput;
  } catch (const synth::AdvectionOutOfFrame& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
