#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "autocalib/eval.hpp"
#include "autocalib/rectify.hpp"
#include "autocalib/report.hpp"
#include "autocalib/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitNoModel = 3;
constexpr int kExitIo = 4;

using namespace autocalib;

struct CalibrateArgs {
  std::string features;
  std::string config;
  std::string solvers;
  std::string thresholds;
  std::string gt;
  std::string out = "report.json";
  int iters = -1;
  uint64_t seed = 0;
  bool seed_set = false;
  bool no_local_opt = false;
};

int run_calibrate(const CalibrateArgs& args) {
  RansacConfig cfg;
  if (!args.config.empty()) cfg = load_ransac_config(args.config);
  if (!args.solvers.empty()) apply_config_entry(&cfg, "solvers", args.solvers);
  if (args.iters > 0) cfg.iterations = args.iters;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.no_local_opt) cfg.local_optimization = false;
  if (!args.thresholds.empty()) {
    std::stringstream ss(args.thresholds);
    std::string c, p;
    if (!std::getline(ss, c, ',') || !std::getline(ss, p, ',')) {
      throw ParseError("--thresholds wants contour_px,point_px");
    }
    apply_config_entry(&cfg, "contour_threshold_px", c);
    apply_config_entry(&cfg, "point_threshold_px", p);
  }

  const FeatureSet fs = load_features(args.features);
  RansacReport ransac_report;
  Hypothesis best = run_ransac(fs, cfg, &ransac_report);
  if (cfg.local_optimization) best = local_optimize(best, fs, cfg);

  CalibrationReport report;
  report.calibration = best.calibration;
  report.mode = best.model.mode;
  report.vps = best.model.vps;
  report.inlier_arcs = best.inlier_arcs;
  report.inlier_regions = best.inlier_regions;
  report.msac_score = best.msac_score;
  report.source_solver = solver_name(best.source);
  report.ransac = ransac_report;
  report.seed = cfg.seed;
  if (!args.gt.empty()) {
    const Calibration gt = load_calibration(args.gt);
    report.warp_vs_gt = warp_score(gt, best.calibration);
  }
  save_report(report, args.out);
  std::cout << "calibration written to " << args.out << " (solver " << report.source_solver
            << ", " << best.inlier_count() << " inliers)\n";
  return kExitOk;
}

struct SynthArgs {
  std::string preset = "manhattan";
  std::string spec_path;
  std::string out = "features.json";
  std::string gt_out;
  std::string spec_out;
  uint64_t seed = 0;
  double noise = 0;
  double outliers = 0;
  int arcs = 4;
  int regions = 2;
};

int run_synth(const SynthArgs& args) {
  SceneSpec spec;
  if (!args.spec_path.empty()) {
    spec = load_scene_spec(args.spec_path);
  } else if (args.preset == "manhattan") {
    spec = manhattan_scene_spec(args.arcs, args.regions, args.seed);
  } else if (args.preset == "coplanar") {
    spec = coplanar_scene_spec(args.arcs, args.regions, args.seed);
  } else {
    throw ParseError("unknown preset: " + args.preset);
  }
  if (args.spec_path.empty()) {
    spec.noise_sigma_px = args.noise;
    spec.outlier_fraction = args.outliers;
  }
  if (!args.spec_out.empty()) save_scene_spec(spec, args.spec_out);
  const SyntheticScene scene = generate(spec);
  save_features(scene.features, args.out);
  if (!args.gt_out.empty()) save_calibration(scene.gt, args.gt_out);
  std::cout << "synthetic features written to " << args.out << " (" << scene.features.arcs.size()
            << " arcs, " << scene.features.regions.size() << " regions)\n";
  return kExitOk;
}

struct BenchArgs {
  std::string out = "bench";
  int scenes = 1000;
  int iters = 25;
  std::string sigmas = "0.1,0.5,1,2";
  uint64_t seed = 0;
  bool quick = false;
};

std::vector<double> parse_sigmas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = std::stod(item);
    if (v < 0) throw ParseError("noise level must be non-negative: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("empty sigma list");
  return out;
}

int run_bench_stability(const BenchArgs& args) {
  const int scenes = args.quick ? 20 : args.scenes;
  std::filesystem::create_directories(args.out);
  const StabilityReport rep = run_stability_bench(scenes, all_bench_paths(), args.seed);
  write_text_file(args.out + "/stability.csv", rep.csv);
  write_text_file(args.out + "/stability_summary.json", rep.summary_json);
  std::cout << "stability bench (" << scenes << " scenes) written to " << args.out << "\n";
  return kExitOk;
}

int run_bench_sensitivity(const BenchArgs& args) {
  const int scenes = args.quick ? 20 : args.scenes;
  std::filesystem::create_directories(args.out);
  const SensitivityReport rep = run_sensitivity_bench(parse_sigmas(args.sigmas), scenes,
                                                      args.iters, all_bench_paths(), args.seed);
  write_text_file(args.out + "/sensitivity.csv", rep.csv);
  write_text_file(args.out + "/sensitivity_summary.json", rep.summary_json);
  std::cout << "sensitivity bench (" << scenes << " scenes) written to " << args.out << "\n";
  return kExitOk;
}

struct RectifyArgs {
  std::string image;
  std::string report;
  std::string mode = "undistort";
  std::string out = "rectified.ppm";
  int plane = 3;
};

int run_rectify(const RectifyArgs& args) {
  const Image input = load_image(args.image);
  const CalibrationReport report = load_report(args.report);
  RectifyOptions opts;
  if (args.mode == "undistort") {
    opts.mode = RectifyMode::kUndistort;
  } else if (args.mode == "affine") {
    opts.mode = RectifyMode::kAffine;
  } else if (args.mode == "metric") {
    opts.mode = RectifyMode::kMetric;
  } else {
    throw ParseError("unknown mode: " + args.mode);
  }
  opts.plane_index = args.plane;
  const Image out = rectify_image(input, report.calibration, opts);
  save_image(out, args.out);
  std::cout << "rectified image written to " << args.out << " (" << out.width << "x"
            << out.height << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-image radial undistortion, rectification and focal-length estimation "
               "from circular arcs and translated point correspondences"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* cmd_cal = app.add_subcommand("calibrate", "estimate a calibration from a feature file");
  cmd_cal->add_option("--features", cal.features, "feature JSON file")->required();
  cmd_cal->add_option("--config", cal.config, "key = value config file");
  cmd_cal->add_option("--solvers", cal.solvers, "comma list, e.g. 6CA,2PC+4CA");
  cmd_cal->add_option("--iters", cal.iters, "RANSAC iterations");
  auto* seed_opt = cmd_cal->add_option("--seed", cal.seed, "RNG seed");
  cmd_cal->add_option("--thresholds", cal.thresholds, "contour_px,point_px");
  cmd_cal->add_option("--gt", cal.gt, "ground-truth calibration JSON for warp scoring");
  cmd_cal->add_option("--out", cal.out, "output report path");
  cmd_cal->add_flag("--no-local-opt", cal.no_local_opt, "skip local optimization");

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic feature file");
  cmd_synth->add_option("--preset", synth.preset, "manhattan | coplanar");
  cmd_synth->add_option("--spec", synth.spec_path, "scene spec file (key = value)");
  cmd_synth->add_option("--spec-out", synth.spec_out, "also write the scene spec used");
  cmd_synth->add_option("--out", synth.out, "output feature file");
  cmd_synth->add_option("--gt-out", synth.gt_out, "also write the ground-truth calibration");
  cmd_synth->add_option("--seed", synth.seed, "RNG seed");
  cmd_synth->add_option("--noise", synth.noise, "pixel noise sigma");
  cmd_synth->add_option("--outliers", synth.outliers, "outlier fraction [0, 1)");
  cmd_synth->add_option("--arcs", synth.arcs, "arcs per direction group");
  cmd_synth->add_option("--regions", synth.regions, "regions per direction group");

  BenchArgs bench_stab;
  auto* cmd_stab = app.add_subcommand("bench-stability", "noiseless minimal-solve bench");
  cmd_stab->add_option("--scenes", bench_stab.scenes, "scene count");
  cmd_stab->add_option("--seed", bench_stab.seed, "RNG seed");
  cmd_stab->add_option("--out", bench_stab.out, "output directory");
  cmd_stab->add_flag("--quick", bench_stab.quick, "20-scene smoke run");

  BenchArgs bench_sens;
  auto* cmd_sens = app.add_subcommand("bench-sensitivity", "noise-sensitivity bench");
  cmd_sens->add_option("--scenes", bench_sens.scenes, "scene count");
  cmd_sens->add_option("--iters", bench_sens.iters, "minimal samples per scene");
  cmd_sens->add_option("--sigmas", bench_sens.sigmas, "comma list of noise levels");
  cmd_sens->add_option("--seed", bench_sens.seed, "RNG seed");
  cmd_sens->add_option("--out", bench_sens.out, "output directory");
  cmd_sens->add_flag("--quick", bench_sens.quick, "20-scene smoke run");

  RectifyArgs rect;
  auto* cmd_rect = app.add_subcommand("rectify", "warp an image with a calibration report");
  cmd_rect->add_option("--image", rect.image, "input PGM/PPM image")->required();
  cmd_rect->add_option("--report", rect.report, "calibration report JSON")->required();
  cmd_rect->add_option("--mode", rect.mode, "undistort | affine | metric");
  cmd_rect->add_option("--plane", rect.plane, "Manhattan plane index (1..3) for metric mode");
  cmd_rect->add_option("--out", rect.out, "output image path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitParse;
  }

  try {
    if (cmd_cal->parsed()) {
      cal.seed_set = seed_opt->count() > 0;
      return run_calibrate(cal);
    }
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_stab->parsed()) return run_bench_stability(bench_stab);
    if (cmd_sens->parsed()) return run_bench_sensitivity(bench_sens);
    if (cmd_rect->parsed()) return run_rectify(rect);
  } catch (const NoModel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoModel;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
