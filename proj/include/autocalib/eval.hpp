#pragma once

#include <string>
#include <vector>

#include "autocalib/geometry.hpp"
#include "autocalib/ransac.hpp"
#include "autocalib/synth.hpp"

namespace autocalib {

// Cell-centered N x N tessellation spanning the full image, pixels.
struct WarpGrid {
  int n = 10;
  int width = 0, height = 0;

  std::vector<Eigen::Vector2d> points() const;  // top-left-origin pixels
};

// Grid reprojection discrepancy between two calibrations: each grid point is
// back-projected with the ground truth, rescaled by the focal ratio and
// re-projected with the estimate. score is the average point displacement in
// pixels (the headline warp statistic); rms is the quadratic mean.
struct WarpStats {
  double score = 0;
  double rms = 0;
  std::vector<double> deltas;
  int dropped = 0;
};
WarpStats warp_error(const Calibration& gt, const Calibration& est, const WarpGrid& grid);

// Convenience: the headline warp statistic, infinity when the estimate is
// unusable over the grid.
double warp_score(const Calibration& gt, const Calibration& est, int grid_n = 10);

// Percent relative errors (lambda, f), compared in pixel units.
std::pair<double, double> relative_errors(const Calibration& gt, const Calibration& est);

// ---------------------------------------------------------------------------
// Benchmarks

// A benchmarked solver path: one input configuration in one VP-configuration
// mode.
struct BenchPath {
  SolverId id;
  ConfigMode mode;
  std::string name;
};
const std::vector<BenchPath>& all_bench_paths();

// Generates a scene matching a path's input configuration and draws one
// minimal sample of that configuration.
SceneSpec scene_spec_for_path(const BenchPath& path, uint64_t seed);
MinimalSample sample_for_path(const BenchPath& path, const FeatureSet& fs,
                              std::mt19937_64& rng);

// Best candidate of a solve against ground truth: smallest warp score over
// the mode-matching candidates, expanding the focal-upgrade alternatives.
// Returns infinity when no candidate of the mode is usable.
struct PathSolveOutcome {
  bool solved = false;
  double warp = std::numeric_limits<double>::infinity();
  double lambda_rel_err = std::numeric_limits<double>::infinity();
  double f_rel_err = std::numeric_limits<double>::infinity();
};
PathSolveOutcome evaluate_path_solve(const BenchPath& path, const SyntheticScene& scene,
                                     const SolveResult& solved, int grid_n = 10);

struct StabilityRow {
  std::string solver;
  int scene = 0;
  bool solved = false;
  double log10_warp = 0;
};
struct StabilityReport {
  std::vector<StabilityRow> rows;
  std::string csv;
  std::string summary_json;
};
// Noiseless single-shot minimal solves per path.
StabilityReport run_stability_bench(int n_scenes, const std::vector<BenchPath>& paths,
                                    uint64_t seed);

struct SensitivityCell {
  std::string solver;
  double sigma = 0;
  double median_warp = 0;
  int failures = 0;
  std::vector<double> warps;  // per scene
};
struct SensitivityReport {
  std::vector<SensitivityCell> cells;
  std::string csv;
  std::string summary_json;
};
// Per noise level, the best of `iters` minimal samples per scene (warp score
// against ground truth), medians per path.
SensitivityReport run_sensitivity_bench(const std::vector<double>& sigmas, int n_scenes,
                                        int iters, const std::vector<BenchPath>& paths,
                                        uint64_t seed);

// Full-estimator comparison on a mixed corpus (half line-rich, half
// repeat-rich scenes): median warp score per solver configuration.
struct EnsembleComparison {
  double median_ensemble = 0;
  std::vector<std::pair<std::string, double>> median_individual;
  std::string csv;
};
EnsembleComparison run_mixed_corpus_bench(int n_scenes, uint64_t seed, int iterations = 500);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace autocalib
