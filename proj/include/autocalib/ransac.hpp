#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "autocalib/consistency.hpp"
#include "autocalib/features.hpp"
#include "autocalib/solvers.hpp"

namespace autocalib {

struct RansacConfig {
  int iterations = 500;
  double contour_threshold_px = 1.26;
  double point_threshold_px = 5.05;
  std::vector<SolverId> solvers = {SolverId::k4Pc2Ca, SolverId::k2Pc4Ca, SolverId::k5CaStar,
                                   SolverId::k6Ca, SolverId::k6Pc};
  std::vector<double> weights;  // empty = uniform over enabled solvers
  uint64_t seed = 0;
  bool local_optimization = true;
  // Unused-constraint gate inside the three-VP Manhattan solve.
  double manhattan_cross_tol = 1e-6;
};

// Flat key-value config file (# comments, key = value per line).
RansacConfig load_ransac_config(const std::string& path);
void apply_config_entry(RansacConfig* cfg, const std::string& key, const std::string& value);

struct Hypothesis {
  SolverOutput model;
  Calibration calibration;        // pixel-unit view of the model
  std::vector<int> inlier_arcs;
  std::vector<int> inlier_regions;
  double msac_score = 0;          // truncated squared-residual sum (px^2)
  SolverId source = SolverId::k6Ca;
  int iteration = -1;

  int inlier_count() const {
    return static_cast<int>(inlier_arcs.size() + inlier_regions.size());
  }
};

struct SolverStats {
  int invoked = 0;
  int produced = 0;   // candidates surviving minimal-sample rejection
  int infeasible = 0; // sampling failures
  int best_hits = 0;  // times a candidate became the new best
};

struct TracePoint {
  int iteration;
  int inliers;
  double msac;
};

struct RansacReport {
  std::map<std::string, SolverStats> per_solver;
  std::vector<TracePoint> best_trace;
  int iterations_run = 0;
  bool early_exit = false;
};

class InsufficientFeatures : public std::runtime_error {
 public:
  explicit InsufficientFeatures(const std::string& what) : std::runtime_error(what) {}
};

class NoModel : public std::runtime_error {
 public:
  explicit NoModel(const std::string& what) : std::runtime_error(what) {}
};

// Feature indices keyed by direction group; ungrouped features fall back to
// one shared pool.
struct FeatureCensus {
  std::map<int, std::vector<int>> arcs_by_group;
  std::map<int, std::vector<int>> regions_by_group;
  bool grouped = false;

  static FeatureCensus build(const FeatureSet& fs);
};

// Draws a minimal sample of the solver's input configuration: direction
// groups without replacement, then features within groups. Solvers with two
// admissible shapes pick uniformly among the feasible ones. Throws
// InsufficientFeatures when no shape is feasible.
MinimalSample sample_minimal(const FeatureSet& fs, const FeatureCensus& census,
                             SolverId solver, std::mt19937_64& rng);

// Consensus of a model over the whole feature set at the configured
// thresholds; MSAC-style truncated quadratic score.
void score_model(const FeatureSet& fs, const ScoringModel& model, const RansacConfig& cfg,
                 std::vector<int>* inlier_arcs, std::vector<int>* inlier_regions,
                 double* msac);

// Hybrid RANSAC over the enabled solver ensemble. Deterministic for a fixed
// (features, config) pair. Throws NoModel when no candidate ever survives.
Hypothesis run_ransac(const FeatureSet& fs, const RansacConfig& cfg,
                      RansacReport* report = nullptr);

// Damped least-squares refinement of the best model over its inlier set with
// inlier re-collection between rounds. Never returns a lower-scoring
// hypothesis than the input.
Hypothesis local_optimize(const Hypothesis& best, const FeatureSet& fs,
                          const RansacConfig& cfg);

// Calibration (pixel units) of a solver candidate.
Calibration to_calibration(const SolverOutput& model, const FeatureSet& fs);

}  // namespace autocalib
