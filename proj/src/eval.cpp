#include "autocalib/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "autocalib/parallel.hpp"

namespace autocalib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_of(std::vector<double> v) {
  if (v.empty()) return kInf;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return kInf;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

uint64_t path_scene_seed(uint64_t seed, size_t path_idx, int scene) {
  return seed * 0x9e3779b97f4a7c15ull + path_idx * 0x100000001b3ull +
         static_cast<uint64_t>(scene) * 0x9ddfea08eb382d69ull + 1;
}

}  // namespace

std::vector<Eigen::Vector2d> WarpGrid::points() const {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      pts.emplace_back((i + 0.5) * width / n, (j + 0.5) * height / n);
    }
  }
  return pts;
}

WarpStats warp_error(const Calibration& gt, const Calibration& est, const WarpGrid& grid) {
  if (gt.width != est.width || gt.height != est.height) {
    throw std::invalid_argument("warp_error: calibrations disagree on image size");
  }
  const double lam_gt = gt.lambda_px();
  const double lam_est = est.lambda_px();
  const double focal_ratio = est.f / gt.f;
  const double cx = 0.5 * gt.width, cy = 0.5 * gt.height;

  WarpStats stats;
  double sum = 0, sum2 = 0;
  for (const auto& p : grid.points()) {
    const Eigen::Vector2d centered(p.x() - cx, p.y() - cy);
    const HomPoint u = undistort(centered, lam_gt);
    if (std::abs(u.z()) < 1e-12) {
      ++stats.dropped;
      continue;
    }
    const Eigen::Vector2d scaled = focal_ratio * u.hnormalized();
    const auto back = try_distort(scaled, lam_est);
    if (!back) {
      ++stats.dropped;
      continue;
    }
    const double d = (*back - centered).norm();
    stats.deltas.push_back(d);
    sum += d;
    sum2 += d * d;
  }
  const int total = grid.n * grid.n;
  if (stats.dropped > total / 10) {
    throw OutOfRange("warp_error: estimate not distortable over most of the grid");
  }
  const double cnt = static_cast<double>(stats.deltas.size());
  stats.score = cnt > 0 ? sum / cnt : 0.0;
  stats.rms = cnt > 0 ? std::sqrt(sum2 / cnt) : 0.0;
  return stats;
}

double warp_score(const Calibration& gt, const Calibration& est, int grid_n) {
  if (!(est.f > 0) || !std::isfinite(est.lambda)) return kInf;
  try {
    WarpGrid grid{grid_n, gt.width, gt.height};
    return warp_error(gt, est, grid).score;
  } catch (const OutOfRange&) {
    return kInf;
  }
}

std::pair<double, double> relative_errors(const Calibration& gt, const Calibration& est) {
  const double lam_err = 100.0 * std::abs(est.lambda_px() - gt.lambda_px()) /
                         std::abs(gt.lambda_px());
  const double f_err = 100.0 * std::abs(est.f - gt.f) / std::abs(gt.f);
  return {lam_err, f_err};
}

const std::vector<BenchPath>& all_bench_paths() {
  static const std::vector<BenchPath> paths = {
      {SolverId::k4Pc2Ca, ConfigMode::kCoplanar, "4PC+2CA-coplanar"},
      {SolverId::k4Pc2Ca, ConfigMode::kManhattan, "4PC+2CA-manhattan"},
      {SolverId::k2Pc4Ca, ConfigMode::kCoplanar, "2PC+4CA-coplanar"},
      {SolverId::k2Pc4Ca, ConfigMode::kManhattan, "2PC+4CA-manhattan"},
      {SolverId::k5CaStar, ConfigMode::kCoplanar, "5CA*-coplanar"},
      {SolverId::k5CaStar, ConfigMode::kManhattan, "5CA*-manhattan"},
      {SolverId::k6Ca, ConfigMode::kCoplanar, "6CA-coplanar"},
      {SolverId::k6Ca, ConfigMode::kManhattan, "6CA-manhattan"},
      {SolverId::k6Pc, ConfigMode::kCoplanar, "6PC-coplanar"},
  };
  return paths;
}

SceneSpec scene_spec_for_path(const BenchPath& path, uint64_t seed) {
  SceneSpec spec = path.mode == ConfigMode::kCoplanar
                       ? coplanar_scene_spec(/*arcs_per_group=*/3, /*regions_per_group=*/2, seed)
                       : manhattan_scene_spec(3, 2, seed);
  return spec;
}

namespace {

std::vector<int> group_arcs(const FeatureSet& fs, int g) {
  std::vector<int> out;
  for (size_t i = 0; i < fs.arcs.size(); ++i) {
    if (fs.arcs[i].group == g) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> group_regions(const FeatureSet& fs, int g) {
  std::vector<int> out;
  for (size_t i = 0; i < fs.regions.size(); ++i) {
    if (fs.regions[i].group == g) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> pick(std::vector<int> pool, size_t n, std::mt19937_64& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(n);
  return pool;
}

SampleSlot arcs_slot(SampleSlot::Kind kind, std::vector<int> idx) {
  SampleSlot s;
  s.kind = kind;
  s.arc_indices = std::move(idx);
  return s;
}

SampleSlot reg_slot(SampleSlot::Kind kind, int idx) {
  SampleSlot s;
  s.kind = kind;
  s.region_index = idx;
  return s;
}

}  // namespace

MinimalSample sample_for_path(const BenchPath& path, const FeatureSet& fs,
                              std::mt19937_64& rng) {
  MinimalSample sample;
  sample.solver = path.id;
  const bool manhattan = path.mode == ConfigMode::kManhattan;
  using K = SampleSlot::Kind;
  switch (path.id) {
    case SolverId::k6Ca:
      for (int g = 0; g < 3; ++g) {
        sample.slots.push_back(arcs_slot(K::kArcPair, pick(group_arcs(fs, g), 2, rng)));
      }
      break;
    case SolverId::k6Pc:
      for (int g = 0; g < 3; ++g) {
        sample.slots.push_back(reg_slot(K::kPcPair, pick(group_regions(fs, g), 1, rng)[0]));
      }
      break;
    case SolverId::k2Pc4Ca:
      sample.slots.push_back(reg_slot(K::kPcPair, pick(group_regions(fs, 0), 1, rng)[0]));
      sample.slots.push_back(arcs_slot(K::kArcPair, pick(group_arcs(fs, 1), 2, rng)));
      sample.slots.push_back(arcs_slot(K::kArcPair, pick(group_arcs(fs, 2), 2, rng)));
      break;
    case SolverId::k4Pc2Ca:
      if (manhattan) {
        sample.slots.push_back(reg_slot(K::kPcTriple, pick(group_regions(fs, 0), 1, rng)[0]));
        sample.slots.push_back(arcs_slot(K::kArcSingle, pick(group_arcs(fs, 1), 1, rng)));
        sample.slots.push_back(arcs_slot(K::kArcSingle, pick(group_arcs(fs, 2), 1, rng)));
      } else {
        sample.slots.push_back(reg_slot(K::kPcPair, pick(group_regions(fs, 0), 1, rng)[0]));
        sample.slots.push_back(reg_slot(K::kPcPair, pick(group_regions(fs, 1), 1, rng)[0]));
        sample.slots.push_back(arcs_slot(K::kArcPair, pick(group_arcs(fs, 2), 2, rng)));
      }
      break;
    case SolverId::k5CaStar:
      if (manhattan) {
        sample.slots.push_back(arcs_slot(K::kArcTriple, pick(group_arcs(fs, 0), 3, rng)));
        sample.slots.push_back(arcs_slot(K::kArcSingle, pick(group_arcs(fs, 1), 1, rng)));
        sample.slots.push_back(arcs_slot(K::kArcSingle, pick(group_arcs(fs, 2), 1, rng)));
      } else {
        sample.slots.push_back(arcs_slot(K::kArcTriple, pick(group_arcs(fs, 0), 3, rng)));
        sample.slots.push_back(arcs_slot(K::kArcPair, pick(group_arcs(fs, 1), 2, rng)));
      }
      break;
  }
  if (!fill_sample_pencils(fs, &sample)) {
    throw InsufficientFeatures("bench sample could not build its pencils");
  }
  return sample;
}

PathSolveOutcome evaluate_path_solve(const BenchPath& path, const SyntheticScene& scene,
                                     const SolveResult& solved, int grid_n) {
  PathSolveOutcome out;
  const Normalizer nrm = scene.features.normalizer();
  for (const SolverOutput& cand : solved.candidates) {
    if (cand.mode != path.mode) continue;
    std::vector<double> fs = cand.f_candidates;
    if (fs.empty() && cand.f) fs.push_back(*cand.f);
    for (double f_norm : fs) {
      Calibration est;
      est.width = scene.gt.width;
      est.height = scene.gt.height;
      est.lambda = cand.lambda;
      est.f = f_norm * nrm.s;
      const double w = warp_score(scene.gt, est, grid_n);
      if (w < out.warp) {
        out.warp = w;
        out.solved = true;
        auto [le, fe] = relative_errors(scene.gt, est);
        out.lambda_rel_err = le;
        out.f_rel_err = fe;
      }
    }
  }
  return out;
}

StabilityReport run_stability_bench(int n_scenes, const std::vector<BenchPath>& paths,
                                    uint64_t seed) {
  StabilityReport report;
  report.rows.resize(paths.size() * n_scenes);
  std::vector<int> jobs(paths.size() * n_scenes);
  parallel_for(static_cast<int>(jobs.size()), [&](int j) {
    const size_t p = j / n_scenes;
    const int scene_idx = j % n_scenes;
    const BenchPath& path = paths[p];
    StabilityRow row;
    row.solver = path.name;
    row.scene = scene_idx;
    try {
      const uint64_t s = path_scene_seed(seed, p, scene_idx);
      const SyntheticScene scene = generate(scene_spec_for_path(path, s));
      auto rng = make_rng(s, 5);
      const MinimalSample sample = sample_for_path(path, scene.features, rng);
      const PathSolveOutcome outcome = evaluate_path_solve(path, scene, dispatch(sample));
      row.solved = outcome.solved && std::isfinite(outcome.warp);
      if (row.solved) row.log10_warp = std::log10(std::max(outcome.warp, 1e-12));
    } catch (const std::exception&) {
      row.solved = false;
    }
    report.rows[j] = std::move(row);
  });

  std::ostringstream csv;
  csv << "solver,scene,metric,value\n";
  for (const auto& row : report.rows) {
    if (row.solved) {
      csv << row.solver << "," << row.scene << ",log10_warp," << row.log10_warp << "\n";
    } else {
      csv << row.solver << "," << row.scene << ",fail,1\n";
    }
  }
  report.csv = csv.str();

  nlohmann::json summary;
  for (const auto& path : paths) {
    std::vector<double> vals;
    int failures = 0;
    for (const auto& row : report.rows) {
      if (row.solver != path.name) continue;
      if (row.solved) {
        vals.push_back(row.log10_warp);
      } else {
        ++failures;
      }
    }
    nlohmann::json cell;
    cell["n"] = n_scenes;
    cell["failures"] = failures;
    if (!vals.empty()) {
      cell["q10"] = quantile_of(vals, 0.10);
      cell["median"] = quantile_of(vals, 0.50);
      cell["q90"] = quantile_of(vals, 0.90);
    }
    summary[path.name] = cell;
  }
  report.summary_json = summary.dump(2) + "\n";
  return report;
}

SensitivityReport run_sensitivity_bench(const std::vector<double>& sigmas, int n_scenes,
                                        int iters, const std::vector<BenchPath>& paths,
                                        uint64_t seed) {
  for (double s : sigmas) {
    if (s < 0) throw std::invalid_argument("noise level must be non-negative");
  }
  SensitivityReport report;
  struct Job {
    size_t path_idx;
    size_t sigma_idx;
    int scene;
  };
  std::vector<Job> jobs;
  for (size_t p = 0; p < paths.size(); ++p) {
    for (size_t s = 0; s < sigmas.size(); ++s) {
      for (int i = 0; i < n_scenes; ++i) jobs.push_back({p, s, i});
    }
  }
  std::vector<double> warp(jobs.size(), kInf);
  parallel_for(static_cast<int>(jobs.size()), [&](int j) {
    const Job& job = jobs[j];
    const BenchPath& path = paths[job.path_idx];
    try {
      const uint64_t s = path_scene_seed(seed, job.path_idx, job.scene);
      SceneSpec spec = scene_spec_for_path(path, s);
      const SyntheticScene clean = generate(spec);
      auto noise_rng = make_rng(s, 100 + job.sigma_idx);
      SyntheticScene scene = clean;
      if (sigmas[job.sigma_idx] > 0) {
        scene.features = add_noise(clean.features, sigmas[job.sigma_idx], noise_rng);
      }
      auto rng = make_rng(s, 200 + job.sigma_idx);
      double best = kInf;
      for (int it = 0; it < iters; ++it) {
        try {
          const MinimalSample sample = sample_for_path(path, scene.features, rng);
          const PathSolveOutcome outcome = evaluate_path_solve(path, scene, dispatch(sample));
          best = std::min(best, outcome.warp);
        } catch (const std::exception&) {
        }
      }
      warp[j] = best;
    } catch (const std::exception&) {
      warp[j] = kInf;
    }
  });

  std::ostringstream csv;
  csv << "solver,scene,sigma,metric,value\n";
  for (size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    if (std::isfinite(warp[j])) {
      csv << paths[job.path_idx].name << "," << job.scene << "," << sigmas[job.sigma_idx]
          << ",warp," << warp[j] << "\n";
    } else {
      csv << paths[job.path_idx].name << "," << job.scene << "," << sigmas[job.sigma_idx]
          << ",fail,1\n";
    }
  }
  report.csv = csv.str();

  nlohmann::json summary;
  for (size_t p = 0; p < paths.size(); ++p) {
    for (size_t s = 0; s < sigmas.size(); ++s) {
      SensitivityCell cell;
      cell.solver = paths[p].name;
      cell.sigma = sigmas[s];
      for (size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].path_idx != p || jobs[j].sigma_idx != s) continue;
        cell.warps.push_back(warp[j]);
        if (!std::isfinite(warp[j])) ++cell.failures;
      }
      cell.median_warp = median_of(cell.warps);
      nlohmann::json jc;
      jc["sigma"] = cell.sigma;
      auto finite_or_inf = [](double v) {
        return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf");
      };
      jc["median_warp"] = finite_or_inf(cell.median_warp);
      jc["q25"] = finite_or_inf(quantile_of(cell.warps, 0.25));
      jc["q75"] = finite_or_inf(quantile_of(cell.warps, 0.75));
      jc["failures"] = cell.failures;
      summary[cell.solver].push_back(jc);
      report.cells.push_back(std::move(cell));
    }
  }
  report.summary_json = summary.dump(2) + "\n";
  return report;
}

EnsembleComparison run_mixed_corpus_bench(int n_scenes, uint64_t seed, int iterations) {
  struct Config {
    std::string name;
    std::vector<SolverId> solvers;
  };
  const std::vector<Config> configs = {
      {"6CA+2PC+4CA", {SolverId::k6Ca, SolverId::k2Pc4Ca}},
      {"6CA", {SolverId::k6Ca}},
      {"2PC+4CA", {SolverId::k2Pc4Ca}},
  };
  std::vector<std::vector<double>> warps(configs.size(), std::vector<double>(n_scenes, kInf));

  parallel_for(n_scenes, [&](int i) {
    const uint64_t s = path_scene_seed(seed, 31, i);
    const bool line_rich = i % 2 == 0;
    SceneSpec spec = manhattan_scene_spec(line_rich ? 4 : 2, line_rich ? 2 : 3, s);
    if (!line_rich) {
      spec.groups[2].n_arcs = 0;  // only two arc directions: arc-only solving is starved
    }
    // Detector-level noise; the consensus thresholds assume sub-pixel
    // contours.
    spec.noise_sigma_px = 0.5;
    SyntheticScene scene;
    try {
      scene = generate(spec);
    } catch (const std::exception&) {
      return;
    }
    for (size_t c = 0; c < configs.size(); ++c) {
      RansacConfig cfg;
      cfg.solvers = configs[c].solvers;
      cfg.iterations = iterations;
      cfg.seed = s + c;
      try {
        RansacReport rep;
        Hypothesis best = run_ransac(scene.features, cfg, &rep);
        if (cfg.local_optimization) best = local_optimize(best, scene.features, cfg);
        warps[c][i] = warp_score(scene.gt, best.calibration);
      } catch (const NoModel&) {
        warps[c][i] = kInf;
      }
    }
  });

  EnsembleComparison out;
  std::ostringstream csv;
  csv << "config,scene,metric,value\n";
  for (size_t c = 0; c < configs.size(); ++c) {
    for (int i = 0; i < n_scenes; ++i) {
      if (std::isfinite(warps[c][i])) {
        csv << configs[c].name << "," << i << ",warp," << warps[c][i] << "\n";
      } else {
        csv << configs[c].name << "," << i << ",fail,1\n";
      }
    }
    const double med = median_of(warps[c]);
    if (c == 0) {
      out.median_ensemble = med;
    } else {
      out.median_individual.push_back({configs[c].name, med});
    }
  }
  out.csv = csv.str();
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
}

}  // namespace autocalib
