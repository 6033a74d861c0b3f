#include "autocalib/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace autocalib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> shuffled_keys(const std::map<int, std::vector<int>>& by_group,
                               size_t min_count, std::mt19937_64& rng) {
  std::vector<int> keys;
  for (const auto& [g, v] : by_group) {
    if (v.size() >= min_count) keys.push_back(g);
  }
  std::shuffle(keys.begin(), keys.end(), rng);
  return keys;
}

std::vector<int> draw_without_replacement(const std::vector<int>& pool, size_t n,
                                          std::mt19937_64& rng) {
  std::vector<int> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<int> out;
  for (size_t i = 0; i < n; ++i) out.push_back(pool[idx[i]]);
  return out;
}

}  // namespace

FeatureCensus FeatureCensus::build(const FeatureSet& fs) {
  FeatureCensus census;
  bool any_grouped = false;
  for (size_t i = 0; i < fs.arcs.size(); ++i) {
    if (fs.arcs[i].group) any_grouped = true;
  }
  for (size_t i = 0; i < fs.regions.size(); ++i) {
    if (fs.regions[i].group) any_grouped = true;
  }
  census.grouped = any_grouped;
  for (size_t i = 0; i < fs.arcs.size(); ++i) {
    const int g = census.grouped ? fs.arcs[i].group.value_or(-1) : 0;
    if (g >= 0 || !census.grouped) census.arcs_by_group[std::max(g, 0)].push_back(i);
  }
  for (size_t i = 0; i < fs.regions.size(); ++i) {
    const int g = census.grouped ? fs.regions[i].group.value_or(-1) : 0;
    if (g >= 0 || !census.grouped) census.regions_by_group[std::max(g, 0)].push_back(i);
  }
  return census;
}

namespace {

// Grouped sampling of the Table-style configurations. Each lambda returns an
// empty sample when infeasible.

MinimalSample make_sample(SolverId id, std::vector<SampleSlot> slots) {
  MinimalSample s;
  s.solver = id;
  s.slots = std::move(slots);
  return s;
}

SampleSlot arc_slot(SampleSlot::Kind kind, std::vector<int> idx) {
  SampleSlot s;
  s.kind = kind;
  s.arc_indices = std::move(idx);
  return s;
}

SampleSlot region_slot(SampleSlot::Kind kind, int idx) {
  SampleSlot s;
  s.kind = kind;
  s.region_index = idx;
  return s;
}

// Grouped feasibility probes.
struct GroupedSampler {
  const FeatureCensus& census;
  std::mt19937_64& rng;

  std::optional<MinimalSample> three_arc_pairs(SolverId id) {
    auto keys = shuffled_keys(census.arcs_by_group, 2, rng);
    if (keys.size() < 3) return std::nullopt;
    std::vector<SampleSlot> slots;
    for (int i = 0; i < 3; ++i) {
      slots.push_back(arc_slot(SampleSlot::Kind::kArcPair,
                               draw_without_replacement(census.arcs_by_group.at(keys[i]), 2, rng)));
    }
    return make_sample(id, std::move(slots));
  }

  std::optional<MinimalSample> pc_two_arc_pairs(SolverId id) {
    auto rkeys = shuffled_keys(census.regions_by_group, 1, rng);
    if (rkeys.empty()) return std::nullopt;
    for (int rg : rkeys) {
      auto akeys = shuffled_keys(census.arcs_by_group, 2, rng);
      std::erase(akeys, rg);
      if (akeys.size() < 2) continue;
      const auto& regions = census.regions_by_group.at(rg);
      std::vector<SampleSlot> slots;
      slots.push_back(region_slot(SampleSlot::Kind::kPcPair,
                                  regions[rng() % regions.size()]));
      for (int i = 0; i < 2; ++i) {
        slots.push_back(arc_slot(SampleSlot::Kind::kArcPair,
                                 draw_without_replacement(census.arcs_by_group.at(akeys[i]), 2, rng)));
      }
      return make_sample(id, std::move(slots));
    }
    return std::nullopt;
  }

  std::optional<MinimalSample> two_pcs_arc_pair(SolverId id) {
    auto rkeys = shuffled_keys(census.regions_by_group, 1, rng);
    if (rkeys.size() < 2) return std::nullopt;
    auto akeys = shuffled_keys(census.arcs_by_group, 2, rng);
    std::erase(akeys, rkeys[0]);
    std::erase(akeys, rkeys[1]);
    if (akeys.empty()) return std::nullopt;
    std::vector<SampleSlot> slots;
    for (int i = 0; i < 2; ++i) {
      const auto& regions = census.regions_by_group.at(rkeys[i]);
      slots.push_back(region_slot(SampleSlot::Kind::kPcPair, regions[rng() % regions.size()]));
    }
    slots.push_back(arc_slot(SampleSlot::Kind::kArcPair,
                             draw_without_replacement(census.arcs_by_group.at(akeys[0]), 2, rng)));
    return make_sample(id, std::move(slots));
  }

  std::optional<MinimalSample> pc_triple_two_arcs(SolverId id) {
    auto rkeys = shuffled_keys(census.regions_by_group, 1, rng);
    if (rkeys.empty()) return std::nullopt;
    for (int rg : rkeys) {
      auto akeys = shuffled_keys(census.arcs_by_group, 1, rng);
      std::erase(akeys, rg);
      if (akeys.size() < 2) continue;
      const auto& regions = census.regions_by_group.at(rg);
      std::vector<SampleSlot> slots;
      slots.push_back(region_slot(SampleSlot::Kind::kPcTriple, regions[rng() % regions.size()]));
      for (int i = 0; i < 2; ++i) {
        slots.push_back(arc_slot(SampleSlot::Kind::kArcSingle,
                                 draw_without_replacement(census.arcs_by_group.at(akeys[i]), 1, rng)));
      }
      return make_sample(id, std::move(slots));
    }
    return std::nullopt;
  }

  std::optional<MinimalSample> arc_triple_pair(SolverId id) {
    auto tkeys = shuffled_keys(census.arcs_by_group, 3, rng);
    if (tkeys.empty()) return std::nullopt;
    for (int tg : tkeys) {
      auto pkeys = shuffled_keys(census.arcs_by_group, 2, rng);
      std::erase(pkeys, tg);
      if (pkeys.empty()) continue;
      std::vector<SampleSlot> slots;
      slots.push_back(arc_slot(SampleSlot::Kind::kArcTriple,
                               draw_without_replacement(census.arcs_by_group.at(tg), 3, rng)));
      slots.push_back(arc_slot(SampleSlot::Kind::kArcPair,
                               draw_without_replacement(census.arcs_by_group.at(pkeys[0]), 2, rng)));
      return make_sample(id, std::move(slots));
    }
    return std::nullopt;
  }

  std::optional<MinimalSample> arc_triple_two_singles(SolverId id) {
    auto tkeys = shuffled_keys(census.arcs_by_group, 3, rng);
    if (tkeys.empty()) return std::nullopt;
    for (int tg : tkeys) {
      auto skeys = shuffled_keys(census.arcs_by_group, 1, rng);
      std::erase(skeys, tg);
      if (skeys.size() < 2) continue;
      std::vector<SampleSlot> slots;
      slots.push_back(arc_slot(SampleSlot::Kind::kArcTriple,
                               draw_without_replacement(census.arcs_by_group.at(tg), 3, rng)));
      for (int i = 0; i < 2; ++i) {
        slots.push_back(arc_slot(SampleSlot::Kind::kArcSingle,
                                 draw_without_replacement(census.arcs_by_group.at(skeys[i]), 1, rng)));
      }
      return make_sample(id, std::move(slots));
    }
    return std::nullopt;
  }

  std::optional<MinimalSample> three_pc_pairs(SolverId id) {
    auto rkeys = shuffled_keys(census.regions_by_group, 1, rng);
    if (rkeys.size() < 3) return std::nullopt;
    std::vector<SampleSlot> slots;
    for (int i = 0; i < 3; ++i) {
      const auto& regions = census.regions_by_group.at(rkeys[i]);
      slots.push_back(region_slot(SampleSlot::Kind::kPcPair, regions[rng() % regions.size()]));
    }
    return make_sample(id, std::move(slots));
  }
};

// Ungrouped fallback: draw distinct features uniformly and assign them to the
// required slot layout; solver-side degeneracy filters nonsense samples.
std::optional<MinimalSample> sample_ungrouped(const FeatureSet& fs, SolverId solver,
                                              std::mt19937_64& rng) {
  std::vector<int> arc_pool(fs.arcs.size());
  std::iota(arc_pool.begin(), arc_pool.end(), 0);
  std::vector<int> region_pool(fs.regions.size());
  std::iota(region_pool.begin(), region_pool.end(), 0);
  std::shuffle(arc_pool.begin(), arc_pool.end(), rng);
  std::shuffle(region_pool.begin(), region_pool.end(), rng);
  auto need = [&](size_t arcs, size_t regions) {
    return arc_pool.size() >= arcs && region_pool.size() >= regions;
  };
  size_t a = 0, r = 0;
  auto take_arcs = [&](SampleSlot::Kind kind, size_t n) {
    std::vector<int> idx(arc_pool.begin() + a, arc_pool.begin() + a + n);
    a += n;
    return arc_slot(kind, std::move(idx));
  };
  auto take_region = [&](SampleSlot::Kind kind) {
    return region_slot(kind, region_pool[r++]);
  };
  switch (solver) {
    case SolverId::k6Ca:
      if (!need(6, 0)) return std::nullopt;
      return make_sample(solver, {take_arcs(SampleSlot::Kind::kArcPair, 2),
                                  take_arcs(SampleSlot::Kind::kArcPair, 2),
                                  take_arcs(SampleSlot::Kind::kArcPair, 2)});
    case SolverId::k5CaStar:
      if (!need(5, 0)) return std::nullopt;
      return make_sample(solver, {take_arcs(SampleSlot::Kind::kArcTriple, 3),
                                  take_arcs(SampleSlot::Kind::kArcPair, 2)});
    case SolverId::k2Pc4Ca:
      if (!need(4, 1)) return std::nullopt;
      return make_sample(solver, {take_region(SampleSlot::Kind::kPcPair),
                                  take_arcs(SampleSlot::Kind::kArcPair, 2),
                                  take_arcs(SampleSlot::Kind::kArcPair, 2)});
    case SolverId::k4Pc2Ca:
      if (!need(2, 2)) return std::nullopt;
      return make_sample(solver, {take_region(SampleSlot::Kind::kPcPair),
                                  take_region(SampleSlot::Kind::kPcPair),
                                  take_arcs(SampleSlot::Kind::kArcPair, 2)});
    case SolverId::k6Pc:
      if (!need(0, 3)) return std::nullopt;
      return make_sample(solver, {take_region(SampleSlot::Kind::kPcPair),
                                  take_region(SampleSlot::Kind::kPcPair),
                                  take_region(SampleSlot::Kind::kPcPair)});
  }
  return std::nullopt;
}

}  // namespace

MinimalSample sample_minimal(const FeatureSet& fs, const FeatureCensus& census,
                             SolverId solver, std::mt19937_64& rng) {
  std::optional<MinimalSample> sample;
  if (!census.grouped) {
    sample = sample_ungrouped(fs, solver, rng);
  } else {
    GroupedSampler gs{census, rng};
    switch (solver) {
      case SolverId::k6Ca:
        sample = gs.three_arc_pairs(solver);
        break;
      case SolverId::k6Pc:
        sample = gs.three_pc_pairs(solver);
        break;
      case SolverId::k2Pc4Ca:
        sample = gs.pc_two_arc_pairs(solver);
        break;
      case SolverId::k4Pc2Ca: {
        // Two admissible shapes; pick uniformly among the feasible ones.
        const bool flip = rng() & 1;
        sample = flip ? gs.pc_triple_two_arcs(solver) : gs.two_pcs_arc_pair(solver);
        if (!sample) sample = flip ? gs.two_pcs_arc_pair(solver) : gs.pc_triple_two_arcs(solver);
        break;
      }
      case SolverId::k5CaStar: {
        const bool flip = rng() & 1;
        sample = flip ? gs.arc_triple_two_singles(solver) : gs.arc_triple_pair(solver);
        if (!sample) sample = flip ? gs.arc_triple_pair(solver) : gs.arc_triple_two_singles(solver);
        break;
      }
    }
  }
  if (!sample || !fill_sample_pencils(fs, &*sample)) {
    throw InsufficientFeatures(std::string("cannot sample configuration for ") +
                               solver_name(solver));
  }
  return *sample;
}

void score_model(const FeatureSet& fs, const ScoringModel& model, const RansacConfig& cfg,
                 std::vector<int>* inlier_arcs, std::vector<int>* inlier_regions,
                 double* msac) {
  const Normalizer nrm = fs.normalizer();
  const double tc2 = cfg.contour_threshold_px * cfg.contour_threshold_px;
  const double tp2 = cfg.point_threshold_px * cfg.point_threshold_px;
  inlier_arcs->clear();
  inlier_regions->clear();
  double acc = 0.0;
  for (size_t i = 0; i < fs.arcs.size(); ++i) {
    const double j = arc_model_consistency(fs.arcs[i], model, nrm);
    if (j <= tc2) inlier_arcs->push_back(static_cast<int>(i));
    acc += std::min(j, tc2);
  }
  for (size_t i = 0; i < fs.regions.size(); ++i) {
    const double j = region_model_consistency(fs.regions[i], model, nrm);
    if (j <= tp2) inlier_regions->push_back(static_cast<int>(i));
    acc += std::min(j, tp2);
  }
  *msac = acc;
}

Calibration to_calibration(const SolverOutput& model, const FeatureSet& fs) {
  Calibration calib;
  calib.width = fs.width;
  calib.height = fs.height;
  calib.lambda = model.lambda;
  const Normalizer nrm = fs.normalizer();
  if (model.f) calib.f = *model.f * nrm.s;  // normalized focal -> pixels
  calib.R = model.R;
  calib.vanishing_line = model.vanishing_line;
  return calib;
}

namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.inlier_count() != b.inlier_count()) return a.inlier_count() > b.inlier_count();
  if (a.msac_score != b.msac_score) return a.msac_score < b.msac_score;
  return a.iteration < b.iteration;
}

}  // namespace

Hypothesis run_ransac(const FeatureSet& fs, const RansacConfig& cfg, RansacReport* report) {
  if (fs.arcs.empty() && fs.regions.empty()) throw NoModel("empty feature set");
  const FeatureCensus census = FeatureCensus::build(fs);

  std::vector<SolverId> solvers = cfg.solvers;
  if (solvers.empty()) throw NoModel("empty solver ensemble");
  std::vector<double> weights = cfg.weights;
  if (weights.size() != solvers.size()) {
    weights.assign(solvers.size(), 1.0 / static_cast<double>(solvers.size()));
  }
  // Solvers the feature census cannot feed lose their weight mass to the
  // rest up front; grouped feasibility does not depend on the draw.
  {
    std::mt19937_64 probe_rng(cfg.seed ^ 0x5eedf00dull);
    double live_mass = 0.0;
    for (size_t s = 0; s < solvers.size(); ++s) {
      try {
        sample_minimal(fs, census, solvers[s], probe_rng);
      } catch (const InsufficientFeatures&) {
        weights[s] = 0.0;
      }
      live_mass += weights[s];
    }
    if (live_mass <= 0.0) throw NoModel("no enabled solver has enough features");
    for (double& w : weights) w /= live_mass;
  }

  RansacReport local_report;
  RansacReport* rep = report ? report : &local_report;
  for (SolverId s : solvers) rep->per_solver[solver_name(s)];

  std::optional<Hypothesis> best;
  const size_t n_features = fs.arcs.size() + fs.regions.size();
  int high_inlier_streak = 0;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::mt19937_64 rng = [&] {
      std::seed_seq seq{cfg.seed, static_cast<uint64_t>(iter)};
      return std::mt19937_64(seq);
    }();
    // Pick a solver by weight.
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    const SolverId solver = solvers[pick(rng)];
    SolverStats& stats = rep->per_solver[solver_name(solver)];

    MinimalSample sample;
    try {
      sample = sample_minimal(fs, census, solver, rng);
    } catch (const InsufficientFeatures&) {
      ++stats.infeasible;
      continue;
    }
    ++stats.invoked;
    SolveResult solved = dispatch(sample, cfg.manhattan_cross_tol);
    for (const SolverOutput& cand : solved.candidates) {
      if (reject_minimal_sample(fs, sample, cand,
                                {cfg.contour_threshold_px, cfg.point_threshold_px})) {
        continue;
      }
      ++stats.produced;
      Hypothesis hyp;
      hyp.model = cand;
      hyp.calibration = to_calibration(cand, fs);
      hyp.source = solver;
      hyp.iteration = iter;
      const ScoringModel scoring = ScoringModel::from_solver_output(cand, fs.normalizer());
      score_model(fs, scoring, cfg, &hyp.inlier_arcs, &hyp.inlier_regions, &hyp.msac_score);
      if (!best || better(hyp, *best)) {
        best = hyp;
        ++stats.best_hits;
        rep->best_trace.push_back({iter, hyp.inlier_count(), hyp.msac_score});
      }
    }
    rep->iterations_run = iter + 1;
    if (best && n_features > 0 &&
        best->inlier_count() > 0.9 * static_cast<double>(n_features)) {
      if (++high_inlier_streak >= 50) {
        rep->early_exit = true;
        break;
      }
    } else {
      high_inlier_streak = 0;
    }
  }
  if (!best) throw NoModel("no candidate survived minimal-sample rejection");
  return *best;
}

namespace {

// Residual vector of the current inlier set against a scoring model; order is
// fixed by the inlier index lists.
Eigen::VectorXd inlier_residuals(const FeatureSet& fs, const ScoringModel& model,
                                 const std::vector<int>& arcs, const std::vector<int>& regions,
                                 const RansacConfig& cfg) {
  const Normalizer nrm = fs.normalizer();
  Eigen::VectorXd r(arcs.size() + regions.size());
  int k = 0;
  for (int i : arcs) {
    const double j = arc_model_consistency(fs.arcs[i], model, nrm);
    r[k++] = std::min(std::sqrt(j), cfg.contour_threshold_px * 4.0);
  }
  for (int i : regions) {
    const double j = region_model_consistency(fs.regions[i], model, nrm);
    r[k++] = std::min(std::sqrt(j), cfg.point_threshold_px * 4.0);
  }
  return r;
}

struct ModelParam {
  ConfigMode mode;
  Normalizer nrm;
  // manhattan: lambda, f (normalized), R (body)
  double lambda = 0, f = 1;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  // coplanar: lambda, line angle/offset, VP positions along the line
  double phi = 0, rho = 0;
  Eigen::Vector3d vp_t = Eigen::Vector3d::Zero();

  static std::optional<ModelParam> from(const SolverOutput& m, const Normalizer& nrm) {
    ModelParam p;
    p.mode = m.mode;
    p.nrm = nrm;
    p.lambda = m.lambda;
    if (m.mode == ConfigMode::kManhattan) {
      if (!m.f || !m.R) return std::nullopt;
      p.f = *m.f;
      p.R = *m.R;
      return p;
    }
    if (!m.vanishing_line || m.vps.size() < 3) return std::nullopt;
    HomLine l = *m.vanishing_line;
    const double n = std::hypot(l.x(), l.y());
    if (n < 1e-9) return std::nullopt;
    l /= n;
    p.phi = std::atan2(l.y(), l.x());
    p.rho = l.z();
    const Eigen::Vector3d p0(-l.x() * l.z(), -l.y() * l.z(), 1.0);
    const Eigen::Vector3d d(-l.y(), l.x(), 0.0);
    for (int i = 0; i < 3; ++i) {
      const HomPoint& u = m.vps[i];
      if (std::abs(u.z()) < 1e-6 * u.norm()) return std::nullopt;  // near-ideal VP
      const Eigen::Vector3d uf = u / u.z();
      p.vp_t[i] = (uf - p0).head<2>().dot(d.head<2>());
    }
    return p;
  }

  Eigen::VectorXd pack() const {
    if (mode == ConfigMode::kManhattan) {
      Eigen::VectorXd x(5);
      x << lambda, f, 0, 0, 0;  // rotation handled as an increment
      return x;
    }
    Eigen::VectorXd x(6);
    x << lambda, phi, rho, vp_t[0], vp_t[1], vp_t[2];
    return x;
  }

  ScoringModel to_scoring(const Eigen::VectorXd& x) const {
    ScoringModel s;
    if (mode == ConfigMode::kManhattan) {
      const double lam = x[0];
      const double ff = x[1];
      const Eigen::Vector3d delta = x.tail<3>();
      const Eigen::Matrix3d rot =
          delta.norm() > 0 ? (R * Eigen::AngleAxisd(delta.norm(), delta.normalized())
                                      .toRotationMatrix())
                           : R;
      s.mode = ConfigMode::kManhattan;
      s.lambda_px = nrm.lambda_to_px(lam);
      for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d u = Eigen::Vector3d(ff, ff, 1.0).asDiagonal() * rot.col(i);
        s.vps_px.push_back(HomPoint(u.x() * nrm.s, u.y() * nrm.s, u.z()).normalized());
      }
      return s;
    }
    s.mode = ConfigMode::kCoplanar;
    s.lambda_px = nrm.lambda_to_px(x[0]);
    const HomLine l(std::cos(x[1]), std::sin(x[1]), x[2]);
    const Eigen::Vector3d p0(-l.x() * l.z(), -l.y() * l.z(), 1.0);
    const Eigen::Vector3d d(-l.y(), l.x(), 0.0);
    for (int i = 0; i < 3; ++i) {
      const HomPoint u = p0 + x[3 + i] * d;
      s.vps_px.push_back(HomPoint(u.x() * nrm.s, u.y() * nrm.s, u.z()).normalized());
    }
    s.vanishing_line_px = HomLine(l.x() / nrm.s, l.y() / nrm.s, l.z()).normalized();
    return s;
  }

  SolverOutput to_output(const Eigen::VectorXd& x, const SolverOutput& base) const {
    SolverOutput out = base;
    out.lambda = x[0];
    if (mode == ConfigMode::kManhattan) {
      out.f = x[1];
      out.f_candidates = {x[1]};
      const Eigen::Vector3d delta = x.tail<3>();
      const Eigen::Matrix3d rot =
          delta.norm() > 0 ? (R * Eigen::AngleAxisd(delta.norm(), delta.normalized())
                                      .toRotationMatrix())
                           : R;
      out.R = rot;
      out.vps.clear();
      for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d u = Eigen::Vector3d(x[1], x[1], 1.0).asDiagonal() * rot.col(i);
        out.vps.push_back(u.normalized());
      }
    } else {
      const HomLine l(std::cos(x[1]), std::sin(x[1]), x[2]);
      out.vanishing_line = l.normalized();
      const Eigen::Vector3d p0(-l.x() * l.z(), -l.y() * l.z(), 1.0);
      const Eigen::Vector3d d(-l.y(), l.x(), 0.0);
      out.vps.clear();
      for (int i = 0; i < 3; ++i) out.vps.push_back((p0 + x[3 + i] * d).normalized());
    }
    return out;
  }
};

}  // namespace

Hypothesis local_optimize(const Hypothesis& best, const FeatureSet& fs,
                          const RansacConfig& cfg) {
  if (best.inlier_count() <= 1) return best;  // underdetermined
  auto param = ModelParam::from(best.model, fs.normalizer());
  if (!param) return best;

  Hypothesis incumbent = best;
  std::vector<int> arcs = best.inlier_arcs;
  std::vector<int> regions = best.inlier_regions;

  for (int round = 0; round < 10; ++round) {
    if (arcs.size() + regions.size() <= 1) break;
    Eigen::VectorXd x = param->pack();
    if (param->mode == ConfigMode::kManhattan) {
      x[0] = incumbent.model.lambda;
      x[1] = incumbent.model.f.value_or(param->f);
    } else {
      auto p2 = ModelParam::from(incumbent.model, fs.normalizer());
      if (!p2) break;
      *param = *p2;
      x = param->pack();
    }

    auto residual_at = [&](const Eigen::VectorXd& v) {
      return inlier_residuals(fs, param->to_scoring(v), arcs, regions, cfg);
    };
    Eigen::VectorXd r = residual_at(x);
    double cost = r.squaredNorm();
    double mu = 1e-4;
    for (int it = 0; it < 25; ++it) {
      // Numeric Jacobian.
      Eigen::MatrixXd jac(r.size(), x.size());
      for (int k = 0; k < x.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
        Eigen::VectorXd xp = x;
        xp[k] += h;
        jac.col(k) = (residual_at(xp) - r) / h;
      }
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd jtr = jac.transpose() * r;
      bool stepped = false;
      for (int attempt = 0; attempt < 6; ++attempt) {
        Eigen::MatrixXd lhs = jtj;
        lhs.diagonal().array() += mu;
        const Eigen::VectorXd dx = lhs.ldlt().solve(-jtr);
        Eigen::VectorXd x_try = x + dx;
        x_try[0] = std::clamp(x_try[0], kLambdaMin + 1e-4, kLambdaMax - 1e-4);
        if (param->mode == ConfigMode::kManhattan) {
          x_try[1] = std::max(x_try[1], 1e-3);
        }
        const Eigen::VectorXd r_try = residual_at(x_try);
        const double cost_try = r_try.squaredNorm();
        if (cost_try < cost) {
          x = x_try;
          r = r_try;
          cost = cost_try;
          mu = std::max(mu * 0.3, 1e-10);
          stepped = true;
          // Fold the rotation increment into the base rotation.
          if (param->mode == ConfigMode::kManhattan && x.tail<3>().norm() > 0) {
            const Eigen::Vector3d delta = x.tail<3>();
            param->R = param->R *
                       Eigen::AngleAxisd(delta.norm(), delta.normalized()).toRotationMatrix();
            x.tail<3>().setZero();
            r = residual_at(x);
            cost = r.squaredNorm();
          }
          break;
        }
        mu *= 10.0;
      }
      if (!stepped) break;
    }

    // Re-collect inliers and keep the refit only if the consensus improves.
    Hypothesis refined = incumbent;
    refined.model = param->to_output(x, incumbent.model);
    refined.calibration = to_calibration(refined.model, fs);
    const ScoringModel scoring = ScoringModel::from_solver_output(refined.model, fs.normalizer());
    score_model(fs, scoring, cfg, &refined.inlier_arcs, &refined.inlier_regions,
                &refined.msac_score);
    if (!better(refined, incumbent)) break;
    incumbent = refined;
    arcs = incumbent.inlier_arcs;
    regions = incumbent.inlier_regions;
    if (param->mode == ConfigMode::kManhattan) {
      param->lambda = incumbent.model.lambda;
      param->f = incumbent.model.f.value_or(param->f);
    }
  }
  return incumbent;
}

RansacConfig load_ransac_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  RansacConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\n");
      const auto e = s.find_last_not_of(" \t\r\n");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_entry(&cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_config_entry(RansacConfig* cfg, const std::string& key, const std::string& value) {
  auto parse_solvers = [](const std::string& v) {
    std::vector<SolverId> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b == std::string::npos) continue;
      const auto id = solver_from_name(item.substr(b, e - b + 1));
      if (!id) throw ParseError("unknown solver name: " + item);
      out.push_back(*id);
    }
    return out;
  };
  try {
    if (key == "iterations") {
      cfg->iterations = std::stoi(value);
      if (cfg->iterations <= 0) throw ParseError("iterations must be positive");
    } else if (key == "contour_threshold_px") {
      cfg->contour_threshold_px = std::stod(value);
      if (cfg->contour_threshold_px <= 0) throw ParseError("threshold must be positive");
    } else if (key == "point_threshold_px") {
      cfg->point_threshold_px = std::stod(value);
      if (cfg->point_threshold_px <= 0) throw ParseError("threshold must be positive");
    } else if (key == "solvers") {
      cfg->solvers = parse_solvers(value);
    } else if (key == "weights") {
      cfg->weights.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) cfg->weights.push_back(std::stod(item));
    } else if (key == "seed") {
      cfg->seed = std::stoull(value);
    } else if (key == "local_optimization") {
      cfg->local_optimization = value == "1" || value == "true" || value == "on";
    } else if (key == "manhattan_cross_tol") {
      cfg->manhattan_cross_tol = std::stod(value);
    } else {
      throw ParseError("unknown config key: " + key);
    }
  } catch (const std::invalid_argument&) {
    throw ParseError("bad value for config key " + key + ": " + value);
  } catch (const std::out_of_range&) {
    throw ParseError("bad value for config key " + key + ": " + value);
  }
  if (!cfg->weights.empty() && cfg->weights.size() == cfg->solvers.size()) {
    double sum = 0;
    for (double w : cfg->weights) sum += w;
    if (sum <= 0) throw ParseError("weights must sum to a positive value");
    for (double& w : cfg->weights) w /= sum;
  }
}

}  // namespace autocalib
