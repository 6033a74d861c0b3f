#include "autocalib/synth.hpp"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "autocalib/consistency.hpp"
#include "autocalib/eval.hpp"
#include "autocalib/solvers.hpp"

namespace autocalib {
namespace {

TEST(Generate, UndistortedSceneHasStraightContours) {
  SceneSpec spec = manhattan_scene_spec(3, 0, 7);
  spec.lambda_px = 0.0;
  spec.f_px = 1000.0;
  spec.R = Eigen::Matrix3d::Identity();
  spec.t = Eigen::Vector3d(0, 0, 6);
  const SyntheticScene scene = generate(spec);
  ASSERT_EQ(scene.features.arcs.size(), 9u);
  for (const auto& arc : scene.features.arcs) {
    EXPECT_TRUE(arc.circle.is_line());
    EXPECT_LT(arc.fit_rms, 1e-6);
  }
}

TEST(Generate, CountsAndGroupsAndBounds) {
  const SceneSpec spec = manhattan_scene_spec(4, 2, 11);
  const SyntheticScene scene = generate(spec);
  EXPECT_EQ(scene.features.arcs.size(), 12u);
  EXPECT_EQ(scene.features.regions.size(), 6u);
  for (const auto& arc : scene.features.arcs) {
    ASSERT_TRUE(arc.group.has_value());
    for (const auto& p : arc.points) {
      EXPECT_GE(p.x(), 0);
      EXPECT_LE(p.x(), spec.width);
      EXPECT_GE(p.y(), 0);
      EXPECT_LE(p.y(), spec.height);
    }
  }
}

TEST(Generate, GroundTruthScoresAllInliersNoiseless) {
  // Camera fixed at the published AIT-style calibration.
  SceneSpec spec = manhattan_scene_spec(3, 2, 13);
  spec.f_px = 1126.3;
  spec.lambda_px = -2.4951e-7;
  spec.width = 3000;
  spec.height = 2000;
  const SyntheticScene scene = generate(spec);

  ScoringModel model;
  model.lambda_px = spec.lambda_px;
  model.mode = ConfigMode::kManhattan;
  for (const auto& d : scene.group_dirs) {
    const Eigen::Vector3d u = Eigen::Vector3d(spec.f_px, spec.f_px, 1.0).asDiagonal() *
                              (spec.R * d);
    model.vps_px.push_back(u.normalized());
  }
  const Normalizer nrm = scene.features.normalizer();
  RansacConfig cfg;
  std::vector<int> inlier_arcs, inlier_regions;
  double msac = 0;
  score_model(scene.features, model, cfg, &inlier_arcs, &inlier_regions, &msac);
  EXPECT_EQ(inlier_arcs.size(), scene.features.arcs.size());
  EXPECT_EQ(inlier_regions.size(), scene.features.regions.size());

  // Zero residual at the ground truth.
  for (const auto& arc : scene.features.arcs) {
    EXPECT_LT(arc_model_consistency(arc, model, nrm), 1e-10);
  }
}

TEST(Generate, GroupVpsSatisfyOrthogonalityExactly) {
  const SceneSpec spec = manhattan_scene_spec(2, 0, 17);
  const SyntheticScene scene = generate(spec);
  const double f = spec.f_px;
  std::vector<HomPoint> vps;
  for (const auto& d : scene.group_dirs) {
    vps.push_back(Eigen::Vector3d(f, f, 1.0).asDiagonal() * (spec.R * d));
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      EXPECT_LT(orthogonality_residual(vps[i], vps[j], f), 1e-12);
    }
  }
}

TEST(Generate, DeterministicGivenSeed) {
  const SceneSpec spec = manhattan_scene_spec(3, 1, 23);
  const SyntheticScene a = generate(spec);
  const SyntheticScene b = generate(spec);
  ASSERT_EQ(a.features.arcs.size(), b.features.arcs.size());
  for (size_t i = 0; i < a.features.arcs.size(); ++i) {
    for (size_t k = 0; k < a.features.arcs[i].points.size(); ++k) {
      EXPECT_EQ(a.features.arcs[i].points[k], b.features.arcs[i].points[k]);
    }
  }
}

TEST(AddNoise, ZeroSigmaIsIdentity) {
  const SceneSpec spec = manhattan_scene_spec(2, 1, 29);
  const SyntheticScene scene = generate(spec);
  auto rng = make_rng(1, 2);
  const FeatureSet noisy = add_noise(scene.features, 0.0, rng);
  ASSERT_EQ(noisy.arcs.size(), scene.features.arcs.size());
  for (size_t i = 0; i < noisy.arcs.size(); ++i) {
    EXPECT_EQ(noisy.arcs[i].points[0], scene.features.arcs[i].points[0]);
  }
}

TEST(AddNoise, ReproducibleForFixedSeed) {
  const SceneSpec spec = manhattan_scene_spec(2, 1, 31);
  const SyntheticScene scene = generate(spec);
  auto rng1 = make_rng(5, 0);
  auto rng2 = make_rng(5, 0);
  const FeatureSet a = add_noise(scene.features, 1.0, rng1);
  const FeatureSet b = add_noise(scene.features, 1.0, rng2);
  for (size_t i = 0; i < a.arcs.size(); ++i) {
    for (size_t k = 0; k < a.arcs[i].points.size(); ++k) {
      EXPECT_EQ(a.arcs[i].points[k], b.arcs[i].points[k]);
    }
  }
}

TEST(AddNoise, EmpiricalCovarianceMatchesSigma) {
  // Pool displacement samples over many noisy copies of one scene.
  SceneSpec spec = manhattan_scene_spec(6, 0, 37);
  spec.arc_points = 60;
  const SyntheticScene scene = generate(spec);
  const double sigma = 1.5;
  auto rng = make_rng(41, 0);
  std::map<int, const ContourArc*> clean;
  for (const auto& arc : scene.features.arcs) clean[arc.id] = &arc;
  double sxx = 0, syy = 0, sxy = 0;
  size_t n = 0;
  for (int rep = 0; rep < 100 && n < 100000; ++rep) {
    const FeatureSet noisy = add_noise(scene.features, sigma, rng);
    for (const auto& arc : noisy.arcs) {
      const ContourArc* base = clean.at(arc.id);
      for (size_t k = 0; k < arc.points.size(); ++k) {
        const Eigen::Vector2d d = arc.points[k] - base->points[k];
        sxx += d.x() * d.x();
        syy += d.y() * d.y();
        sxy += d.x() * d.y();
        ++n;
      }
    }
  }
  sxx /= n;
  syy /= n;
  sxy /= n;
  EXPECT_NEAR(sxx, sigma * sigma, 0.05 * sigma * sigma);
  EXPECT_NEAR(syy, sigma * sigma, 0.05 * sigma * sigma);
  EXPECT_NEAR(sxy, 0.0, 0.05 * sigma * sigma);
}

TEST(AddNoise, PointRmsTracksSigma) {
  SceneSpec spec = manhattan_scene_spec(4, 0, 43);
  spec.arc_points = 40;
  const SyntheticScene scene = generate(spec);
  const double sigma = 2.0;
  auto rng = make_rng(47, 0);
  std::map<int, const ContourArc*> clean;
  for (const auto& arc : scene.features.arcs) clean[arc.id] = &arc;
  double acc = 0;
  size_t n = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const FeatureSet noisy = add_noise(scene.features, sigma, rng);
    for (const auto& arc : noisy.arcs) {
      const ContourArc* base = clean.at(arc.id);
      for (size_t k = 0; k < arc.points.size(); ++k) {
        acc += (arc.points[k] - base->points[k]).squaredNorm();
        ++n;
      }
    }
  }
  // Mean squared 2-D displacement is 2 sigma^2.
  EXPECT_NEAR(std::sqrt(acc / n / 2.0), sigma, 0.1 * sigma);
}

TEST(AddOutliers, ReplacesRequestedFraction) {
  const SceneSpec spec = manhattan_scene_spec(10, 3, 53);
  const SyntheticScene scene = generate(spec);
  auto rng = make_rng(59, 0);
  const FeatureSet out = add_outliers(scene.features, 0.5, 3, rng);
  int changed = 0;
  for (size_t i = 0; i < out.arcs.size() && i < scene.features.arcs.size(); ++i) {
    if ((out.arcs[i].points[0] - scene.features.arcs[i].points[0]).norm() > 1e-9) ++changed;
  }
  EXPECT_GT(changed, 5);
  EXPECT_LT(changed, 25);
}

TEST(SceneSpecIo, KeyValueRoundTrip) {
  SceneSpec spec = manhattan_scene_spec(4, 2, 123);
  spec.noise_sigma_px = 0.7;
  spec.outlier_fraction = 0.25;
  const SceneSpec back = parse_scene_spec(serialize_scene_spec(spec));
  EXPECT_EQ(back.f_px, spec.f_px);
  EXPECT_EQ(back.lambda_px, spec.lambda_px);
  EXPECT_EQ(back.width, spec.width);
  EXPECT_EQ(back.seed, spec.seed);
  EXPECT_EQ(back.noise_sigma_px, spec.noise_sigma_px);
  EXPECT_LT((back.R - spec.R).norm(), 1e-15);
  ASSERT_EQ(back.groups.size(), spec.groups.size());
  for (size_t g = 0; g < back.groups.size(); ++g) {
    EXPECT_LT((back.groups[g].dir - spec.groups[g].dir).norm(), 1e-15);
    EXPECT_EQ(back.groups[g].n_arcs, spec.groups[g].n_arcs);
    EXPECT_EQ(back.groups[g].region_plane_partner, spec.groups[g].region_plane_partner);
  }
  // Identical features from the round-tripped spec.
  const SyntheticScene a = generate(spec);
  const SyntheticScene b = generate(back);
  ASSERT_EQ(a.features.arcs.size(), b.features.arcs.size());
  for (size_t i = 0; i < a.features.arcs.size(); ++i) {
    EXPECT_EQ(a.features.arcs[i].points[0], b.features.arcs[i].points[0]);
  }
}

TEST(SceneSpecIo, RejectsMalformedInput) {
  EXPECT_THROW(parse_scene_spec("f_px = not_a_number\ngroup = 1,0,0,2,0,1\n"), ParseError);
  EXPECT_THROW(parse_scene_spec("f_px = 1000\n"), ParseError);  // no groups
  EXPECT_THROW(parse_scene_spec("mystery = 3\ngroup = 1,0,0,2,0,1\n"), ParseError);
}

TEST(Generate, UndistortedSceneSolvesToZeroParameter) {
  SceneSpec spec = manhattan_scene_spec(3, 0, 61);
  spec.lambda_px = 0.0;
  spec.f_px = 1200.0;
  const SyntheticScene scene = generate(spec);
  auto rng = make_rng(67, 0);
  const BenchPath path{SolverId::k6Ca, ConfigMode::kManhattan, "6CA-manhattan"};
  const MinimalSample sample = sample_for_path(path, scene.features, rng);
  const SolveResult solved = dispatch(sample);
  ASSERT_TRUE(solved.ok());
  bool found = false;
  for (const auto& cand : solved.candidates) {
    found |= std::abs(cand.lambda) < 1e-7;
  }
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace autocalib
