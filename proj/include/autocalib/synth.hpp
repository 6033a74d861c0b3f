#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "autocalib/features.hpp"
#include "autocalib/geometry.hpp"

namespace autocalib {

// Deterministic per-unit random stream: mixes (seed, index) so parallel
// scene generation is schedule independent.
std::mt19937_64 make_rng(uint64_t seed, uint64_t index = 0);

// One direction group of a synthetic scene: scene lines along dir become
// arcs; translated repeats along dir sit on the plane spanned with the
// partner group's direction.
struct DirectionGroup {
  Eigen::Vector3d dir = Eigen::Vector3d::UnitX();
  int n_arcs = 0;
  int n_regions = 0;
  int region_plane_partner = -1;  // group index spanning the region plane
};

struct SceneSpec {
  double f_px = 1126.3;
  double lambda_px = -2.4951e-7;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d(0, 0, 6);
  int width = 3000, height = 2000;
  std::vector<DirectionGroup> groups;
  double noise_sigma_px = 0;
  double outlier_fraction = 0;
  int arc_points = 25;
  uint64_t seed = 0;
};

struct SyntheticScene {
  FeatureSet features;
  Calibration gt;
  std::vector<Eigen::Vector3d> group_dirs;  // world directions per group label
};

// Camera attitude: a rotation within max_cone_deg of a nominal street-view
// attitude (slight downward pitch toward the scene).
Eigen::Matrix3d random_attitude(std::mt19937_64& rng, double max_cone_deg = 30.0);

// Benchmark camera sampling: f uniform in [0.8, 1.5] x width, division
// parameter uniform in [-0.85, 0.1] normalized.
void sample_benchmark_camera(std::mt19937_64& rng, SceneSpec* spec);

// Three mutually orthogonal direction groups (rotated Manhattan axes).
SceneSpec manhattan_scene_spec(int arcs_per_group, int regions_per_group, uint64_t seed);

// Three coplanar direction groups: two orthogonal in-plane axes plus the
// in-plane diagonal, so the scene admits both an exact vanishing line and an
// orthogonal focal-upgrade pair.
SceneSpec coplanar_scene_spec(int arcs_per_group, int regions_per_group, uint64_t seed);

// Projects the scene content and realizes every feature the way a detection
// pipeline would: contours sampled along the distorted curve and re-fitted.
// Throws OutOfRange when geometry cannot be placed in front of the camera
// after the retry budget.
SyntheticScene generate(const SceneSpec& spec);

// Flat key = value serialization of a scene spec (same format as the
// estimator config file). Direction groups serialize as repeated `group`
// entries: dir_x,dir_y,dir_z,n_arcs,n_regions,plane_partner.
std::string serialize_scene_spec(const SceneSpec& spec);
SceneSpec parse_scene_spec(const std::string& text);
SceneSpec load_scene_spec(const std::string& path);
void save_scene_spec(const SceneSpec& spec, const std::string& path);

// I.i.d. Gaussian pixel noise on every contour and region point; contours
// are re-fitted afterwards.
FeatureSet add_noise(const FeatureSet& fs, double sigma_px, std::mt19937_64& rng);

// Replaces a fraction of the features with outliers: arcs sampled from
// random circles and regions with unrelated second frames, keeping plausible
// group labels.
FeatureSet add_outliers(const FeatureSet& fs, double fraction, int n_groups,
                        std::mt19937_64& rng);

}  // namespace autocalib
