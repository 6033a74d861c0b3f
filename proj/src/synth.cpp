#include "autocalib/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace autocalib {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis_unit, double angle) {
  return Eigen::AngleAxisd(angle, axis_unit).toRotationMatrix();
}

struct Projector {
  double f_px;
  double lambda_px;
  Eigen::Matrix3d R;
  Eigen::Vector3d t;
  double cx, cy;

  // World point -> distorted pixel (top-left origin); nullopt when behind
  // the camera or not distortable.
  std::optional<Eigen::Vector2d> operator()(const Eigen::Vector3d& X) const {
    const Eigen::Vector3d cam = R * X + t;
    if (cam.z() <= 1e-9) return std::nullopt;
    const Eigen::Vector2d undist(f_px * cam.x() / cam.z(), f_px * cam.y() / cam.z());
    const auto dist = try_distort(undist, lambda_px);
    if (!dist) return std::nullopt;
    return Eigen::Vector2d(dist->x() + cx, dist->y() + cy);
  }

  bool inside(const Eigen::Vector2d& px, double margin, int w, int h) const {
    return px.x() >= margin && px.x() <= w - margin && px.y() >= margin &&
           px.y() <= h - margin;
  }
};

// A world point whose projection lands at the given pixel, at the given depth.
Eigen::Vector3d backproject(const Projector& proj, const Eigen::Vector2d& px, double depth) {
  const Eigen::Vector2d centered(px.x() - proj.cx, px.y() - proj.cy);
  const HomPoint u = undistort(centered, proj.lambda_px);
  const Eigen::Vector2d undist = u.hnormalized();
  const Eigen::Vector3d cam(undist.x() / proj.f_px * depth, undist.y() / proj.f_px * depth,
                            depth);
  return proj.R.transpose() * (cam - proj.t);
}

}  // namespace

std::mt19937_64 make_rng(uint64_t seed, uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ (index + 0x51ed2701)));
}

Eigen::Matrix3d random_attitude(std::mt19937_64& rng, double max_cone_deg) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle_dist(0.0, max_cone_deg * M_PI / 180.0);
  // Nominal street-view attitude: looking slightly down and to the side.
  const Eigen::Matrix3d nominal =
      axis_angle(Eigen::Vector3d::UnitX(), 0.15) * axis_angle(Eigen::Vector3d::UnitY(), 0.25);
  Eigen::Vector3d axis(unit(rng), unit(rng), unit(rng));
  while (axis.norm() < 1e-6) axis = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
  return axis_angle(axis.normalized(), angle_dist(rng)) * nominal;
}

void sample_benchmark_camera(std::mt19937_64& rng, SceneSpec* spec) {
  std::uniform_real_distribution<double> f_dist(0.8, 1.5);
  std::uniform_real_distribution<double> lam_dist(-0.85, 0.1);
  spec->f_px = f_dist(rng) * spec->width;
  const Normalizer nrm = Normalizer::for_image(spec->width, spec->height);
  spec->lambda_px = nrm.lambda_to_px(lam_dist(rng));
  spec->R = random_attitude(rng);
  spec->t = Eigen::Vector3d(0, 0, 6);
}

SceneSpec manhattan_scene_spec(int arcs_per_group, int regions_per_group, uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  auto rng = make_rng(seed, 0xa77);
  sample_benchmark_camera(rng, &spec);
  spec.groups.resize(3);
  const Eigen::Vector3d axes[3] = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                   Eigen::Vector3d::UnitZ()};
  for (int g = 0; g < 3; ++g) {
    spec.groups[g].dir = axes[g];
    spec.groups[g].n_arcs = arcs_per_group;
    spec.groups[g].n_regions = regions_per_group;
    spec.groups[g].region_plane_partner = (g + 1) % 3;
  }
  return spec;
}

SceneSpec coplanar_scene_spec(int arcs_per_group, int regions_per_group, uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  auto rng = make_rng(seed, 0xc0c);
  sample_benchmark_camera(rng, &spec);
  spec.groups.resize(3);
  const Eigen::Vector3d d1 = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d d2 = Eigen::Vector3d::UnitY();
  spec.groups[0].dir = d1;
  spec.groups[1].dir = d2;
  spec.groups[2].dir = (d1 + d2).normalized();
  for (int g = 0; g < 3; ++g) {
    spec.groups[g].n_arcs = arcs_per_group;
    spec.groups[g].n_regions = regions_per_group;
    // All repeats live on the plane spanned by the two orthogonal axes.
    spec.groups[g].region_plane_partner = g == 0 ? 1 : 0;
  }
  return spec;
}

SyntheticScene generate(const SceneSpec& spec) {
  auto rng = make_rng(spec.seed, 1);
  Projector proj{spec.f_px, spec.lambda_px, spec.R, spec.t, 0.5 * spec.width,
                 0.5 * spec.height};
  const double margin = 0.02 * std::min(spec.width, spec.height);
  std::uniform_real_distribution<double> px_x(0.12 * spec.width, 0.88 * spec.width);
  std::uniform_real_distribution<double> px_y(0.12 * spec.height, 0.88 * spec.height);
  std::uniform_real_distribution<double> depth_dist(4.0, 9.0);
  std::uniform_real_distribution<double> len_dist(1.5, 3.2);
  std::uniform_real_distribution<double> frame_coord(-0.35, 0.35);
  std::uniform_real_distribution<double> shift_dist(0.6, 1.4);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  SyntheticScene scene;
  scene.features.width = spec.width;
  scene.features.height = spec.height;
  const Normalizer nrm = scene.features.normalizer();
  scene.gt.lambda = nrm.lambda_to_norm(spec.lambda_px);
  scene.gt.f = spec.f_px;
  scene.gt.width = spec.width;
  scene.gt.height = spec.height;
  scene.gt.R = spec.R;
  for (const auto& g : spec.groups) scene.group_dirs.push_back(g.dir.normalized());

  int next_id = 0;
  for (size_t g = 0; g < spec.groups.size(); ++g) {
    const DirectionGroup& group = spec.groups[g];
    const Eigen::Vector3d dir = group.dir.normalized();

    for (int k = 0; k < group.n_arcs; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        const Eigen::Vector2d anchor_px(px_x(rng), px_y(rng));
        const Eigen::Vector3d anchor = backproject(proj, anchor_px, depth_dist(rng));
        const double len = len_dist(rng);
        std::vector<Eigen::Vector2d> pts;
        pts.reserve(spec.arc_points);
        bool ok = true;
        for (int i = 0; i < spec.arc_points; ++i) {
          const double s = (static_cast<double>(i) / (spec.arc_points - 1) - 0.5) * len;
          const auto px = proj(anchor + s * dir);
          if (!px || !proj.inside(*px, margin, spec.width, spec.height)) {
            ok = false;
            break;
          }
          pts.push_back(*px);
        }
        if (!ok) continue;
        if ((pts.front() - pts.back()).norm() < 0.15 * std::min(spec.width, spec.height)) {
          continue;  // too short to carry a stable tangent
        }
        // Shallow arcs stay usable here; the subtend filter is a
        // file-ingestion policy, not a synthesis one.
        auto arc = make_contour_arc(std::move(pts), static_cast<int>(g), next_id,
                                    /*min_subtend_deg=*/0.0);
        if (!arc) continue;
        scene.features.arcs.push_back(std::move(*arc));
        ++next_id;
        placed = true;
      }
      if (!placed) throw OutOfRange("cannot place scene line inside the image");
    }

    if (group.n_regions > 0) {
      const int partner = group.region_plane_partner;
      if (partner < 0 || partner >= static_cast<int>(spec.groups.size())) {
        throw std::invalid_argument("region group needs a plane partner");
      }
      const Eigen::Vector3d dir2 = spec.groups[partner].dir.normalized();
      for (int k = 0; k < group.n_regions; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
          const Eigen::Vector2d anchor_px(px_x(rng), px_y(rng));
          const Eigen::Vector3d anchor = backproject(proj, anchor_px, depth_dist(rng));
          std::array<Eigen::Vector3d, 3> frame;
          for (int i = 0; i < 3; ++i) {
            frame[i] = anchor + frame_coord(rng) * dir + frame_coord(rng) * dir2;
          }
          const Eigen::Vector3d edge1 = frame[1] - frame[0];
          const Eigen::Vector3d edge2 = frame[2] - frame[0];
          if (edge1.cross(edge2).norm() < 0.02) continue;  // flat frame
          const Eigen::Vector3d shift = shift_dist(rng) * dir;
          RegionCorrespondence rc;
          rc.id = next_id;
          rc.group = static_cast<int>(g);
          bool ok = true;
          for (int i = 0; i < 3 && ok; ++i) {
            const auto a = proj(frame[i]);
            const auto b = proj(frame[i] + shift);
            ok = a && b && proj.inside(*a, margin, spec.width, spec.height) &&
                 proj.inside(*b, margin, spec.width, spec.height);
            if (ok) {
              rc.frame_a[i] = *a;
              rc.frame_b[i] = *b;
            }
          }
          if (!ok) continue;
          auto area = [](const std::array<Eigen::Vector2d, 3>& f) {
            const Eigen::Vector2d u = f[1] - f[0], v = f[2] - f[0];
            return 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
          };
          if (area(rc.frame_a) <= 25.0 || area(rc.frame_b) <= 25.0) continue;
          scene.features.regions.push_back(rc);
          ++next_id;
          placed = true;
        }
        if (!placed) throw OutOfRange("cannot place repeated region inside the image");
      }
    }
  }

  if (spec.noise_sigma_px > 0) {
    auto noise_rng = make_rng(spec.seed, 2);
    scene.features = add_noise(scene.features, spec.noise_sigma_px, noise_rng);
  }
  if (spec.outlier_fraction > 0) {
    auto outlier_rng = make_rng(spec.seed, 3);
    scene.features = add_outliers(scene.features, spec.outlier_fraction,
                                  static_cast<int>(spec.groups.size()), outlier_rng);
  }
  (void)coin;
  return scene;
}

FeatureSet add_noise(const FeatureSet& fs, double sigma_px, std::mt19937_64& rng) {
  if (sigma_px <= 0) return fs;
  std::normal_distribution<double> gauss(0.0, sigma_px);
  FeatureSet out;
  out.width = fs.width;
  out.height = fs.height;
  auto clamp_inside = [&out](Eigen::Vector2d p) {
    p.x() = std::clamp(p.x(), 0.0, static_cast<double>(out.width));
    p.y() = std::clamp(p.y(), 0.0, static_cast<double>(out.height));
    return p;
  };
  for (const auto& arc : fs.arcs) {
    std::vector<Eigen::Vector2d> pts = arc.points;
    for (auto& p : pts) p = clamp_inside(p + Eigen::Vector2d(gauss(rng), gauss(rng)));
    auto noisy = make_contour_arc(std::move(pts), arc.group, arc.id, /*min_subtend_deg=*/0.0);
    if (noisy) out.arcs.push_back(std::move(*noisy));
  }
  for (const auto& rc : fs.regions) {
    RegionCorrespondence noisy = rc;
    for (int i = 0; i < 3; ++i) {
      noisy.frame_a[i] = clamp_inside(noisy.frame_a[i] + Eigen::Vector2d(gauss(rng), gauss(rng)));
      noisy.frame_b[i] = clamp_inside(noisy.frame_b[i] + Eigen::Vector2d(gauss(rng), gauss(rng)));
    }
    out.regions.push_back(noisy);
  }
  return out;
}

FeatureSet add_outliers(const FeatureSet& fs, double fraction, int n_groups,
                        std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> group_dist(0, std::max(0, n_groups - 1));
  std::uniform_real_distribution<double> x_dist(0.05 * fs.width, 0.95 * fs.width);
  std::uniform_real_distribution<double> y_dist(0.05 * fs.height, 0.95 * fs.height);
  std::uniform_real_distribution<double> r_dist(0.2 * fs.height, 2.0 * fs.height);
  std::uniform_real_distribution<double> arc_span(0.3, 1.2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

  FeatureSet out;
  out.width = fs.width;
  out.height = fs.height;
  for (const auto& arc : fs.arcs) {
    if (coin(rng) >= fraction) {
      out.arcs.push_back(arc);
      continue;
    }
    // Random circle arc, clipped to the image.
    for (int attempt = 0; attempt < 50; ++attempt) {
      const Eigen::Vector2d c(x_dist(rng), y_dist(rng));
      const double r = r_dist(rng);
      const double a0 = phase(rng);
      const double span = arc_span(rng);
      std::vector<Eigen::Vector2d> pts;
      const int n = static_cast<int>(arc.points.size());
      for (int i = 0; i < n; ++i) {
        const double a = a0 + span * i / (n - 1);
        const Eigen::Vector2d p = c + r * Eigen::Vector2d(std::cos(a), std::sin(a));
        if (p.x() < 0 || p.x() > fs.width || p.y() < 0 || p.y() > fs.height) break;
        pts.push_back(p);
      }
      if (static_cast<int>(pts.size()) < n) continue;
      auto fake = make_contour_arc(std::move(pts), group_dist(rng), arc.id,
                                   /*min_subtend_deg=*/0.0);
      if (!fake) continue;
      out.arcs.push_back(std::move(*fake));
      break;
    }
  }
  for (const auto& rc : fs.regions) {
    if (coin(rng) >= fraction) {
      out.regions.push_back(rc);
      continue;
    }
    RegionCorrespondence fake = rc;
    fake.group = group_dist(rng);
    for (int i = 0; i < 3; ++i) {
      fake.frame_a[i] = Eigen::Vector2d(x_dist(rng), y_dist(rng));
      fake.frame_b[i] = Eigen::Vector2d(x_dist(rng), y_dist(rng));
    }
    out.regions.push_back(fake);
  }
  return out;
}


namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(trim_ws(item)));
  return out;
}

}  // namespace

std::string serialize_scene_spec(const SceneSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "f_px = " << spec.f_px << "\n";
  out << "lambda_px = " << spec.lambda_px << "\n";
  out << "width = " << spec.width << "\n";
  out << "height = " << spec.height << "\n";
  out << "noise_sigma_px = " << spec.noise_sigma_px << "\n";
  out << "outlier_fraction = " << spec.outlier_fraction << "\n";
  out << "arc_points = " << spec.arc_points << "\n";
  out << "seed = " << spec.seed << "\n";
  out << "R = ";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << (r + c ? ", " : "") << spec.R(r, c);
  }
  out << "\n";
  out << "t = " << spec.t.x() << ", " << spec.t.y() << ", " << spec.t.z() << "\n";
  for (const auto& g : spec.groups) {
    out << "group = " << g.dir.x() << ", " << g.dir.y() << ", " << g.dir.z() << ", "
        << g.n_arcs << ", " << g.n_regions << ", " << g.region_plane_partner << "\n";
  }
  return out.str();
}

SceneSpec parse_scene_spec(const std::string& text) {
  SceneSpec spec;
  spec.groups.clear();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (!trim_ws(line).empty()) {
        throw ParseError("scene spec line " + std::to_string(lineno) + ": expected key = value");
      }
      continue;
    }
    const std::string key = trim_ws(line.substr(0, eq));
    const std::string value = trim_ws(line.substr(eq + 1));
    try {
      if (key == "f_px") {
        spec.f_px = std::stod(value);
      } else if (key == "lambda_px") {
        spec.lambda_px = std::stod(value);
      } else if (key == "width") {
        spec.width = std::stoi(value);
      } else if (key == "height") {
        spec.height = std::stoi(value);
      } else if (key == "noise_sigma_px") {
        spec.noise_sigma_px = std::stod(value);
      } else if (key == "outlier_fraction") {
        spec.outlier_fraction = std::stod(value);
      } else if (key == "arc_points") {
        spec.arc_points = std::stoi(value);
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else if (key == "R") {
        const auto v = split_numbers(value);
        if (v.size() != 9) throw ParseError("scene spec: R wants 9 numbers");
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) spec.R(r, c) = v[3 * r + c];
        }
      } else if (key == "t") {
        const auto v = split_numbers(value);
        if (v.size() != 3) throw ParseError("scene spec: t wants 3 numbers");
        spec.t = Eigen::Vector3d(v[0], v[1], v[2]);
      } else if (key == "group") {
        const auto v = split_numbers(value);
        if (v.size() != 6) throw ParseError("scene spec: group wants 6 numbers");
        DirectionGroup g;
        g.dir = Eigen::Vector3d(v[0], v[1], v[2]);
        g.n_arcs = static_cast<int>(v[3]);
        g.n_regions = static_cast<int>(v[4]);
        g.region_plane_partner = static_cast<int>(v[5]);
        spec.groups.push_back(g);
      } else {
        throw ParseError("scene spec: unknown key " + key);
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("scene spec: bad value for " + key + ": " + value);
    } catch (const std::out_of_range&) {
      throw ParseError("scene spec: bad value for " + key + ": " + value);
    }
  }
  if (spec.groups.empty()) throw ParseError("scene spec: no direction groups");
  return spec;
}

SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scene spec: " + path);
  return parse_scene_spec(std::string((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>()));
}

void save_scene_spec(const SceneSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scene spec: " + path);
  out << serialize_scene_spec(spec);
}

}  // namespace autocalib
