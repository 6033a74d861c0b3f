#include "autocalib/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace autocalib {

namespace {

// Orthogonal least-squares line through the points as a degenerate circle.
GenCircle fit_line(const std::vector<Eigen::Vector2d>& points) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector2d d = p - mean;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
  const Eigen::Vector2d n = es.eigenvectors().col(0);  // smallest variance
  return GenCircle{0.0, n.x(), n.y(), -n.dot(mean)};
}

GenCircle circle_from_center_radius(const Eigen::Vector2d& c, double r) {
  return GenCircle{1.0, -2.0 * c.x(), -2.0 * c.y(), c.squaredNorm() - r * r};
}

}  // namespace

GenCircle fit_circle_taubin(const std::vector<Eigen::Vector2d>& points, bool* collinear) {
  if (collinear) *collinear = false;
  const size_t n = points.size();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(n);

  // Centered moments, Chernov's formulation of the Taubin fit.
  double mxx = 0, myy = 0, mxy = 0, mxz = 0, myz = 0, mzz = 0;
  for (const auto& p : points) {
    const double x = p.x() - mean.x();
    const double y = p.y() - mean.y();
    const double z = x * x + y * y;
    mxx += x * x;
    myy += y * y;
    mxy += x * y;
    mxz += x * z;
    myz += y * z;
    mzz += z * z;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  mxx *= inv_n;
  myy *= inv_n;
  mxy *= inv_n;
  mxz *= inv_n;
  myz *= inv_n;
  mzz *= inv_n;

  const double mz = mxx + myy;
  const double cov_xy = mxx * myy - mxy * mxy;
  const double var_z = mzz - mz * mz;

  // Collinear data: the centered scatter is rank deficient.
  {
    Eigen::Matrix2d scatter;
    scatter << mxx, mxy, mxy, myy;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
    if (es.eigenvalues()(0) <= 1e-18 * std::max(1.0, es.eigenvalues()(1))) {
      if (collinear) *collinear = true;
      return fit_line(points);
    }
  }

  const double a3 = 4.0 * mz;
  const double a2 = -3.0 * mz * mz - mzz;
  const double a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
  const double a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) -
                    var_z * cov_xy;

  // Newton from x = 0 toward the smallest positive root of the
  // characteristic polynomial.
  double x = 0.0, y = a0;
  for (int it = 0; it < 32; ++it) {
    const double dy = a1 + x * (2.0 * a2 + 3.0 * a3 * x);
    if (dy == 0.0) break;
    const double x_new = x - y / dy;
    if (!std::isfinite(x_new) || std::abs(x_new - x) <= 1e-14 * std::abs(x_new)) {
      x = x_new;
      break;
    }
    const double y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
    if (std::abs(y_new) >= std::abs(y)) break;
    x = x_new;
    y = y_new;
  }

  const double det = x * x - x * mz + cov_xy;
  if (det == 0.0 || !std::isfinite(det)) {
    if (collinear) *collinear = true;
    return fit_line(points);
  }
  const double cx = (mxz * (myy - x) - myz * mxy) / det / 2.0;
  const double cy = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
  const double r = std::sqrt(cx * cx + cy * cy + mz - x);
  return circle_from_center_radius(mean + Eigen::Vector2d(cx, cy), r);
}

double circle_fit_rms(const std::vector<Eigen::Vector2d>& points, const GenCircle& c) {
  double acc = 0.0;
  for (const auto& p : points) {
    const double d = c.distance(p);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(points.size()));
}

GenCircle refine_circle_geometric(const std::vector<Eigen::Vector2d>& points,
                                  const GenCircle& init, bool* converged) {
  if (converged) *converged = true;
  if (init.is_line()) return fit_line(points);

  // For a fixed center the optimal radius is the mean distance, so the
  // problem reduces to two center coordinates.
  Eigen::Vector2d c = init.center();
  auto objective = [&points](const Eigen::Vector2d& center, double* radius) {
    double r = 0.0;
    for (const auto& p : points) r += (p - center).norm();
    r /= static_cast<double>(points.size());
    double obj = 0.0;
    for (const auto& p : points) {
      const double d = (p - center).norm() - r;
      obj += d * d;
    }
    if (radius) *radius = r;
    return obj;
  };

  double r = 0.0;
  double obj = objective(c, &r);
  double damping = 1e-6;
  bool settled = false;
  for (int it = 0; it < 100; ++it) {
    double mean_dist = 0.0;
    Eigen::Vector2d mean_dir = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> dirs(points.size());
    std::vector<double> dists(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
      const Eigen::Vector2d d = points[i] - c;
      dists[i] = d.norm();
      dirs[i] = dists[i] > 0 ? Eigen::Vector2d(d / dists[i]) : Eigen::Vector2d(1, 0);
      mean_dist += dists[i];
      mean_dir += dirs[i];
    }
    const double inv_n = 1.0 / static_cast<double>(points.size());
    mean_dist *= inv_n;
    mean_dir *= inv_n;
    // The radius eliminates to the mean distance, which couples the center
    // into every residual through the mean direction.
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (size_t i = 0; i < points.size(); ++i) {
      const Eigen::Vector2d jrow = dirs[i] - mean_dir;
      jtj += jrow * jrow.transpose();
      jtr += jrow * (dists[i] - mean_dist);
    }
    bool improved = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const Eigen::Matrix2d lhs = jtj + damping * Eigen::Matrix2d::Identity();
      const Eigen::Vector2d step = lhs.ldlt().solve(jtr);
      const Eigen::Vector2d c_try = c + step;
      double r_try = 0.0;
      const double obj_try = objective(c_try, &r_try);
      if (obj_try < obj) {
        c = c_try;
        r = r_try;
        if (obj - obj_try <= 1e-14 * (1.0 + obj)) settled = true;
        obj = obj_try;
        damping = std::max(damping * 0.25, 1e-12);
        improved = true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved || settled) {
      settled = settled || !improved;
      break;
    }
  }
  if (converged) *converged = settled;
  return circle_from_center_radius(c, r);
}

std::optional<ContourArc> make_contour_arc(std::vector<Eigen::Vector2d> points,
                                           std::optional<int> group, int id,
                                           double min_subtend_deg) {
  if (points.size() < 5) return std::nullopt;
  bool collinear = false;
  GenCircle taubin = fit_circle_taubin(points, &collinear);
  GenCircle circle = collinear ? taubin : refine_circle_geometric(points, taubin);
  const GenCircle line = fit_line(points);
  const double line_rms = circle_fit_rms(points, line);
  const double circle_rms = circle_fit_rms(points, circle);

  // Straight contours keep their line fit; those are legitimate features
  // (images of lines through the distortion center stay straight, and the
  // whole scene is straight at lambda = 0). A contour counts as straight
  // when the circle explains it no better than the line up to a small
  // raster-level floor.
  const bool straight = collinear || line_rms <= 1.2 * circle_rms + 1e-9;
  if (straight) {
    circle = line;
  } else {
    const double chord = (points.back() - points.front()).norm();
    const double r = circle.radius();
    if (r <= 0) return std::nullopt;
    const double subtend = 2.0 * std::asin(std::clamp(chord / (2.0 * r), 0.0, 1.0));
    if (subtend < min_subtend_deg * M_PI / 180.0) return std::nullopt;
  }

  // Midpoint: contour point at the median arc-length parameter.
  std::vector<double> cum(points.size(), 0.0);
  for (size_t i = 1; i < points.size(); ++i) {
    cum[i] = cum[i - 1] + (points[i] - points[i - 1]).norm();
  }
  const double half = 0.5 * cum.back();
  size_t mid = 0;
  for (size_t i = 1; i < points.size(); ++i) {
    if (std::abs(cum[i] - half) < std::abs(cum[mid] - half)) mid = i;
  }

  ContourArc arc;
  arc.id = id;
  arc.group = group;
  arc.circle = circle;
  arc.midpoint = points[mid];
  if (circle.is_line()) {
    arc.normal = Eigen::Vector2d(circle.B, circle.C).normalized();
  } else {
    arc.normal = (circle.center() - arc.midpoint).normalized();
  }
  arc.fit_rms = straight ? line_rms : circle_rms;
  arc.points = std::move(points);
  return arc;
}

std::vector<PointCorrespondence> point_correspondences(const RegionCorrespondence& rc) {
  std::vector<PointCorrespondence> out;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d& p = rc.frame_a[i];
    const Eigen::Vector2d& q = rc.frame_b[i];
    if ((p - q).norm() < 1e-9) continue;
    out.push_back({p, q, PcTag::kPrimary});
  }
  // Within-frame pairs: frame edge (i, j) is a translation shared by both
  // frames, giving two parallel joins per edge.
  constexpr int kEdges[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  constexpr PcTag kTags[3] = {PcTag::kAux1, PcTag::kAux2, PcTag::kAux3};
  for (int e = 0; e < 3; ++e) {
    const int i = kEdges[e][0], j = kEdges[e][1];
    if ((rc.frame_a[i] - rc.frame_a[j]).norm() >= 1e-9) {
      out.push_back({rc.frame_a[i], rc.frame_a[j], kTags[e]});
    }
    if ((rc.frame_b[i] - rc.frame_b[j]).norm() >= 1e-9) {
      out.push_back({rc.frame_b[i], rc.frame_b[j], kTags[e]});
    }
  }
  return out;
}

namespace {

using nlohmann::json;

Eigen::Vector2d parse_point(const json& j, const char* where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(std::string("expected [x, y] pair in ") + where);
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

FeatureSet parse_features(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("feature file: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw ParseError("feature file: top level is not an object");
    const std::string version = doc.value("version", std::string());
    if (version != "1") {
      throw SchemaVersionMismatch("feature file: unsupported version '" + version + "'");
    }
    if (!doc.contains("image")) throw ParseError("feature file: missing 'image'");
    FeatureSet fs;
    fs.width = doc["image"].at("width").get<int>();
    fs.height = doc["image"].at("height").get<int>();
    if (fs.width <= 0 || fs.height <= 0) {
      throw ParseError("feature file: non-positive image size");
    }
    auto check_inside = [&fs](const Eigen::Vector2d& p, const char* where) {
      if (p.x() < 0 || p.x() > fs.width || p.y() < 0 || p.y() > fs.height) {
        throw ParseError(std::string("coordinate outside the image in ") + where);
      }
    };
    if (doc.contains("arcs")) {
      for (const auto& ja : doc["arcs"]) {
        std::optional<int> group;
        if (ja.contains("group") && !ja["group"].is_null()) {
          group = ja["group"].get<int>();
        }
        std::vector<Eigen::Vector2d> pts;
        for (const auto& jp : ja.at("points")) {
          pts.push_back(parse_point(jp, "arc points"));
          check_inside(pts.back(), "arc points");
        }
        auto arc = make_contour_arc(std::move(pts), group, ja.value("id", -1));
        if (arc) fs.arcs.push_back(std::move(*arc));
      }
    }
    if (doc.contains("regions")) {
      for (const auto& jr : doc["regions"]) {
        RegionCorrespondence rc;
        rc.id = jr.value("id", -1);
        if (jr.contains("group") && !jr["group"].is_null()) {
          rc.group = jr["group"].get<int>();
        }
        const auto& fa = jr.at("frame_a");
        const auto& fb = jr.at("frame_b");
        if (fa.size() != 3 || fb.size() != 3) {
          throw ParseError("region frames must have exactly 3 points");
        }
        for (int i = 0; i < 3; ++i) {
          rc.frame_a[i] = parse_point(fa[i], "frame_a");
          rc.frame_b[i] = parse_point(fb[i], "frame_b");
          check_inside(rc.frame_a[i], "frame_a");
          check_inside(rc.frame_b[i], "frame_b");
        }
        auto area = [](const std::array<Eigen::Vector2d, 3>& f) {
          const Eigen::Vector2d u = f[1] - f[0], v = f[2] - f[0];
          return 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
        };
        if (area(rc.frame_a) <= 1e-6 || area(rc.frame_b) <= 1e-6) {
          throw ParseError("degenerate (collinear) region frame");
        }
        fs.regions.push_back(rc);
      }
    }
    return fs;
  } catch (const json::exception& e) {
    throw ParseError(std::string("feature file: ") + e.what());
  }
}

std::string serialize_features(const FeatureSet& fs) {
  json doc;
  doc["version"] = "1";
  doc["image"] = {{"width", fs.width}, {"height", fs.height}};
  doc["arcs"] = json::array();
  for (const auto& arc : fs.arcs) {
    json ja;
    ja["id"] = arc.id;
    ja["group"] = arc.group ? json(*arc.group) : json(nullptr);
    ja["points"] = json::array();
    for (const auto& p : arc.points) ja["points"].push_back({p.x(), p.y()});
    doc["arcs"].push_back(std::move(ja));
  }
  doc["regions"] = json::array();
  for (const auto& rc : fs.regions) {
    json jr;
    jr["id"] = rc.id;
    jr["group"] = rc.group ? json(*rc.group) : json(nullptr);
    jr["frame_a"] = json::array();
    jr["frame_b"] = json::array();
    for (int i = 0; i < 3; ++i) {
      jr["frame_a"].push_back({rc.frame_a[i].x(), rc.frame_a[i].y()});
      jr["frame_b"].push_back({rc.frame_b[i].x(), rc.frame_b[i].y()});
    }
    doc["regions"].push_back(std::move(jr));
  }
  return doc.dump(2) + "\n";
}

FeatureSet load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_features(text);
}

void save_features(const FeatureSet& fs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file: " + path);
  out << serialize_features(fs);
}

}  // namespace autocalib
