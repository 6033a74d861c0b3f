#include "autocalib/consistency.hpp"

#include <cmath>
#include <limits>

namespace autocalib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HomPoint vp_norm_to_px(const HomPoint& u, double s) {
  return HomPoint(u.x() * s, u.y() * s, u.z()).normalized();
}

HomLine line_norm_to_px(const HomLine& l, double s) {
  return HomLine(l.x() / s, l.y() / s, l.z()).normalized();
}

}  // namespace

std::optional<GenCircle> circle_through_vp(const Eigen::Vector2d& midpoint_distorted,
                                           const HomPoint& vp_undistorted, double lambda) {
  const HomPoint xbar = undistort(midpoint_distorted, lambda);
  const HomLine join = xbar.cross(vp_undistorted);
  const double scale = xbar.norm() * vp_undistorted.norm();
  if (join.norm() <= 1e-12 * std::max(scale, 1e-300)) return std::nullopt;
  return distort_line(join, lambda);
}

double arc_consistency(const std::vector<Eigen::Vector2d>& points, const GenCircle& circle) {
  if (points.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& p : points) {
    const double d = circle.distance(p);
    acc += d * d;
  }
  return acc / static_cast<double>(points.size());
}

HomPoint vp_on_line(const std::vector<PointCorrespondence>& pcs, const HomLine& l,
                    double lambda, bool* on_ideal_line, double* residual) {
  if (on_ideal_line) *on_ideal_line = false;
  Eigen::MatrixXd m(pcs.size(), 3);
  for (size_t k = 0; k < pcs.size(); ++k) {
    const HomLine t = undistort(pcs[k].p, lambda).cross(undistort(pcs[k].q, lambda));
    m.row(k) = t.normalized().transpose();
  }
  const double n2 = l.x() * l.x() + l.y() * l.y();
  if (n2 <= 1e-20 * l.squaredNorm()) {
    // The whole affine slice misses the line at infinity; fall back to the
    // best ideal direction.
    if (on_ideal_line) *on_ideal_line = true;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.leftCols<2>(), Eigen::ComputeFullV);
    const Eigen::Vector2d d = svd.matrixV().col(1);
    HomPoint u(d.x(), d.y(), 0.0);
    if (residual) *residual = (m * u).norm();
    return u;
  }
  // Affine slice of the constraint set: u = p0 + t * d, with p0 the closest
  // point of the line to the origin (w = 1) and d the line direction (w = 0).
  const HomPoint p0(-l.x() * l.z() / n2, -l.y() * l.z() / n2, 1.0);
  const HomPoint d(-l.y(), l.x(), 0.0);
  const Eigen::VectorXd md = m * d;
  const Eigen::VectorXd mp = m * p0;
  const double denom = md.squaredNorm();
  const double t = denom > 0.0 ? -md.dot(mp) / denom : 0.0;
  const HomPoint u = p0 + t * d;
  if (residual) *residual = (m * u).norm();
  return u;
}

ScoringModel ScoringModel::from_solver_output(const SolverOutput& out, const Normalizer& nrm) {
  ScoringModel model;
  model.lambda_px = nrm.lambda_to_px(out.lambda);
  model.mode = out.mode;
  for (const auto& u : out.vps) model.vps_px.push_back(vp_norm_to_px(u, nrm.s));
  if (out.vanishing_line) {
    model.vanishing_line_px = line_norm_to_px(*out.vanishing_line, nrm.s);
  }
  return model;
}

double arc_vp_consistency(const ContourArc& arc, const HomPoint& vp_px, double lambda_px,
                          const Normalizer& nrm) {
  const Eigen::Vector2d mid = nrm.to_centered_px(arc.midpoint);
  const auto circle = circle_through_vp(mid, vp_px, lambda_px);
  if (!circle) return kInf;
  double acc = 0.0;
  for (const auto& p : arc.points) {
    const double d = circle->distance(nrm.to_centered_px(p));
    acc += d * d;
  }
  return acc / static_cast<double>(arc.points.size());
}

double arc_model_consistency(const ContourArc& arc, const ScoringModel& model,
                             const Normalizer& nrm) {
  double best = kInf;
  for (const auto& vp : model.vps_px) {
    best = std::min(best, arc_vp_consistency(arc, vp, model.lambda_px, nrm));
  }
  return best;
}

namespace {

// Mean squared distance of one correspondence to the circle through the
// vanishing point, constructed at the undistorted segment midpoint.
double pc_vp_consistency(const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                         const HomPoint& vp_px, double lambda_px) {
  const HomPoint up = undistort(p, lambda_px);
  const HomPoint uq = undistort(q, lambda_px);
  if (std::abs(up.z()) <= 1e-14 || std::abs(uq.z()) <= 1e-14) return kInf;
  const Eigen::Vector2d mid_u = 0.5 * (up.hnormalized() + uq.hnormalized());
  const HomLine join = HomPoint(mid_u.x(), mid_u.y(), 1.0).cross(vp_px);
  if (join.norm() <= 1e-12) return kInf;
  const GenCircle circle = distort_line(join, lambda_px);
  const double dp = circle.distance(p);
  const double dq = circle.distance(q);
  return 0.5 * (dp * dp + dq * dq);
}

double region_vp_consistency(const RegionCorrespondence& rc, const HomPoint& vp_px,
                             double lambda_px, const Normalizer& nrm) {
  double acc = 0.0;
  int n = 0;
  for (const auto& pc : point_correspondences(rc)) {
    if (pc.tag != PcTag::kPrimary) continue;
    acc += pc_vp_consistency(nrm.to_centered_px(pc.p), nrm.to_centered_px(pc.q), vp_px,
                             lambda_px);
    ++n;
  }
  return n > 0 ? acc / n : kInf;
}

}  // namespace

double region_model_consistency(const RegionCorrespondence& rc, const ScoringModel& model,
                                const Normalizer& nrm) {
  double best = kInf;
  for (const auto& vp : model.vps_px) {
    best = std::min(best, region_vp_consistency(rc, vp, model.lambda_px, nrm));
  }
  return best;
}

namespace {

// Auxiliary-direction cross validation of one sampled region: estimate each
// auxiliary vanishing point on the candidate vanishing line and test the
// correspondences against the circle construction.
bool aux_directions_consistent(const RegionCorrespondence& rc, const HomLine& l_px,
                               double lambda_px, const Normalizer& nrm, double threshold_px) {
  const auto pcs = point_correspondences(rc);
  for (PcTag tag : {PcTag::kAux1, PcTag::kAux2, PcTag::kAux3}) {
    std::vector<PointCorrespondence> dir;
    for (const auto& pc : pcs) {
      if (pc.tag != tag) continue;
      dir.push_back({nrm.to_centered_px(pc.p), nrm.to_centered_px(pc.q), tag});
    }
    if (dir.empty()) continue;
    const HomPoint u = vp_on_line(dir, l_px, lambda_px);
    for (const auto& pc : dir) {
      const double j = pc_vp_consistency(pc.p, pc.q, u, lambda_px);
      if (!(std::sqrt(j) <= threshold_px)) return true;
    }
  }
  return false;
}

}  // namespace

bool reject_minimal_sample(const FeatureSet& fs, const MinimalSample& sample,
                           const SolverOutput& candidate,
                           const RejectionThresholds& thresholds) {
  const Normalizer nrm = fs.normalizer();
  const ScoringModel model = ScoringModel::from_solver_output(candidate, nrm);

  // Full contours against the vanishing point of their own slot.
  for (size_t slot_idx = 0; slot_idx < sample.slots.size(); ++slot_idx) {
    const SampleSlot& slot = sample.slots[slot_idx];
    if (slot.arc_indices.empty()) continue;
    if (slot_idx >= model.vps_px.size()) return true;
    const HomPoint& vp = model.vps_px[slot_idx];
    for (int arc_idx : slot.arc_indices) {
      const double j = arc_vp_consistency(fs.arcs[arc_idx], vp, model.lambda_px, nrm);
      if (!(std::sqrt(j) <= thresholds.contour_px)) return true;
    }
  }

  // Auxiliary translation directions of each sampled region. Coplanar
  // candidates test against their vanishing line; Manhattan candidates
  // against the line spanned by the region's vanishing point and either
  // remaining one (the region plane holds two of the three directions).
  for (size_t slot_idx = 0; slot_idx < sample.slots.size(); ++slot_idx) {
    const SampleSlot& slot = sample.slots[slot_idx];
    if (slot.region_index < 0) continue;
    const RegionCorrespondence& rc = fs.regions[slot.region_index];
    if (candidate.mode == ConfigMode::kCoplanar) {
      if (!model.vanishing_line_px) return true;
      if (aux_directions_consistent(rc, *model.vanishing_line_px, model.lambda_px, nrm,
                                    thresholds.point_px)) {
        return true;
      }
    } else {
      if (slot_idx >= model.vps_px.size()) return true;
      bool any_plane_ok = false;
      for (size_t j = 0; j < model.vps_px.size(); ++j) {
        if (j == slot_idx) continue;
        const HomLine l = model.vps_px[slot_idx].cross(model.vps_px[j]);
        if (l.norm() <= 1e-14) continue;
        if (!aux_directions_consistent(rc, l.normalized(), model.lambda_px, nrm,
                                       thresholds.point_px)) {
          any_plane_ok = true;
          break;
        }
      }
      if (!any_plane_ok) return true;
    }
  }
  return false;
}

}  // namespace autocalib
