#include "autocalib/solvers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace autocalib {

namespace {

Poly pencil_coord_poly(const LinePencil& l, int i) {
  return Poly({l.c0[i], l.c1[i]});
}

// p*q - r*s over polynomial coordinates.
Poly poly_det2(const Poly& p, const Poly& q, const Poly& r, const Poly& s) {
  return p * q - r * s;
}

}  // namespace

double VpPoly::max_abs_coeff() const {
  return std::max({x.max_abs_coeff(), y.max_abs_coeff(), w.max_abs_coeff()});
}

VpPoly VpPoly::normalized() const {
  const double m = max_abs_coeff();
  if (m == 0.0) return *this;
  return VpPoly{x * (1.0 / m), y * (1.0 / m), w * (1.0 / m)};
}

LinePencil line_from_arc(const Eigen::Vector2d& m, const Eigen::Vector2d& n) {
  const double x = m.x(), y = m.y();
  const double nx = n.x(), ny = n.y();
  LinePencil out;
  out.c0 = HomLine(nx, ny, -(nx * x + ny * y));
  out.c1 = HomLine(nx * x * x + 2.0 * ny * x * y - nx * y * y,
                   ny * y * y + 2.0 * nx * x * y - ny * x * x, 0.0);
  return out;
}

LinePencil line_from_arc(const ContourArc& arc) {
  return line_from_arc(arc.midpoint, arc.normal);
}

LinePencil line_from_pc(const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
  if ((p - q).norm() < 1e-9) {
    throw std::invalid_argument("degenerate point correspondence (p == q)");
  }
  const double rp = p.squaredNorm();
  const double rq = q.squaredNorm();
  LinePencil out;
  // cross((px, py, 1 + lambda rp), (qx, qy, 1 + lambda rq)); the third
  // coordinate px*qy - py*qx carries no lambda term.
  out.c0 = HomLine(p.y() - q.y(), q.x() - p.x(), p.x() * q.y() - p.y() * q.x());
  out.c1 = HomLine(p.y() * rq - q.y() * rp, q.x() * rp - p.x() * rq, 0.0);
  return out;
}

std::optional<VpPoly> vp_poly(const LinePencil& a, const LinePencil& b) {
  const Poly ax = pencil_coord_poly(a, 0), ay = pencil_coord_poly(a, 1),
             aw = pencil_coord_poly(a, 2);
  const Poly bx = pencil_coord_poly(b, 0), by = pencil_coord_poly(b, 1),
             bw = pencil_coord_poly(b, 2);
  VpPoly u;
  u.x = poly_det2(ay, bw, aw, by);
  u.y = poly_det2(aw, bx, ax, bw);
  u.w = poly_det2(ax, by, ay, bx);
  // Both constructions keep the third line coordinate free of lambda, so the
  // meet has degrees (<=1, <=1, <=2).
  assert(u.x.degree(1e-11) <= 1 && u.y.degree(1e-11) <= 1 && u.w.degree(1e-11) <= 2);
  const double scale = std::max({ax.max_abs_coeff(), ay.max_abs_coeff(), aw.max_abs_coeff()}) *
                       std::max({bx.max_abs_coeff(), by.max_abs_coeff(), bw.max_abs_coeff()});
  if (u.max_abs_coeff() <= 1e-12 * std::max(scale, 1e-300)) return std::nullopt;
  return u.normalized();
}

SolveResult solve_coplanar(const VpPoly& v1, const VpPoly& v2, const VpPoly& v3) {
  const VpPoly* vs[3] = {&v1, &v2, &v3};
  // det of the stacked incidence rows, expanded along the first row.
  const Poly m1 = poly_det2(v2.y, v3.w, v2.w, v3.y);
  const Poly m2 = poly_det2(v2.x, v3.w, v2.w, v3.x);
  const Poly m3 = poly_det2(v2.x, v3.y, v2.y, v3.x);
  const Poly det = v1.x * m1 - v1.y * m2 + v1.w * m3;
  assert(det.degree(1e-10) <= 4);

  SolveResult result;
  // Exact cancellation (coincident rows) leaves only rounding residue; the
  // degeneracy scale is the input magnitude, not the residue's own.
  const double det_scale =
      v1.max_abs_coeff() * v2.max_abs_coeff() * v3.max_abs_coeff();
  if (det.max_abs_coeff() <= 1e-12 * std::max(det_scale, 1e-300)) {
    result.status = SolveStatus::kDegenerateSample;
    return result;
  }
  std::vector<double> roots;
  try {
    roots = quartic_real_roots(det.trimmed());
  } catch (const ZeroPolynomial&) {
    result.status = SolveStatus::kDegenerateSample;
    return result;
  }
  for (double lambda : roots) {
    if (!lambda_admissible(lambda)) continue;
    Eigen::Matrix3d u_mat;
    for (int i = 0; i < 3; ++i) {
      u_mat.row(i) = vs[i]->at(lambda).normalized().transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(u_mat, Eigen::ComputeFullV);
    SolverOutput out;
    out.lambda = lambda;
    out.mode = ConfigMode::kCoplanar;
    out.vanishing_line = svd.matrixV().col(2);
    for (int i = 0; i < 3; ++i) out.vps.push_back(vs[i]->at(lambda).normalized());
    result.candidates.push_back(std::move(out));
  }
  if (result.candidates.empty()) result.status = SolveStatus::kNoRealRoot;
  return result;
}

SolveResult solve_manhattan(const VpPoly& v1, const VpPoly& v2, const VpPoly& v3,
                            double cross_check_tol) {
  const VpPoly* vs[3] = {&v1, &v2, &v3};
  // Orthogonality of pair (i, j) with w = diag(1/f^2, 1/f^2, 1):
  //   q_ij(lambda) + f^2 p_ij(lambda) = 0,
  // with q the xy entrywise product sum (degree <= 2) and p the product of
  // the w coordinates (degree <= 4).
  Poly q[3][3], p[3][3];
  auto pair = [&](int i, int j) {
    q[i][j] = vs[i]->x * vs[j]->x + vs[i]->y * vs[j]->y;
    p[i][j] = vs[i]->w * vs[j]->w;
  };
  pair(0, 1);
  pair(0, 2);
  pair(1, 2);
  // Eliminating f^2 between pairs leaves two degree-6 polynomials.
  const Poly e1 = q[0][1] * p[0][2] - q[0][2] * p[0][1];
  const Poly e2 = q[0][1] * p[1][2] - q[1][2] * p[0][1];
  assert(e1.degree(1e-9) <= 6 && e2.degree(1e-9) <= 6);

  SolveResult result;
  auto elim_scale = [](const Poly& a, const Poly& b, const Poly& c, const Poly& d) {
    return std::max(a.max_abs_coeff() * b.max_abs_coeff(),
                    c.max_abs_coeff() * d.max_abs_coeff());
  };
  const bool z1 = e1.max_abs_coeff() <=
                  1e-12 * std::max(elim_scale(q[0][1], p[0][2], q[0][2], p[0][1]), 1e-300);
  const bool z2 = e2.max_abs_coeff() <=
                  1e-12 * std::max(elim_scale(q[0][1], p[1][2], q[1][2], p[0][1]), 1e-300);
  if (z1 && z2) {
    result.status = SolveStatus::kDegenerateSample;
    return result;
  }
  std::vector<double> roots;
  auto add_roots = [&roots](const Poly& e) {
    for (double r : real_roots(e.trimmed())) roots.push_back(r);
  };
  if (!z1) add_roots(e1);
  if (!z2) add_roots(e2);
  std::sort(roots.begin(), roots.end());

  const Poly dq01 = q[0][1].derivative(), dp01 = p[0][1].derivative();
  const Poly dq02 = q[0][2].derivative(), dp02 = p[0][2].derivative();

  bool had_real_root = false;
  bool had_positive_f2 = false;
  for (double lambda : roots) {
    if (!lambda_admissible(lambda)) continue;
    had_real_root = true;
    // f^2 from the best-conditioned enforced pair.
    double f2 = 0.0;
    double best = -1.0;
    for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}}) {
      const double pe = p[i][j].eval(lambda);
      if (std::abs(pe) > best) {
        best = std::abs(pe);
        f2 = -q[i][j].eval(lambda) / pe;
      }
    }
    if (!(f2 > 0.0) || !std::isfinite(f2)) continue;
    // Joint Newton polish of (lambda, f^2) on the two enforced constraints;
    // the eliminated root alone can leave an ill-conditioned pair residual.
    for (int it = 0; it < 2; ++it) {
      const Eigen::Vector2d r(q[0][1].eval(lambda) + f2 * p[0][1].eval(lambda),
                              q[0][2].eval(lambda) + f2 * p[0][2].eval(lambda));
      Eigen::Matrix2d jac;
      jac << dq01.eval(lambda) + f2 * dp01.eval(lambda), p[0][1].eval(lambda),
          dq02.eval(lambda) + f2 * dp02.eval(lambda), p[0][2].eval(lambda);
      if (std::abs(jac.determinant()) < 1e-300) break;
      const Eigen::Vector2d step = jac.inverse() * r;
      const double lambda_new = lambda - step[0];
      const double f2_new = f2 - step[1];
      if (!std::isfinite(lambda_new) || !std::isfinite(f2_new) || !(f2_new > 0.0) ||
          !lambda_admissible(lambda_new)) {
        break;
      }
      lambda = lambda_new;
      f2 = f2_new;
    }
    if (!(f2 > 0.0) || !std::isfinite(f2)) continue;
    had_positive_f2 = true;
    const double f = std::sqrt(f2);
    HomPoint u[3];
    for (int i = 0; i < 3; ++i) u[i] = vs[i]->at(lambda).normalized();
    // Candidates whose enforced pairs stay inexact are numerically
    // untrustworthy and are dropped.
    if (orthogonality_residual(u[0], u[1], f) > 1e-9 ||
        orthogonality_residual(u[0], u[2], f) > 1e-9) {
      continue;
    }
    // The residual of the constraint not used to pin (lambda, f^2).
    const double res = std::max({orthogonality_residual(u[0], u[1], f),
                                 orthogonality_residual(u[0], u[2], f),
                                 orthogonality_residual(u[1], u[2], f)});
    auto rot = rotation_from_vps(u[0], u[1], f, /*ortho_tol=*/1.0);
    SolverOutput out;
    out.lambda = lambda;
    out.mode = ConfigMode::kManhattan;
    out.f = f;
    out.f_candidates = {f};
    out.R = rot;
    out.vps = {u[0], u[1], u[2]};
    out.cross_residual = res;
    result.candidates.push_back(std::move(out));
  }
  if (result.candidates.empty()) {
    result.status = had_real_root
                        ? (had_positive_f2 ? SolveStatus::kNoRealRoot : SolveStatus::kImaginaryFocal)
                        : SolveStatus::kNoRealRoot;
    return result;
  }
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const SolverOutput& a, const SolverOutput& b) {
              return a.cross_residual < b.cross_residual;
            });
  // Exact solutions exist for consistent samples; when present they make
  // every other candidate a spurious root match. Noisy samples satisfy the
  // unused constraint only approximately, so then near-consistent candidates
  // stand and consensus decides. kCrossKeepMax bounds how far "near" goes;
  // beyond it the sample does not fit the mutual-orthogonality model at all.
  constexpr double kCrossExact = 1e-9;
  constexpr double kCrossKeepMax = 0.05;
  const double front_res = result.candidates.front().cross_residual;
  const double keep_tol = front_res <= kCrossExact
                              ? kCrossExact
                              : (front_res <= cross_check_tol ? cross_check_tol : kCrossKeepMax);
  std::erase_if(result.candidates, [keep_tol](const SolverOutput& c) {
    return c.cross_residual > keep_tol;
  });
  if (result.candidates.empty()) {
    result.status = SolveStatus::kNoRealRoot;
    return result;
  }
  // Merge duplicate roots found through both eliminations.
  std::vector<SolverOutput> unique;
  for (auto& c : result.candidates) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const SolverOutput& u0) {
      return std::abs(u0.lambda - c.lambda) <= 1e-10;
    });
    if (!dup) unique.push_back(std::move(c));
  }
  result.candidates = std::move(unique);
  return result;
}

std::vector<double> solve_coincident(const VpPoly& va, const VpPoly& vb, double tol) {
  // Cross product of the two point polynomials: two cubics and a quadratic.
  const Poly cx = poly_det2(va.y, vb.w, va.w, vb.y);
  const Poly cy = poly_det2(va.w, vb.x, va.x, vb.w);
  const Poly cz = poly_det2(va.x, vb.y, va.y, vb.x);
  assert(cx.degree(1e-9) <= 3 && cy.degree(1e-9) <= 3 && cz.degree(1e-9) <= 2);
  const double scale = std::max(va.max_abs_coeff() * vb.max_abs_coeff(), 1e-300);
  std::vector<Poly> nontrivial;
  for (const Poly* c : {&cx, &cy, &cz}) {
    if (c->max_abs_coeff() > 1e-12 * scale) nontrivial.push_back(*c);
  }
  if (nontrivial.empty()) throw ZeroPolynomial();
  std::vector<double> roots = common_real_roots(nontrivial, tol);
  std::erase_if(roots, [](double r) { return !lambda_admissible(r); });
  return roots;
}

SolveStatus solve_manhattan_step2(const HomPoint& u1_in, double lambda,
                                  const LinePencil& line2, const LinePencil& line3,
                                  std::vector<Step2Output>* out) {
  out->clear();
  const HomPoint u1 = u1_in.normalized();
  struct Param {
    Eigen::Vector2d p, d;
    double alpha, beta;
  };
  auto parameterize = [&u1](const HomLine& s, Param* prm) {
    const double n2 = s.x() * s.x() + s.y() * s.y();
    if (n2 <= 1e-20) return false;
    prm->p = Eigen::Vector2d(-s.x() * s.z() / n2, -s.y() * s.z() / n2);
    prm->d = Eigen::Vector2d(-s.y(), s.x()) / std::sqrt(n2);
    const double a = u1.x() * prm->p.x() + u1.y() * prm->p.y();
    const double b = u1.x() * prm->d.x() + u1.y() * prm->d.y();
    // b == 0 leaves the first-stage point orthogonal to the whole line
    // direction: the linear substitution for t*w degenerates.
    if (std::abs(b) <= 1e-10) return false;
    prm->alpha = -u1.z() / b;
    prm->beta = -a / b;
    return true;
  };
  Param p2, p3;
  if (!parameterize(line2.at(lambda), &p2) || !parameterize(line3.at(lambda), &p3)) {
    return SolveStatus::kDegenerateGeometry;
  }
  // u_k = p_k + t_k d_k on its line; the two constraints against u1 are
  // linear in (t_k w, w): t_k w = alpha_k + beta_k w. Substituting into the
  // mutual constraint and clearing w gives a quadratic in w = 1/f^2.
  const double pp = p2.p.dot(p3.p);
  const double dp = p2.d.dot(p3.p);
  const double pd = p2.p.dot(p3.d);
  const double dd = p2.d.dot(p3.d);
  const double a2c = pp + p2.beta * dp + p3.beta * pd + p2.beta * p3.beta * dd;
  const double b2c = p2.alpha * dp + p3.alpha * pd +
                     (p2.alpha * p3.beta + p3.alpha * p2.beta) * dd + 1.0;
  const double c2c = p2.alpha * p3.alpha * dd;
  std::vector<double> ws;
  const double scale = std::max({std::abs(a2c), std::abs(b2c), std::abs(c2c)});
  if (scale == 0.0) return SolveStatus::kDegenerateGeometry;
  if (std::abs(a2c) <= 1e-14 * scale) {
    if (std::abs(b2c) <= 1e-14 * scale) return SolveStatus::kDegenerateGeometry;
    ws.push_back(-c2c / b2c);
  } else {
    const double disc = b2c * b2c - 4.0 * a2c * c2c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (b2c + (b2c >= 0 ? sq : -sq));
      ws.push_back(qq / a2c);
      if (qq != 0.0) ws.push_back(c2c / qq);
    }
  }
  for (double w : ws) {
    if (!(w > 0.0) || !std::isfinite(w)) continue;
    Step2Output s;
    s.f = 1.0 / std::sqrt(w);
    const double t2 = (p2.alpha + p2.beta * w) / w;
    const double t3 = (p3.alpha + p3.beta * w) / w;
    s.u2 = HomPoint(p2.p.x() + t2 * p2.d.x(), p2.p.y() + t2 * p2.d.y(), 1.0).normalized();
    s.u3 = HomPoint(p3.p.x() + t3 * p3.d.x(), p3.p.y() + t3 * p3.d.y(), 1.0).normalized();
    out->push_back(s);
  }
  return out->empty() ? SolveStatus::kImaginaryFocal : SolveStatus::kOk;
}

std::optional<double> focal_from_two_vps(const HomPoint& u1, const HomPoint& u2,
                                         FocalStatus* status) {
  const double denom = -u1.z() * u2.z();
  const double numer = u1.x() * u2.x() + u1.y() * u2.y();
  if (denom == 0.0) {
    if (status) *status = FocalStatus::kIdealPoint;
    return std::nullopt;
  }
  const double f2 = numer / denom;
  if (!(f2 > 0.0)) {
    if (status) *status = FocalStatus::kImaginaryFocal;
    return std::nullopt;
  }
  if (status) *status = FocalStatus::kOk;
  return std::sqrt(f2);
}

double orthogonality_residual(const HomPoint& u1, const HomPoint& u2, double f) {
  const Eigen::Vector3d w_sqrt(1.0 / f, 1.0 / f, 1.0);
  const Eigen::Vector3d a = u1.cwiseProduct(w_sqrt);
  const Eigen::Vector3d b = u2.cwiseProduct(w_sqrt);
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return std::abs(a.dot(b)) / denom;
}

std::optional<Eigen::Matrix3d> rotation_from_vps(const HomPoint& u1, const HomPoint& u2,
                                                 double f, double ortho_tol) {
  if (orthogonality_residual(u1, u2, f) > ortho_tol) return std::nullopt;
  const Eigen::Vector3d k_inv(1.0 / f, 1.0 / f, 1.0);
  const Eigen::Vector3d k_t(f, f, 1.0);
  Eigen::Matrix3d r;
  r.col(0) = u1.cwiseProduct(k_inv).normalized();
  r.col(1) = u2.cwiseProduct(k_inv).normalized();
  r.col(2) = (u1.cross(u2)).cwiseProduct(k_t).normalized();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d rot = svd.matrixU() * svd.matrixV().transpose();
  if (rot.determinant() < 0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    rot = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return rot;
}

const char* solver_name(SolverId id) {
  switch (id) {
    case SolverId::k4Pc2Ca: return "4PC+2CA";
    case SolverId::k2Pc4Ca: return "2PC+4CA";
    case SolverId::k5CaStar: return "5CA*";
    case SolverId::k6Ca: return "6CA";
    case SolverId::k6Pc: return "6PC";
  }
  return "?";
}

std::optional<SolverId> solver_from_name(const std::string& name) {
  if (name == "4PC+2CA") return SolverId::k4Pc2Ca;
  if (name == "2PC+4CA") return SolverId::k2Pc4Ca;
  if (name == "5CA*") return SolverId::k5CaStar;
  if (name == "6CA") return SolverId::k6Ca;
  if (name == "6PC") return SolverId::k6Pc;
  return std::nullopt;
}

bool fill_sample_pencils(const FeatureSet& fs, MinimalSample* sample) {
  const Normalizer nrm = fs.normalizer();
  for (SampleSlot& slot : sample->slots) {
    slot.pencils.clear();
    switch (slot.kind) {
      case SampleSlot::Kind::kArcPair:
      case SampleSlot::Kind::kArcTriple:
      case SampleSlot::Kind::kArcSingle: {
        for (int idx : slot.arc_indices) {
          const ContourArc& arc = fs.arcs[idx];
          slot.pencils.push_back(line_from_arc(nrm.to_norm(arc.midpoint), arc.normal));
        }
        break;
      }
      case SampleSlot::Kind::kPcPair:
      case SampleSlot::Kind::kPcTriple: {
        const RegionCorrespondence& rc = fs.regions[slot.region_index];
        const size_t want = slot.kind == SampleSlot::Kind::kPcTriple ? 3 : 2;
        for (size_t i = 0; i < 3 && slot.pencils.size() < want; ++i) {
          const Eigen::Vector2d p = nrm.to_norm(rc.frame_a[i]);
          const Eigen::Vector2d q = nrm.to_norm(rc.frame_b[i]);
          if ((p - q).norm() < 1e-9) continue;
          slot.pencils.push_back(line_from_pc(p, q));
        }
        if (slot.pencils.size() < want) return false;
        break;
      }
    }
  }
  return true;
}

namespace {

bool slot_is_pair(const SampleSlot& s) {
  return s.kind == SampleSlot::Kind::kArcPair || s.kind == SampleSlot::Kind::kPcPair;
}

bool slot_is_triple(const SampleSlot& s) {
  return s.kind == SampleSlot::Kind::kArcTriple || s.kind == SampleSlot::Kind::kPcTriple;
}

// Most-finite orthogonal-pair focal upgrades for a coplanar candidate.
void upgrade_coplanar_focal(SolverOutput* out) {
  std::vector<std::pair<double, std::pair<int, int>>> order;
  for (int i = 0; i < static_cast<int>(out->vps.size()); ++i) {
    for (int j = i + 1; j < static_cast<int>(out->vps.size()); ++j) {
      const double finiteness =
          std::abs(out->vps[i].normalized().z() * out->vps[j].normalized().z());
      order.push_back({finiteness, {i, j}});
    }
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [score, ij] : order) {
    if (score <= 1e-12) continue;
    auto f = focal_from_two_vps(out->vps[ij.first], out->vps[ij.second]);
    if (f) out->f_candidates.push_back(*f);
  }
  if (!out->f_candidates.empty()) out->f = out->f_candidates.front();
}

void append(SolveResult* into, SolveResult&& from) {
  for (auto& c : from.candidates) into->candidates.push_back(std::move(c));
  if (into->candidates.empty()) into->status = from.status;
}

}  // namespace

SolveResult dispatch(const MinimalSample& sample, double manhattan_cross_tol) {
  SolveResult result;
  const auto& slots = sample.slots;

  // Shape 1: three vanishing-point pencil pairs.
  if (slots.size() == 3 && std::all_of(slots.begin(), slots.end(), slot_is_pair)) {
    VpPoly vp[3];
    for (int i = 0; i < 3; ++i) {
      auto v = vp_poly(slots[i].pencils[0], slots[i].pencils[1]);
      if (!v) {
        result.status = SolveStatus::kIdenticalLines;
        return result;
      }
      vp[i] = *v;
    }
    SolveResult cop = solve_coplanar(vp[0], vp[1], vp[2]);
    for (auto& c : cop.candidates) upgrade_coplanar_focal(&c);
    append(&result, std::move(cop));
    const bool all_pc = std::all_of(slots.begin(), slots.end(), [](const SampleSlot& s) {
      return s.kind == SampleSlot::Kind::kPcPair;
    });
    if (!all_pc) {
      // Translated-repeat detections rarely provide orthogonal structure;
      // point-only samples are treated as coplanar.
      append(&result, solve_manhattan(vp[0], vp[1], vp[2], manhattan_cross_tol));
    }
    if (!result.candidates.empty()) result.status = SolveStatus::kOk;
    return result;
  }

  // Triple-led shapes: the triple pins lambda through coincidence.
  if (slots.size() >= 2 && slot_is_triple(slots[0])) {
    const auto& tri = slots[0].pencils;
    auto va = vp_poly(tri[0], tri[1]);
    auto vb = vp_poly(tri[0], tri[2]);
    if (!va || !vb) {
      result.status = SolveStatus::kIdenticalLines;
      return result;
    }
    std::vector<double> lambdas;
    try {
      lambdas = solve_coincident(*va, *vb);
    } catch (const ZeroPolynomial&) {
      result.status = SolveStatus::kDegenerateSample;
      return result;
    }
    if (lambdas.empty()) {
      result.status = SolveStatus::kNoRealRoot;
      return result;
    }

    // Coplanar chain: triple + pair -> second VP, focal, vanishing line.
    if (slots.size() == 2 && slot_is_pair(slots[1])) {
      for (double lambda : lambdas) {
        const HomPoint u1 = va->at(lambda).normalized();
        const HomLine l1 = slots[1].pencils[0].at(lambda);
        const HomLine l2 = slots[1].pencils[1].at(lambda);
        const HomPoint u2 = l1.cross(l2);
        if (u2.norm() <= 1e-14) continue;
        SolverOutput out;
        out.lambda = lambda;
        out.mode = ConfigMode::kCoplanar;
        out.vps = {u1, u2.normalized()};
        const HomLine vl = u1.cross(u2.normalized());
        if (vl.norm() > 1e-14) out.vanishing_line = vl.normalized();
        auto f = focal_from_two_vps(u1, u2);
        if (f) {
          out.f = *f;
          out.f_candidates = {*f};
        }
        result.candidates.push_back(std::move(out));
      }
      result.status = result.candidates.empty() ? SolveStatus::kNoRealRoot : SolveStatus::kOk;
      return result;
    }

    // Manhattan chain: triple + two single lines -> focal and two more VPs.
    if (slots.size() == 3 && slots[1].kind == SampleSlot::Kind::kArcSingle &&
        slots[2].kind == SampleSlot::Kind::kArcSingle) {
      SolveStatus last = SolveStatus::kNoRealRoot;
      for (double lambda : lambdas) {
        const HomPoint u1 = va->at(lambda).normalized();
        std::vector<Step2Output> stage2;
        last = solve_manhattan_step2(u1, lambda, slots[1].pencils[0], slots[2].pencils[0],
                                     &stage2);
        for (const Step2Output& s : stage2) {
          SolverOutput out;
          out.lambda = lambda;
          out.mode = ConfigMode::kManhattan;
          out.f = s.f;
          out.f_candidates = {s.f};
          out.vps = {u1, s.u2, s.u3};
          out.R = rotation_from_vps(s.u2, s.u3, s.f, /*ortho_tol=*/1.0);
          out.cross_residual = orthogonality_residual(u1, s.u2, s.f);
          result.candidates.push_back(std::move(out));
        }
      }
      result.status = result.candidates.empty() ? last : SolveStatus::kOk;
      return result;
    }
  }

  result.status = SolveStatus::kDegenerateSample;
  return result;
}

}  // namespace autocalib
