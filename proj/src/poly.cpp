#include "autocalib/poly.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace autocalib {

namespace {

constexpr double kDedupTol = 1e-10;

// Up to three Newton steps; keeps the iterate with the smallest residual.
double polish_root(const Poly& p, const Poly& dp, double x) {
  double best_x = x;
  double best_r = std::abs(p.eval(x));
  for (int it = 0; it < 3; ++it) {
    const double d = dp.eval(x);
    if (d == 0.0 || !std::isfinite(d)) break;
    x -= p.eval(x) / d;
    if (!std::isfinite(x)) break;
    const double r = std::abs(p.eval(x));
    if (r < best_r) {
      best_r = r;
      best_x = x;
    }
  }
  return best_x;
}

std::vector<double> finalize_roots(const Poly& p, std::vector<double> roots) {
  const Poly dp = p.derivative();
  for (double& r : roots) r = polish_root(p, dp, r);
  std::sort(roots.begin(), roots.end());

  // Numerical clusters around a multiple root spread far wider than the
  // dedup tolerance, so nearby roots also merge when the derivative vanishes
  // there as well. Genuinely distinct simple roots keep a bounded derivative
  // and are never merged beyond the base tolerance.
  auto same_cluster = [&](double a, double b) {
    if (b - a <= kDedupTol) return true;
    const double mid = 0.5 * (a + b);
    return b - a <= 1e-6 * std::max(1.0, std::abs(mid)) &&
           std::abs(dp.eval(mid)) <= 1e-5 * residual_scale(dp, mid) &&
           std::abs(p.eval(mid)) <= 1e-9 * residual_scale(p, mid);
  };
  std::vector<double> out;
  size_t i = 0;
  while (i < roots.size()) {
    size_t j = i + 1;
    double sum = roots[i];
    while (j < roots.size() && same_cluster(roots[j - 1], roots[j])) sum += roots[j++];
    double rep = polish_root(p, dp, sum / static_cast<double>(j - i));
    if (std::abs(p.eval(rep)) <= 1e-9 * residual_scale(p, rep)) out.push_back(rep);
    i = j;
  }
  return out;
}

std::vector<double> companion_real_roots(const Poly& p) {
  const Poly q = p.trimmed();
  const int n = q.degree();
  if (n < 1) return {};
  const auto& c = q.coeffs();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[i] / c[n];
  companion.block(1, 0, n - 1, n - 1).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = es.eigenvalues()[i];
    // Eigenvalue pairs from real multiple roots carry small spurious
    // imaginary parts; candidates are validated by polish + residual later.
    if (std::abs(z.imag()) <= 1e-6 * std::max(1.0, std::abs(z.real()))) {
      roots.push_back(z.real());
    }
  }
  return roots;
}

int solve_quadratic(double c0, double c1, double c2, double out[2]) {
  if (c2 == 0.0) {
    if (c1 == 0.0) return 0;
    out[0] = -c0 / c1;
    return 1;
  }
  double disc = c1 * c1 - 4.0 * c2 * c0;
  // A barely-negative discriminant is a tangency at this precision.
  if (disc < 0.0 && disc >= -1e-12 * (c1 * c1 + 4.0 * std::abs(c2 * c0))) disc = 0.0;
  if (disc < 0.0) return 0;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (c1 + (c1 >= 0 ? sq : -sq));
  int n = 0;
  if (c2 != 0.0) out[n++] = q / c2;
  if (q != 0.0) {
    const double r = c0 / q;
    if (n == 0 || r != out[0]) out[n++] = r;
  } else {
    out[n++] = 0.0;
  }
  return n;
}

// One real root of a monic depressed-form cubic x^3 + ax^2 + bx + c.
double cubic_one_real_root(double a, double b, double c) {
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  double y;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    y = std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s);
  } else {
    const double r = std::sqrt(-p * p * p / 27.0);
    const double phi = std::acos(std::clamp(-q / (2.0 * r), -1.0, 1.0));
    y = 2.0 * std::cbrt(r) * std::cos(phi / 3.0);
  }
  return y - a / 3.0;
}

// Ferrari: split the depressed quartic into two quadratics via a resolvent
// cubic root. Returns false when the split is numerically untrustworthy.
bool ferrari_roots(double a, double b, double c, double d,
                   std::vector<double>* roots) {
  // x = y - a/4 removes the cubic term: y^4 + p y^2 + q y + r.
  const double a2 = a * a;
  const double p = b - 3.0 * a2 / 8.0;
  const double q = c - a * b / 2.0 + a2 * a / 8.0;
  const double r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
  const double shift = a / 4.0;

  if (std::abs(q) < 1e-14 * (1.0 + std::abs(p) + std::abs(r))) {
    // Biquadratic: y^4 + p y^2 + r.
    double z[2];
    const int nz = solve_quadratic(r, p, 1.0, z);
    for (int i = 0; i < nz; ++i) {
      if (z[i] < 0.0) continue;
      const double s = std::sqrt(z[i]);
      roots->push_back(s - shift);
      roots->push_back(-s - shift);
    }
    return true;
  }

  // Resolvent: z^3 - p z^2 - 4 r z + (4 p r - q^2) = 0; need z with z - p > 0.
  const double z = cubic_one_real_root(-p, -4.0 * r, 4.0 * p * r - q * q);
  const double u2 = z - p;
  if (u2 <= 0.0) return false;
  const double u = std::sqrt(u2);
  const double v = 0.5 * (z - q / u);
  const double w = 0.5 * (z + q / u);
  // (y^2 + u y + v)(y^2 - u y + w) reproduces the depressed quartic.
  double t[2];
  int n = solve_quadratic(v, u, 1.0, t);
  for (int i = 0; i < n; ++i) roots->push_back(t[i] - shift);
  n = solve_quadratic(w, -u, 1.0, t);
  for (int i = 0; i < n; ++i) roots->push_back(t[i] - shift);
  return true;
}

}  // namespace

int Poly::degree(double rel_tol) const {
  const double scale = max_abs_coeff();
  if (scale == 0.0) return -1;
  for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i) {
    if (std::abs(c_[i]) > rel_tol * scale) return i;
  }
  return -1;
}

double Poly::max_abs_coeff() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

double Poly::eval(double x) const {
  double acc = 0.0;
  for (size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
  return acc;
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly();
  std::vector<double> d(c_.size() - 1);
  for (size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
  return Poly(std::move(d));
}

Poly Poly::trimmed(double rel_tol) const {
  const int deg = degree(rel_tol);
  if (deg < 0) return Poly();
  return Poly(std::vector<double>(c_.begin(), c_.begin() + deg + 1));
}

Poly Poly::operator+(const Poly& o) const {
  std::vector<double> out(std::max(c_.size(), o.c_.size()), 0.0);
  for (size_t i = 0; i < out.size(); ++i) out[i] = (*this)[i] + o[i];
  return Poly(std::move(out));
}

Poly Poly::operator-(const Poly& o) const {
  std::vector<double> out(std::max(c_.size(), o.c_.size()), 0.0);
  for (size_t i = 0; i < out.size(); ++i) out[i] = (*this)[i] - o[i];
  return Poly(std::move(out));
}

Poly Poly::operator*(const Poly& o) const {
  if (c_.empty() || o.c_.empty()) return Poly();
  std::vector<double> out(c_.size() + o.c_.size() - 1, 0.0);
  for (size_t i = 0; i < c_.size(); ++i) {
    for (size_t j = 0; j < o.c_.size(); ++j) out[i + j] += c_[i] * o.c_[j];
  }
  return Poly(std::move(out));
}

Poly Poly::operator*(double s) const {
  std::vector<double> out(c_);
  for (double& v : out) v *= s;
  return Poly(std::move(out));
}

double residual_scale(const Poly& p, double x) {
  const int deg = std::max(0, p.degree());
  return p.max_abs_coeff() * std::pow(std::max(1.0, std::abs(x)), deg);
}

std::vector<double> quartic_real_roots(const Poly& p) {
  const Poly q = p.trimmed();
  const int deg = q.degree();
  if (deg < 0) throw ZeroPolynomial();
  if (deg == 0) return {};
  const auto& c = q.coeffs();
  std::vector<double> roots;
  if (deg == 1) {
    roots.push_back(-c[0] / c[1]);
  } else if (deg == 2) {
    double out[2];
    const int n = solve_quadratic(c[0], c[1], c[2], out);
    roots.assign(out, out + n);
  } else if (deg == 3) {
    const double y = cubic_one_real_root(c[2] / c[3], c[1] / c[3], c[0] / c[3]);
    // Deflate by the found root and solve the remaining quadratic.
    const double b2 = c[3];
    const double b1 = c[2] + y * b2;
    const double b0 = c[1] + y * b1;
    roots.push_back(y);
    double out[2];
    const int n = solve_quadratic(b0, b1, b2, out);
    roots.insert(roots.end(), out, out + n);
  } else {
    const double a = c[3] / c[4];
    const double b = c[2] / c[4];
    const double cc = c[1] / c[4];
    const double d = c[0] / c[4];
    // Near-degenerate resolvents are handed to the companion fallback.
    const double disc_scale = std::max({1.0, std::abs(b), std::abs(cc), std::abs(d)});
    bool ok = false;
    if (std::isfinite(disc_scale)) {
      ok = ferrari_roots(a, b, cc, d, &roots);
    }
    if (!ok) return finalize_roots(q, companion_real_roots(q));
    // Ferrari can lose a nearly-double pair; cross-check the count.
    auto polished = finalize_roots(q, std::move(roots));
    auto fallback = finalize_roots(q, companion_real_roots(q));
    if (fallback.size() > polished.size()) return fallback;
    return polished;
  }
  return finalize_roots(q, std::move(roots));
}

std::vector<double> real_roots(const Poly& p) {
  const Poly q = p.trimmed();
  if (q.degree() < 0) throw ZeroPolynomial();
  return finalize_roots(q, companion_real_roots(q));
}

std::vector<double> common_real_roots(const std::vector<Poly>& ps, double tol) {
  const Poly* lead = nullptr;
  int lead_deg = -1;
  std::vector<const Poly*> rest;
  for (const Poly& p : ps) {
    const int deg = p.degree(1e-13);
    if (deg < 0) continue;
    if (lead == nullptr || deg < lead_deg) {
      if (lead != nullptr) rest.push_back(lead);
      lead = &p;
      lead_deg = deg;
    } else {
      rest.push_back(&p);
    }
  }
  if (lead == nullptr) throw ZeroPolynomial();
  std::vector<double> out;
  for (double r : real_roots(*lead)) {
    bool shared = true;
    for (const Poly* p : rest) {
      if (std::abs(p->eval(r)) > tol * residual_scale(*p, r)) {
        shared = false;
        break;
      }
    }
    if (shared) out.push_back(r);
  }
  return out;
}

}  // namespace autocalib
