#pragma once

#include <cstddef>
#include <vector>

#include "autocalib/errors.hpp"

namespace autocalib {

// Univariate real polynomial with coefficients in ascending power order.
// Degrees stay small (<= 8) throughout the solver stack.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {}
  Poly(std::initializer_list<double> coeffs) : c_(coeffs) {}

  static Poly zero() { return Poly(); }
  static Poly constant(double v) { return Poly({v}); }

  const std::vector<double>& coeffs() const { return c_; }
  double operator[](size_t i) const { return i < c_.size() ? c_[i] : 0.0; }

  // Degree after trimming trailing coefficients below rel_tol * max|c|.
  // Returns -1 for the zero polynomial.
  int degree(double rel_tol = 0.0) const;

  bool is_zero(double rel_tol = 1e-14) const { return degree(rel_tol) < 0; }
  double max_abs_coeff() const;

  double eval(double x) const;           // Horner
  Poly derivative() const;
  Poly trimmed(double rel_tol = 1e-13) const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double s) const;

 private:
  std::vector<double> c_;
};

// Natural residual scale of p at x: max|c| * max(1,|x|)^deg.
double residual_scale(const Poly& p, double x);

// All real roots of a polynomial of degree <= 4 in closed form
// (Ferrari resolvent), falling back to companion-matrix eigenvalues when
// the resolvent is ill-conditioned. Roots are Newton-polished, deduplicated
// within 1e-10 and sorted ascending. Throws ZeroPolynomial on the zero input.
std::vector<double> quartic_real_roots(const Poly& p);

// All real roots via companion-matrix eigenvalues, polished and deduplicated
// like quartic_real_roots. Handles any degree the solvers produce (<= 8).
std::vector<double> real_roots(const Poly& p);

// Real roots of the lowest-degree nonzero member at which every other
// nonzero member evaluates below tol * its residual scale. Throws
// ZeroPolynomial when all members vanish identically.
std::vector<double> common_real_roots(const std::vector<Poly>& ps, double tol);

}  // namespace autocalib
