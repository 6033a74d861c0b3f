#include "autocalib/geometry.hpp"

#include <cmath>

namespace autocalib {

bool GenCircle::is_line(double tol) const {
  const double scale = std::max({std::abs(A), std::abs(B), std::abs(C), std::abs(D)});
  return scale == 0.0 || std::abs(A) <= tol * scale;
}

Eigen::Vector2d GenCircle::center() const {
  return {-B / (2.0 * A), -C / (2.0 * A)};
}

double GenCircle::radius() const {
  const double disc = B * B + C * C - 4.0 * A * D;
  return disc > 0.0 ? std::sqrt(disc) / (2.0 * std::abs(A)) : 0.0;
}

double GenCircle::distance(const Eigen::Vector2d& p) const {
  if (is_line()) {
    const double n = std::hypot(B, C);
    if (n == 0.0) return 0.0;
    return std::abs(B * p.x() + C * p.y() + D) / n;
  }
  return std::abs((p - center()).norm() - radius());
}

Normalizer Normalizer::for_image(int width, int height) {
  Normalizer n;
  n.cx = 0.5 * width;
  n.cy = 0.5 * height;
  n.s = 0.5 * std::hypot(static_cast<double>(width), static_cast<double>(height));
  return n;
}

HomPoint undistort(const Eigen::Vector2d& p, double lambda) {
  return {p.x(), p.y(), 1.0 + lambda * p.squaredNorm()};
}

std::optional<Eigen::Vector2d> try_distort(const Eigen::Vector2d& p, double lambda) {
  const double ru2 = p.squaredNorm();
  const double disc = 1.0 - 4.0 * lambda * ru2;
  if (disc < 0.0) return std::nullopt;
  // lambda*ru*rt^2 - rt + ru = 0; the branch below tends to rt = ru as
  // lambda -> 0 and stays numerically stable for lambda < 0.
  const double scale = 2.0 / (1.0 + std::sqrt(disc));
  return Eigen::Vector2d(p * scale);
}

Eigen::Vector2d distort(const Eigen::Vector2d& p, double lambda) {
  auto q = try_distort(p, lambda);
  if (!q) throw OutOfRange("no real radial root for distortion");
  return *q;
}

GenCircle distort_line(const HomLine& l, double lambda) {
  return GenCircle{lambda * l.z(), l.x(), l.y(), l.z()};
}

Eigen::Matrix3d affine_rectify_homography(const HomLine& l, bool* at_infinity) {
  const double n = std::hypot(l.x(), l.y());
  if (at_infinity) *at_infinity = false;
  if (n <= 1e-14 * std::abs(l.z())) {
    if (at_infinity) *at_infinity = true;
    return Eigen::Matrix3d::Identity();
  }
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  h.row(2) = (l / n).transpose();
  return h;
}

Eigen::Matrix3d metric_rectify_homography(const Calibration& calib, double f_units_scale) {
  if (!calib.R) throw MissingRotation();
  const double f = calib.f * f_units_scale;
  const Eigen::DiagonalMatrix<double, 3> k(f, f, 1.0);
  const Eigen::DiagonalMatrix<double, 3> k_inv(1.0 / f, 1.0 / f, 1.0);
  return k * calib.R->transpose() * k_inv;
}

}  // namespace autocalib
