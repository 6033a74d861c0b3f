#pragma once

#include <optional>

#include <Eigen/Dense>

#include "autocalib/errors.hpp"

namespace autocalib {

// Homogeneous image entities. Points and lines are both 3-vectors defined up
// to scale; incidence is l.dot(x) == 0.
using HomPoint = Eigen::Vector3d;
using HomLine = Eigen::Vector3d;

// Implicit circle A(x^2+y^2) + Bx + Cy + D = 0. A == 0 degenerates to the
// line Bx + Cy + D = 0, which is the image of a scene line through the
// distortion center.
struct GenCircle {
  double A = 0, B = 0, C = 0, D = 0;

  bool is_line(double tol = 1e-12) const;
  Eigen::Vector2d center() const;
  double radius() const;
  // Unsigned Euclidean distance from a point to the zero set.
  double distance(const Eigen::Vector2d& p) const;
};

// Coordinate normalization used by all solver math: pixels shifted to the
// image center and divided by half the image diagonal. The division-model
// parameter transforms as lambda_norm = lambda_px * s^2.
struct Normalizer {
  double cx = 0, cy = 0, s = 1;

  static Normalizer for_image(int width, int height);
  Eigen::Vector2d to_norm(const Eigen::Vector2d& px) const {
    return {(px.x() - cx) / s, (px.y() - cy) / s};
  }
  Eigen::Vector2d to_px(const Eigen::Vector2d& n) const {
    return {n.x() * s + cx, n.y() * s + cy};
  }
  Eigen::Vector2d to_centered_px(const Eigen::Vector2d& px) const {
    return {px.x() - cx, px.y() - cy};
  }
  double lambda_to_norm(double lambda_px) const { return lambda_px * s * s; }
  double lambda_to_px(double lambda_norm) const { return lambda_norm / (s * s); }
};

// Camera model recovered by the estimator. lambda is in normalized units,
// f in pixels; the principal point and distortion center sit at the image
// center. R maps Manhattan-frame directions to camera coordinates.
struct Calibration {
  double lambda = 0;                       // normalized units
  double f = 0;                            // pixels
  int width = 0, height = 0;
  std::optional<Eigen::Matrix3d> R;
  std::optional<HomLine> vanishing_line;   // normalized units

  Normalizer normalizer() const { return Normalizer::for_image(width, height); }
  double lambda_px() const { return normalizer().lambda_to_px(lambda); }
};

// Division-model undistortion of a centered point: (x, y) -> (x, y, 1+lambda r^2).
HomPoint undistort(const Eigen::Vector2d& p, double lambda);

// Inverse mapping. Picks the radial root branch continuous at lambda = 0.
// Returns nullopt when no real radial root exists (pincushion, far field).
std::optional<Eigen::Vector2d> try_distort(const Eigen::Vector2d& p, double lambda);

// Throwing wrapper of try_distort.
Eigen::Vector2d distort(const Eigen::Vector2d& p, double lambda);

// The distorted image of a line under the division model is a circle:
// l = (a,b,c) maps to (lambda*c, a, b, c).
GenCircle distort_line(const HomLine& l, double lambda);

// Homography with third row l^T; maps l to the line at infinity.
// *at_infinity (optional) reports the degenerate l = (0,0,c) input, for
// which the identity is returned.
Eigen::Matrix3d affine_rectify_homography(const HomLine& l, bool* at_infinity = nullptr);

// Conjugate rotation K R^T K^-1 that metrically rectifies Manhattan-aligned
// planes after undistortion. K = diag(f, f, 1) about the principal point, so
// the input domain is centered coordinates in the same units as f.
// Throws MissingRotation when the calibration has no R.
Eigen::Matrix3d metric_rectify_homography(const Calibration& calib, double f_units_scale = 1.0);

}  // namespace autocalib
