#include "autocalib/rectify.hpp"

#include <algorithm>
#include <cmath>

namespace autocalib {

namespace {

Eigen::Matrix3d plane_permutation(int plane_index) {
  // Rotation sending the selected Manhattan axis to the optical axis.
  Eigen::Matrix3d p = Eigen::Matrix3d::Identity();
  if (plane_index == 1) {
    p << 0, 0, 1, 0, 1, 0, -1, 0, 0;  // x -> z
  } else if (plane_index == 2) {
    p << 1, 0, 0, 0, 0, 1, 0, -1, 0;  // y -> z
  }
  return p;
}

}  // namespace

Image rectify_image(const Image& input, const Calibration& calib, const RectifyOptions& opts,
                    RectifyFraming* framing) {
  const double cx = 0.5 * input.width;
  const double cy = 0.5 * input.height;
  const double lambda_px =
      Normalizer::for_image(input.width, input.height).lambda_to_px(calib.lambda);

  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  if (opts.mode == RectifyMode::kAffine) {
    if (!calib.vanishing_line) {
      throw std::invalid_argument("affine rectification needs a vanishing line");
    }
    // The stored line lives in normalized units; bring it to centered pixels.
    const Normalizer nrm = calib.normalizer();
    HomLine l(calib.vanishing_line->x() / nrm.s, calib.vanishing_line->y() / nrm.s,
              calib.vanishing_line->z());
    const double n = std::hypot(l.x(), l.y());
    if (n > 1e-14 * std::abs(l.z())) l /= n;
    h = affine_rectify_homography(l);
  } else if (opts.mode == RectifyMode::kMetric) {
    if (!calib.R) throw MissingRotation();
    Calibration c = calib;
    c.R = plane_permutation(opts.plane_index) * (*calib.R);
    h = metric_rectify_homography(c);
  }

  // The homography is only defined up to sign; orient it so the bulk of the
  // image lands on the positive side.
  {
    int positive = 0, negative = 0;
    for (double fy : {0.25, 0.5, 0.75}) {
      for (double fx : {0.25, 0.5, 0.75}) {
        const HomPoint u = undistort(
            Eigen::Vector2d(fx * input.width - cx, fy * input.height - cy), lambda_px);
        const double w = (h * u).z();
        (w > 0 ? positive : negative) += 1;
      }
    }
    if (negative > positive) h = -h;
  }

  auto forward = [&](double x, double y, Eigen::Vector2d* out) {
    const HomPoint u = undistort(Eigen::Vector2d(x - cx, y - cy), lambda_px);
    const HomPoint q = h * u;
    if (q.z() <= 1e-9 * q.norm()) return false;
    *out = q.hnormalized();
    return true;
  };

  // Fit the output framing to the warped image bounds.
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  const int step = std::max(1, std::min(input.width, input.height) / 64);
  for (int y = 0; y < input.height; y += step) {
    for (int x = 0; x < input.width; x += step) {
      Eigen::Vector2d q;
      if (!forward(x, y, &q)) continue;
      xmin = std::min(xmin, q.x());
      xmax = std::max(xmax, q.x());
      ymin = std::min(ymin, q.y());
      ymax = std::max(ymax, q.y());
    }
  }
  if (!(xmax > xmin && ymax > ymin)) {
    throw OutOfRange("rectified image bounds are empty");
  }
  double scale = 1.0;
  const double long_side = std::max(xmax - xmin, ymax - ymin);
  if (long_side + 1 > opts.max_output_dim) scale = (opts.max_output_dim - 1) / long_side;
  const int out_w = std::max(1, static_cast<int>(std::lround((xmax - xmin) * scale)) + 1);
  const int out_h = std::max(1, static_cast<int>(std::lround((ymax - ymin) * scale)) + 1);

  if (framing) {
    framing->xmin = xmin;
    framing->ymin = ymin;
    framing->scale = scale;
  }
  const Eigen::Matrix3d h_inv = h.inverse();
  Image out = Image::create(out_w, out_h, input.channels, 0);
  std::vector<double> px(input.channels);
  for (int j = 0; j < out_h; ++j) {
    for (int i = 0; i < out_w; ++i) {
      const double qx = xmin + i / scale;
      const double qy = ymin + j / scale;
      const HomPoint u_h = h_inv * HomPoint(qx, qy, 1.0);
      if (std::abs(u_h.z()) < 1e-12 * u_h.norm()) continue;
      const Eigen::Vector2d u = u_h.hnormalized();
      if (u_h.z() < 0) continue;  // behind the horizon
      const auto d = try_distort(u, lambda_px);
      if (!d) continue;
      if (!input.sample(d->x() + cx, d->y() + cy, px.data())) continue;
      for (int c = 0; c < input.channels; ++c) {
        out.set(i, j, c, static_cast<uint8_t>(std::clamp(px[c], 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace autocalib
