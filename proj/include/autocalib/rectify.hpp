#pragma once

#include <string>

#include "autocalib/geometry.hpp"
#include "autocalib/image.hpp"

namespace autocalib {

enum class RectifyMode { kUndistort, kAffine, kMetric };

struct RectifyOptions {
  RectifyMode mode = RectifyMode::kUndistort;
  int plane_index = 3;       // Manhattan axis sent to the optical axis (1..3)
  int max_output_dim = 4096; // cap on the auto-fit output framing
};

// Output pixel (i, j) shows rectified-plane coordinate
// (xmin + i / scale, ymin + j / scale).
struct RectifyFraming {
  double xmin = 0, ymin = 0, scale = 1;
};

// Renders the rectified view of a distorted image by inverse mapping every
// output pixel through (framing o homography o undistortion)^-1 with
// bilinear sampling; pixels without a source are black. The output framing
// is fit to the warped image bounds. Throws MissingRotation when metric mode
// is requested without a rotation.
Image rectify_image(const Image& input, const Calibration& calib, const RectifyOptions& opts,
                    RectifyFraming* framing = nullptr);

}  // namespace autocalib
