#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace autocalib {

// Minimal raster container backed by binary PGM (P5) / PPM (P6) files.
struct Image {
  int width = 0, height = 0, channels = 1;
  std::vector<uint8_t> data;  // row-major, interleaved channels

  static Image create(int w, int h, int ch, uint8_t fill = 0);
  uint8_t at(int x, int y, int c) const { return data[(y * width + x) * channels + c]; }
  void set(int x, int y, int c, uint8_t v) { data[(y * width + x) * channels + c] = v; }

  // Bilinear sample; false when (x, y) falls outside the image.
  bool sample(double x, double y, double* out) const;
};

Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

}  // namespace autocalib
