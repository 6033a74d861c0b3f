#pragma once

#include <optional>
#include <string>

#include "autocalib/eval.hpp"
#include "autocalib/ransac.hpp"

namespace autocalib {

inline constexpr const char* kToolVersion = "autocalib 0.1.0";

// Final calibration report written by the calibrate command. The division
// parameter is reported in both pixel and normalized units together with the
// normalization constant.
struct CalibrationReport {
  Calibration calibration;
  ConfigMode mode = ConfigMode::kCoplanar;
  std::vector<HomPoint> vps;  // normalized units
  std::vector<int> inlier_arcs;
  std::vector<int> inlier_regions;
  double msac_score = 0;
  std::string source_solver;
  RansacReport ransac;
  std::optional<double> warp_vs_gt;
  uint64_t seed = 0;
};

std::string serialize_report(const CalibrationReport& report);
CalibrationReport parse_report(const std::string& json_text);
void save_report(const CalibrationReport& report, const std::string& path);
CalibrationReport load_report(const std::string& path);

// Throws ParseError when the serialized report does not round-trip through
// the schema.
void validate_report_text(const std::string& json_text);

// Ground-truth / standalone calibration files:
// { "image": {"width", "height"}, "f_px", "lambda_px" | "lambda_norm",
//   optional "R" (row-major 9) }.
Calibration load_calibration(const std::string& path);
std::string serialize_calibration(const Calibration& calib);
void save_calibration(const Calibration& calib, const std::string& path);

}  // namespace autocalib
