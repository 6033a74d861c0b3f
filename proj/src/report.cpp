#include "autocalib/report.hpp"

#include <fstream>

#include <json.hpp>

namespace autocalib {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::Matrix3d& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::Matrix3d matrix_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) throw ParseError("rotation must be 9 numbers");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j[3 * r + c].get<double>();
  }
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

std::string serialize_report(const CalibrationReport& report) {
  const Calibration& c = report.calibration;
  const Normalizer nrm = c.normalizer();
  json doc;
  doc["tool"] = kToolVersion;
  doc["seed"] = report.seed;
  doc["image"] = {{"width", c.width}, {"height", c.height}};
  json jcal;
  jcal["lambda_px"] = c.lambda_px();
  jcal["lambda_norm"] = c.lambda;
  jcal["norm_scale"] = nrm.s;
  jcal["f_px"] = c.f;
  jcal["principal_point"] = {nrm.cx, nrm.cy};
  jcal["mode"] = report.mode == ConfigMode::kCoplanar ? "coplanar" : "manhattan";
  if (c.R) jcal["R"] = matrix_to_json(*c.R);
  if (c.vanishing_line) {
    jcal["vanishing_line_norm"] = {c.vanishing_line->x(), c.vanishing_line->y(),
                                   c.vanishing_line->z()};
  }
  json jvps = json::array();
  for (const auto& u : report.vps) jvps.push_back({u.x(), u.y(), u.z()});
  jcal["vps_norm"] = jvps;
  doc["calibration"] = jcal;
  doc["inliers"] = {{"arcs", report.inlier_arcs}, {"regions", report.inlier_regions}};
  doc["msac_score"] = report.msac_score;
  doc["solver"] = report.source_solver;
  json jstats;
  for (const auto& [name, st] : report.ransac.per_solver) {
    jstats[name] = {{"invoked", st.invoked},
                    {"produced", st.produced},
                    {"infeasible", st.infeasible},
                    {"best_hits", st.best_hits}};
  }
  doc["solver_stats"] = jstats;
  json jtrace = json::array();
  for (const auto& t : report.ransac.best_trace) {
    jtrace.push_back({{"iteration", t.iteration}, {"inliers", t.inliers}, {"msac", t.msac}});
  }
  doc["best_trace"] = jtrace;
  doc["iterations_run"] = report.ransac.iterations_run;
  doc["early_exit"] = report.ransac.early_exit;
  if (report.warp_vs_gt) doc["warp_vs_gt_px"] = *report.warp_vs_gt;
  return doc.dump(2) + "\n";
}

CalibrationReport parse_report(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  try {
    CalibrationReport report;
    report.seed = doc.value("seed", 0ull);
    Calibration& c = report.calibration;
    c.width = doc.at("image").at("width").get<int>();
    c.height = doc.at("image").at("height").get<int>();
    const json& jcal = doc.at("calibration");
    c.lambda = jcal.at("lambda_norm").get<double>();
    c.f = jcal.at("f_px").get<double>();
    report.mode = jcal.at("mode").get<std::string>() == "manhattan" ? ConfigMode::kManhattan
                                                                    : ConfigMode::kCoplanar;
    if (jcal.contains("R")) c.R = matrix_from_json(jcal["R"]);
    if (jcal.contains("vanishing_line_norm")) {
      const auto& jl = jcal["vanishing_line_norm"];
      c.vanishing_line = HomLine(jl[0].get<double>(), jl[1].get<double>(), jl[2].get<double>());
    }
    for (const auto& ju : jcal.at("vps_norm")) {
      report.vps.push_back(HomPoint(ju[0].get<double>(), ju[1].get<double>(), ju[2].get<double>()));
    }
    report.inlier_arcs = doc.at("inliers").at("arcs").get<std::vector<int>>();
    report.inlier_regions = doc.at("inliers").at("regions").get<std::vector<int>>();
    report.msac_score = doc.at("msac_score").get<double>();
    report.source_solver = doc.value("solver", std::string());
    if (doc.contains("warp_vs_gt_px")) report.warp_vs_gt = doc["warp_vs_gt_px"].get<double>();
    return report;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

void validate_report_text(const std::string& json_text) {
  const CalibrationReport parsed = parse_report(json_text);
  if (!(parsed.calibration.f > 0)) throw ParseError("report: focal length must be positive");
  if (parsed.calibration.width <= 0 || parsed.calibration.height <= 0) {
    throw ParseError("report: bad image size");
  }
}

void save_report(const CalibrationReport& report, const std::string& path) {
  const std::string text = serialize_report(report);
  validate_report_text(text);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path);
  out << text;
}

CalibrationReport load_report(const std::string& path) {
  return parse_report(read_file(path));
}

Calibration load_calibration(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("calibration: ") + e.what());
  }
  try {
    Calibration c;
    c.width = doc.at("image").at("width").get<int>();
    c.height = doc.at("image").at("height").get<int>();
    c.f = doc.at("f_px").get<double>();
    if (doc.contains("lambda_px")) {
      c.lambda = c.normalizer().lambda_to_norm(doc["lambda_px"].get<double>());
    } else {
      c.lambda = doc.at("lambda_norm").get<double>();
    }
    if (doc.contains("R")) c.R = matrix_from_json(doc["R"]);
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("calibration: ") + e.what());
  }
}

std::string serialize_calibration(const Calibration& calib) {
  json doc;
  doc["image"] = {{"width", calib.width}, {"height", calib.height}};
  doc["f_px"] = calib.f;
  doc["lambda_px"] = calib.lambda_px();
  doc["lambda_norm"] = calib.lambda;
  if (calib.R) doc["R"] = matrix_to_json(*calib.R);
  return doc.dump(2) + "\n";
}

void save_calibration(const Calibration& calib, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write calibration: " + path);
  out << serialize_calibration(calib);
}

}  // namespace autocalib
