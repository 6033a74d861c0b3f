#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autocalib/features.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/poly.hpp"

namespace autocalib {

// All solver inputs and outputs below live in normalized coordinates
// (image centered, half-diagonal scale), where admissible division-model
// parameters fall in (-0.95, 0.5).
constexpr double kLambdaMin = -0.95;
constexpr double kLambdaMax = 0.5;

inline bool lambda_admissible(double lambda) {
  return lambda > kLambdaMin && lambda < kLambdaMax;
}

// A line whose undistorted image depends linearly on the division-model
// parameter: s(lambda) = c0 + lambda * c1, with c1.z() == 0 for both
// constructions used here.
struct LinePencil {
  HomLine c0 = HomLine::Zero();
  HomLine c1 = HomLine::Zero();

  HomLine at(double lambda) const { return c0 + lambda * c1; }
};

// Vanishing point as the meet of two line pencils; coordinates are
// polynomials of degree (<=1, <=1, <=2).
struct VpPoly {
  Poly x, y, w;

  HomPoint at(double lambda) const {
    return {x.eval(lambda), y.eval(lambda), w.eval(lambda)};
  }
  double max_abs_coeff() const;
  VpPoly normalized() const;
};

enum class ConfigMode { kCoplanar, kManhattan };

enum class SolveStatus {
  kOk,
  kDegenerateSample,
  kNoRealRoot,
  kImaginaryFocal,
  kDegenerateGeometry,
  kIdenticalLines,
};

// One calibration candidate from a minimal solve. f (if present) is in the
// same normalized units as the vanishing points; cross_residual carries the
// normalized value of the constraint that was checked but not enforced.
struct SolverOutput {
  double lambda = 0;
  ConfigMode mode = ConfigMode::kCoplanar;
  std::optional<double> f;
  std::vector<double> f_candidates;  // per orthogonal-pair upgrade, first == f
  std::optional<Eigen::Matrix3d> R;
  std::optional<HomLine> vanishing_line;
  std::vector<HomPoint> vps;  // one per input slot (undistorted)
  double cross_residual = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kOk;
  std::vector<SolverOutput> candidates;

  bool ok() const { return status == SolveStatus::kOk && !candidates.empty(); }
};

// Undistorted tangent line of a fitted circle at the contour midpoint, as a
// pencil in the division-model parameter. Arc coordinates must already be
// normalized and centered.
LinePencil line_from_arc(const ContourArc& arc);
LinePencil line_from_arc(const Eigen::Vector2d& midpoint, const Eigen::Vector2d& normal);

// Join of the undistorted images of two corresponded points. The third
// coordinate of the pencil is constant in the division-model parameter.
LinePencil line_from_pc(const Eigen::Vector2d& p, const Eigen::Vector2d& q);

// Symbolic meet of two line pencils. Returns nullopt when the pencils are
// identical (zero cross product for all parameter values).
std::optional<VpPoly> vp_poly(const LinePencil& a, const LinePencil& b);

// Coplanar configuration: three vanishing points incident to one vanishing
// line. Solves the quartic det of the stacked incidence constraints, and for
// each admissible root returns the null-space line and the evaluated VPs.
SolveResult solve_coplanar(const VpPoly& v1, const VpPoly& v2, const VpPoly& v3);

// Manhattan configuration: three mutually orthogonal vanishing points.
// Builds the entrywise-product orthogonality system, eliminates the focal
// length, and solves the resulting degree-6 polynomials for the
// division-model parameter. Candidates whose unused third orthogonality
// residual exceeds cross_check_tol are dropped whenever at least one
// candidate passes; otherwise all admissible candidates are returned ordered
// by that residual (noisy samples have no exact solution).
SolveResult solve_manhattan(const VpPoly& v1, const VpPoly& v2, const VpPoly& v3,
                            double cross_check_tol = 1e-6);

// Coincidence of two vanishing points built over a shared line pencil:
// the cross product must vanish, giving polynomials of degree (3, 3, 2)
// with a structurally common root set. Returns admissible parameters.
std::vector<double> solve_coincident(const VpPoly& va, const VpPoly& vb,
                                     double tol = 1e-6);

// Second Manhattan stage once one vanishing point and the division-model
// parameter are known: two more arcs from distinct direction groups pin the
// focal length through the three orthogonality constraints, which reduce to
// a quadratic in 1/f^2.
struct Step2Output {
  double f = 0;
  HomPoint u2, u3;
};
SolveStatus solve_manhattan_step2(const HomPoint& u1, double lambda,
                                  const LinePencil& line2, const LinePencil& line3,
                                  std::vector<Step2Output>* out);

// Focal length from two finite undistorted vanishing points of orthogonal
// directions. Status (optional) distinguishes the ideal-point and
// imaginary-radicand failures.
enum class FocalStatus { kOk, kImaginaryFocal, kIdealPoint };
std::optional<double> focal_from_two_vps(const HomPoint& u1, const HomPoint& u2,
                                         FocalStatus* status = nullptr);

// Camera orientation from two orthogonal vanishing points and the focal
// length; re-orthonormalized by nearest-rotation projection with det +1.
// Returns nullopt when the pair fails the orthogonality pre-check.
std::optional<Eigen::Matrix3d> rotation_from_vps(const HomPoint& u1, const HomPoint& u2,
                                                 double f, double ortho_tol = 1e-6);

// Normalized orthogonality residual |u1' w u2| / (|w^1/2 u1||w^1/2 u2|)
// with w = diag(1/f^2, 1/f^2, 1).
double orthogonality_residual(const HomPoint& u1, const HomPoint& u2, double f);

// ---------------------------------------------------------------------------
// Solver ensemble dispatch

enum class SolverId { k4Pc2Ca, k2Pc4Ca, k5CaStar, k6Ca, k6Pc };

const char* solver_name(SolverId id);
std::optional<SolverId> solver_from_name(const std::string& name);

// One direction-group slot of a minimal sample.
struct SampleSlot {
  enum class Kind { kArcPair, kPcPair, kArcTriple, kPcTriple, kArcSingle };
  Kind kind;
  std::vector<int> arc_indices;        // into FeatureSet.arcs
  int region_index = -1;               // into FeatureSet.regions
  std::vector<LinePencil> pencils;     // 1..3 pencils, normalized domain
};

// Shapes: three pair slots; a triple followed by a pair; or a triple
// followed by two singles.
struct MinimalSample {
  SolverId solver = SolverId::k6Ca;
  std::vector<SampleSlot> slots;
};

// Builds the slot pencils from the feature set (normalized coordinates).
// Pair-producing region slots use the first two primary correspondences;
// triple slots use all three.
bool fill_sample_pencils(const FeatureSet& fs, MinimalSample* sample);

// Runs every solver chain the sample shape admits and returns all candidates
// tagged by configuration mode. Three-pair samples run both the coplanar and
// the Manhattan chain (point-only samples are coplanar by assumption);
// triple-led samples run the coincidence chain. Coplanar candidates carry
// focal-length upgrades for each orthogonal-pair hypothesis with a positive
// radicand, most-finite pair first.
SolveResult dispatch(const MinimalSample& sample, double manhattan_cross_tol = 1e-6);

}  // namespace autocalib
