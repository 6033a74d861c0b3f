#pragma once

#include <optional>
#include <vector>

#include "autocalib/features.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/solvers.hpp"

namespace autocalib {

// Geometric consistency runs in centered pixel coordinates so that residuals
// compare directly against pixel thresholds.

// Circle through the distorted image of a vanishing point: the distorted
// midpoint is undistorted, joined with the vanishing point, and the join is
// distorted back to a circle. Returns nullopt when the join degenerates
// (midpoint coincides with the vanishing point).
std::optional<GenCircle> circle_through_vp(const Eigen::Vector2d& midpoint_distorted,
                                           const HomPoint& vp_undistorted, double lambda);

// Mean squared orthogonal distance of contour points to a circle (px^2).
double arc_consistency(const std::vector<Eigen::Vector2d>& points, const GenCircle& circle);

// Vanishing point on a line by constrained least squares: rows are the
// undistorted joins of the correspondences, the point is constrained to the
// line with unit last coordinate. *on_ideal_line flags the degenerate
// constraint l = (0, 0, c), for which the best ideal point is returned.
HomPoint vp_on_line(const std::vector<PointCorrespondence>& pcs, const HomLine& l,
                    double lambda, bool* on_ideal_line = nullptr,
                    double* residual = nullptr);

// A solver candidate converted to the centered-pixel scoring domain.
struct ScoringModel {
  double lambda_px = 0;
  ConfigMode mode = ConfigMode::kCoplanar;
  std::vector<HomPoint> vps_px;             // centered-pixel units
  std::optional<HomLine> vanishing_line_px;

  static ScoringModel from_solver_output(const SolverOutput& out, const Normalizer& nrm);
};

// Consistency of one arc with one vanishing point (px^2); squared distance of
// the whole contour to the circle through the VP. Returns infinity when the
// construction degenerates.
double arc_vp_consistency(const ContourArc& arc, const HomPoint& vp_px, double lambda_px,
                          const Normalizer& nrm);

// Best (smallest) arc consistency over the model's vanishing points.
double arc_model_consistency(const ContourArc& arc, const ScoringModel& model,
                             const Normalizer& nrm);

// Region consistency: mean squared circle-construction residual of the
// primary correspondences against the best model vanishing point (px^2).
double region_model_consistency(const RegionCorrespondence& rc, const ScoringModel& model,
                                const Normalizer& nrm);

struct RejectionThresholds {
  double contour_px = 1.26;
  double point_px = 5.05;
};

// Tests a candidate against the unused measurements of its own minimal
// sample: full contours against their assigned vanishing points, and the
// auxiliary-direction correspondences of each sampled region against
// vanishing points constrained to the candidate's vanishing line. Returns
// true when the candidate should be rejected.
bool reject_minimal_sample(const FeatureSet& fs, const MinimalSample& sample,
                           const SolverOutput& candidate,
                           const RejectionThresholds& thresholds);

}  // namespace autocalib
