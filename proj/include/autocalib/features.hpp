#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autocalib/geometry.hpp"

namespace autocalib {

// Contour of an imaged scene line with its fitted circle. Coordinates are
// pixels, origin top-left. The normal is the unit radial direction of the
// fitted circle at the midpoint, oriented toward the center; for straight
// contours (degenerate line fit) it is the unit line normal.
struct ContourArc {
  int id = -1;
  std::optional<int> group;
  std::vector<Eigen::Vector2d> points;
  GenCircle circle;
  Eigen::Vector2d midpoint;
  Eigen::Vector2d normal;
  double fit_rms = 0;
};

// Two corresponded affine frames (3 points each) of a translated coplanar
// repeat, pixels.
struct RegionCorrespondence {
  int id = -1;
  std::optional<int> group;
  std::array<Eigen::Vector2d, 3> frame_a;
  std::array<Eigen::Vector2d, 3> frame_b;
};

enum class PcTag { kPrimary, kAux1, kAux2, kAux3 };

struct PointCorrespondence {
  Eigen::Vector2d p, q;
  PcTag tag = PcTag::kPrimary;
};

struct FeatureSet {
  int width = 0, height = 0;
  std::vector<ContourArc> arcs;
  std::vector<RegionCorrespondence> regions;

  Normalizer normalizer() const { return Normalizer::for_image(width, height); }
};

// Taubin's bias-renormalized algebraic circle fit. Collinear inputs produce
// a degenerate line fit (A = 0); *collinear reports that case.
GenCircle fit_circle_taubin(const std::vector<Eigen::Vector2d>& points,
                            bool* collinear = nullptr);

// Damped Gauss-Newton refinement of the geometric (orthogonal-distance)
// circle fit. The objective never increases versus init. *converged
// reports whether the iteration settled within the iteration budget.
GenCircle refine_circle_geometric(const std::vector<Eigen::Vector2d>& points,
                                  const GenCircle& init, bool* converged = nullptr);

// Root-mean-square orthogonal distance of points to a circle or line.
double circle_fit_rms(const std::vector<Eigen::Vector2d>& points, const GenCircle& c);

// Builds a ContourArc from raw contour points: fits (Taubin + geometric
// refinement), picks the median-arc-length midpoint and orients the normal.
// Returns nullopt when the contour is unusable (too few points, or a proper
// circle subtending less than min_subtend_deg).
std::optional<ContourArc> make_contour_arc(std::vector<Eigen::Vector2d> points,
                                           std::optional<int> group = std::nullopt,
                                           int id = -1,
                                           double min_subtend_deg = 2.0);

// Point correspondences carried by one region correspondence: the three
// frame-to-frame pairs (primary translation direction) plus the three
// within-frame pair families, each of which is translated along one frame
// edge and is tagged kAux1..kAux3. Primary pairs with p == q are dropped.
std::vector<PointCorrespondence> point_correspondences(const RegionCorrespondence& rc);

// Feature-file I/O, schema version "1". Fitted circles are recomputed on
// load; arcs rejected by make_contour_arc are dropped.
FeatureSet load_features(const std::string& path);
void save_features(const FeatureSet& fs, const std::string& path);

// Same schema through strings (used by tests and the fuzz harness).
FeatureSet parse_features(const std::string& json_text);
std::string serialize_features(const FeatureSet& fs);

}  // namespace autocalib
