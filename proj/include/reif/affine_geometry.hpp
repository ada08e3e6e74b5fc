#pragma once

#include "reif/normed_space.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace reif {

// p + span(basis columns). A plane with zero columns is the single point p.
struct AffinePlane {
  Vec base;
  Mat basis;  // dim x k

  static AffinePlane point(const Vec& p);
  static AffinePlane linear(const Mat& basis);

  int k() const { return static_cast<int>(basis.cols()); }
  int ambient() const { return static_cast<int>(base.size()); }
  Vec at(const Vec& lambda) const { return base + basis * lambda; }
  AffinePlane linear_part() const;
};

// Constants of the general-position and packing estimates.
double c1_constant(int k, double tau);
double c2_constant(int k);
double c3_constant(int k);

std::vector<Vec> columns(const Mat& m);
Mat from_columns(const std::vector<Vec>& cols, int dim);

// Largest tau with norms in [tau, 1/tau] and each successive distance to the
// span of the previous vectors >= tau; 0 for dependent families.
double general_position_margin(const NormedSpace& space, const std::vector<Vec>& vectors);

// Unit vectors spanning the same space, each chosen to maximise its distance
// to the span of the previous ones (searched over a direction net).
Mat riesz_basis(const NormedSpace& space, const Mat& spanning, double tau = 2.0 / 3.0);

struct Foot {
  double distance = 0.0;
  Vec foot;
  Vec coeffs;
  bool converged = true;
};

// Nearest point of the plane under the space norm.
Foot distance_to_affine(const NormedSpace& space, const AffinePlane& plane, const Vec& z);

// Hausdorff distance between the unit balls of two linear subspaces, over a
// deterministic net of the unit spheres.
double grassmann_distance(const NormedSpace& space, const AffinePlane& V, const AffinePlane& W,
                          int samples = 4096);

double hausdorff_distance(const NormedSpace& space, const std::vector<Vec>& A,
                          const std::vector<Vec>& B);

// Low-discrepancy unit directions (Euclidean) in R^k.
std::vector<Vec> direction_net(int k, int count);

enum class ProjectionKind { orthogonal, j_projection, hahn_banach, euclidean_fallback };

std::string to_string(ProjectionKind kind);
ProjectionKind projection_kind_from_string(const std::string& s);
// orthogonal for p = 2, J-projection for lines when 1 < p < inf, Hahn-Banach otherwise.
ProjectionKind default_projection_kind(const NormedSpace& space, int k);

struct AlmostProjection {
  ProjectionKind kind = ProjectionKind::orthogonal;
  Mat target;  // basis of V, dim x k
  Mat matrix;  // the linear map, dim x dim
  std::vector<Functional> row_functionals;
  double op_norm_estimate = 1.0;

  Vec apply(const Vec& x) const { return matrix * x; }
  Vec complement(const Vec& x) const { return x - matrix * x; }
};

AlmostProjection make_projection(const NormedSpace& space, const AffinePlane& V, ProjectionKind kind);

// Sup of |P x| over a sampled unit sphere.
double empirical_operator_norm(const NormedSpace& space, const Mat& P, int samples,
                               std::uint64_t seed);

struct PythagoreanReport {
  int samples = 0;
  // max over samples of lhs / rhs for the general inequality (<= 1 means it held)
  double general_ratio = 0.0;
  // same for the improved form (orthogonal and J kinds only, else 0)
  double improved_ratio = 0.0;
  // | |x|^2 - |pi x|^2 - |pi^perp x|^2 | / |x|^2, informative in Hilbert space
  double classic_slack = 0.0;
  int violations = 0;
};

PythagoreanReport pythagorean_report(const NormedSpace& space, const AlmostProjection& proj,
                                     int samples, std::uint64_t seed);

struct GraphCheck {
  bool is_graph = true;
  double sup_height = 0.0;
  double lipschitz = 0.0;
  double kernel_residual = 0.0;
};

GraphCheck graph_check(const NormedSpace& space, const std::vector<Vec>& points,
                       const AffinePlane& plane, const AlmostProjection& proj, double scale = 1.0);

struct RegraphCheck {
  GraphCheck before;
  GraphCheck after;
  double bound = 0.0;  // c(k) (eps + delta)
  bool holds = true;
};

// Re-graph the same samples over a tilted/shifted plane and compare with the
// c(k)(eps + delta) estimate, c(k) = 4 c3(k).
RegraphCheck regraph_check(const NormedSpace& space, const std::vector<Vec>& points,
                           const AffinePlane& plane, const AffinePlane& new_plane, double delta,
                           double scale = 1.0);

}  // namespace reif
