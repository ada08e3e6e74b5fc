#pragma once

#include "reif/affine_geometry.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace reif {

// Atomic measure. Balls are closed: an atom at distance exactly r from the
// centre belongs to B_r.
class PointMeasure {
 public:
  PointMeasure() = default;
  explicit PointMeasure(int dim) : dim_(dim) {}
  PointMeasure(std::vector<Vec> points, std::vector<double> weights);

  void add(const Vec& x, double w);
  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<Vec>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  double total_mass() const { return total_; }

  // Pushforward under y -> (y - x) / r, weights scaled by r^-k.
  PointMeasure rescaled(const Vec& x, double r, int k) const;
  PointMeasure scaled_weights(double factor) const;

 private:
  int dim_ = 0;
  std::vector<Vec> points_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

bool in_ball(const NormedSpace& space, const Vec& y, const Vec& center, double r);

PointMeasure restrict(const PointMeasure& mu, const Vec& center, double r, const NormedSpace& space);
double ball_mass(const NormedSpace& space, const PointMeasure& mu, const Vec& center, double r);

struct BestPlaneOptions {
  int starts = 4;
  std::uint64_t seed = 0;
  int max_evals = 4000;
};

struct BetaResult {
  double beta = 0.0;
  AffinePlane plane;
  double objective = 0.0;  // sum of w d^2 over the ball
  double lower_bound = 0.0;
  double certified_factor = 1.0;
  bool valid = true;
  bool empty = false;
};

// Sum over atoms of w d(z, plane)^2.
double plane_objective(const NormedSpace& space, const PointMeasure& mu, const AffinePlane& plane);

BetaResult best_plane(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r, int k,
                      const BestPlaneOptions& opt = {});
double beta(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r, int k);

struct BetaInfResult {
  double value = 0.0;
  AffinePlane plane;
  bool empty = false;
};

BetaInfResult beta_inf(const NormedSpace& space, const std::vector<Vec>& S, const Vec& x, double r,
                       int k);

struct DiniProfile {
  Vec center;
  double alpha = 2.0;
  double chi = 0.5;
  std::vector<double> scales;
  std::vector<double> betas;
  std::vector<double> cumulative;
  double dini_sum = 0.0;
};

// Left-endpoint quadrature of the integral of beta^alpha dr/r on the grid
// r_j = r_hi chi^j >= r_lo.
DiniProfile dini_profile(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r_lo,
                         double r_hi, int k, double alpha, double chi);

// min and max over the scales of mu(B_r(x)) / r^k.
std::pair<double, double> density_report(const NormedSpace& space, const PointMeasure& mu,
                                         const Vec& x, const std::vector<double>& scales, int k);

}  // namespace reif
