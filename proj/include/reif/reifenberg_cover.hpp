#pragma once

#include "reif/measure_beta.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace reif {

// phi_i = h(s) psi_i / s with psi_i = (3 - |x - x_i| / r)_+ and s = sum psi_i.
class PartitionOfUnity {
 public:
  PartitionOfUnity() = default;
  PartitionOfUnity(const NormedSpace& space, std::vector<Vec> centers, double r);

  std::vector<double> weights(const Vec& x) const;
  double total(const Vec& x) const;
  // Max over centres of how many balls B_3r(x_j) meet B_3r(x_i).
  int overlap() const;

  double radius() const { return r_; }
  const std::vector<Vec>& centers() const { return centers_; }

 private:
  NormedSpace space_{1, Exponent::finite(2)};
  std::vector<Vec> centers_;
  double r_ = 1.0;
};

enum class BallKind { good, bad, original };
std::string to_string(BallKind kind);

struct BallLabel {
  Vec center;
  double radius = 0.0;
  BallKind kind = BallKind::bad;
  std::vector<Vec> witnesses;
  // The plane spanned by the witnesses found before the search failed.
  // Empty when not even one heavy point exists.
  std::optional<AffinePlane> witness_plane;
};

// Default mass threshold, 0.1 * 5^-k.
double default_theta(int k);

BallLabel classify_ball(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r, int k,
                        double chi, double theta);

struct SigmaMap {
  double r = 1.0;
  std::vector<Vec> centers;
  std::vector<AffinePlane> planes;
  std::vector<AlmostProjection> projections;
  PartitionOfUnity pou;
};

SigmaMap make_sigma(const NormedSpace& space, std::vector<Vec> centers, std::vector<AffinePlane> planes,
                    std::vector<AlmostProjection> projections, double r);

// x - sum phi_i(x) pi_i^perp(x - p_i)
Vec sigma_apply(const SigmaMap& sigma, const Vec& x);

struct SquashReport {
  double tilt = 0.0;  // measured plane-vs-plane offset over B_4r(x_i), divided by r
  bool hypotheses_ok = true;
  double displacement = 0.0;
  double lipschitz_deviation = 0.0;
  GraphCheck regraph;
  double full_region_height = 0.0;  // height / r where sum phi = 1
  double full_region_bound = 0.0;
  bool full_region_ok = true;
  bool tangential_applicable = false;
  double tangential = 0.0;
  double squared_distortion = 0.0;
  double squared_bound = 0.0;
  bool squared_ok = true;
};

// c in the height estimate on the region where the partition sums to one.
constexpr double kSquashHeightConstant = 10.0;

SquashReport squash_report(const NormedSpace& space, const SigmaMap& sigma, const std::vector<Vec>& sample,
                           const AffinePlane& plane, const AlmostProjection& proj, double delta, double eps);

struct BallPair {
  Vec x;
  double r;
  Vec y;
  double s;
};

struct TiltingReport {
  std::vector<double> distances;  // d_G(V(x,r), V(y,s)) per pair
  std::vector<double> ratios;     // divided by beta at the enclosing ball
  double max_ratio = 0.0;
};

// The enclosing ball of a pair is centred at the midpoint of the centres with
// radius twice what is needed to contain both balls.
TiltingReport tilting_report(const NormedSpace& space, const PointMeasure& mu,
                             const std::vector<BallPair>& pairs, int k, double chi, double theta = -1);

struct Ball {
  Vec center;
  double radius = 0.0;
  int stage = 0;
  long atom = -1;
};

struct CoverConfig {
  double chi = 0.1;
  double delta = 0.1;
  std::optional<double> alpha;  // smoothness power of the space when unset
  double theta = -1;            // default_theta(k) when negative
  int max_depth = 6;
  std::uint64_t seed = 0;
  int distortion_pairs = 1000;
  double distortion_constant = 10.0;
  bool check_dini = true;
  double delta0 = 0.1;
  std::optional<ProjectionKind> projection;
};

struct ConstantsLedger {
  int k = 0;
  double chi = 0, delta = 0, alpha = 0, theta = 0, delta0 = 0;
  double c1 = 0, c2 = 0, c3 = 0, c5 = 0, c_B = 0, c_leftover = 0;
  double distortion_constant = 0, squash_height_constant = kSquashHeightConstant;
  int max_depth = 0;
  std::string projection_kind;
};

double c5_constant(int k);
double cB_constant(int k);
double leftover_constant(int k, double chi, int max_depth);
ConstantsLedger make_ledger(const NormedSpace& space, int k, const CoverConfig& cfg);

struct StageReport {
  int stage = 0;
  double radius = 0.0;
  int originals = 0, good = 0, bad = 0, dropped_bad = 0, net = 0;
  double excess_mass = 0.0;
  double chebyshev_rhs = 0.0;  // (30 / r_{i+1})^2 sum of best-plane objectives
  int overlap = 0;
  double beta_shift = 0.0;     // max beta(y, r_i) / delta over atoms near the good centres
  double max_movement = 0.0;   // sup |sigma(tau(y)) - tau(y)| / r over the T_0 sample
  int disjoint_violations = 0;
  int radius_violations = 0;
};

struct CoverResult {
  bool top_ball_bad = false;
  std::optional<AffinePlane> top_witness_plane;
  AffinePlane t0;
  std::vector<Ball> kept_originals;
  std::vector<Ball> bad_balls;
  std::vector<Ball> final_good;
  std::vector<SigmaMap> tau_stages;
  std::vector<StageReport> stages;

  double leftover_mass = 0.0;
  double leftover_bound = 0.0;
  double excess_mass = 0.0;
  double packing_sum = 0.0;      // originals and bad balls
  double packing_all = 0.0;      // plus the final good balls
  double distortion = 1.0;
  double distortion_bound = 0.0;
  double measured_delta = 0.0;   // max over S of the Dini sum, to the power 1/alpha
  std::vector<std::size_t> dini_violators;

  bool disjoint_ok = true;
  bool radius_ok = true;
  bool packing_ok = true;
  bool leftover_ok = true;
  bool distortion_ok = true;
  bool valid = true;             // false when an optimizer failed somewhere
  bool estimate_violated = false;
  std::vector<std::string> diagnostics;
  ConstantsLedger ledger;

  Vec tau(const NormedSpace& space, const Vec& y) const;
};

// Multiscale covering of B_1(0). S lists atom indices; r_s has one entry per
// atom of mu (entries outside S are ignored).
CoverResult covering_lemma(const NormedSpace& space, const PointMeasure& mu, const std::vector<std::size_t>& S,
                           const std::vector<double>& r_s, int k, const CoverConfig& cfg = {});

struct LevelReport {
  int level = 0;
  int bad_balls = 0;
  double leftover = 0.0;        // in rescaled units
  double leftover_bound = 0.0;  // sum_{j <= i} 2^-j
  double packing_originals = 0.0;
  double packing_originals_bound = 0.0;
  double packing_bad = 0.0;
  double packing_bad_bound = 0.0;
  int max_net = 0;
  double net_bound = 0.0;
  bool ok = true;
};

struct PackingResult {
  std::vector<Ball> kept;
  std::vector<Ball> unresolved_bad;
  std::vector<Ball> unresolved_good;  // depth-truncated good balls of the inner coverings
  std::vector<LevelReport> levels;
  double M = 0.0;
  double scale_factor = 1.0;
  double packing_sum = 0.0;
  double leftover_mass = 0.0;  // original units
  std::vector<std::size_t> dini_violators;
  bool chi_constraint_ok = false;  // c5 c_B chi < 1/2
  bool terminated = true;
  bool ledger_ok = true;
  ConstantsLedger ledger;
};

// M < 0 measures M from the Dini sums. max_levels bounds the refinement.
PackingResult main_packing(const NormedSpace& space, const PointMeasure& mu, const std::vector<std::size_t>& S,
                           const std::vector<double>& r_s, int k, double M, const CoverConfig& cfg = {},
                           int max_levels = 12);

struct FlatMapConfig {
  double chi = 0.01;
  double delta = 0.1;
  int max_depth = 2;
  int pairs = 1000;
  std::uint64_t seed = 0;
  std::optional<double> alpha;
};

struct FlatMapReport {
  bool certified = true;
  double max_beta_inf = 0.0;
  AffinePlane t0;
  std::vector<SigmaMap> stages;
  double distortion = 1.0;
  double holder_exponent = 1.0;  // slope of log |tau x - tau y| against log |x - y|
  double q_alpha = 0.0;          // max over net points of the beta_inf Dini sum
  double fitted_constant = 0.0;  // ln(distortion) / q_alpha
};

FlatMapReport reifenberg_flat_map(const NormedSpace& space, const std::vector<Vec>& S, int k,
                                  const FlatMapConfig& cfg = {});

// Greedy farthest-point net: starts from the first candidate and keeps adding
// the farthest remaining one while its distance exceeds sep.
std::vector<std::size_t> farthest_point_net(const NormedSpace& space, const std::vector<Vec>& pts,
                                            const std::vector<std::size_t>& candidates, double sep);

// Vitali selection: decreasing radius (ties by index), keep a ball when its
// fifth is disjoint from the fifths kept so far.
std::vector<std::size_t> vitali_select(const NormedSpace& space, const std::vector<Vec>& pts,
                                       const std::vector<double>& radii, const std::vector<std::size_t>& candidates);

}  // namespace reif
