#pragma once

#include "reif/measure_beta.hpp"

#include <string>
#include <vector>

namespace reif {

// Coefficient vectors a_1..a_m stand for the function sum a_j e_j, with
// e_1 = 1 and e_2.. independent Rademacher functions.
constexpr int kMaxRademacher = 20;

// L^p norm of sum a_j e_j. p = inf and p = 2 are closed forms; other p
// enumerate the 2^m sign patterns and throw when m > kMaxRademacher.
double rademacher_norm(const Vec& a, const Exponent& p);

enum class SnowflakeMode { plane_bump, rademacher };
std::string to_string(SnowflakeMode mode);
SnowflakeMode snowflake_mode_from_string(const std::string& s);

struct SnowflakeSpec {
  SnowflakeMode mode = SnowflakeMode::plane_bump;
  Exponent p = Exponent::finite(2);
  std::vector<double> etas;  // eta_1 .. eta_{depth-1}, extras ignored
  int depth = 1;
};

// Throws on depth outside [1, 20], too few etas or non-finite etas.
void validate(const SnowflakeSpec& spec);
// sup |eta_i| <= 1/10, the bounded-length hypothesis. Not enforced.
bool snowflake_hypothesis_ok(const SnowflakeSpec& spec);

// Largest depth snowflake() will materialize.
constexpr int kMaxMaterializedDepth = 12;

struct Polyline {
  SnowflakeMode mode = SnowflakeMode::plane_bump;
  Exponent p = Exponent::finite(2);
  std::vector<double> params;  // curve parameter of each vertex
  std::vector<Vec> vertices;   // R^2 points, or coefficient vectors of length depth
};

// plane_bump: each segment [P, Q] of the previous level becomes
// P, P + d/3, midpoint + eta |d| n / 6, P + 2d/3, Q with d = Q - P and n the
// left unit normal. rademacher: on each parameter interval of length
// 3^-(i-1) a tent of slope eta_i in direction e_{i+1} over the middle third.
Polyline snowflake(const SnowflakeSpec& spec);

double segment_norm(const Polyline& poly, const Vec& d);
double polyline_length(const Polyline& poly);
// |gamma(t_{j+1}) - gamma(t_j)| / (t_{j+1} - t_j) per segment.
std::vector<double> segment_speeds(const Polyline& poly);

// Length at the spec's depth. Rademacher mode sums over subsets S of active
// levels, weight 3^-|S| (2/3)^(n-|S|), so it reaches depth 20.
double snowflake_length(const SnowflakeSpec& spec);
// Lengths at depths 1..spec.depth.
std::vector<double> snowflake_lengths(const SnowflakeSpec& spec);

// Graph map of gamma_2 over span(e_1) in l^p(R^2): |gamma(1/2) - gamma(1/3)|
// divided by the distance of the feet.
double apex_bilipschitz(const Exponent& p, double eps);

// Unit atoms at 0, (+-1, 0), (0, +-t) in R^2. Requires 0 < t <= 1/10.
PointMeasure dirac_example(double t);

// (R^3, l^4) and the plane spanned by (1,1,0), (0,1,1).
NormedSpace l4_space();
Mat no_power_gain_plane();
// x_0 = 0, v1+v2, 2v1+3v2, 3v1+4v2, 2v1-v2, -v1+3v2.
std::vector<Vec> no_power_gain_points();

struct NoPowerGainMatrix {
  Mat matrix;  // 15 x 15, row (i,j) holds +-J(x_i - x_j)/|x_i - x_j|
  double det = 0.0;
  double sigma_min = 0.0, sigma_max = 0.0;
  int rank = 0;  // singular values above 1e-12 sigma_max
  std::vector<std::pair<int, int>> rows;
};

// Rows ordered by (i, j), 0 <= i < j <= 5; column block b - 1 holds f(x_b).
// Each row has unit dual norm, so det is 0-homogeneous. The determinant is
// an LU factorization in long double.
NoPowerGainMatrix no_power_gain_matrix(const std::vector<Vec>& x);

// Linear A on R^3, zero on the Euclidean normal of L, with <J(d), A d> = 0
// for every d in L, scaled to l^4 operator norm one on L. It exists for any
// 2-plane: A|_L has 6 entries and the quartic form in d has 5 coefficients.
// Its graph f = eps A has vanishing J-term, so det(M) = 0 for six points of L.
Mat no_power_gain_kernel_map();

// Grid of step h in Euclidean coordinates on L, kept when |x|_4 <= 1.
std::vector<Vec> l4_plane_grid(double h);

struct PowerGainWitness {
  Vec x, y;
  double bound = 0.0;       // max |<J(x-y), f(x)-f(y)>| / |x-y|^2
  double distortion = 0.0;  // max ||(x+f(x)) - (y+f(y))|^2 - |x-y|^2| / |x-y|^2
  long pairs = 0;
};

// Exhaustive scan over the sample pairs. Throws when no pair is separated
// by more than 1e-9.
PowerGainWitness no_power_gain_witness(const std::vector<Vec>& pts, const std::vector<Vec>& f);

// f(x) = eps <w, x> n with n the Euclidean unit normal of L and w a
// Euclidean unit vector in L.
std::vector<Vec> normal_graph(const std::vector<Vec>& pts, double eps, const Vec& w);
// f(x) = eps A x with A a 3x3 matrix scaled to l^4 operator norm one on L.
std::vector<Vec> linear_graph(const std::vector<Vec>& pts, double eps, const Mat& A);

}  // namespace reif
