#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace reif {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Exponent p in [1, inf], kept as a reduced fraction or an exact infinity
// so that the norm's special branches (1, 2, inf) never depend on rounding.
class Exponent {
 public:
  static Exponent finite(long num, long den = 1);
  static Exponent infinity();
  // Continued-fraction approximation with denominators up to 10^6.
  static Exponent from_double(double p);
  static Exponent parse(const std::string& text);

  bool is_inf() const { return inf_; }
  bool is_one() const { return !inf_ && num_ == den_; }
  bool is_two() const { return !inf_ && num_ == 2 * den_; }
  double value() const;
  long num() const { return num_; }
  long den() const { return den_; }

  // q with 1/p + 1/q = 1.
  Exponent conjugate() const;
  std::string str() const;

  bool operator==(const Exponent& o) const {
    return inf_ == o.inf_ && (inf_ || (num_ == o.num_ && den_ == o.den_));
  }

 private:
  Exponent(bool inf, long num, long den) : inf_(inf), num_(num), den_(den) {}
  bool inf_;
  long num_;
  long den_;
};

double lp_norm(const Vec& x, const Exponent& p);

class NormedSpace {
 public:
  NormedSpace(int dim, Exponent p);

  int dim() const { return dim_; }
  const Exponent& p() const { return p_; }
  bool hilbert() const { return p_.is_two(); }

  double norm(const Vec& x) const;
  double dist(const Vec& x, const Vec& y) const { return norm(x - y); }
  // Norm of a functional given by its coefficient vector.
  double dual_norm(const Vec& f) const;
  NormedSpace dual() const { return NormedSpace(dim_, p_.conjugate()); }
  std::string describe() const;

 private:
  void check(const Vec& x) const;
  int dim_;
  Exponent p_;
};

struct Functional {
  Vec coefficients;
  double dual_norm = 0.0;

  double operator()(const Vec& x) const { return coefficients.dot(x); }
};

Functional make_functional(const NormedSpace& space, Vec coefficients);

// Normalized duality map: <J(x), x> = |x|^2 and |J(x)|_* = |x|.
// Throws for p = inf.
Functional duality_map(const NormedSpace& space, const Vec& x);

double modulus_smoothness_bound(const NormedSpace& space, double t);

// Sup of (|x+y| + |x-y|)/2 - 1 over sampled unit x and |y| = t. The sample
// always contains the Euclidean-orthogonal partner of each x and the
// sign-pattern pairs, which realise the sup for l^2 and l^inf.
double modulus_smoothness_empirical(const NormedSpace& space, double t, int samples,
                                    std::uint64_t seed);

double smoothness_power(const NormedSpace& space);

}  // namespace reif
