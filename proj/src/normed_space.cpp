#include "reif/normed_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace reif {

Exponent Exponent::finite(long num, long den) {
  if (den <= 0 || num <= 0) throw std::invalid_argument("exponent must be a positive fraction");
  long g = std::gcd(num, den);
  num /= g;
  den /= g;
  if (num < den) throw std::invalid_argument("exponent p must satisfy p >= 1");
  return Exponent(false, num, den);
}

Exponent Exponent::infinity() { return Exponent(true, 1, 0); }

Exponent Exponent::from_double(double p) {
  if (std::isinf(p) && p > 0) return infinity();
  if (!std::isfinite(p) || p < 1.0) throw std::invalid_argument("exponent p must satisfy p >= 1");
  // Continued fraction convergents until the approximation is exact to 1e-12.
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = p;
  for (int it = 0; it < 40; ++it) {
    double a = std::floor(x);
    long ai = static_cast<long>(a);
    long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > 1000000) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - p) < 1e-12 * p) break;
    double frac = x - a;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  return finite(h1, k1);
}

Exponent Exponent::parse(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "Inf") return infinity();
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    return finite(std::stol(text.substr(0, slash)), std::stol(text.substr(slash + 1)));
  }
  std::size_t used = 0;
  double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("bad exponent: " + text);
  return from_double(v);
}

double Exponent::value() const {
  if (inf_) return std::numeric_limits<double>::infinity();
  return static_cast<double>(num_) / static_cast<double>(den_);
}

Exponent Exponent::conjugate() const {
  if (inf_) return finite(1);
  if (is_one()) return infinity();
  // q = p / (p - 1) = num / (num - den)
  return finite(num_, num_ - den_);
}

std::string Exponent::str() const {
  if (inf_) return "inf";
  std::ostringstream os;
  os << num_;
  if (den_ != 1) os << "/" << den_;
  return os.str();
}

double lp_norm(const Vec& x, const Exponent& p) {
  if (x.size() == 0) return 0.0;
  double m = x.cwiseAbs().maxCoeff();
  if (p.is_inf() || m == 0.0) return m;
  if (p.is_one()) return x.cwiseAbs().sum();
  if (p.is_two()) return m * (x / m).norm();
  double pv = p.value();
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, pv);
  return m * std::pow(s, 1.0 / pv);
}

NormedSpace::NormedSpace(int dim, Exponent p) : dim_(dim), p_(p) {
  if (dim < 1) throw std::invalid_argument("space dimension must be >= 1");
}

void NormedSpace::check(const Vec& x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                                std::to_string(x.size()));
  }
}

double NormedSpace::norm(const Vec& x) const {
  check(x);
  return lp_norm(x, p_);
}

double NormedSpace::dual_norm(const Vec& f) const {
  check(f);
  return lp_norm(f, p_.conjugate());
}

std::string NormedSpace::describe() const {
  return "l^" + p_.str() + "(R^" + std::to_string(dim_) + ")";
}

Functional make_functional(const NormedSpace& space, Vec coefficients) {
  Functional f;
  f.dual_norm = space.dual_norm(coefficients);
  f.coefficients = std::move(coefficients);
  return f;
}

static double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

Functional duality_map(const NormedSpace& space, const Vec& x) {
  const Exponent& p = space.p();
  if (p.is_inf()) throw std::invalid_argument("duality map is not available for p = inf");
  double nx = space.norm(x);
  Vec j = Vec::Zero(x.size());
  if (nx > 0.0) {
    if (p.is_one()) {
      for (Eigen::Index i = 0; i < x.size(); ++i) j[i] = nx * sgn(x[i]);
    } else if (p.is_two()) {
      j = x;
    } else {
      double pv = p.value();
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        j[i] = nx * std::pow(std::abs(x[i]) / nx, pv - 1.0) * sgn(x[i]);
      }
    }
  }
  return make_functional(space, std::move(j));
}

double modulus_smoothness_bound(const NormedSpace& space, double t) {
  if (t < 0) throw std::invalid_argument("t must be >= 0");
  const Exponent& p = space.p();
  if (p.is_inf() || p.is_one()) return t;
  if (p.is_two()) return std::sqrt(1.0 + t * t) - 1.0;
  double pv = p.value();
  if (pv < 2.0) return std::pow(t, pv) / pv;
  return (pv - 1.0) * t * t;
}

namespace {

double pair_value(const NormedSpace& space, const Vec& x, const Vec& y) {
  return 0.5 * (space.norm(x + y) + space.norm(x - y)) - 1.0;
}

Vec unit(const NormedSpace& space, const Vec& v) { return v / space.norm(v); }

}  // namespace

double modulus_smoothness_empirical(const NormedSpace& space, double t, int samples,
                                    std::uint64_t seed) {
  if (t <= 0) throw std::invalid_argument("t must be > 0");
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const int n = space.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto random_vec = [&] {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };

  double best = 0.0;
  auto consider = [&](const Vec& x, const Vec& ydir) {
    double ny = space.norm(ydir);
    if (ny == 0.0) return;
    best = std::max(best, pair_value(space, x, ydir * (t / ny)));
  };

  // Structured pairs: coordinate vectors and sign patterns.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      consider(Vec::Unit(n, i), Vec::Unit(n, j));
    }
  }
  const int patterns = n <= 6 ? (1 << n) : 64;
  for (int a = 0; a < patterns; ++a) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = (a >> (i % 31)) & 1 ? -1.0 : 1.0;
    x = unit(space, x);
    for (int b = 0; b < patterns; ++b) {
      Vec y(n);
      for (int i = 0; i < n; ++i) y[i] = (b >> (i % 31)) & 1 ? -1.0 : 1.0;
      consider(x, y);
    }
  }

  for (int s = 0; s < samples; ++s) {
    Vec x = random_vec();
    if (x.norm() == 0.0) continue;
    x = unit(space, x);
    Vec y = random_vec();
    consider(x, y);
    if (n > 1) {
      Vec e = x / x.norm();
      Vec yo = y - e * e.dot(y);
      consider(x, yo);
    }
  }
  return std::min(best, t);
}

double smoothness_power(const NormedSpace& space) {
  const Exponent& p = space.p();
  if (p.is_inf() || p.is_one()) return 1.0;
  double pv = p.value();
  return pv >= 2.0 ? 2.0 : pv;
}

}  // namespace reif
