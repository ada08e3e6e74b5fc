// Brute-force reference computations shared by the unit and acceptance tests.
#pragma once

#include "reif/affine_geometry.hpp"
#include "reif/measure_beta.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using reif::Vec;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int i = 0; i < iters; ++i) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = f(b);
    }
  }
  return f(0.5 * (lo + hi));
}

// min over t of f on a uniform grid, then golden refinement around the best node.
inline double grid_then_golden(const std::function<double(double)>& f, double lo, double hi, double step) {
  long n = static_cast<long>((hi - lo) / step);
  double best = std::numeric_limits<double>::infinity();
  long bi = 0;
  for (long i = 0; i <= n; ++i) {
    double v = f(lo + i * step);
    if (v < best) {
      best = v;
      bi = i;
    }
  }
  double a = lo + (bi - 1) * step, b = lo + (bi + 1) * step;
  return std::min(best, golden_min(f, a, b));
}

// Exhaustive l^p best-line search in the plane: a grid over the line angle,
// with the offset solved exactly (distance to a line is |<n,z> - c| / |n|_q,
// so the weighted squared objective is quadratic in c), then golden refinement.
inline double best_line_objective_2d(const reif::NormedSpace& X, const reif::PointMeasure& mu,
                                     int angle_grid = 2000) {
  reif::NormedSpace dual = X.dual();
  auto f = [&](double th) {
    Vec nu = vec({-std::sin(th), std::cos(th)});
    double sw = 0, swz = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      sw += mu.weight(i);
      swz += mu.weight(i) * nu.dot(mu.point(i));
    }
    double c = swz / sw;
    double nq = dual.norm(nu);
    double acc = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double d = (nu.dot(mu.point(i)) - c) / nq;
      acc += mu.weight(i) * d * d;
    }
    return acc;
  };
  double step = M_PI / angle_grid;
  return grid_then_golden(f, 0.0, M_PI, step);
}

}  // namespace oracle
