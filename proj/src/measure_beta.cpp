#include "reif/measure_beta.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

namespace reif {

PointMeasure::PointMeasure(std::vector<Vec> points, std::vector<double> weights) {
  if (points.size() != weights.size()) throw std::invalid_argument("points/weights size mismatch");
  if (!points.empty()) dim_ = static_cast<int>(points.front().size());
  for (std::size_t i = 0; i < points.size(); ++i) add(points[i], weights[i]);
}

void PointMeasure::add(const Vec& x, double w) {
  if (!(w > 0) || !std::isfinite(w)) throw std::invalid_argument("atom weights must be positive");
  if (points_.empty() && dim_ == 0) dim_ = static_cast<int>(x.size());
  if (x.size() != dim_) throw std::invalid_argument("atom dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("atom coordinates must be finite");
  points_.push_back(x);
  weights_.push_back(w);
  total_ += w;
}

PointMeasure PointMeasure::rescaled(const Vec& x, double r, int k) const {
  PointMeasure out(dim_);
  double f = std::pow(r, -k);
  for (std::size_t i = 0; i < size(); ++i) out.add((points_[i] - x) / r, weights_[i] * f);
  return out;
}

PointMeasure PointMeasure::scaled_weights(double factor) const {
  PointMeasure out(dim_);
  for (std::size_t i = 0; i < size(); ++i) out.add(points_[i], weights_[i] * factor);
  return out;
}

bool in_ball(const NormedSpace& space, const Vec& y, const Vec& center, double r) {
  return space.dist(y, center) <= r;
}

PointMeasure restrict(const PointMeasure& mu, const Vec& center, double r, const NormedSpace& space) {
  PointMeasure out(mu.dim());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (in_ball(space, mu.point(i), center, r)) out.add(mu.point(i), mu.weight(i));
  }
  return out;
}

double ball_mass(const NormedSpace& space, const PointMeasure& mu, const Vec& center, double r) {
  double m = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (in_ball(space, mu.point(i), center, r)) m += mu.weight(i);
  }
  return m;
}

namespace {

Mat orthonormalize(const Mat& m) {
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

// Exact l^2 fit: weighted centroid and top-k eigenvectors.
AffinePlane euclidean_fit(const PointMeasure& mu, int k, double* objective) {
  const int n = mu.dim();
  Vec c = Vec::Zero(n);
  for (std::size_t i = 0; i < mu.size(); ++i) c += mu.weight(i) * mu.point(i);
  c /= mu.total_mass();
  Mat C = Mat::Zero(n, n);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    Vec d = mu.point(i) - c;
    C += mu.weight(i) * d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(C);
  AffinePlane plane;
  plane.base = c;
  plane.basis = Mat(n, k);
  for (int j = 0; j < k; ++j) plane.basis.col(j) = es.eigenvectors().col(n - 1 - j);
  if (objective) {
    double obj = 0.0;
    for (int j = 0; j < n - k; ++j) obj += std::max(0.0, es.eigenvalues()[j]);
    *objective = obj;
  }
  return plane;
}

double hyperplane_distance(const NormedSpace& space, const Vec& normal, double normal_dual,
                           const AffinePlane& plane, const Vec& z) {
  (void)space;
  return std::abs(normal.dot(z - plane.base)) / normal_dual;
}

// Pattern search over (base, basis), re-orthonormalising the basis after
// each accepted move.
AffinePlane compass_search(const std::function<double(const AffinePlane&)>& f, AffinePlane start,
                           double base_step, int max_evals, double* value) {
  const int n = start.ambient();
  const int k = start.k();
  start.basis = orthonormalize(start.basis);
  double fv = f(start);
  int evals = 1;
  double bstep = base_step, qstep = 0.1;
  while (evals < max_evals && (bstep > 1e-10 * base_step || qstep > 1e-10)) {
    bool improved = false;
    for (int coord = 0; coord < n + n * k && evals < max_evals; ++coord) {
      for (int sgn : {1, -1}) {
        AffinePlane cand = start;
        if (coord < n) {
          cand.base[coord] += sgn * bstep;
        } else {
          int c = coord - n;
          cand.basis(c % n, c / n) += sgn * qstep;
          cand.basis = orthonormalize(cand.basis);
        }
        double fc = f(cand);
        ++evals;
        if (fc < fv) {
          fv = fc;
          start = cand;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bstep *= 0.5;
      qstep *= 0.5;
    }
  }
  *value = fv;
  return start;
}

Mat random_frame(int n, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat m(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = g(rng);
  return orthonormalize(m);
}

}  // namespace

double plane_objective(const NormedSpace& space, const PointMeasure& mu, const AffinePlane& plane) {
  double acc = 0.0;
  const int n = space.dim();
  if (plane.k() == n - 1 && n >= 2) {
    Eigen::FullPivLU<Mat> lu(plane.basis.transpose());
    Vec normal = lu.kernel().col(0);
    double nd = space.dual_norm(normal);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double d = hyperplane_distance(space, normal, nd, plane, mu.point(i));
      acc += mu.weight(i) * d * d;
    }
    return acc;
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double d = distance_to_affine(space, plane, mu.point(i)).distance;
    acc += mu.weight(i) * d * d;
  }
  return acc;
}

BetaResult best_plane(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r, int k,
                      const BestPlaneOptions& opt) {
  const int n = space.dim();
  if (k < 0 || k >= n) throw std::invalid_argument("best_plane: need 0 <= k < dim");
  if (!(r > 0)) throw std::invalid_argument("best_plane: r must be positive");
  if (x.size() != n) throw std::invalid_argument("best_plane: dimension mismatch");
  BetaResult res;
  PointMeasure ball = restrict(mu, x, r, space);
  if (ball.empty()) {
    res.empty = true;
    res.plane.base = x;
    res.plane.basis = Mat::Identity(n, k);
    return res;
  }
  double l2_obj = 0.0;
  AffinePlane plane = euclidean_fit(ball, k, &l2_obj);
  double obj = 0.0;
  if (space.hilbert()) {
    obj = l2_obj;
    res.lower_bound = l2_obj;
  } else {
    // |.|_p >= c |.|_2 with c = n^{min(0, 1/p - 1/2)}.
    double ip = space.p().is_inf() ? 0.0 : 1.0 / space.p().value();
    double c = std::pow(static_cast<double>(n), std::min(0.0, ip - 0.5));
    res.lower_bound = c * c * l2_obj;
    auto f = [&](const AffinePlane& pl) { return plane_objective(space, ball, pl); };
    obj = f(plane);
    if (k > 0 && obj > 0) {
      std::mt19937_64 rng(opt.seed);
      double v = 0.0;
      AffinePlane best = compass_search(f, plane, 0.1 * r, opt.max_evals, &v);
      obj = v;
      for (int s = 0; s < opt.starts; ++s) {
        AffinePlane start = plane;
        start.basis = random_frame(n, k, rng);
        double vs = 0.0;
        AffinePlane cand = compass_search(f, start, 0.1 * r, opt.max_evals, &vs);
        if (vs < obj) {
          obj = vs;
          best = cand;
        }
      }
      plane = best;
    } else if (k == 0 && obj > 0) {
      double v = 0.0;
      plane = compass_search(f, plane, 0.1 * r, opt.max_evals, &v);
      obj = v;
    }
  }
  res.plane = plane;
  res.objective = obj;
  res.beta = std::sqrt(std::max(0.0, obj) / std::pow(r, k + 2));
  if (res.lower_bound > 0) {
    res.certified_factor = std::max(1.0, obj / res.lower_bound);
  } else {
    res.certified_factor = obj > 1e-14 * ball.total_mass() * r * r
                               ? std::numeric_limits<double>::infinity()
                               : 1.0;
  }
  res.valid = res.certified_factor <= 2.0;
  return res;
}

double beta(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r, int k) {
  return best_plane(space, mu, x, r, k).beta;
}

namespace {

double sup_distance(const NormedSpace& space, const std::vector<Vec>& pts, const AffinePlane& pl) {
  double worst = 0.0;
  for (const Vec& z : pts) worst = std::max(worst, distance_to_affine(space, pl, z).distance);
  return worst;
}

}  // namespace

BetaInfResult beta_inf(const NormedSpace& space, const std::vector<Vec>& S, const Vec& x, double r,
                       int k) {
  const int n = space.dim();
  if (k < 0 || k > n) throw std::invalid_argument("beta_inf: bad k");
  BetaInfResult out;
  std::vector<Vec> pts;
  for (const Vec& z : S) {
    if (in_ball(space, z, x, r)) pts.push_back(z);
  }
  if (pts.empty()) {
    out.empty = true;
    out.plane.base = x;
    out.plane.basis = Mat::Identity(n, k);
    return out;
  }
  if (k == n) {
    out.plane.base = x;
    out.plane.basis = Mat::Identity(n, n);
    return out;
  }
  if (n == 2 && k == 1) {
    NormedSpace dual = space.dual();
    auto width = [&](double th, double* offset) {
      Vec nu(2);
      nu << -std::sin(th), std::cos(th);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const Vec& z : pts) {
        double s = nu.dot(z);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
      if (offset) *offset = 0.5 * (lo + hi);
      return 0.5 * (hi - lo) / dual.norm(nu);
    };
    const int grid = 3600;
    int bi = 0;
    double bw = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
      double w = width(M_PI * i / grid, nullptr);
      if (w < bw) {
        bw = w;
        bi = i;
      }
    }
    double lo = M_PI * (bi - 1) / grid, hi = M_PI * (bi + 1) / grid;
    for (int it = 0; it < 100; ++it) {
      double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
      if (width(a, nullptr) < width(b, nullptr)) {
        hi = b;
      } else {
        lo = a;
      }
    }
    double th = 0.5 * (lo + hi), offset = 0.0;
    double w = width(th, &offset);
    if (w > bw) {
      th = M_PI * bi / grid;
      w = width(th, &offset);
    }
    Vec nu(2), dir(2);
    nu << -std::sin(th), std::cos(th);
    dir << std::cos(th), std::sin(th);
    out.plane.base = nu * offset;
    out.plane.basis = dir;
    out.value = w / r;
    return out;
  }
  PointMeasure counting(n);
  for (const Vec& z : pts) counting.add(z, 1.0);
  AffinePlane start = best_plane(space, counting, x, r, k).plane;
  auto f = [&](const AffinePlane& pl) { return sup_distance(space, pts, pl); };
  double v = 0.0;
  out.plane = compass_search(f, start, 0.1 * r, 6000, &v);
  out.value = v / r;
  return out;
}

DiniProfile dini_profile(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r_lo,
                         double r_hi, int k, double alpha, double chi) {
  if (!(r_lo > 0 && r_lo < r_hi)) throw std::invalid_argument("dini_profile: need 0 < r_lo < r_hi");
  if (!(chi > 0 && chi < 1)) throw std::invalid_argument("dini_profile: need 0 < chi < 1");
  DiniProfile prof;
  prof.center = x;
  prof.alpha = alpha;
  prof.chi = chi;
  const double w = std::log(1.0 / chi);
  double acc = 0.0;
  for (int j = 0;; ++j) {
    double rj = r_hi * std::pow(chi, j);
    if (rj < r_lo * (1.0 - 1e-12)) break;
    BestPlaneOptions opt;
    opt.seed = static_cast<std::uint64_t>(j);
    double b = best_plane(space, mu, x, rj, k, opt).beta;
    acc += std::pow(b, alpha) * w;
    prof.scales.push_back(rj);
    prof.betas.push_back(b);
    prof.cumulative.push_back(acc);
  }
  prof.dini_sum = acc;
  return prof;
}

std::pair<double, double> density_report(const NormedSpace& space, const PointMeasure& mu,
                                         const Vec& x, const std::vector<double>& scales, int k) {
  if (scales.empty()) throw std::invalid_argument("density_report: no scales");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double r : scales) {
    double d = ball_mass(space, mu, x, r) / std::pow(r, k);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace reif
