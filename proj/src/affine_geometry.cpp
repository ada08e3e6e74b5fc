#include "reif/affine_geometry.hpp"

#include "reif/polyhedral_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace reif {

AffinePlane AffinePlane::point(const Vec& p) {
  AffinePlane a;
  a.base = p;
  a.basis = Mat::Zero(p.size(), 0);
  return a;
}

AffinePlane AffinePlane::linear(const Mat& basis) {
  AffinePlane a;
  a.base = Vec::Zero(basis.rows());
  a.basis = basis;
  return a;
}

AffinePlane AffinePlane::linear_part() const { return linear(basis); }

double c1_constant(int k, double tau) {
  double growth = 1.0 + 2.0 / (tau * tau);
  return std::max(1.0 / tau, k * std::pow(growth, k));
}

double c2_constant(int k) { return std::pow(12.0, k) * std::pow(c1_constant(k, 2.0 / 3.0), 2.0 * k); }

double c3_constant(int k) { return k * c1_constant(k, 2.0 / 3.0); }

std::vector<Vec> columns(const Mat& m) {
  std::vector<Vec> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.emplace_back(m.col(j));
  return out;
}

Mat from_columns(const std::vector<Vec>& cols, int dim) {
  Mat m(dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = cols[j];
  return m;
}

namespace {

// Minimises sum |r - A lambda|^p for 1 < p < inf by damped Newton steps.
Foot newton_fit(const Mat& A, const Vec& r, double pv) {
  Foot out;
  const Eigen::Index k = A.cols();
  double s = r.cwiseAbs().maxCoeff();
  if (s == 0.0) {
    out.coeffs = Vec::Zero(k);
    out.distance = 0.0;
    return out;
  }
  Vec rs = r / s;
  Vec lam = A.colPivHouseholderQr().solve(rs);
  auto F = [&](const Vec& l) {
    Vec e = rs - A * l;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) acc += std::pow(std::abs(e[i]), pv);
    return acc;
  };
  bool converged = false;
  double f = F(lam);
  for (int it = 0; it < 200; ++it) {
    Vec e = rs - A * lam;
    if (f <= 0.0) {
      converged = true;
      break;
    }
    Vec w(e.size()), h(e.size());
    double emax = e.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      double a = std::abs(e[i]);
      w[i] = std::pow(a, pv - 1.0) * (e[i] > 0 ? 1.0 : (e[i] < 0 ? -1.0 : 0.0));
      double floor = pv < 2.0 ? std::max(a, 1e-9 * emax) : a;
      h[i] = std::pow(floor, pv - 2.0);
    }
    Vec g = -pv * (A.transpose() * w);
    double N = std::pow(f, 1.0 / pv);
    double grad_norm = g.norm() / (pv * std::pow(N, pv - 1.0));
    if (grad_norm < 1e-12) {
      converged = true;
      break;
    }
    Mat H = pv * (pv - 1.0) * (A.transpose() * h.asDiagonal() * A);
    H.diagonal().array() += 1e-14 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    Vec d = H.ldlt().solve(-g);
    bool stepped = false;
    for (int pass = 0; pass < 2 && !stepped; ++pass) {
      if (pass == 1) d = -g;
      double slope = g.dot(d);
      if (!(slope < 0) || !d.allFinite()) continue;
      double t = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        Vec cand = lam + t * d;
        double fc = F(cand);
        if (fc <= f + 1e-4 * t * slope) {
          lam = cand;
          f = fc;
          stepped = true;
          break;
        }
        t *= 0.5;
      }
    }
    if (!stepped) {
      converged = grad_norm < 1e-7;
      break;
    }
  }
  out.coeffs = lam * s;
  out.distance = std::pow(F(lam), 1.0 / pv) * s;
  out.converged = converged;
  return out;
}

}  // namespace

Foot distance_to_affine(const NormedSpace& space, const AffinePlane& plane, const Vec& z) {
  if (z.size() != space.dim() || plane.ambient() != space.dim()) {
    throw std::invalid_argument("distance_to_affine: dimension mismatch");
  }
  Foot out;
  Vec r = z - plane.base;
  const int k = plane.k();
  if (k == 0) {
    out.foot = plane.base;
    out.coeffs = Vec::Zero(0);
    out.distance = space.norm(r);
    return out;
  }
  const Exponent& p = space.p();
  if (p.is_two()) {
    out.coeffs = plane.basis.colPivHouseholderQr().solve(r);
  } else if (p.is_one() || p.is_inf()) {
    out.coeffs = polyhedral_fit(plane.basis, r, p.is_inf()).lambda;
  } else {
    Foot nf = newton_fit(plane.basis, r, p.value());
    out.coeffs = nf.coeffs;
    out.converged = nf.converged;
  }
  out.foot = plane.at(out.coeffs);
  out.distance = space.norm(z - out.foot);
  return out;
}

double general_position_margin(const NormedSpace& space, const std::vector<Vec>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("general_position_margin: empty family");
  double tau = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double n = space.norm(vectors[i]);
    if (n == 0.0) return 0.0;
    tau = std::min({tau, n, 1.0 / n});
    if (i == 0) continue;
    Mat prev = from_columns(std::vector<Vec>(vectors.begin(), vectors.begin() + i), space.dim());
    Eigen::ColPivHouseholderQR<Mat> qr(prev);
    if (qr.rank() < static_cast<Eigen::Index>(i)) return 0.0;
    double d = distance_to_affine(space, AffinePlane::linear(prev), vectors[i]).distance;
    if (d <= 1e-12 * n) return 0.0;
    tau = std::min(tau, d);
  }
  return tau;
}

std::vector<Vec> direction_net(int k, int count) {
  std::vector<Vec> out;
  if (k <= 0) return out;
  if (k == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    out.push_back(Vec::Constant(1, -1.0));
    return out;
  }
  if (k == 2) {
    for (int j = 0; j < count; ++j) {
      double a = 2.0 * M_PI * j / count;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
    return out;
  }
  // Coordinate directions, then normalised Halton points of the cube [-1,1]^k.
  for (int i = 0; i < k; ++i) {
    out.push_back(Vec::Unit(k, i));
    out.push_back(-Vec::Unit(k, i));
  }
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  for (int j = 1; static_cast<int>(out.size()) < count; ++j) {
    Vec v(k);
    for (int d = 0; d < k; ++d) {
      int b = primes[d % 16];
      double f = 1.0, h = 0.0;
      for (int i = j; i > 0; i /= b) {
        f /= b;
        h += f * (i % b);
      }
      v[d] = 2.0 * h - 1.0;
    }
    if (v.norm() > 1e-9) out.push_back(v / v.norm());
  }
  return out;
}

namespace {

Mat orthonormal_basis(const Mat& spanning, int* rank_out = nullptr) {
  Eigen::ColPivHouseholderQR<Mat> qr(spanning);
  int rank = static_cast<int>(qr.rank());
  Mat Q = qr.householderQ() * Mat::Identity(spanning.rows(), rank);
  if (rank_out) *rank_out = rank;
  return Q;
}

int net_size(int k) { return k <= 1 ? 2 : (k == 2 ? 720 : 2000); }

}  // namespace

Mat riesz_basis(const NormedSpace& space, const Mat& spanning, double tau) {
  if (!(tau > 0 && tau < 1)) throw std::invalid_argument("riesz_basis: tau must be in (0,1)");
  int k = 0;
  Mat Q = orthonormal_basis(spanning, &k);
  if (k == 0) throw std::invalid_argument("riesz_basis: empty span");
  if (space.hilbert()) return Q;
  std::vector<Vec> chosen;
  Vec first;
  for (Eigen::Index j = 0; j < spanning.cols(); ++j) {
    if (spanning.col(j).norm() > 1e-12) {
      first = spanning.col(j);
      break;
    }
  }
  chosen.push_back(first / space.norm(first));
  auto net = direction_net(k, net_size(k));
  for (int j = 1; j < k; ++j) {
    AffinePlane prev = AffinePlane::linear(from_columns(chosen, space.dim()));
    double best = -1.0;
    Vec best_v;
    for (const Vec& u : net) {
      Vec v = Q * u;
      v /= space.norm(v);
      double d = distance_to_affine(space, prev, v).distance;
      if (d > best + 1e-12) {
        best = d;
        best_v = v;
      }
    }
    if (best < tau - 1e-12) throw std::runtime_error("riesz_basis: requested tau unattainable");
    chosen.push_back(best_v);
  }
  return from_columns(chosen, space.dim());
}

namespace {

// d(v, W cap B_1) for a linear W.
double dist_to_unit_ball(const NormedSpace& space, const AffinePlane& W, const Vec& v,
                         int samples) {
  const int k = W.k();
  if (k == 0) return space.norm(v);
  if (k == 1) {
    Vec w = W.basis.col(0);
    double tmax = 1.0 / space.norm(w);
    double lo = -tmax, hi = tmax;
    auto f = [&](double t) { return space.norm(v - t * w); };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    double fa = f(a), fb = f(b);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * tmax; ++it) {
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
    return std::min({f(0.5 * (lo + hi)), f(-tmax), f(tmax)});
  }
  Foot ft = distance_to_affine(space, W, v);
  if (space.norm(ft.foot) <= 1.0) return ft.distance;
  // The constrained minimiser lies on the unit sphere of W.
  double best = space.norm(v - ft.foot / space.norm(ft.foot));
  for (const Vec& u : direction_net(k, samples)) {
    Vec w = W.basis * u;
    w /= space.norm(w);
    best = std::min(best, space.norm(v - w));
  }
  return best;
}

double one_sided(const NormedSpace& space, const AffinePlane& V, const AffinePlane& W,
                 int samples) {
  double worst = 0.0;
  for (const Vec& u : direction_net(V.k(), samples)) {
    Vec v = V.basis * u;
    v /= space.norm(v);
    worst = std::max(worst, dist_to_unit_ball(space, W, v, samples));
  }
  return worst;
}

}  // namespace

double grassmann_distance(const NormedSpace& space, const AffinePlane& V, const AffinePlane& W,
                          int samples) {
  if (V.k() != W.k()) return 1.0;
  if (V.k() == 0) return 0.0;
  return std::max(one_sided(space, V, W, samples), one_sided(space, W, V, samples));
}

double hausdorff_distance(const NormedSpace& space, const std::vector<Vec>& A,
                          const std::vector<Vec>& B) {
  if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff_distance: empty set");
  auto side = [&](const std::vector<Vec>& X, const std::vector<Vec>& Y) {
    double worst = 0.0;
    for (const Vec& x : X) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec& y : Y) best = std::min(best, space.dist(x, y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(side(A, B), side(B, A));
}

std::string to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::orthogonal:
      return "orthogonal";
    case ProjectionKind::j_projection:
      return "j_projection";
    case ProjectionKind::hahn_banach:
      return "hahn_banach";
    case ProjectionKind::euclidean_fallback:
      return "euclidean_fallback";
  }
  return "unknown";
}

ProjectionKind projection_kind_from_string(const std::string& s) {
  if (s == "orthogonal") return ProjectionKind::orthogonal;
  if (s == "j_projection") return ProjectionKind::j_projection;
  if (s == "hahn_banach") return ProjectionKind::hahn_banach;
  if (s == "euclidean_fallback") return ProjectionKind::euclidean_fallback;
  throw std::invalid_argument("unknown projection kind: " + s);
}

ProjectionKind default_projection_kind(const NormedSpace& space, int k) {
  if (space.hilbert()) return ProjectionKind::orthogonal;
  if (k == 1 && !space.p().is_one() && !space.p().is_inf()) return ProjectionKind::j_projection;
  return ProjectionKind::hahn_banach;
}

namespace {

double riesz_thorin(const Mat& P, const Exponent& p) {
  double n1 = P.cwiseAbs().colwise().sum().maxCoeff();
  double ninf = P.cwiseAbs().rowwise().sum().maxCoeff();
  if (p.is_inf()) return ninf;
  double ip = 1.0 / p.value();
  return std::pow(n1, ip) * std::pow(ninf, 1.0 - ip);
}

}  // namespace

AlmostProjection make_projection(const NormedSpace& space, const AffinePlane& V,
                                 ProjectionKind kind) {
  const int n = space.dim();
  const int k = V.k();
  if (V.ambient() != n) throw std::invalid_argument("make_projection: dimension mismatch");
  AlmostProjection out;
  out.kind = kind;
  if (k == 0) {
    out.target = Mat::Zero(n, 0);
    out.matrix = Mat::Zero(n, n);
    out.op_norm_estimate = 0.0;
    return out;
  }
  switch (kind) {
    case ProjectionKind::orthogonal:
    case ProjectionKind::euclidean_fallback: {
      if (kind == ProjectionKind::orthogonal && !space.hilbert()) {
        throw std::invalid_argument("orthogonal projection requires p = 2");
      }
      Mat Q = orthonormal_basis(V.basis);
      out.target = Q;
      out.matrix = Q * Q.transpose();
      for (int i = 0; i < Q.cols(); ++i) out.row_functionals.push_back(make_functional(space, Q.col(i)));
      out.op_norm_estimate =
          kind == ProjectionKind::orthogonal ? 1.0 : riesz_thorin(out.matrix, space.p());
      break;
    }
    case ProjectionKind::j_projection: {
      if (k != 1 || space.p().is_one() || space.p().is_inf()) {
        throw std::invalid_argument("J-projection requires a line and 1 < p < inf");
      }
      Vec v = V.basis.col(0);
      v /= space.norm(v);
      Functional jv = duality_map(space, v);
      out.target = v;
      out.matrix = v * jv.coefficients.transpose();
      out.row_functionals.push_back(jv);
      out.op_norm_estimate = jv.dual_norm;
      break;
    }
    case ProjectionKind::hahn_banach: {
      Mat W = riesz_basis(space, V.basis);
      out.target = W;
      NormedSpace dual = space.dual();
      // Null space of W^T: functionals vanishing on V.
      Eigen::FullPivLU<Mat> lu(W.transpose());
      Mat N = lu.kernel();
      bool has_kernel = N.cols() > 0 && N.norm() > 0 && k < n;
      Mat G = W.transpose() * W;
      Mat C(n, k);
      double sum_norms = 0.0;
      for (int i = 0; i < k; ++i) {
        Vec c0 = W * G.ldlt().solve(Vec::Unit(k, i));
        Vec c = c0;
        if (has_kernel) c = c0 - distance_to_affine(dual, AffinePlane::linear(N), c0).foot;
        C.col(i) = c;
        out.row_functionals.push_back(make_functional(space, c));
        sum_norms += out.row_functionals.back().dual_norm;
      }
      out.matrix = W * C.transpose();
      out.op_norm_estimate = std::min(sum_norms, riesz_thorin(out.matrix, space.p()));
      break;
    }
  }
  return out;
}

double empirical_operator_norm(const NormedSpace& space, const Mat& P, int samples,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const int n = space.dim();
  double best = 0.0;
  auto consider = [&](const Vec& x) {
    double nx = space.norm(x);
    if (nx > 0) best = std::max(best, space.norm(P * x) / nx);
  };
  for (int i = 0; i < n; ++i) consider(Vec::Unit(n, i));
  for (int s = 0; s < samples; ++s) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = gauss(rng);
    consider(x);
    if (s % 2 == 0) {
      Vec sg = x.array().sign();
      consider(sg);
    }
  }
  return best;
}

PythagoreanReport pythagorean_report(const NormedSpace& space, const AlmostProjection& proj,
                                     int samples, std::uint64_t seed) {
  PythagoreanReport rep;
  if (space.p().is_inf()) return rep;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(-6.0, 0.0);
  const int n = space.dim();
  const int k = static_cast<int>(proj.target.cols());
  const double c3 = proj.op_norm_estimate;
  const bool improved = proj.kind == ProjectionKind::orthogonal ||
                        proj.kind == ProjectionKind::j_projection;
  for (int s = 0; s < samples; ++s) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = gauss(rng);
    if (s % 2 == 1 && k > 0) {
      // Near V: v + small transverse part.
      Vec lam(k);
      for (int i = 0; i < k; ++i) lam[i] = gauss(rng);
      x = proj.target * lam + std::pow(10.0, unif(rng)) * x;
    }
    double nx = space.norm(x);
    if (nx == 0.0) continue;
    Vec px = proj.apply(x);
    Vec qx = x - px;
    double npx = space.norm(px);
    double nqx = space.norm(qx);
    double lhs = std::abs(nx * nx - npx * npx);
    double pairing = std::abs(duality_map(space, px)(qx));
    double rho = modulus_smoothness_bound(space, nqx / nx);
    double rhs = 2.0 * pairing + 8.0 * c3 * c3 * nx * nx * rho;
    double tol = 1e-12 * nx * nx;
    double ratio = lhs <= tol ? 0.0 : lhs / rhs;
    rep.general_ratio = std::max(rep.general_ratio, ratio);
    if (ratio > 1.0 + 1e-9) ++rep.violations;
    if (improved) {
      double rhs2 = 8.0 * nx * nx * rho;
      double r2 = lhs <= tol ? 0.0 : lhs / rhs2;
      rep.improved_ratio = std::max(rep.improved_ratio, r2);
      if (r2 > 1.0 + 1e-9) ++rep.violations;
    }
    rep.classic_slack =
        std::max(rep.classic_slack, std::abs(nx * nx - npx * npx - nqx * nqx) / (nx * nx));
    ++rep.samples;
  }
  return rep;
}

GraphCheck graph_check(const NormedSpace& space, const std::vector<Vec>& points,
                       const AffinePlane& plane, const AlmostProjection& proj, double scale) {
  GraphCheck out;
  std::vector<Vec> feet, heights;
  for (const Vec& z : points) {
    Vec x = plane.base + proj.apply(z - plane.base);
    Vec g = z - x;
    out.kernel_residual = std::max(out.kernel_residual, space.norm(proj.apply(g)));
    out.sup_height = std::max(out.sup_height, space.norm(g) / scale);
    feet.push_back(std::move(x));
    heights.push_back(std::move(g));
  }
  for (std::size_t a = 0; a < feet.size(); ++a) {
    for (std::size_t b = a + 1; b < feet.size(); ++b) {
      double dx = space.dist(feet[a], feet[b]);
      double dg = space.dist(heights[a], heights[b]);
      if (dx <= 1e-9) {
        if (dg > 1e-9) out.is_graph = false;
        continue;
      }
      out.lipschitz = std::max(out.lipschitz, dg / dx);
    }
  }
  if (out.kernel_residual > 1e-8 * std::max(1.0, scale)) out.is_graph = false;
  return out;
}

RegraphCheck regraph_check(const NormedSpace& space, const std::vector<Vec>& points,
                           const AffinePlane& plane, const AffinePlane& new_plane, double delta,
                           double scale) {
  RegraphCheck out;
  auto kind = default_projection_kind(space, plane.k());
  out.before = graph_check(space, points, plane, make_projection(space, plane, kind), scale);
  out.after = graph_check(space, points, new_plane, make_projection(space, new_plane, kind), scale);
  out.bound = 4.0 * c3_constant(plane.k()) * (out.before.lipschitz + delta);
  out.holds = out.after.is_graph && out.after.lipschitz <= out.bound;
  return out;
}

}  // namespace reif
