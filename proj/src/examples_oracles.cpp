#include "reif/examples_oracles.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>

namespace reif {

double rademacher_norm(const Vec& a, const Exponent& p) {
  const int m = static_cast<int>(a.size());
  if (m == 0) return 0.0;
  if (p.is_inf()) return a.cwiseAbs().sum();
  if (p.is_two()) return a.norm();
  if (m > kMaxRademacher) {
    throw std::invalid_argument("rademacher_norm: " + std::to_string(m) + " coefficients exceed the enumeration cap of " +
                                std::to_string(kMaxRademacher));
  }
  const double pv = p.value();
  // The sign of a_0 can be fixed by symmetry; walk the remaining signs in Gray order.
  double v = a.sum();
  long double acc = 0;
  const std::uint64_t n = std::uint64_t{1} << (m - 1);
  for (std::uint64_t s = 0;; ++s) {
    acc += std::pow(std::abs(v), pv);
    if (s + 1 == n) break;
    int bit = std::countr_zero(s + 1);
    std::uint64_t gray = (s + 1) ^ ((s + 1) >> 1);
    v += ((gray >> bit) & 1) ? -2 * a[bit + 1] : 2 * a[bit + 1];
  }
  return std::pow(static_cast<double>(acc / static_cast<long double>(n)), 1.0 / pv);
}

std::string to_string(SnowflakeMode mode) {
  return mode == SnowflakeMode::plane_bump ? "plane_bump" : "rademacher";
}

SnowflakeMode snowflake_mode_from_string(const std::string& s) {
  if (s == "plane_bump" || s == "plane") return SnowflakeMode::plane_bump;
  if (s == "rademacher") return SnowflakeMode::rademacher;
  throw std::invalid_argument("unknown snowflake mode '" + s + "'");
}

void validate(const SnowflakeSpec& spec) {
  if (spec.depth < 1 || spec.depth > kMaxRademacher) {
    throw std::invalid_argument("snowflake depth must lie in [1, 20], got " + std::to_string(spec.depth));
  }
  if (static_cast<int>(spec.etas.size()) < spec.depth - 1) {
    throw std::invalid_argument("snowflake of depth " + std::to_string(spec.depth) + " needs " +
                                std::to_string(spec.depth - 1) + " etas");
  }
  for (int i = 0; i + 1 < spec.depth; ++i) {
    if (!std::isfinite(spec.etas[i])) throw std::invalid_argument("snowflake eta must be finite");
  }
}

bool snowflake_hypothesis_ok(const SnowflakeSpec& spec) {
  for (int i = 0; i + 1 < spec.depth && i < static_cast<int>(spec.etas.size()); ++i) {
    if (std::abs(spec.etas[i]) > 0.1) return false;
  }
  return true;
}

namespace {

Polyline plane_snowflake(const SnowflakeSpec& spec) {
  Polyline poly;
  poly.mode = spec.mode;
  poly.p = spec.p;
  poly.vertices = {Vec::Zero(2), Vec::Unit(2, 0)};
  poly.params = {0.0, 1.0};
  for (int level = 1; level < spec.depth; ++level) {
    const double eta = spec.etas[level - 1];
    std::vector<Vec> v;
    std::vector<double> t;
    v.reserve(4 * poly.vertices.size());
    t.reserve(4 * poly.vertices.size());
    for (std::size_t j = 0; j + 1 < poly.vertices.size(); ++j) {
      const Vec& P = poly.vertices[j];
      const Vec d = poly.vertices[j + 1] - P;
      Vec n(2);
      n << -d[1], d[0];
      const double t0 = poly.params[j], dt = poly.params[j + 1] - t0;
      v.push_back(P);
      v.push_back(P + d / 3);
      v.push_back(P + d / 2 + eta * n / 6);
      v.push_back(P + 2 * d / 3);
      t.push_back(t0);
      t.push_back(t0 + dt / 3);
      t.push_back(t0 + dt / 2);
      t.push_back(t0 + 2 * dt / 3);
    }
    v.push_back(poly.vertices.back());
    t.push_back(1.0);
    poly.vertices = std::move(v);
    poly.params = std::move(t);
  }
  return poly;
}

// Parameters are integers over N = 2 * 3^n so every breakpoint is exact.
Polyline rademacher_snowflake(const SnowflakeSpec& spec) {
  const int n = spec.depth - 1;
  std::int64_t N = 2;
  for (int i = 0; i < n; ++i) N *= 3;
  // Piece length at level i, in units of 1/N.
  std::vector<std::int64_t> piece(n + 1, N);
  for (int i = 2; i <= n; ++i) piece[i] = piece[i - 1] / 3;
  std::set<std::int64_t> breaks{0, N};
  for (int i = 1; i <= n; ++i) {
    const std::int64_t L = piece[i];
    for (std::int64_t a = 0; a < N; a += L) {
      breaks.insert(a + L / 3);
      breaks.insert(a + L / 2);
      breaks.insert(a + 2 * L / 3);
    }
  }
  Polyline poly;
  poly.mode = spec.mode;
  poly.p = spec.p;
  const double Nd = static_cast<double>(N);
  for (std::int64_t t : breaks) {
    Vec v = Vec::Zero(spec.depth);
    v[0] = static_cast<double>(t) / Nd;
    for (int i = 1; i <= n; ++i) {
      const std::int64_t L = piece[i];
      std::int64_t o = t - std::min(t / L, N / L - 1) * L;
      double tent = 0;
      if (o > L / 3 && o < 2 * L / 3) tent = static_cast<double>(o <= L / 2 ? o - L / 3 : 2 * L / 3 - o) / Nd;
      v[i] = spec.etas[i - 1] * tent;
    }
    poly.params.push_back(static_cast<double>(t) / Nd);
    poly.vertices.push_back(std::move(v));
  }
  return poly;
}

// Sum over subsets S of the levels of 3^-|S| (2/3)^(n-|S|) N(1, eta_S).
void subset_sum(const SnowflakeSpec& spec, int level, int n, std::vector<double>& active, double weight,
                long double& acc) {
  if (level == n) {
    Vec a(static_cast<Eigen::Index>(active.size()) + 1);
    a[0] = 1.0;
    for (std::size_t j = 0; j < active.size(); ++j) a[static_cast<Eigen::Index>(j) + 1] = active[j];
    acc += weight * rademacher_norm(a, spec.p);
    return;
  }
  subset_sum(spec, level + 1, n, active, weight * 2.0 / 3.0, acc);
  active.push_back(spec.etas[level]);
  subset_sum(spec, level + 1, n, active, weight / 3.0, acc);
  active.pop_back();
}

}  // namespace

Polyline snowflake(const SnowflakeSpec& spec) {
  validate(spec);
  if (spec.depth > kMaxMaterializedDepth) {
    throw std::invalid_argument("snowflake: depth " + std::to_string(spec.depth) +
                                " is beyond the materialization cap of " + std::to_string(kMaxMaterializedDepth));
  }
  return spec.mode == SnowflakeMode::plane_bump ? plane_snowflake(spec) : rademacher_snowflake(spec);
}

double segment_norm(const Polyline& poly, const Vec& d) {
  return poly.mode == SnowflakeMode::rademacher ? rademacher_norm(d, poly.p) : lp_norm(d, poly.p);
}

double polyline_length(const Polyline& poly) {
  if (poly.vertices.size() < 2) throw std::invalid_argument("polyline_length: need at least 2 vertices");
  long double acc = 0;
  for (std::size_t j = 0; j + 1 < poly.vertices.size(); ++j) {
    acc += segment_norm(poly, poly.vertices[j + 1] - poly.vertices[j]);
  }
  return static_cast<double>(acc);
}

std::vector<double> segment_speeds(const Polyline& poly) {
  std::vector<double> out;
  for (std::size_t j = 0; j + 1 < poly.vertices.size(); ++j) {
    out.push_back(segment_norm(poly, poly.vertices[j + 1] - poly.vertices[j]) /
                  (poly.params[j + 1] - poly.params[j]));
  }
  return out;
}

double snowflake_length(const SnowflakeSpec& spec) {
  validate(spec);
  if (spec.mode == SnowflakeMode::plane_bump) return polyline_length(snowflake(spec));
  std::vector<double> active;
  long double acc = 0;
  subset_sum(spec, 0, spec.depth - 1, active, 1.0, acc);
  return static_cast<double>(acc);
}

std::vector<double> snowflake_lengths(const SnowflakeSpec& spec) {
  validate(spec);
  std::vector<double> out;
  for (int d = 1; d <= spec.depth; ++d) {
    SnowflakeSpec s = spec;
    s.depth = d;
    out.push_back(snowflake_length(s));
  }
  return out;
}

double apex_bilipschitz(const Exponent& p, double eps) {
  SnowflakeSpec s;
  s.p = p;
  s.etas = {eps};
  s.depth = 2;
  Polyline g2 = snowflake(s);
  Vec d = g2.vertices[2] - g2.vertices[1];
  return lp_norm(d, p) / std::abs(d[0]);
}

PointMeasure dirac_example(double t) {
  if (!(t > 0 && t <= 0.1)) throw std::invalid_argument("dirac_example: t must lie in (0, 1/10]");
  PointMeasure mu(2);
  Vec x(2);
  for (auto [a, b] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {-1.0, 0.0}, {0.0, t}, {0.0, -t}}) {
    x << a, b;
    mu.add(x, 1.0);
  }
  return mu;
}

NormedSpace l4_space() { return NormedSpace(3, Exponent::finite(4)); }

Mat no_power_gain_plane() {
  Mat L(3, 2);
  L << 1, 0, 1, 1, 0, 1;
  return L;
}

std::vector<Vec> no_power_gain_points() {
  Mat L = no_power_gain_plane();
  Vec v1 = L.col(0), v2 = L.col(1);
  return {Vec::Zero(3), v1 + v2, 2 * v1 + 3 * v2, 3 * v1 + 4 * v2, 2 * v1 - v2, -v1 + 3 * v2};
}

NoPowerGainMatrix no_power_gain_matrix(const std::vector<Vec>& x) {
  if (x.size() != 6) throw std::invalid_argument("no_power_gain_matrix: need exactly 6 points");
  NormedSpace X = l4_space();
  NoPowerGainMatrix out;
  out.matrix = Mat::Zero(15, 15);
  int row = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j, ++row) {
      Vec d = x[i] - x[j];
      double nd = X.norm(d);
      if (nd == 0) {
        throw std::invalid_argument("no_power_gain_matrix: points " + std::to_string(i) + " and " +
                                    std::to_string(j) + " coincide");
      }
      Vec u = duality_map(X, d).coefficients / nd;
      if (i > 0) out.matrix.block(row, 3 * (i - 1), 1, 3) = u.transpose();
      out.matrix.block(row, 3 * (j - 1), 1, 3) = -u.transpose();
      out.rows.emplace_back(i, j);
    }
  }
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  MatL ml = out.matrix.cast<long double>();
  out.det = static_cast<double>(Eigen::FullPivLU<MatL>(ml).determinant());
  Vec sv = Eigen::JacobiSVD<Mat>(out.matrix).singularValues();
  out.sigma_max = sv[0];
  out.sigma_min = sv[sv.size() - 1];
  for (int i = 0; i < sv.size(); ++i) out.rank += sv[i] > 1e-12 * sv[0];
  return out;
}

namespace {

Mat plane_onb() { return no_power_gain_plane().householderQr().householderQ() * Mat::Identity(3, 2); }

double l4_operator_norm_on_plane(const Mat& A) {
  Mat Q = plane_onb();
  NormedSpace X = l4_space();
  double op = 0;
  for (int a = 0; a < 720; ++a) {
    double th = M_PI * a / 720;
    Vec u = std::cos(th) * Q.col(0) + std::sin(th) * Q.col(1);
    op = std::max(op, X.norm(A * u) / X.norm(u));
  }
  return op;
}

}  // namespace

Mat no_power_gain_kernel_map() {
  // Unknowns: A Q = [c_0 c_1] (6 entries). Each direction d = Q(cos, sin)
  // gives one equation sum_i d_i^3 (A d)_i = 0; the form is quartic, so
  // 5 generic directions span the constraints and 12 are more than enough.
  Mat Q = plane_onb();
  Mat E(12, 6);
  for (int r = 0; r < 12; ++r) {
    double th = M_PI * (r + 0.5) / 12;
    Eigen::Vector2d c(std::cos(th), std::sin(th));
    Vec d = Q * c;
    for (int i = 0; i < 3; ++i) {
      double w = d[i] * d[i] * d[i];
      E(r, 2 * i) = w * c[0];
      E(r, 2 * i + 1) = w * c[1];
    }
  }
  Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullV);
  Vec z = svd.matrixV().col(5);
  Mat AQ(3, 2);
  for (int i = 0; i < 3; ++i) AQ.row(i) << z[2 * i], z[2 * i + 1];
  Mat A = AQ * Q.transpose();
  return A / l4_operator_norm_on_plane(A);
}

std::vector<Vec> l4_plane_grid(double h) {
  if (!(h > 0)) throw std::invalid_argument("l4_plane_grid: step must be positive");
  Mat Q = plane_onb();
  NormedSpace X = l4_space();
  // |x|_4 <= 1 forces |x|_2 <= 3^(1/4).
  const int n = static_cast<int>(std::ceil(std::pow(3.0, 0.25) / h));
  std::vector<Vec> out;
  for (int a = -n; a <= n; ++a) {
    for (int b = -n; b <= n; ++b) {
      Vec p = a * h * Q.col(0) + b * h * Q.col(1);
      if (X.norm(p) <= 1.0) out.push_back(p);
    }
  }
  return out;
}

PowerGainWitness no_power_gain_witness(const std::vector<Vec>& pts, const std::vector<Vec>& f) {
  if (pts.size() != f.size()) throw std::invalid_argument("no_power_gain_witness: one sample per point");
  // Fixed-size copies; J(d) = |d|_4^-2 (d_1^3, d_2^3, d_3^3) in closed form.
  std::vector<Eigen::Vector3d> P(pts.size()), F(f.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].size() != 3 || f[i].size() != 3) throw std::invalid_argument("no_power_gain_witness: points live in R^3");
    P[i] = pts[i];
    F[i] = f[i];
  }
  auto l4sq = [](const Eigen::Vector3d& v) { return std::sqrt(v.array().square().square().sum()); };
  PowerGainWitness w;
  std::size_t bi = 0, bj = 0;
  bool any = false;
  for (std::size_t i = 0; i < P.size(); ++i) {
    for (std::size_t j = i + 1; j < P.size(); ++j) {
      Eigen::Vector3d d = P[i] - P[j];
      double n2 = l4sq(d);
      if (n2 <= 1e-18) continue;
      Eigen::Vector3d df = F[i] - F[j];
      double ratio = std::abs(d.array().cube().matrix().dot(df)) / (n2 * n2);
      w.distortion = std::max(w.distortion, std::abs(l4sq(d + df) - n2) / n2);
      ++w.pairs;
      if (!any || ratio > w.bound) {
        w.bound = ratio;
        bi = i;
        bj = j;
        any = true;
      }
    }
  }
  if (!any) throw std::invalid_argument("no_power_gain_witness: no pair separated above resolution");
  w.x = pts[bi];
  w.y = pts[bj];
  return w;
}

std::vector<Vec> normal_graph(const std::vector<Vec>& pts, double eps, const Vec& w) {
  Mat L = no_power_gain_plane();
  Eigen::Vector3d n = Eigen::Vector3d(L.col(0)).cross(Eigen::Vector3d(L.col(1))).normalized();
  Vec wu = w.normalized();
  std::vector<Vec> out;
  out.reserve(pts.size());
  for (const Vec& p : pts) out.push_back(Vec(eps * wu.dot(p) * n));
  return out;
}

std::vector<Vec> linear_graph(const std::vector<Vec>& pts, double eps, const Mat& A) {
  double op = l4_operator_norm_on_plane(A);
  if (op == 0) throw std::invalid_argument("linear_graph: A vanishes on the plane");
  std::vector<Vec> out;
  out.reserve(pts.size());
  for (const Vec& p : pts) out.push_back(eps / op * (A * p));
  return out;
}

}  // namespace reif
