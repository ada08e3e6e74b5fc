#include "doctest.h"
#include "reif/affine_geometry.hpp"
#include "../support/oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace reif;
using oracle::vec;
constexpr double kInf = std::numeric_limits<double>::infinity();

namespace {

NormedSpace lp(int n, double p) { return NormedSpace(n, Exponent::from_double(p)); }

AffinePlane line(const Vec& dir) { return AffinePlane::linear(dir); }

Vec random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

double lgamma_factorial(int k) { return std::exp(std::lgamma(k + 1.0)); }

}  // namespace

TEST_CASE("general position margin examples") {
  NormedSpace l2 = lp(3, 2);
  CHECK(general_position_margin(l2, {Vec::Unit(3, 0), Vec::Unit(3, 1), Vec::Unit(3, 2)}) ==
        doctest::Approx(1.0));
  CHECK(general_position_margin(l2, {Vec::Unit(3, 0), Vec::Unit(3, 0)}) == 0.0);
  NormedSpace p2 = lp(2, 2);
  Vec v1 = vec({1, 0}), v2 = vec({1, 0.1});
  double span_dist = oracle::grid_then_golden([&](double l) { return (v2 - l * v1).norm(); }, -10, 10, 1e-4);
  double expected = std::min({1.0, 1.0 / v2.norm(), span_dist});
  CHECK(general_position_margin(p2, {v1, v2}) == doctest::Approx(expected).epsilon(1e-9));
  CHECK_THROWS(general_position_margin(p2, {}));
}

TEST_CASE("riesz basis examples") {
  Mat xaxis(2, 1);
  xaxis << 3, 0;
  Mat b = riesz_basis(lp(2, 2), xaxis);
  CHECK(std::abs(std::abs(b(0, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(b(1, 0)) < 1e-12);

  NormedSpace linf = lp(2, kInf);
  Mat b2 = riesz_basis(linf, Mat::Identity(2, 2));
  CHECK(general_position_margin(linf, columns(b2)) >= 2.0 / 3.0);
  // Direction grid: the best achievable second-vector distance in l^inf is 1.
  double best = 0;
  Vec first = b2.col(0);
  for (int a = 0; a < 3600; ++a) {
    Vec v = vec({std::cos(a * M_PI / 1800), std::sin(a * M_PI / 1800)});
    v /= linf.norm(v);
    best = std::max(best, oracle::grid_then_golden([&](double l) { return linf.norm(v - l * first); }, -3, 3, 1e-3));
  }
  CHECK(best == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(linf.norm(b2.col(1)) == doctest::Approx(1.0));
  CHECK(distance_to_affine(linf, line(b2.col(0)), b2.col(1)).distance >= best - 1e-3);

  Mat span(3, 2);
  span << 1, 1, 0, 1, 0, 0;
  Mat h = riesz_basis(lp(3, 2), span);
  CHECK(((h.transpose() * h) - Mat::Identity(2, 2)).norm() < 1e-12);

  for (double p : {1.0, 1.5, 3.0, kInf}) {
    NormedSpace X = lp(4, p);
    Mat s(4, 3);
    s << 1, 0, 2, 1, 1, 0, 0, 1, 1, 0, 0, 3;
    CHECK(general_position_margin(X, columns(riesz_basis(X, s))) >= 2.0 / 3.0 - 1e-9);
  }
}

TEST_CASE("distance to affine examples") {
  Foot f = distance_to_affine(lp(2, 2), line(vec({1, 0})), vec({0, 1}));
  CHECK(f.distance == doctest::Approx(1.0));
  CHECK(f.foot.norm() < 1e-14);
  Foot g = distance_to_affine(lp(2, kInf), line(vec({1, 0})), vec({0, 1}));
  CHECK(g.distance == doctest::Approx(1.0));
  CHECK(g.foot.norm() < 1e-12);
  Foot h = distance_to_affine(lp(3, 2), AffinePlane::point(vec({1, 1, 1})), vec({1, 1, 3}));
  CHECK(h.distance == doctest::Approx(2.0));
  CHECK_THROWS(distance_to_affine(lp(3, 2), line(vec({1, 0})), vec({0, 1})));
}

TEST_CASE("distance to a line matches a dense lambda grid") {
  std::mt19937_64 rng(3);
  for (double p : {4.0, 1.0, 1.5, 3.0, kInf}) {
    NormedSpace X = lp(3, p);
    AffinePlane L = line(vec({1, 1, 0}));
    for (int t = 0; t < 4; ++t) {
      Vec z = random_vec(rng, 3);
      double ref = oracle::grid_then_golden([&](double l) { return X.norm(z - l * L.basis.col(0)); }, -10, 10, 1e-4);
      Foot f = distance_to_affine(X, L, z);
      CHECK(f.converged);
      CHECK(std::abs(f.distance - ref) < 1e-6);
      CHECK(X.norm(z - f.foot) == doctest::Approx(f.distance).epsilon(1e-12));
    }
  }
}

TEST_CASE("distance to a 2-plane matches coordinate brute force") {
  std::mt19937_64 rng(8);
  for (double p : {1.0, 1.5, 4.0, kInf}) {
    NormedSpace X = lp(3, p);
    AffinePlane P;
    P.base = vec({0.2, -0.1, 0.3});
    P.basis = Mat(3, 2);
    P.basis << 1, 0, 1, 1, 0, 1;
    Vec z = random_vec(rng, 3);
    // nested golden search: the objective is jointly convex in (a, b)
    auto inner = [&](double a) {
      return oracle::golden_min([&](double b) { return X.norm(z - P.at(vec({a, b}))); }, -10, 10);
    };
    double ref = oracle::golden_min(inner, -10, 10);
    CHECK(std::abs(distance_to_affine(X, P, z).distance - ref) < 1e-6);
  }
}

TEST_CASE("grassmann distance examples") {
  NormedSpace l2 = lp(2, 2);
  AffinePlane x = line(vec({1, 0})), y = line(vec({0, 1}));
  CHECK(grassmann_distance(l2, x, x) < 1e-12);
  CHECK(grassmann_distance(l2, x, y) == doctest::Approx(1.0));
  double th = 0.1;
  AffinePlane w = line(vec({std::cos(th), std::sin(th)}));
  // Exact computation over the two unit segments.
  double exact = 0;
  for (double s : {-1.0, 1.0}) {
    Vec v = vec({s, 0});
    exact = std::max(exact, oracle::grid_then_golden(
                                [&](double t) { return (v - t * w.basis.col(0)).norm(); }, -1, 1, 1e-4));
  }
  CHECK(std::abs(grassmann_distance(l2, x, w) - exact) < 2e-3);
  CHECK(std::abs(exact - std::sin(0.1)) < 1e-9);
  Mat plane(3, 2);
  plane << 1, 0, 0, 1, 0, 0;
  CHECK(grassmann_distance(lp(3, 2), line(vec({1, 0, 0})), AffinePlane::linear(plane)) == 1.0);
}

TEST_CASE("hausdorff distance against the double loop") {
  NormedSpace X = lp(2, 3);
  std::vector<Vec> A, B;
  for (int i = 0; i < 100; ++i) {
    A.push_back(vec({i / 99.0, 0}));
    B.push_back(vec({i / 99.0 + 0.01, 0.05 + 0.01 * std::sin(i)}));
  }
  double ref = 0;
  for (auto* pair : {&A, &B}) {
    const auto& P = *pair;
    const auto& Q = pair == &A ? B : A;
    for (const Vec& a : P) {
      double m = 1e300;
      for (const Vec& b : Q) m = std::min(m, X.norm(a - b));
      ref = std::max(ref, m);
    }
  }
  CHECK(hausdorff_distance(X, A, B) == ref);
  CHECK(hausdorff_distance(X, A, A) == 0.0);
  CHECK(hausdorff_distance(X, {Vec::Zero(2)}, {vec({3, 4})}) == doctest::Approx(X.norm(vec({3, 4}))));
  CHECK_THROWS(hausdorff_distance(X, {}, A));
}

TEST_CASE("projection kinds") {
  std::mt19937_64 rng(2);
  SUBCASE("orthogonal") {
    NormedSpace l2 = lp(3, 2);
    Mat V(3, 2);
    V << 1, 0, 1, 1, 0, 2;
    AlmostProjection P = make_projection(l2, AffinePlane::linear(V), ProjectionKind::orthogonal);
    CHECK((P.matrix * P.matrix - P.matrix).norm() < 1e-12);
    CHECK(empirical_operator_norm(l2, P.matrix, 2000, 1) <= 1.0 + 1e-12);
    CHECK(P.op_norm_estimate == 1.0);
    CHECK((P.apply(V.col(0)) - V.col(0)).norm() < 1e-9);
  }
  SUBCASE("J-projection in l^3") {
    NormedSpace X = lp(2, 3);
    AlmostProjection P = make_projection(X, line(vec({1, 0})), ProjectionKind::j_projection);
    Vec x = vec({0.7, -2.5});
    CHECK((P.apply(x) - vec({0.7, 0})).norm() < 1e-14);
    CHECK(P.op_norm_estimate <= 1 + 1e-9);
    CHECK(empirical_operator_norm(X, P.matrix, 2000, 1) <= P.op_norm_estimate + 1e-12);
    AlmostProjection Q = make_projection(X, line(vec({1, 2})), ProjectionKind::j_projection);
    CHECK(Q.op_norm_estimate <= 1 + 1e-9);
    CHECK(empirical_operator_norm(X, Q.matrix, 5000, 3) <= Q.op_norm_estimate + 1e-9);
  }
  SUBCASE("Hahn-Banach in l^4") {
    NormedSpace X = lp(3, 4);
    Mat V(3, 2);
    V << 1, 0, 1, 1, 0, 1;
    AlmostProjection P = make_projection(X, AffinePlane::linear(V), ProjectionKind::hahn_banach);
    for (int j = 0; j < 2; ++j) CHECK((P.apply(V.col(j)) - V.col(j)).norm() < 1e-9);
    double emp = empirical_operator_norm(X, P.matrix, 10000, 4);
    CHECK(emp <= 10.0);
    CHECK(P.op_norm_estimate >= emp - 1e-12);
  }
  SUBCASE("Hahn-Banach and fallback in l^1 and l^inf") {
    for (double p : {1.0, kInf, 1.5}) {
      NormedSpace X = lp(3, p);
      Mat V(3, 2);
      V << 1, 0, 1, 1, 0, 1;
      for (auto kind : {ProjectionKind::hahn_banach, ProjectionKind::euclidean_fallback}) {
        AlmostProjection P = make_projection(X, AffinePlane::linear(V), kind);
        for (int j = 0; j < 2; ++j) CHECK((P.apply(V.col(j)) - V.col(j)).norm() < 1e-9);
        CHECK(P.op_norm_estimate >= empirical_operator_norm(X, P.matrix, 5000, 5) - 1e-12);
      }
    }
  }
  SUBCASE("incompatible requests") {
    CHECK_THROWS(make_projection(lp(2, 3), line(vec({1, 0})), ProjectionKind::orthogonal));
    Mat V = Mat::Identity(3, 2);
    CHECK_THROWS(make_projection(lp(3, 3), AffinePlane::linear(V), ProjectionKind::j_projection));
    CHECK_THROWS(make_projection(lp(2, 1), line(vec({1, 0})), ProjectionKind::j_projection));
  }
}

TEST_CASE("pythagorean report") {
  NormedSpace l2 = lp(3, 2);
  Mat V = Mat::Identity(3, 1);
  AlmostProjection P = make_projection(l2, AffinePlane::linear(V), ProjectionKind::orthogonal);
  PythagoreanReport r = pythagorean_report(l2, P, 2000, 1);
  CHECK(r.classic_slack < 1e-12);
  CHECK(r.violations == 0);
  NormedSpace l3 = lp(3, 3);
  AlmostProjection J = make_projection(l3, line(vec({1, -1, 2})), ProjectionKind::j_projection);
  PythagoreanReport rj = pythagorean_report(l3, J, 10000, 2);
  CHECK(rj.violations == 0);
  CHECK(rj.general_ratio <= 1.0);
  CHECK(rj.improved_ratio <= 1.0);
  // x in V: both sides vanish
  Vec v = J.target.col(0) * 1.7;
  CHECK(std::abs(l3.norm(v) - l3.norm(J.apply(v))) < 1e-12);
  CHECK(l3.norm(J.complement(v)) < 1e-12);
}

TEST_CASE("graph check examples") {
  NormedSpace l2 = lp(2, 2);
  AffinePlane x = line(vec({1, 0}));
  AlmostProjection P = make_projection(l2, x, ProjectionKind::orthogonal);
  GraphCheck flat = graph_check(l2, {vec({0, 0}), vec({0.5, 0}), vec({1, 0})}, x, P);
  CHECK(flat.is_graph);
  CHECK(flat.sup_height == 0.0);
  CHECK(flat.lipschitz == 0.0);
  double eps = 0.1;
  std::vector<Vec> gamma2 = {vec({0, 0}), vec({1.0 / 3, 0}), vec({0.5, eps / 6}), vec({2.0 / 3, 0}), vec({1, 0})};
  GraphCheck g = graph_check(l2, gamma2, x, P);
  CHECK(g.is_graph);
  CHECK(g.sup_height == doctest::Approx(eps / 6));
  CHECK(g.lipschitz == doctest::Approx(eps));
  CHECK_FALSE(graph_check(l2, {vec({0, 0}), vec({0, 1})}, x, P).is_graph);
}

TEST_CASE("general position stability under perturbation") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double p : {1.5, 2.0, 3.0, kInf}) {
    NormedSpace X = lp(3, p);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec> fam;
      Mat s(3, 2);
      for (int i = 0; i < 6; ++i) s(i % 3, i / 3) = u(rng);
      Mat b = riesz_basis(X, s);
      fam = columns(b);
      double tau = general_position_margin(X, fam);
      int k = 2;
      double c = c1_constant(k, tau);
      double eps = tau / (2 * c) * 0.9;
      std::vector<Vec> pert;
      for (const Vec& v : fam) {
        Vec d(3);
        for (int i = 0; i < 3; ++i) d[i] = u(rng);
        pert.push_back(v + eps * d / X.norm(d));
      }
      CHECK(general_position_margin(X, pert) >= tau - c * eps);
    }
  }
}

TEST_CASE("packing of disjoint balls near a plane") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1), rr(0.01, 0.2);
  for (double p : {1.0, 2.0, 4.0}) {
    NormedSpace X = lp(3, p);
    for (int k : {1, 2}) {
      Mat V = Mat::Identity(3, k);
      std::vector<std::pair<Vec, double>> balls;
      for (int t = 0; t < 4000; ++t) {
        double r = rr(rng);
        Vec c(3);
        for (int i = 0; i < 3; ++i) c[i] = u(rng) * 0.8;
        for (int i = k; i < 3; ++i) c[i] = u(rng) * r / 2 / 3;  // within r/2 of V
        if (X.norm(c) + r > 1.0) continue;
        bool ok = true;
        for (auto& [cc, rc] : balls) ok = ok && X.norm(c - cc) > r + rc;
        if (ok) balls.emplace_back(c, r);
      }
      double sum = 0;
      for (auto& b : balls) sum += std::pow(b.second, k);
      CHECK(sum <= c2_constant(k));
    }
  }
}

TEST_CASE("k-volume of plane balls is comparable to r^k") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double p : {1.0, 1.5, 3.0, kInf}) {
    NormedSpace X = lp(3, p);
    for (int k : {1, 2}) {
      Mat s = Mat::Identity(3, k);
      s(2, 0) = 0.5;
      Mat W = riesz_basis(X, s);
      double c1 = c1_constant(k, 2.0 / 3.0);
      // lambda-coordinates: the l^1 ball of radius r is inside, radius c1 r contains.
      double r = 0.7, box = c1 * r;
      int hit = 0, N = 200000;
      for (int t = 0; t < N; ++t) {
        Vec lam(k);
        for (int i = 0; i < k; ++i) lam[i] = u(rng) * box;
        if (X.norm(W * lam) <= r) ++hit;
      }
      double vol = std::pow(2 * box, k) * hit / N;
      double ck = std::max(lgamma_factorial(k) / std::pow(2.0, k), std::pow(2 * c1, k) / lgamma_factorial(k));
      CHECK(vol >= std::pow(r, k) / ck);
      CHECK(vol <= ck * std::pow(r, k));
    }
  }
}
