#include "doctest.h"
#include "reif/reifenberg_cover.hpp"
#include "../support/oracles.hpp"

#include <cmath>
#include <random>

using namespace reif;
using oracle::vec;

namespace {

NormedSpace lp(int n, double p) { return NormedSpace(n, Exponent::from_double(p)); }

PointMeasure five_dirac(double t) {
  PointMeasure mu(2);
  for (const Vec& x : {vec({0, 0}), vec({1, 0}), vec({-1, 0}), vec({0, t}), vec({0, -t})}) mu.add(x, 1.0);
  return mu;
}

// Square grid of side 2*half in the plane z = 0 of R^3, unit density.
PointMeasure planar_grid(double half, double h) {
  PointMeasure mu(3);
  int m = static_cast<int>(std::round(2 * half / h));
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) mu.add(vec({-half + i * h, -half + j * h, 0}), h * h);
  return mu;
}

std::vector<std::size_t> all_atoms(const PointMeasure& mu) {
  std::vector<std::size_t> s(mu.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

// l^p polyline gamma_2 sampled along its four pieces.
std::vector<Vec> gamma2_samples(double eps, int per_piece) {
  std::vector<Vec> out;
  auto g = [&](double t) {
    double y = 0;
    if (t > 1.0 / 3 && t <= 0.5) y = (t - 1.0 / 3) * eps;
    if (t > 0.5 && t < 2.0 / 3) y = (2.0 / 3 - t) * eps;
    return vec({t, y});
  };
  int n = 6 * per_piece;
  for (int i = 0; i <= n; ++i) out.push_back(g(static_cast<double>(i) / n));
  return out;
}

}  // namespace

TEST_CASE("partition of unity examples and support") {
  NormedSpace l2 = lp(2, 2);
  PartitionOfUnity one(l2, {vec({0, 0})}, 1.0);
  CHECK(one.weights(vec({2.4, 0}))[0] == 1.0);
  CHECK(one.weights(vec({3.01, 0}))[0] == 0.0);
  PartitionOfUnity two(l2, {vec({0, 0}), vec({1, 0})}, 1.0);
  auto w = two.weights(vec({0.5, 0}));
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.5));
  CHECK(two.overlap() == 2);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<Vec> centers;
  for (int i = 0; i < 12; ++i) centers.push_back(vec({u(rng), u(rng)}));
  for (double p : {1.0, 2.0, 3.0}) {
    NormedSpace X = lp(2, p);
    PartitionOfUnity pou(X, centers, 0.7);
    double lip = 0;
    for (int t = 0; t < 2000; ++t) {
      Vec x = vec({u(rng) * 1.5, u(rng) * 1.5});
      auto phi = pou.weights(x);
      double tot = 0;
      bool in25 = false;
      for (std::size_t i = 0; i < centers.size(); ++i) {
        double d = X.dist(x, centers[i]);
        if (d > 3 * 0.7) CHECK(phi[i] == 0.0);
        CHECK(phi[i] >= 0.0);
        tot += phi[i];
        in25 = in25 || d <= 2.5 * 0.7;
      }
      CHECK(tot <= 1.0 + 1e-12);
      if (in25) CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
      Vec y = x + 1e-4 * vec({u(rng), u(rng)});
      auto psi = pou.weights(y);
      for (std::size_t i = 0; i < centers.size(); ++i)
        lip = std::max(lip, std::abs(psi[i] - phi[i]) / X.dist(x, y));
    }
    // each phi_i is Lipschitz with a constant of order overlap / r
    CHECK(lip <= 10.0 * pou.overlap() / 0.7);
  }
}

TEST_CASE("classify_ball examples") {
  NormedSpace l3 = lp(3, 2);
  SUBCASE("uniform atoms on a k-cube are good") {
    for (int k : {1, 2}) {
      PointMeasure mu(3);
      const int m = 20;
      if (k == 1)
        for (int i = 0; i <= m; ++i) mu.add(vec({-0.5 + double(i) / m, 0, 0}), 1.0 / m);
      else
        for (int i = 0; i <= m; ++i)
          for (int j = 0; j <= m; ++j) mu.add(vec({-0.5 + double(i) / m, -0.5 + double(j) / m, 0}), 1.0 / (m * m));
      BallLabel b = classify_ball(l3, mu, Vec::Zero(3), 1.0, k, 0.01, -1);
      CHECK(b.kind == BallKind::good);
      CHECK(b.witnesses.size() == static_cast<std::size_t>(k + 1));
    }
  }
  SUBCASE("mass on a (k-1)-plane is bad, the plane is the witness") {
    PointMeasure mu(3);
    for (int i = -10; i <= 10; ++i) mu.add(vec({0.05 * i, 0.02 * i, 0.1}), 0.1);
    BallLabel b = classify_ball(l3, mu, Vec::Zero(3), 1.0, 2, 0.1, -1);
    CHECK(b.kind == BallKind::bad);
    REQUIRE(b.witness_plane.has_value());
    CHECK(b.witness_plane->k() == 1);
    for (std::size_t i = 0; i < mu.size(); ++i)
      CHECK(distance_to_affine(l3, *b.witness_plane, mu.point(i)).distance < 1e-12);
  }
  SUBCASE("five Dirac masses") {
    BallLabel b = classify_ball(lp(2, 2), five_dirac(0.01), Vec::Zero(2), 1.0, 1, 0.1, 1e-3);
    CHECK(b.kind == BallKind::good);
    REQUIRE(b.witnesses.size() == 2);
    CHECK((b.witnesses[0] - vec({0, 0})).norm() == 0.0);
    CHECK((b.witnesses[1] - vec({1, 0})).norm() == 0.0);
    // collapsed support in the small ball
    BallLabel s = classify_ball(lp(2, 2), five_dirac(0.001), Vec::Zero(2), 0.1, 1, 0.1, -1);
    CHECK(s.kind == BallKind::bad);
  }
  SUBCASE("k = 0 needs only one heavy point") {
    CHECK(classify_ball(l3, planar_grid(0.5, 0.1), Vec::Zero(3), 1.0, 0, 0.1, 0.01).kind == BallKind::good);
    BallLabel e = classify_ball(l3, planar_grid(0.5, 0.1), vec({9, 9, 9}), 1.0, 0, 0.1, -1);
    CHECK(e.kind == BallKind::bad);
    CHECK(!e.witness_plane.has_value());
  }
  CHECK_THROWS(classify_ball(l3, planar_grid(0.5, 0.1), Vec::Zero(3), 1.0, 1, 0.2, -1));
}

TEST_CASE("sigma examples") {
  NormedSpace l2 = lp(2, 2);
  AffinePlane P{vec({0, 0.3}), vec({1, 1}).normalized()};
  AlmostProjection pi = make_projection(l2, P.linear_part(), ProjectionKind::orthogonal);
  SigmaMap s = make_sigma(l2, {vec({0, 0})}, {P}, {pi}, 1.0);
  Vec far = vec({10, -4});
  CHECK((sigma_apply(s, far) - far).norm() == 0.0);
  Vec x = vec({0.4, -0.7});
  Vec y = sigma_apply(s, x);
  Vec foot = distance_to_affine(l2, P, x).foot;
  CHECK((y - foot).norm() < 1e-12);
  Vec on = P.at(vec({0.8}));
  CHECK((sigma_apply(s, on) - on).norm() < 1e-12);
}

TEST_CASE("squash report on a flat graph and on the bumped curve") {
  NormedSpace l2 = lp(2, 2);
  AffinePlane axis{vec({0, 0}), vec({1, 0})};
  AlmostProjection pi = make_projection(l2, axis.linear_part(), ProjectionKind::orthogonal);
  SigmaMap s = make_sigma(l2, {vec({0.5, 0})}, {axis}, {pi}, 1.0);
  std::vector<Vec> curve = gamma2_samples(0.1, 40);
  SquashReport flat = squash_report(l2, s, curve, axis, pi, 0.0, 0.1);
  CHECK(flat.hypotheses_ok);
  CHECK(flat.regraph.sup_height < 1e-15);
  CHECK(flat.full_region_height < 1e-15);
  CHECK(flat.full_region_ok);

  for (double p : {1.5, 2.0}) {
    NormedSpace X = lp(2, p);
    AlmostProjection J = make_projection(X, axis.linear_part(), ProjectionKind::j_projection);
    SigmaMap sj = make_sigma(X, {vec({0.5, 0})}, {axis}, {J}, 1.0);
    for (double eps : {0.05, 0.1}) {
      SquashReport r = squash_report(X, sj, gamma2_samples(eps, 40), axis, J, 0.0, eps);
      CHECK(r.tangential_applicable);
      CHECK(r.tangential < 1e-15);
      CHECK(r.squared_ok);
      // apex pair: gamma(1/3) and gamma(1/2)
      Vec a = vec({1.0 / 3, 0}), b = vec({0.5, eps / 6});
      double d0 = X.dist(a, b), d1 = X.dist(sigma_apply(sj, a), sigma_apply(sj, b));
      double apex = std::abs(d1 * d1 - d0 * d0) / (d0 * d0);
      CHECK(apex >= std::pow(eps, p) / 4);
      CHECK(r.squared_distortion >= apex * (1 - 1e-9));
    }
  }
  // l^1: only linear order in eps
  NormedSpace l1 = lp(2, 1);
  AlmostProjection P1 = make_projection(l1, axis.linear_part(), ProjectionKind::euclidean_fallback);
  SigmaMap s1 = make_sigma(l1, {vec({0.5, 0})}, {axis}, {P1}, 1.0);
  for (double eps : {0.02, 0.05}) {
    SquashReport r = squash_report(l1, s1, gamma2_samples(eps, 40), axis, P1, 0.0, eps);
    CHECK(r.squared_distortion >= eps);
    CHECK(r.squared_distortion <= 3 * eps);
  }
}

TEST_CASE("tilting report") {
  NormedSpace l3 = lp(3, 2);
  PointMeasure flat = planar_grid(1.0, 0.05);
  TiltingReport t = tilting_report(l3, flat, {{vec({-0.3, 0, 0}), 0.3, vec({0.3, 0.1, 0}), 0.2}}, 2, 0.1);
  CHECK(t.distances[0] < 1e-9);
  CHECK_THROWS(tilting_report(l3, flat, {{vec({5, 5, 5}), 0.3, vec({0.3, 0.1, 0}), 0.2}}, 2, 0.1));

  NormedSpace l2 = lp(2, 2);
  double ratio[2];
  int which = 0;
  for (int n : {400, 1600}) {
    PointMeasure mu(2);
    for (int i = 0; i < n; ++i) {
      double x = -1 + 2.0 * (i + 0.5) / n;
      mu.add(vec({x, 0.05 * std::sin(3 * x)}), 2.0 / n);
    }
    TiltingReport r = tilting_report(l2, mu, {{vec({-0.3, 0}), 0.25, vec({0.3, 0}), 0.25}}, 1, 0.1);
    ratio[which++] = r.max_ratio;
    CHECK(std::isfinite(r.max_ratio));
  }
  CHECK(std::abs(ratio[0] - ratio[1]) <= 0.2 * ratio[1]);
}

TEST_CASE("nets and Vitali selections") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double p : {1.0, 2.0, 4.0}) {
    NormedSpace X = lp(2, p);
    std::vector<Vec> pts;
    std::vector<double> radii;
    for (int i = 0; i < 300; ++i) {
      pts.push_back(vec({u(rng), u(rng)}));
      radii.push_back(0.05 + 0.1 * std::abs(u(rng)));
    }
    std::vector<std::size_t> cand(pts.size());
    for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = i;
    auto net = farthest_point_net(X, pts, cand, 0.2);
    CHECK(net.front() == 0);
    for (std::size_t a = 0; a < net.size(); ++a)
      for (std::size_t b = a + 1; b < net.size(); ++b) CHECK(X.dist(pts[net[a]], pts[net[b]]) > 0.2);
    for (const Vec& z : pts) {
      double m = 1e9;
      for (std::size_t c : net) m = std::min(m, X.dist(z, pts[c]));
      CHECK(m <= 0.2);
    }
    auto sel = vitali_select(X, pts, radii, cand);
    for (std::size_t a = 0; a < sel.size(); ++a)
      for (std::size_t b = a + 1; b < sel.size(); ++b)
        CHECK(X.dist(pts[sel[a]], pts[sel[b]]) > (radii[sel[a]] + radii[sel[b]]) / 5);
    for (std::size_t c : cand) {
      bool covered = false;
      for (std::size_t s : sel) covered = covered || X.dist(pts[c], pts[s]) + radii[c] / 5 <= radii[s];
      CHECK(covered);
    }
  }
}

TEST_CASE("packing constants") {
  // c1(1, 2/3) = 5.5, omega_0 = 1, omega_1 = 2
  CHECK(cB_constant(1) == doctest::Approx(2 * (11 * 5.5 + 1) * 10 / 2.0));
  CHECK(c5_constant(2) == doctest::Approx(900 * c2_constant(2)));
  CHECK(leftover_constant(1, 0.1, 2) == doctest::Approx(2 * 300.0 * 300.0 * 3 * c5_constant(1) / std::log(10.0)));
}

TEST_CASE("covering lemma on a planar measure") {
  NormedSpace l3 = lp(3, 2);
  PointMeasure mu = planar_grid(1.2, 0.04);
  std::vector<double> rs(mu.size(), 0.03);
  CoverConfig cfg;
  cfg.max_depth = 4;
  CoverResult r = covering_lemma(l3, mu, all_atoms(mu), rs, 2, cfg);
  CHECK_FALSE(r.top_ball_bad);
  CHECK(r.bad_balls.empty());
  CHECK(r.leftover_mass == 0.0);
  CHECK(r.excess_mass == 0.0);
  CHECK(r.distortion == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.packing_sum <= c2_constant(2));
  CHECK(r.disjoint_ok);
  CHECK(r.radius_ok);
  CHECK_FALSE(r.estimate_violated);
  CHECK(r.measured_delta < 1e-6);
  // every atom of B_1 lies in a kept ball
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (l3.norm(mu.point(i)) > 1) continue;
    bool in = false;
    for (const Ball& b : r.kept_originals) in = in || l3.dist(mu.point(i), b.center) <= b.radius;
    CHECK(in);
  }
}

TEST_CASE("covering lemma with a bad top ball") {
  NormedSpace l3 = lp(3, 2);
  PointMeasure mu(3);
  for (int i = -50; i <= 50; ++i) mu.add(vec({i / 60.0, 0.3 * i / 60.0, 0}), 0.01);
  std::vector<double> rs(mu.size(), 0.0);
  CoverResult r = covering_lemma(l3, mu, all_atoms(mu), rs, 2);
  CHECK(r.top_ball_bad);
  REQUIRE(r.bad_balls.size() == 1);
  CHECK(r.bad_balls[0].radius == 1.0);
  CHECK(r.kept_originals.empty());
  CHECK(r.leftover_mass == 0.0);
  CHECK(r.tau_stages.empty());
}

TEST_CASE("covering lemma on a curved graph keeps its invariants") {
  NormedSpace l3 = lp(3, 2);
  PointMeasure mu(3);
  const double golden = M_PI * (3 - std::sqrt(5.0));
  const int n = 120;
  for (int i = 0; i < n; ++i) {
    double rad = 0.95 * std::sqrt((i + 0.5) / n), th = i * golden;
    double x = rad * std::cos(th), y = rad * std::sin(th);
    mu.add(vec({x, y, 0.025 * (x * x + y * y)}), M_PI * 0.95 * 0.95 / n);
  }
  std::vector<double> rs(mu.size(), 0.0);
  CoverConfig cfg;
  cfg.max_depth = 3;
  CoverResult a = covering_lemma(l3, mu, all_atoms(mu), rs, 2, cfg);
  CHECK(a.disjoint_ok);
  CHECK(a.radius_ok);
  CHECK(a.packing_ok);
  CHECK(a.leftover_ok);
  CHECK(a.distortion >= 1.0);
  CHECK(a.dini_violators.empty());
  for (const StageReport& st : a.stages) CHECK(st.excess_mass <= st.chebyshev_rhs * (1 + 1e-12));
  CoverResult b = covering_lemma(l3, mu, all_atoms(mu), rs, 2, cfg);
  CHECK(a.distortion == b.distortion);
  CHECK(a.leftover_mass == b.leftover_mass);
  CHECK(a.bad_balls.size() == b.bad_balls.size());
}

TEST_CASE("covering lemma input validation") {
  NormedSpace l3 = lp(3, 2);
  PointMeasure mu = planar_grid(0.5, 0.25);
  std::vector<double> rs(mu.size(), 0.0);
  CHECK_THROWS(covering_lemma(l3, mu, all_atoms(mu), std::vector<double>(2, 0.0), 2));
  rs[0] = 1.0;
  CHECK_THROWS(covering_lemma(l3, mu, all_atoms(mu), rs, 2));
  rs[0] = 0.0;
  CoverConfig bad;
  bad.chi = 0.5;
  CHECK_THROWS(covering_lemma(l3, mu, all_atoms(mu), rs, 2, bad));
}

TEST_CASE("main packing on planar and line measures") {
  NormedSpace l3 = lp(3, 2);
  {
    PointMeasure mu = planar_grid(1.2, 0.04);
    std::vector<double> rs(mu.size(), 0.05);
    CoverConfig cfg;
    cfg.max_depth = 3;
    PackingResult r = main_packing(l3, mu, all_atoms(mu), rs, 2, -1, cfg);
    CHECK(r.M < 1e-12);
    CHECK(r.terminated);
    CHECK(r.ledger_ok);
    CHECK(r.leftover_mass == 0.0);
    CHECK(r.packing_sum <= 3 * 3 * c2_constant(2) * 2);
  }
  {
    PointMeasure mu(3);
    for (int i = 0; i <= 200; ++i) mu.add(vec({-1 + i / 100.0, 0, 0}), 1.0 / 201);
    std::vector<double> rs(mu.size(), 1e-3);
    CoverConfig cfg;
    cfg.chi = 0.05;
    PackingResult r = main_packing(l3, mu, all_atoms(mu), rs, 2, 0.0, cfg);
    CHECK(r.terminated);
    CHECK(r.ledger_ok);
    REQUIRE(r.levels.size() >= 2);
    CHECK(r.levels[0].bad_balls == 1);
    for (const LevelReport& lv : r.levels) {
      CHECK(lv.leftover <= lv.leftover_bound);
      CHECK(lv.packing_bad <= lv.packing_bad_bound);
    }
    CHECK(r.leftover_mass == 0.0);
  }
}

TEST_CASE("flat map of a plane sample is the identity") {
  NormedSpace l2 = lp(2, 2);
  std::vector<Vec> S;
  for (int i = -300; i <= 300; ++i) S.push_back(vec({i / 200.0, 0.2}));
  FlatMapConfig cfg;
  cfg.chi = 0.1;
  cfg.max_depth = 2;
  FlatMapReport r = reifenberg_flat_map(l2, S, 1, cfg);
  CHECK(r.certified);
  CHECK(r.max_beta_inf < 1e-9);
  CHECK(r.distortion == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.holder_exponent == doctest::Approx(1.0).epsilon(1e-6));
}
