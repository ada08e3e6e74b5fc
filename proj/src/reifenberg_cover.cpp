#include "reif/reifenberg_cover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace reif {

namespace {

double h_cut(double s) {
  if (s <= 0.25) return 0.0;
  if (s >= 0.5) return 1.0;
  return 4.0 * s - 1.0;
}

double unit_ball_volume(int j) { return std::pow(M_PI, 0.5 * j) / std::tgamma(0.5 * j + 1.0); }

std::uint64_t ball_seed(std::uint64_t seed, int stage, std::size_t idx) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(stage) * 7919ULL + idx;
}

PointMeasure sub_measure(const PointMeasure& mu, const std::vector<std::size_t>& idx, double factor = 1.0) {
  PointMeasure out(mu.dim());
  for (std::size_t i : idx) out.add(mu.point(i), mu.weight(i) * factor);
  return out;
}

bool inside_any(const NormedSpace& space, const Vec& y, const std::vector<Ball>& balls) {
  for (const Ball& b : balls)
    if (space.dist(y, b.center) <= b.radius) return true;
  return false;
}

// Uniform points of plane ∩ B_1(0), parametrised by an orthonormalised basis.
std::vector<Vec> sample_plane_ball(const NormedSpace& space, const AffinePlane& plane, int count,
                                   std::mt19937_64& rng) {
  std::vector<Vec> out;
  const int k = plane.k();
  if (k == 0) {
    if (space.norm(plane.base) <= 1.0) out.push_back(plane.base);
    return out;
  }
  Mat Q = Eigen::HouseholderQR<Mat>(plane.basis).householderQ() * Mat::Identity(plane.ambient(), k);
  const double reach = 1.0 + space.norm(plane.base);
  double scale = 0.0;
  for (int j = 0; j < k; ++j) scale = std::max(scale, 1.0 / space.norm(Q.col(j)));
  std::uniform_real_distribution<double> u(-reach * scale * std::sqrt(k), reach * scale * std::sqrt(k));
  for (long tries = 0; tries < 200L * count && static_cast<int>(out.size()) < count; ++tries) {
    Vec lam(k);
    for (int j = 0; j < k; ++j) lam[j] = u(rng);
    Vec y = plane.base + Q * lam;
    if (space.norm(y) <= 1.0) out.push_back(y);
  }
  return out;
}

struct PairStats {
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  double slope = 1.0;
};

PairStats pair_stats(const NormedSpace& space, const std::vector<Vec>& xs, const std::vector<Vec>& ys, int pairs,
                     std::mt19937_64& rng) {
  PairStats st;
  const std::size_t n = xs.size();
  if (n < 2) {
    st.min_ratio = st.max_ratio = 1.0;
    return st;
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int t = 0; t < pairs; ++t) {
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b) b = (a + 1) % n;
    double dx = space.dist(xs[a], xs[b]);
    if (dx <= 0) continue;
    double dy = space.dist(ys[a], ys[b]);
    double r = dy / dx;
    st.min_ratio = std::min(st.min_ratio, r);
    st.max_ratio = std::max(st.max_ratio, r);
    if (dy > 0) {
      double lx = std::log(dx), ly = std::log(dy);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
  }
  double den = m * sxx - sx * sx;
  if (m > 2 && std::abs(den) > 1e-12) st.slope = (m * sxy - sx * sy) / den;
  if (!std::isfinite(st.min_ratio)) st.min_ratio = st.max_ratio = 1.0;
  return st;
}

double distortion_of(const PairStats& st) {
  double d = std::max(st.max_ratio, st.min_ratio > 0 ? 1.0 / st.min_ratio : std::numeric_limits<double>::infinity());
  return std::max(1.0, d);
}

}  // namespace

// ---------------------------------------------------------------------------

PartitionOfUnity::PartitionOfUnity(const NormedSpace& space, std::vector<Vec> centers, double r)
    : space_(space), centers_(std::move(centers)), r_(r) {
  if (!(r > 0)) throw std::invalid_argument("partition of unity: r must be positive");
}

std::vector<double> PartitionOfUnity::weights(const Vec& x) const {
  std::vector<double> psi(centers_.size(), 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    psi[i] = std::max(0.0, 3.0 - space_.dist(x, centers_[i]) / r_);
    s += psi[i];
  }
  if (s <= 0) return psi;
  double f = h_cut(s) / s;
  for (double& v : psi) v *= f;
  return psi;
}

double PartitionOfUnity::total(const Vec& x) const {
  auto w = weights(x);
  return std::accumulate(w.begin(), w.end(), 0.0);
}

int PartitionOfUnity::overlap() const {
  int best = 0;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    int c = 0;
    for (std::size_t j = 0; j < centers_.size(); ++j)
      if (space_.dist(centers_[i], centers_[j]) <= 6.0 * r_) ++c;
    best = std::max(best, c);
  }
  return best;
}

std::string to_string(BallKind kind) {
  switch (kind) {
    case BallKind::good: return "good";
    case BallKind::bad: return "bad";
    case BallKind::original: return "original";
  }
  return "bad";
}

double default_theta(int k) { return 0.1 * std::pow(5.0, -k); }

BallLabel classify_ball(const NormedSpace& space, const PointMeasure& mu, const Vec& x, double r, int k,
                        double chi, double theta) {
  if (!(chi > 0 && chi <= 0.1)) throw std::invalid_argument("classify_ball: need 0 < chi <= 1/10");
  if (!(r > 0)) throw std::invalid_argument("classify_ball: r must be positive");
  if (k < 0 || k >= space.dim()) throw std::invalid_argument("classify_ball: need 0 <= k < dim");
  if (theta < 0) theta = default_theta(k);
  BallLabel out;
  out.center = x;
  out.radius = r;
  out.kind = BallKind::bad;

  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (space.dist(mu.point(i), x) <= r) in.push_back(i);
  const double cr = chi * r;
  const double threshold = theta * std::pow(cr, k);
  std::vector<std::size_t> cands;
  std::vector<double> masses;
  for (std::size_t i : in) {
    double m = 0.0;
    for (std::size_t j : in)
      if (space.dist(mu.point(i), mu.point(j)) <= cr) m += mu.weight(j);
    if (m >= threshold) {
      cands.push_back(i);
      masses.push_back(m);
    }
  }

  for (int j = 0; j <= k; ++j) {
    long pick = -1;
    if (j == 0) {
      double best = -1;
      for (std::size_t c = 0; c < cands.size(); ++c)
        if (masses[c] > best) {
          best = masses[c];
          pick = static_cast<long>(cands[c]);
        }
    } else {
      AffinePlane pl = AffinePlane::point(out.witnesses[0]);
      Mat B(space.dim(), j - 1);
      for (int i = 1; i < j; ++i) B.col(i - 1) = out.witnesses[i] - out.witnesses[0];
      pl.basis = B;
      double best = 7.0 * cr;
      for (std::size_t c : cands) {
        double d = distance_to_affine(space, pl, mu.point(c)).distance;
        if (d > best) {
          best = d;
          pick = static_cast<long>(c);
        }
      }
      if (pick < 0) {
        out.witness_plane = pl;
        return out;
      }
    }
    if (pick < 0) return out;
    out.witnesses.push_back(mu.point(static_cast<std::size_t>(pick)));
  }
  out.kind = BallKind::good;
  return out;
}

SigmaMap make_sigma(const NormedSpace& space, std::vector<Vec> centers, std::vector<AffinePlane> planes,
                    std::vector<AlmostProjection> projections, double r) {
  if (centers.size() != planes.size() || centers.size() != projections.size())
    throw std::invalid_argument("make_sigma: centres, planes and projections differ in length");
  SigmaMap s;
  s.r = r;
  s.pou = PartitionOfUnity(space, centers, r);
  s.centers = std::move(centers);
  s.planes = std::move(planes);
  s.projections = std::move(projections);
  return s;
}

Vec sigma_apply(const SigmaMap& sigma, const Vec& x) {
  auto phi = sigma.pou.weights(x);
  Vec y = x;
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (phi[i] > 0) y -= phi[i] * sigma.projections[i].complement(x - sigma.planes[i].base);
  return y;
}

SquashReport squash_report(const NormedSpace& space, const SigmaMap& sigma, const std::vector<Vec>& sample,
                           const AffinePlane& plane, const AlmostProjection& proj, double delta, double eps) {
  SquashReport rep;
  const double r = sigma.r;
  for (std::size_t i = 0; i < sigma.centers.size(); ++i) {
    const AffinePlane& pi = sigma.planes[i];
    Vec f = distance_to_affine(space, pi, sigma.centers[i]).foot;
    std::vector<Vec> probe{f};
    for (int j = 0; j < pi.k(); ++j) {
      Vec u = pi.basis.col(j);
      u /= space.norm(u);
      probe.push_back(f + 3.0 * r * u);
      probe.push_back(f - 3.0 * r * u);
    }
    for (const Vec& z : probe) rep.tilt = std::max(rep.tilt, distance_to_affine(space, plane, z).distance / r);
  }
  GraphCheck before = graph_check(space, sample, plane, proj, r);
  rep.hypotheses_ok = rep.tilt <= delta + 1e-12 && before.is_graph && before.lipschitz <= eps + 1e-9;

  std::vector<Vec> img;
  img.reserve(sample.size());
  for (const Vec& x : sample) img.push_back(sigma_apply(sigma, x));

  rep.tangential_applicable = proj.kind == ProjectionKind::orthogonal || proj.kind == ProjectionKind::j_projection;
  for (std::size_t a = 0; a < sample.size(); ++a) {
    rep.displacement = std::max(rep.displacement, space.dist(img[a], sample[a]) / r);
    if (sigma.pou.total(sample[a]) >= 1.0 - 1e-12)
      rep.full_region_height =
          std::max(rep.full_region_height, space.norm(proj.complement(img[a] - plane.base)) / r);
    if (rep.tangential_applicable)
      rep.tangential = std::max(rep.tangential, space.norm(proj.apply(img[a] - sample[a])) / r);
  }
  // all pairs of at most 300 evenly strided samples
  std::vector<std::size_t> idx;
  std::size_t stride = std::max<std::size_t>(1, sample.size() / 300);
  for (std::size_t a = 0; a < sample.size(); a += stride) idx.push_back(a);
  for (std::size_t u = 0; u < idx.size(); ++u)
    for (std::size_t v = u + 1; v < idx.size(); ++v) {
      std::size_t a = idx[u], b = idx[v];
      double d0 = space.dist(sample[a], sample[b]);
      if (d0 <= 0) continue;
      double d1 = space.dist(img[a], img[b]);
      rep.lipschitz_deviation = std::max(rep.lipschitz_deviation, std::abs(d1 / d0 - 1.0));
      rep.squared_distortion = std::max(rep.squared_distortion, std::abs(d1 * d1 - d0 * d0) / (d0 * d0));
    }
  rep.regraph = graph_check(space, img, plane, proj, r);
  rep.full_region_bound = kSquashHeightConstant * delta;
  rep.full_region_ok = rep.full_region_height <= rep.full_region_bound + 1e-12;
  if (rep.tangential_applicable) {
    rep.squared_bound = 8.0 * modulus_smoothness_bound(space, 4.0 * (delta + eps));
    rep.squared_ok = rep.squared_distortion <= rep.squared_bound + 1e-12;
  }
  return rep;
}

TiltingReport tilting_report(const NormedSpace& space, const PointMeasure& mu, const std::vector<BallPair>& pairs,
                             int k, double chi, double theta) {
  TiltingReport rep;
  for (const BallPair& bp : pairs) {
    if (classify_ball(space, mu, bp.x, bp.r, k, chi, theta).kind != BallKind::good ||
        classify_ball(space, mu, bp.y, bp.s, k, chi, theta).kind != BallKind::good)
      throw std::invalid_argument("tilting_report: every ball in a pair must be good");
    AffinePlane V = best_plane(space, mu, bp.x, bp.r, k).plane.linear_part();
    AffinePlane W = best_plane(space, mu, bp.y, bp.s, k).plane.linear_part();
    double d = grassmann_distance(space, V, W);
    Vec c = 0.5 * (bp.x + bp.y);
    double R = 2.0 * std::max(space.dist(c, bp.x) + bp.r, space.dist(c, bp.y) + bp.s);
    double b = beta(space, mu, c, R, k);
    double ratio = b > 0 ? d / b : (d > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.distances.push_back(d);
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> farthest_point_net(const NormedSpace& space, const std::vector<Vec>& pts,
                                            const std::vector<std::size_t>& candidates, double sep) {
  std::vector<std::size_t> net;
  if (candidates.empty()) return net;
  std::vector<double> mind(candidates.size(), std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  while (true) {
    std::size_t chosen = candidates[next];
    net.push_back(chosen);
    double best = -1;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      mind[c] = std::min(mind[c], space.dist(pts[candidates[c]], pts[chosen]));
      if (mind[c] > best) {
        best = mind[c];
        next = c;
      }
    }
    if (best <= sep) break;
  }
  return net;
}

std::vector<std::size_t> vitali_select(const NormedSpace& space, const std::vector<Vec>& pts,
                                       const std::vector<double>& radii, const std::vector<std::size_t>& candidates) {
  std::vector<std::size_t> order = candidates;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (radii[a] != radii[b]) return radii[a] > radii[b];
    return a < b;
  });
  std::vector<std::size_t> kept;
  for (std::size_t c : order) {
    bool ok = true;
    for (std::size_t t : kept)
      if (space.dist(pts[c], pts[t]) <= (radii[c] + radii[t]) / 5.0) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(c);
  }
  return kept;
}

// ---------------------------------------------------------------------------

double c5_constant(int k) { return std::pow(30.0, k) * c2_constant(k); }

double cB_constant(int k) {
  if (k <= 0) return 1.0;
  double c1 = c1_constant(k, 2.0 / 3.0);
  return 2.0 * (11.0 * c1 + 1.0) * unit_ball_volume(k - 1) * std::pow(2.0 * c1 + 1.0, k - 1) *
         std::pow(10.0 * std::sqrt(static_cast<double>(k)), k) / unit_ball_volume(k);
}

double leftover_constant(int k, double chi, int max_depth) {
  return 2.0 * std::pow(30.0 / chi, 2) * (max_depth + 1) * c5_constant(k) / std::log(1.0 / chi);
}

ConstantsLedger make_ledger(const NormedSpace& space, int k, const CoverConfig& cfg) {
  ConstantsLedger L;
  L.k = k;
  L.chi = cfg.chi;
  L.delta = cfg.delta;
  L.alpha = cfg.alpha ? *cfg.alpha : smoothness_power(space);
  L.theta = cfg.theta < 0 ? default_theta(k) : cfg.theta;
  L.delta0 = cfg.delta0;
  L.c1 = c1_constant(k, 2.0 / 3.0);
  L.c2 = c2_constant(k);
  L.c3 = c3_constant(k);
  L.c5 = c5_constant(k);
  L.c_B = cB_constant(k);
  L.c_leftover = leftover_constant(k, cfg.chi, cfg.max_depth);
  L.distortion_constant = cfg.distortion_constant;
  L.max_depth = cfg.max_depth;
  L.projection_kind = to_string(cfg.projection ? *cfg.projection : default_projection_kind(space, k));
  return L;
}

Vec CoverResult::tau(const NormedSpace&, const Vec& y) const {
  Vec z = y;
  for (const SigmaMap& s : tau_stages) z = sigma_apply(s, z);
  return z;
}

namespace {

struct GoodBall {
  std::size_t atom;
  Vec center;
  AffinePlane plane;
  double objective;
};

void check_inputs(const NormedSpace& space, const PointMeasure& mu, const std::vector<std::size_t>& S,
                  const std::vector<double>& r_s, int k, const CoverConfig& cfg) {
  if (mu.dim() != space.dim()) throw std::invalid_argument("measure and space dimensions differ");
  if (k < 0 || k >= space.dim()) throw std::invalid_argument("need 0 <= k < dim");
  if (!(cfg.chi > 0 && cfg.chi <= 0.1)) throw std::invalid_argument("need 0 < chi <= 1/10");
  if (cfg.max_depth < 0) throw std::invalid_argument("max_depth must be nonnegative");
  if (r_s.size() != mu.size()) throw std::invalid_argument("r_s needs one entry per atom");
  for (std::size_t s : S) {
    if (s >= mu.size()) throw std::invalid_argument("S index out of range");
    if (!(r_s[s] >= 0 && r_s[s] < 1)) throw std::invalid_argument("r_s must lie in [0, 1)");
  }
}

}  // namespace

CoverResult covering_lemma(const NormedSpace& space, const PointMeasure& mu, const std::vector<std::size_t>& S,
                           const std::vector<double>& r_s, int k, const CoverConfig& cfg) {
  check_inputs(space, mu, S, r_s, k, cfg);
  CoverResult res;
  res.ledger = make_ledger(space, k, cfg);
  const ConstantsLedger& L = res.ledger;
  const double chi = cfg.chi, alpha = L.alpha, theta = L.theta;
  const std::size_t N = mu.size();
  const auto& P = mu.points();
  const Vec origin = Vec::Zero(space.dim());
  const ProjectionKind kind = cfg.projection ? *cfg.projection : default_projection_kind(space, k);
  std::vector<char> inS(N, 0);
  for (std::size_t s : S) inS[s] = 1;

  // Dini hypothesis at every s, down to r_s (or the finest stage when r_s = 0).
  double dini_max = 0.0;
  if (cfg.check_dini) {
    const double floor_r = std::pow(chi, cfg.max_depth + 1);
    const double budget = std::pow(cfg.delta, alpha);
    for (std::size_t s : S) {
      double lo = std::max(r_s[s], floor_r);
      if (lo >= 1.0) continue;
      double d = dini_profile(space, mu, P[s], lo, 1.0, k, alpha, chi).dini_sum;
      dini_max = std::max(dini_max, d);
      if (d > budget * (1 + 1e-12)) res.dini_violators.push_back(s);
    }
    res.measured_delta = std::pow(dini_max, 1.0 / alpha);
  } else {
    res.measured_delta = cfg.delta;
  }
  if (!res.dini_violators.empty()) {
    std::ostringstream os;
    os << res.dini_violators.size() << " atoms exceed the Dini budget delta^alpha";
    res.diagnostics.push_back(os.str());
  }
  const double dalpha = std::pow(res.measured_delta, alpha);

  BestPlaneOptions top_opt;
  top_opt.seed = ball_seed(cfg.seed, 0, 0);
  BetaResult top = best_plane(space, mu, origin, 1.0, k, top_opt);
  res.t0 = top.plane;
  if (!top.valid) {
    res.valid = false;
    res.diagnostics.push_back("top-level best plane not certified");
  }

  BallLabel top_label = classify_ball(space, mu, origin, 1.0, k, chi, theta);
  std::vector<GoodBall> G;
  std::vector<Ball> R;  // originals and bad balls, cumulative
  std::vector<char> E(N, 0);
  double g_radius = 1.0;
  if (top_label.kind != BallKind::good) {
    res.top_ball_bad = true;
    res.top_witness_plane = top_label.witness_plane;
    res.bad_balls.push_back(Ball{origin, 1.0, 0, -1});
  } else {
    G.push_back(GoodBall{N, origin, top.plane, top.objective});
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<Vec> ys = sample_plane_ball(space, res.t0, 400, rng);
  std::vector<Vec> tau_ys = ys;

  for (int i = 0; i < cfg.max_depth && !G.empty(); ++i) {
    const double ri = std::pow(chi, i), rn = std::pow(chi, i + 1);
    StageReport st;
    st.stage = i + 1;
    st.radius = rn;

    // Distances to the stage planes, for atoms within 1.5 r_i of some good centre.
    struct Near {
      bool in_ball;  // within r_i, not only 1.5 r_i
      double dp;
    };
    std::vector<std::vector<Near>> near(N);
    for (std::size_t a = 0; a < N; ++a)
      for (const GoodBall& g : G) {
        double dc = space.dist(P[a], g.center);
        if (dc > 1.5 * ri) continue;
        double dp = distance_to_affine(space, g.plane, P[a]).distance;
        near[a].push_back({dc <= ri, dp});
        if (dc <= ri && dp > rn / 30.0) E[a] = 2;
      }
    for (std::size_t a = 0; a < N; ++a)
      if (E[a] == 2) {
        st.excess_mass += mu.weight(a);
        E[a] = 1;
      }
    for (const GoodBall& g : G) st.chebyshev_rhs += std::pow(30.0 / rn, 2) * g.objective;

    auto close_to_plane = [&](std::size_t a, bool wide) {
      for (const Near& q : near[a])
        if ((wide || q.in_ball) && q.dp <= rn / 30.0) return true;
      return false;
    };

    // Originals with r_{i+1} <= r_s < r_i near the planes.
    std::vector<std::size_t> cands;
    for (std::size_t s : S)
      if (r_s[s] >= rn && r_s[s] < ri && close_to_plane(s, true) && !inside_any(space, P[s], R))
        cands.push_back(s);
    std::sort(cands.begin(), cands.end());
    std::vector<std::size_t> sel = vitali_select(space, P, r_s, cands);
    std::vector<Ball> new_orig;
    for (std::size_t s : sel) new_orig.push_back(Ball{P[s], r_s[s], i + 1, static_cast<long>(s)});
    st.originals = static_cast<int>(new_orig.size());

    std::vector<std::size_t> net_cands;
    for (std::size_t s = 0; s < N; ++s)
      if (inS[s] && space.norm(P[s]) <= 1.0 && close_to_plane(s, false) && !inside_any(space, P[s], R) &&
          !inside_any(space, P[s], new_orig))
        net_cands.push_back(s);
    std::vector<std::size_t> net = farthest_point_net(space, P, net_cands, 2.0 * rn / 5.0);
    st.net = static_cast<int>(net.size());

    std::vector<GoodBall> newG;
    std::vector<Ball> new_bad, dropped;
    for (std::size_t n = 0; n < net.size(); ++n) {
      std::size_t x = net[n];
      BallLabel lab = classify_ball(space, mu, P[x], rn, k, chi, theta);
      if (lab.kind == BallKind::good) {
        BestPlaneOptions opt;
        opt.seed = ball_seed(cfg.seed, i + 1, n);
        BetaResult bp = best_plane(space, mu, P[x], rn, k, opt);
        if (!bp.valid) {
          res.valid = false;
          std::ostringstream os;
          os << "stage " << i + 1 << ": best plane at atom " << x << " not certified";
          res.diagnostics.push_back(os.str());
        }
        newG.push_back(GoodBall{x, P[x], bp.plane, bp.objective});
      } else {
        double interior = 0.0;
        for (std::size_t s : S)
          if (r_s[s] < rn && space.dist(P[s], P[x]) <= rn) interior += mu.weight(s);
        (interior > 0 ? new_bad : dropped).push_back(Ball{P[x], rn, i + 1, static_cast<long>(x)});
      }
    }
    st.good = static_cast<int>(newG.size());
    st.bad = static_cast<int>(new_bad.size());
    st.dropped_bad = static_cast<int>(dropped.size());

    // Item 5: nothing with r_s >= r_{i+1} left unhandled inside a new ball.
    auto radius_check = [&](const Vec& c) {
      for (std::size_t s : S)
        if (r_s[s] >= rn && !E[s] && space.dist(P[s], c) <= rn && !inside_any(space, P[s], R) &&
            !inside_any(space, P[s], new_orig))
          ++st.radius_violations;
    };
    for (const Ball& b : new_bad) radius_check(b.center);
    for (const GoodBall& g : newG) radius_check(g.center);

    for (const Ball& b : new_orig) {
      res.kept_originals.push_back(b);
      R.push_back(b);
    }
    for (const Ball& b : new_bad) {
      res.bad_balls.push_back(b);
      R.push_back(b);
    }
    for (const Ball& b : dropped) R.push_back(b);

    // Item 4: fifths of everything emitted so far plus the current good balls.
    {
      std::vector<std::pair<Vec, double>> fifths;
      for (const Ball& b : res.kept_originals) fifths.push_back({b.center, b.radius / 5.0});
      for (const Ball& b : res.bad_balls) fifths.push_back({b.center, b.radius / 5.0});
      for (const GoodBall& g : newG) fifths.push_back({g.center, rn / 5.0});
      for (std::size_t a = 0; a < fifths.size(); ++a)
        for (std::size_t b = a + 1; b < fifths.size(); ++b)
          if (space.dist(fifths[a].first, fifths[b].first) <= fifths[a].second + fifths[b].second)
            ++st.disjoint_violations;
    }

    // beta control near the previous good centres (capped sample of atoms).
    {
      std::vector<std::size_t> nearby;
      for (std::size_t a = 0; a < N; ++a)
        for (const GoodBall& g : G)
          if (space.dist(P[a], g.center) <= 20.0 * ri) {
            nearby.push_back(a);
            break;
          }
      std::size_t stride = std::max<std::size_t>(1, nearby.size() / 64);
      for (std::size_t t = 0; t < nearby.size(); t += stride) {
        BestPlaneOptions opt;
        opt.seed = ball_seed(cfg.seed, i, t);
        double b = best_plane(space, mu, P[nearby[t]], ri, k, opt).beta;
        st.beta_shift = std::max(st.beta_shift, cfg.delta > 0 ? b / cfg.delta : b);
      }
    }

    if (!newG.empty()) {
      std::vector<Vec> centers;
      std::vector<AffinePlane> planes;
      std::vector<AlmostProjection> projs;
      for (const GoodBall& g : newG) {
        centers.push_back(g.center);
        planes.push_back(g.plane);
        projs.push_back(make_projection(space, g.plane.linear_part(), kind));
      }
      SigmaMap sm = make_sigma(space, centers, planes, projs, rn);
      st.overlap = sm.pou.overlap();
      for (Vec& y : tau_ys) {
        Vec z = sigma_apply(sm, y);
        st.max_movement = std::max(st.max_movement, space.dist(z, y) / rn);
        y = z;
      }
      res.tau_stages.push_back(std::move(sm));
    }

    res.stages.push_back(st);
    G = std::move(newG);
    g_radius = rn;
  }
  for (const GoodBall& g : G)
    res.final_good.push_back(Ball{g.center, g_radius, static_cast<int>(res.stages.size()),
                                  g.atom < N ? static_cast<long>(g.atom) : -1});

  // Item 7: leftover among S in B_1(0).
  for (std::size_t s : S) {
    if (space.norm(P[s]) > 1.0) continue;
    bool covered = inside_any(space, P[s], res.kept_originals);
    for (const Ball& b : res.bad_balls)
      if (!covered && r_s[s] < b.radius && space.dist(P[s], b.center) <= b.radius) covered = true;
    for (const Ball& g : res.final_good)
      if (!covered && r_s[s] < g.radius && space.dist(P[s], g.center) <= g.radius) covered = true;
    if (!covered) res.leftover_mass += mu.weight(s);
  }
  for (std::size_t a = 0; a < N; ++a)
    if (E[a]) res.excess_mass += mu.weight(a);

  for (const Ball& b : res.kept_originals) res.packing_sum += std::pow(b.radius, k);
  for (const Ball& b : res.bad_balls) res.packing_sum += std::pow(b.radius, k);
  res.packing_all = res.packing_sum;
  for (const Ball& g : res.final_good) res.packing_all += std::pow(g.radius, k);

  PairStats ps = pair_stats(space, ys, tau_ys, cfg.distortion_pairs, rng);
  res.distortion = distortion_of(ps);
  res.distortion_bound = 1.0 + cfg.distortion_constant * dalpha;
  res.leftover_bound = L.c_leftover * dalpha;

  int disjoint = 0, radius = 0;
  for (const StageReport& st : res.stages) {
    disjoint += st.disjoint_violations;
    radius += st.radius_violations;
  }
  res.disjoint_ok = disjoint == 0;
  res.radius_ok = radius == 0;
  res.packing_ok = res.packing_all <= L.c5;
  res.leftover_ok = res.leftover_mass <= res.leftover_bound * (1 + 1e-9) + 1e-300;
  res.distortion_ok = res.distortion <= res.distortion_bound + 1e-12;
  res.estimate_violated =
      !(res.disjoint_ok && res.radius_ok && res.packing_ok && res.leftover_ok && res.distortion_ok);
  return res;
}

// ---------------------------------------------------------------------------

namespace {

double leftover_in(const NormedSpace& space, const PointMeasure& mu, const std::vector<std::size_t>& S,
                   const std::vector<double>& r_s, double factor, const std::vector<Ball>& kept,
                   const std::vector<Ball>& bad, const std::vector<Ball>& good) {
  double acc = 0.0;
  for (std::size_t s : S) {
    const Vec& z = mu.point(s);
    if (space.norm(z) > 1.0) continue;
    bool covered = inside_any(space, z, kept);
    for (const Ball& b : bad)
      if (!covered && r_s[s] < b.radius && space.dist(z, b.center) <= b.radius) covered = true;
    for (const Ball& g : good)
      if (!covered && r_s[s] < g.radius && space.dist(z, g.center) <= g.radius) covered = true;
    if (!covered) acc += mu.weight(s) * factor;
  }
  return acc;
}

}  // namespace

PackingResult main_packing(const NormedSpace& space, const PointMeasure& mu, const std::vector<std::size_t>& S,
                           const std::vector<double>& r_s, int k, double M, const CoverConfig& cfg,
                           int max_levels) {
  check_inputs(space, mu, S, r_s, k, cfg);
  PackingResult res;
  res.ledger = make_ledger(space, k, cfg);
  const ConstantsLedger& L = res.ledger;
  const double chi = cfg.chi, alpha = L.alpha, theta = L.theta;
  const auto& P = mu.points();
  const Vec origin = Vec::Zero(space.dim());
  res.chi_constraint_ok = L.c5 * L.c_B * chi < 0.5;

  // Dini hypothesis with budget M^{alpha/2} on [r_s, 2].
  {
    const double floor_r = std::pow(chi, cfg.max_depth + 1);
    std::vector<double> sums;
    for (std::size_t s : S)
      sums.push_back(dini_profile(space, mu, P[s], std::max(r_s[s], floor_r), 2.0, k, alpha, chi).dini_sum);
    double worst = sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
    if (M < 0) M = std::pow(worst, 2.0 / alpha);
    for (std::size_t t = 0; t < S.size(); ++t)
      if (sums[t] > std::pow(M, alpha / 2.0) * (1 + 1e-9) + 1e-300) res.dini_violators.push_back(S[t]);
  }
  res.M = M;
  res.scale_factor = M > 0 ? cfg.delta0 * cfg.delta0 / M : 1.0;
  const double f = res.scale_factor;

  CoverConfig inner = cfg;
  inner.check_dini = false;

  auto support_below = [&](double radius) {
    std::vector<std::size_t> idx;
    for (std::size_t s : S)
      if (r_s[s] < radius) idx.push_back(s);
    return idx;
  };

  // Covering lemma at B_R(x) for mu' restricted to {r_s < R}, mapped back.
  auto cover_at = [&](const Vec& x, double R, int level, std::vector<Ball>& bad_out) {
    std::vector<std::size_t> idx;
    for (std::size_t s : S)
      if (r_s[s] < R && space.dist(P[s], x) <= 2.5 * R) idx.push_back(s);
    PointMeasure local(space.dim());
    std::vector<double> rs;
    std::vector<std::size_t> all;
    for (std::size_t t = 0; t < idx.size(); ++t) {
      local.add((P[idx[t]] - x) / R, mu.weight(idx[t]) * f * std::pow(R, -k));
      rs.push_back(r_s[idx[t]] / R);
      all.push_back(t);
    }
    CoverResult cov = covering_lemma(space, local, all, rs, k, inner);
    auto back = [&](const Ball& b) {
      return Ball{x + R * b.center, R * b.radius, level, b.atom >= 0 ? static_cast<long>(idx[b.atom]) : -1};
    };
    for (const Ball& b : cov.kept_originals) res.kept.push_back(back(b));
    for (const Ball& b : cov.bad_balls) bad_out.push_back(back(b));
    for (const Ball& b : cov.final_good) res.unresolved_good.push_back(back(b));
  };

  std::vector<Ball> B;
  int level = 0;
  {
    PointMeasure top = sub_measure(mu, support_below(1.0), f);
    BallLabel lab = classify_ball(space, top, origin, 1.0, k, chi, theta);
    if (lab.kind == BallKind::good) {
      level = 1;
      cover_at(origin, 1.0, level, B);
    } else {
      B.push_back(Ball{origin, 1.0, 0, -1});
    }
  }

  auto report = [&](int lvl, int max_net) {
    LevelReport lr;
    lr.level = lvl;
    lr.bad_balls = static_cast<int>(B.size());
    lr.leftover = leftover_in(space, mu, S, r_s, f, res.kept, B, res.unresolved_good);
    lr.leftover_bound = 2.0 - std::pow(2.0, -lvl);
    for (const Ball& b : res.kept) lr.packing_originals += std::pow(b.radius, k);
    lr.packing_originals_bound = std::pow(3.0, k) * L.c2 * lr.leftover_bound;
    for (const Ball& b : B) lr.packing_bad += std::pow(b.radius, k);
    lr.packing_bad_bound = std::pow(2.0, -lvl);
    lr.max_net = max_net;
    lr.net_bound = L.c_B * std::pow(chi, 1 - k);
    lr.ok = lr.leftover <= lr.leftover_bound * (1 + 1e-12) &&
            lr.packing_originals <= lr.packing_originals_bound * (1 + 1e-12) &&
            lr.packing_bad <= lr.packing_bad_bound * (1 + 1e-12) && lr.max_net <= lr.net_bound;
    res.levels.push_back(lr);
  };
  report(level, 0);

  while (!B.empty() && level < max_levels) {
    std::vector<Ball> next;
    int max_net = 0;
    for (const Ball& b : B) {
      const double rb = b.radius;
      PointMeasure below = sub_measure(mu, support_below(rb), f);
      BallLabel lab = classify_ball(space, below, b.center, rb, k, chi, theta);
      BestPlaneOptions opt;
      opt.seed = ball_seed(cfg.seed, level, static_cast<std::size_t>(std::max<long>(0, b.atom)));
      AffinePlane V = best_plane(space, sub_measure(mu, S, f), b.center, rb, k, opt).plane;

      std::vector<std::size_t> cands;
      for (std::size_t s : S)
        if (r_s[s] >= chi * rb && r_s[s] < rb && space.dist(P[s], b.center) <= 2.0 * rb &&
            distance_to_affine(space, V, P[s]).distance <= chi * rb / 30.0)
          cands.push_back(s);
      std::sort(cands.begin(), cands.end());
      std::vector<Ball> sb;
      for (std::size_t s : vitali_select(space, P, r_s, cands))
        sb.push_back(Ball{P[s], r_s[s], level + 1, static_cast<long>(s)});

      std::vector<std::size_t> jc;
      if (lab.kind != BallKind::good && lab.witness_plane) {
        for (std::size_t s : S)
          if (space.dist(P[s], b.center) <= rb &&
              distance_to_affine(space, *lab.witness_plane, P[s]).distance <= 10.0 * chi * rb &&
              distance_to_affine(space, V, P[s]).distance <= chi * rb / 30.0 && !inside_any(space, P[s], sb))
            jc.push_back(s);
      }
      std::vector<std::size_t> J = farthest_point_net(space, P, jc, 2.0 * chi * rb / 5.0);
      max_net = std::max(max_net, static_cast<int>(J.size()));
      for (const Ball& s : sb) res.kept.push_back(s);
      for (std::size_t x : J) cover_at(P[x], chi * rb, level + 1, next);
    }
    B = std::move(next);
    ++level;
    report(level, max_net);
  }

  res.terminated = B.empty();
  res.unresolved_bad = B;
  for (const Ball& b : res.kept) res.packing_sum += std::pow(b.radius, k);
  res.leftover_mass = leftover_in(space, mu, S, r_s, 1.0, res.kept, B, res.unresolved_good);
  res.ledger_ok = std::all_of(res.levels.begin(), res.levels.end(), [](const LevelReport& l) { return l.ok; });
  return res;
}

// ---------------------------------------------------------------------------

FlatMapReport reifenberg_flat_map(const NormedSpace& space, const std::vector<Vec>& S, int k,
                                  const FlatMapConfig& cfg) {
  if (k < 0 || k >= space.dim()) throw std::invalid_argument("reifenberg_flat_map: need 0 <= k < dim");
  if (!(cfg.chi > 0 && cfg.chi < 1)) throw std::invalid_argument("reifenberg_flat_map: need 0 < chi < 1");
  FlatMapReport rep;
  const double alpha = cfg.alpha ? *cfg.alpha : smoothness_power(space);
  const Vec origin = Vec::Zero(space.dim());
  const ProjectionKind kind = default_projection_kind(space, k);
  BetaInfResult top = beta_inf(space, S, origin, 1.0, k);
  rep.t0 = top.plane;
  rep.max_beta_inf = top.value;
  const double w = std::log(1.0 / cfg.chi);

  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < S.size(); ++i)
    if (space.norm(S[i]) <= 1.0) inside.push_back(i);

  for (int i = 1; i <= cfg.max_depth; ++i) {
    const double r = std::pow(cfg.chi, i);
    std::vector<std::size_t> net = farthest_point_net(space, S, inside, 2.0 * r / 5.0);
    std::vector<Vec> centers;
    std::vector<AffinePlane> planes;
    std::vector<AlmostProjection> projs;
    for (std::size_t g : net) {
      BetaInfResult b = beta_inf(space, S, S[g], r, k);
      rep.max_beta_inf = std::max(rep.max_beta_inf, b.value);
      centers.push_back(S[g]);
      planes.push_back(b.plane);
      projs.push_back(make_projection(space, b.plane.linear_part(), kind));
    }
    // Dini sums of beta_inf along the grid, at this stage's net points.
    if (i == cfg.max_depth) {
      for (std::size_t g : net) {
        double acc = 0.0;
        for (int j = 0; j <= cfg.max_depth; ++j)
          acc += std::pow(beta_inf(space, S, S[g], std::pow(cfg.chi, j), k).value, alpha) * w;
        rep.q_alpha = std::max(rep.q_alpha, acc);
      }
    }
    rep.stages.push_back(make_sigma(space, centers, planes, projs, r));
  }
  rep.certified = rep.max_beta_inf <= cfg.delta;

  std::mt19937_64 rng(cfg.seed);
  std::vector<Vec> xs = sample_plane_ball(space, rep.t0, 400, rng);
  std::vector<Vec> ys = xs;
  for (Vec& y : ys)
    for (const SigmaMap& s : rep.stages) y = sigma_apply(s, y);
  PairStats ps = pair_stats(space, xs, ys, cfg.pairs, rng);
  rep.distortion = distortion_of(ps);
  rep.holder_exponent = ps.slope;
  rep.fitted_constant = rep.q_alpha > 0 ? std::log(rep.distortion) / rep.q_alpha : 0.0;
  return rep;
}

}  // namespace reif
