#include "reif/polyhedral_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace reif {

namespace {

constexpr double kMaxCandidates = 2e6;

double objective(const Mat& A, const Vec& r, const Vec& lambda, bool linf) {
  Vec e = r - A * lambda;
  return linf ? e.cwiseAbs().maxCoeff() : e.cwiseAbs().sum();
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  double b = 1;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// Calls visit(idx) for every increasing k-subset of {0..n-1}.
template <class F>
void for_each_subset(int n, int k, F&& visit) {
  if (k > n) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

PolyhedralFit polyhedral_fit(const Mat& A, const Vec& r, bool linf) {
  const int n = static_cast<int>(A.rows());
  const int k = static_cast<int>(A.cols());
  if (r.size() != n) throw std::invalid_argument("polyhedral_fit: size mismatch");
  PolyhedralFit out;
  if (k == 0) {
    out.lambda = Vec::Zero(0);
    out.value = linf ? (n ? r.cwiseAbs().maxCoeff() : 0.0) : r.cwiseAbs().sum();
    return out;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  if (qr.rank() < k) throw std::invalid_argument("polyhedral_fit: basis is rank deficient");
  Vec ls = qr.solve(r);

  double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  double best = std::numeric_limits<double>::infinity();
  Vec best_lambda = ls;
  auto offer = [&](const Vec& lam) {
    if (!lam.allFinite()) return;
    double v = objective(A, r, lam, linf);
    if (v < best - 1e-13 * scale ||
        (v <= best + 1e-13 * scale && lam.squaredNorm() < best_lambda.squaredNorm())) {
      if (v < best) best = v;
      best_lambda = lam;
    }
  };
  offer(ls);

  if (!linf) {
    // An optimal l^1 fit interpolates k linearly independent rows.
    if (binom(n, k) > kMaxCandidates) throw std::invalid_argument("polyhedral_fit: too large");
    Mat As(k, k);
    Vec rs(k);
    for_each_subset(n, k, [&](const std::vector<int>& idx) {
      for (int i = 0; i < k; ++i) {
        As.row(i) = A.row(idx[i]);
        rs[i] = r[idx[i]];
      }
      Eigen::FullPivLU<Mat> lu(As);
      if (!lu.isInvertible()) return;
      offer(lu.solve(rs));
    });
  } else {
    // Vertices of {(lambda, t) : |r_i - a_i lambda| <= t}: k+1 active signed rows.
    if (binom(2 * n, k + 1) > kMaxCandidates) {
      throw std::invalid_argument("polyhedral_fit: too large");
    }
    Mat M(k + 1, k + 1);
    Vec rhs(k + 1);
    for_each_subset(2 * n, k + 1, [&](const std::vector<int>& idx) {
      for (int i = 0; i <= k; ++i) {
        int row = idx[i] / 2;
        double s = (idx[i] % 2) ? -1.0 : 1.0;
        // s (r_row - a_row lambda) = t  <=>  s a_row lambda + t = s r_row
        M.block(i, 0, 1, k) = s * A.row(row);
        M(i, k) = 1.0;
        rhs[i] = s * r[row];
      }
      Eigen::FullPivLU<Mat> lu(M);
      if (!lu.isInvertible()) return;
      Vec sol = lu.solve(rhs);
      offer(sol.head(k));
    });
  }

  // Slide toward the least-squares point along the optimal face.
  double tol = 1e-12 * scale;
  Vec dir = ls - best_lambda;
  if (dir.norm() > 0 && objective(A, r, ls, linf) <= best + tol) {
    best_lambda = ls;
  } else if (dir.norm() > 0) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      if (objective(A, r, best_lambda + mid * dir, linf) <= best + tol) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    best_lambda += lo * dir;
  }
  out.lambda = best_lambda;
  out.value = objective(A, r, best_lambda, linf);
  return out;
}

}  // namespace reif
