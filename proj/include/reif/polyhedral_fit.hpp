#pragma once

#include "reif/normed_space.hpp"

namespace reif {

struct PolyhedralFit {
  Vec lambda;
  double value = 0.0;
};

// min over lambda of |r - A lambda| in l^1 (linf = false) or l^inf (linf = true).
// The epigraph LP is solved by enumerating its vertices, then the optimum is
// moved toward the least-squares solution while it stays optimal.
// A must have full column rank.
PolyhedralFit polyhedral_fit(const Mat& A, const Vec& r, bool linf);

}  // namespace reif
