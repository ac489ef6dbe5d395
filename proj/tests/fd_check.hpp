#pragma once

// Test-side aliases over the library's finite-difference checker.

#include "tgemb/gradcheck.hpp"

namespace tgemb::testing {

inline double max_rel_error_vs_fd(ad::ParameterSet& params,
                                  const std::function<double()>& forward,
                                  const double h = 1e-5) {
  return fd_max_rel_error(params, forward, h);
}

inline ad::Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0,
                                double hi = 1.0) {
  ad::Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

}  // namespace tgemb::testing
