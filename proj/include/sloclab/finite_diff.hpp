#pragma once

// Ensemble-level calculus checks on non-uniform grids.  Statistics are
// formed per unit (path) before averaging, so the standard error accounts
// for correlation between neighbouring grid times.

#include "sloclab/linalg.hpp"
#include "sloclab/report.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace sloclab {

// Value of the series for unit `unit` at grid index `k`.
using UnitSeries = std::function<Matrix(std::size_t unit, std::size_t k)>;

// Three-point derivative at x[mid] from x[lo] < x[mid] < x[hi].  The leading
// error is -h_lo * h_hi * f''' / 6, so `spread` = h_lo * h_hi measures it.
struct Stencil {
  std::size_t lo = 0, mid = 0, hi = 0;
  double w_lo = 0.0, w_mid = 0.0, w_hi = 0.0;
  double spread = 0.0;
};

Stencil central_stencil(const std::vector<double>& x, std::size_t lo, std::size_t mid,
                        std::size_t hi);

// Checks d/dx E F = E G at the target indices.  The discretization budget
// at each target is Richardson's estimate from a wider stencil:
//   |D_wide - D_narrow| / (spread_wide / spread_narrow - 1).
// PASS iff every entry satisfies |gap| <= sigmas * (stderr + budget).
LemmaReport derivative_identity_check(const std::string& id, const std::vector<double>& x,
                                      std::size_t units, const UnitSeries& f,
                                      const UnitSeries& g,
                                      const std::vector<std::size_t>& targets, double sigmas);

// Trapezoid weights for x[lo..hi] (indices outside get 0).
std::vector<double> trapezoid_weights(const std::vector<double>& x, std::size_t lo,
                                      std::size_t hi);

// Same integral using every other node starting at lo (hi is always kept).
std::vector<double> coarse_trapezoid_weights(const std::vector<double>& x, std::size_t lo,
                                             std::size_t hi);

}  // namespace sloclab
