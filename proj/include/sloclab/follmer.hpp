#pragma once

// Change of variables r = t / (1 + t): X_r = (1 - r) theta_t,
// v_r = (1 + t) a_t - theta_t, Gamma_r = (1 + t) A_t.

#include "sloclab/localization.hpp"

#include <vector>

namespace sloclab {

struct FollmerFrame {
  double r = 0.0;
  Vector x;      // X_r
  Vector v;      // v_r
  Matrix gamma;  // Gamma_r
};

// frames[path][k] for grid index k.
using FrameEnsemble = std::vector<std::vector<FollmerFrame>>;

inline double r_of_t(double t) { return t / (1.0 + t); }
inline double t_of_r(double r) { return r / (1.0 - r); }

std::vector<FollmerFrame> to_follmer(const LocalizationPath& path);
FrameEnsemble to_follmer(const std::vector<LocalizationPath>& paths);

// The r-image of the time grid (shared by every path).
std::vector<double> r_grid(const FrameEnsemble& frames);
std::size_t r_index(const FrameEnsemble& frames, double r);

struct FisherEnergy {
  double r = 0.0;
  Estimate energy;     // E |v_r|^2
  double bound = 0.0;  // 4 n / (1 - r)^2
};

FisherEnergy fisher_energy(const FrameEnsemble& frames, std::size_t k);
FisherEnergy fisher_energy_at(const FrameEnsemble& frames, double r);

// E |v_r|^2 <= 4 n / (1 - r)^2 at every grid r.
LemmaReport check_fisher_bound(const FrameEnsemble& frames, double sigmas = 4.0);
// r -> E |v_r|^2 is non-decreasing across the grid.
LemmaReport check_fisher_monotone(const FrameEnsemble& frames, double sigmas = 4.0);
// tr E v_r v_r^T = E |v_r|^2 on the same estimators.
LemmaReport check_trace_route(const FrameEnsemble& frames);
// Gamma_r of every frame equals (1 + t) A_t of the source path, bit for bit.
LemmaReport check_gamma_route(const std::vector<LocalizationPath>& paths,
                              const FrameEnsemble& frames);

// Five sub-reports at each target r:
//  (i)   (1 - r) E Gamma_r = E A_t
//  (ii)  E v v^T = (Id - E Gamma_r) / (1 - r), and 0 <= E Gamma_r <= Id
//  (iii) d/dr E v v^T = E (Id - Gamma_r)^2 / (1 - r)^2
//  (iv)  d/dr E Gamma_r = (E Gamma_r - E Gamma_r^2) / (1 - r)
//  (v)   Gamma_r <= Id / r on every path
LemmaReport check_gamma_properties(const std::vector<LocalizationPath>& paths,
                                   const FrameEnsemble& frames,
                                   const std::vector<double>& r_targets, double sigmas = 4.0);

// Law of X_r against r X + sqrt(r (1 - r)) Z: mean 0 and cov r Id within
// `sigmas`, and a two-sample KS test per coordinate at `level`.  The
// localization side uses X_r = (1 - r) (t X' + W_t) with t = r / (1 - r).
LemmaReport check_xr_law(const MeasureSpec& spec, double r, int n_samples, std::uint64_t seed,
                         double sigmas = 4.0, double level = 0.01);
// Same, with the localization side taken from existing frames.
LemmaReport check_xr_law(const MeasureSpec& spec, const FrameEnsemble& frames, double r,
                         std::uint64_t seed, double sigmas = 4.0, double level = 0.01);

}  // namespace sloclab
