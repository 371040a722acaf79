#pragma once

// Isotropic constant L = exp(-Ent/n) det(cov)^(1/(2n)), the density-at-the-
// barycenter sandwich, marginals on subspaces and the projection inequality
// E A_{E,t} >= V^T (E A_t) V.

#include "sloclab/infotheory.hpp"
#include "sloclab/localization.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sloclab {

// Gaussian value (2 pi e)^(-1/2).
double gaussian_isotropic_constant();

struct IsotropicConstantReport {
  double L = 0.0;
  double L_stderr = 0.0;
  EntropyEstimate ent;
  double det_cov_pow = 0.0;      // det(cov)^(1/(2n))
  double sandwich_middle = 0.0;  // f(0)^(1/n) det(cov)^(1/(2n))
  bool sandwich_holds = false;   // L <= middle <= e L (round-off slack)
};

// Throws std::invalid_argument when the barycenter is not 0.
IsotropicConstantReport isotropic_constant(const MeasureSpec& spec,
                                           const EntropyOptions& options = {});

struct Marginal {
  std::optional<MeasureSpec> spec;  // exact law when available
  Matrix samples;                   // projected draws (k x count) otherwise
};

// Coordinate subspaces of products, any subspace of the standard Gaussian
// and of balls give an exact spec; anything else a sample ensemble.
Marginal marginal(const MeasureSpec& spec, const SubspaceBasis& basis, int samples = 0,
                  std::uint64_t seed = 0);

// lambda_min(E A_{E,t} - V^T E A_t V) >= -sigmas * stderr, with a jackknife
// stderr combining the two independent ensembles.  When `expect_equality`
// the entrywise difference is also required to vanish within sigmas.
LemmaReport check_projection_lemma(const MeasureSpec& spec, const SubspaceBasis& basis, double t,
                                   int n_paths, std::uint64_t seed, double sigmas = 4.0,
                                   bool expect_equality = false, int workers = 1);

struct LRow {
  std::string id;
  double L = 0.0;
  double L_stderr = 0.0;
  std::string method;
  bool above_gaussian = false;  // L >= (2 pi e)^(-1/2) - 1e-9
  double sandwich_middle = 0.0;
  bool sandwich_holds = false;
};

std::vector<std::string> default_catalog();
// Measures are isotropized (L is affine invariant) before evaluation.
std::vector<LRow> l_bounds_sweep(const std::vector<std::string>& catalog);
LemmaReport check_l_bounds(const std::vector<LRow>& rows);

}  // namespace sloclab
