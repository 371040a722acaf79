#pragma once

// Entropy, relative entropy to the standard Gaussian, the de Bruijn
// integral along the Follmer frames, the EPI deficit and its lower and upper
// bounds, and a line-by-line audit of the entropy-bound argument.

#include "sloclab/follmer.hpp"
#include "sloclab/measures.hpp"
#include "sloclab/report.hpp"
#include "sloclab/stats.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace sloclab {

enum class EntropyMethod { ClosedForm, Quadrature1D, PlugInMC, KNN };

std::string_view to_string(EntropyMethod m);

struct EntropyEstimate {
  double value = 0.0;  // nats
  EntropyMethod method = EntropyMethod::ClosedForm;
  double stderr = 0.0;
};

struct EntropyOptions {
  std::optional<EntropyMethod> method;  // default: ClosedForm when available, else PlugInMC
  int samples = 20000;
  std::uint64_t seed = 7;
  int knn_k = 1;
};

EntropyEstimate differential_entropy(const MeasureSpec& spec, const EntropyOptions& options = {});

// Kozachenko-Leonenko estimate from the columns of `samples`.
EntropyEstimate knn_entropy(const Matrix& samples, int k = 1);

// D(mu || gamma) = -Ent(mu) + (n/2) log(2 pi e); needs an isotropic spec.
Estimate kl_to_gaussian(const MeasureSpec& spec, const EntropyOptions& options = {});

// kl_to_gaussian >= -sigmas * stderr.
LemmaReport check_kl_nonnegative(const MeasureSpec& spec, double sigmas = 4.0);

// Trapezoid integral of E|v_r|^2 / 2 over the grid image [0, r_max] compared
// with `kl`.  PASS iff |gap| <= max(rel_tol * |kl|, sigmas * stderr).  The
// unobserved tail (r_max, 1) is estimated in the notes, not added.
LemmaReport de_bruijn_check(const FrameEnsemble& frames, const Estimate& kl,
                            double sigmas = 4.0, double rel_tol = 0.02);

struct DeficitReport {
  Estimate delta;        // delta_EPI = Ent((X1 + X2)/sqrt2) - Ent(X)
  EntropyMethod method = EntropyMethod::Quadrature1D;
  bool low_confidence = false;  // KNN fallback: bias not quantified
  double bn_upper = 0.0;        // 2n
};

// Grid convolution per factor for products (2^14 cells over +-12 sd), exact
// zero for Gaussian factors, KNN otherwise.
DeficitReport epi_deficit(const MeasureSpec& spec, const EntropyOptions& options = {});

// Entropy of the standardized kind convolved with itself, minus log(2)/2,
// minus the kind's entropy.  Cached.
double factor_epi_deficit(FactorKind kind);

// delta_EPI >= -sigmas stderr and delta_EPI <= 2n.
LemmaReport check_epi_deficit(const MeasureSpec& spec, const DeficitReport& d,
                              double sigmas = 4.0);

struct EmBound {
  Estimate value;      // eps * int_xi^r_max E|Gamma_r - E Gamma_r|^2 / (4 (1 - r)) dr
  double r_max = 0.0;
  std::string note;
};

// Integrand nodes are the grid r in (xi, r_max] plus xi itself (linear
// interpolation when xi is between grid points).
EmBound em_lower_bound(const FrameEnsemble& frames, double xi, std::optional<double> eps = {});

// Compares E|Gamma_r - E Gamma_r|^2 with E|Gamma^(1) - Gamma^(2)|^2 / 2 over
// the parity split (even, odd path index) at every grid r >= xi.
LemmaReport check_em_parity(const FrameEnsemble& frames, double xi, double sigmas = 4.0);

// em_lower <= delta + sigmas * combined stderr.
LemmaReport check_em_bound(const EmBound& em, const Estimate& delta, double sigmas = 4.0);

// Numerical audit of the entropy-bound chain on the truncated interval
// [xi, R], R = the largest grid r <= r_upper.  `xi` must be on the grid
// image.  Near r = 1 the spectral lines are decided by the few paths inside
// the boundary layer of the support, so r_upper should leave N sqrt(1 - R)
// well above 1.
LemmaReport proof_chain_audit(const FrameEnsemble& frames,
                              const std::vector<LocalizationPath>& paths, double xi,
                              const Estimate& delta, double sigmas = 4.0,
                              double r_upper = 1.0);

}  // namespace sloclab
