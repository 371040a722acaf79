#pragma once

// Tilted densities p_{t,theta}(x) = exp(theta.x - t|x|^2/2) rho(x) / Z(t,theta):
// log-partition, barycenter a(t,theta), covariance A(t,theta), and exact
// sampling by rejection from the matched Gaussian N(theta/t, Id/t).

#include "sloclab/measures.hpp"
#include "sloclab/quadrature.hpp"
#include "sloclab/report.hpp"
#include "sloclab/rng.hpp"

#include <cstdint>

namespace sloclab {

enum class TiltMethod { ClosedForm, Quadrature, Rejection };

std::string_view to_string(TiltMethod m);

struct TiltState {
  double t = 0.0;
  Vector theta;
  double log_z = 0.0;
  Vector a;
  Matrix A;
  TiltMethod method = TiltMethod::ClosedForm;
  // Rejection only: accepted sample count and standard errors.
  long samples = 0;
  double log_z_stderr = 0.0;
  Vector a_stderr;
  Matrix A_stderr;
};

enum class TiltRoute { Auto, Quadrature, Rejection };

struct TiltOptions {
  TiltRoute route = TiltRoute::Auto;
  int rejection_samples = 20000;
  // Stream for the rejection route; when null a stream is derived from
  // (t, theta) so the call stays a pure function of its inputs.
  Rng* rng = nullptr;
};

TiltState tilt_moments(const MeasureSpec& spec, double t, const Vector& theta,
                       const TiltOptions& options = {});

// One-dimensional factor tilt: mass, mean and variance of
// exp(theta*x - t*x^2/2 - psi(x)).  Throws DivergentTilt when Z = inf.
quad::Moments1D factor_tilt(const Factor1D& f, double t, double theta);

struct RejectionStats {
  long proposals = 0;
  long accepted = 0;
  double acceptance() const {
    return proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
  }
};

// Acceptance below this rate over the final probe batch raises RejectionStall.
inline constexpr double kStallAcceptance = 1e-6;

Vector tilt_sample(const MeasureSpec& spec, double t, const Vector& theta, Rng& rng);
Matrix tilt_sample(const MeasureSpec& spec, double t, const Vector& theta, Rng& rng,
                   int count, RejectionStats* stats = nullptr);

// log p_{t,theta}(x) using the state's log-partition.
double tilt_log_density(const MeasureSpec& spec, const TiltState& state, const Vector& x);

// Symmetrise and clamp eigenvalues in [-1e-10, 0) to zero; throws
// std::runtime_error on anything more negative.
Matrix clamp_psd(const Matrix& m);

// Compares E A_t along simulated theta_t = tX + W_t with the residual
// estimate E (X - a(t, tY))(X - a(t, tY))^T where Y = X + Z/sqrt(t), drawn
// independently.  PASS iff every entry agrees within `sigmas` combined stderr.
LemmaReport conditional_covariance_identity_check(const MeasureSpec& spec, double t,
                                                  int n_samples, std::uint64_t seed,
                                                  double sigmas = 4.0);

}  // namespace sloclab
