#include "sloclab/tilt.hpp"

#include "sloclab/errors.hpp"
#include "sloclab/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace sloclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const MeasureSpec& spec, double t, const Vector& theta) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("tilt: t must be finite and nonnegative");
  }
  if (theta.size() != spec.dim()) throw std::invalid_argument("tilt: theta has wrong dimension");
  if (!theta.allFinite()) throw std::invalid_argument("tilt: theta must be finite");
}

Rng derived_stream(double t, const Vector& theta) {
  std::uint64_t h = mix64(std::bit_cast<std::uint64_t>(t));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    h = mix64(h ^ std::bit_cast<std::uint64_t>(theta(i)));
  }
  return Rng(h);
}

// Gaussian factor N(c, s^2) closed form.
quad::Moments1D gaussian_factor_tilt(const Factor1D& f, double t, double theta) {
  const double s2 = f.scale * f.scale;
  const double precision = 1.0 / s2 + t;
  const double h = theta + f.shift / s2;
  quad::Moments1D m;
  m.mean = h / precision;
  m.variance = 1.0 / precision;
  m.log_mass = -0.5 * std::log1p(t * s2) + 0.5 * h * h / precision - 0.5 * f.shift * f.shift / s2;
  return m;
}

quad::Moments1D quadrature_factor_tilt(const Factor1D& f, double t, double theta) {
  if (t == 0.0) {
    const auto [left, right] = factor_tail_slopes(f);
    if (!(theta < right && theta > -left)) {
      std::ostringstream os;
      os << "tilt: partition function diverges for factor " << to_string(f.kind)
         << " at t = 0, theta = " << theta;
      throw DivergentTilt(os.str());
    }
  }
  quad::LogConcaveProblem p;
  std::tie(p.lo, p.hi) = factor_support(f);
  p.breakpoints = factor_kinks(f);
  p.scale = f.scale / std::sqrt(1.0 + t * f.scale * f.scale);
  p.has_mode = true;
  p.mode = factor_tilt_mode(f, t, theta);
  p.start = p.mode;
  // Exponent expanded around the mode: theta x - t x^2 / 2 loses all its
  // digits to cancellation once t is large.
  const double c = std::isfinite(p.mode) ? p.mode : 0.0;
  const double slope = theta - t * c;
  auto g = [&](double x) {
    const double u = x - c;
    return u * (slope - 0.5 * t * u) - factor_potential(f, x);
  };
  quad::Moments1D m = quad::log_concave_moments(p, g);
  m.log_mass += theta * c - 0.5 * t * c * c;
  return m;
}

quad::Moments1D factor_tilt_impl(const Factor1D& f, double t, double theta, bool force_quadrature) {
  if (f.kind == FactorKind::Gaussian && !force_quadrature) return gaussian_factor_tilt(f, t, theta);
  return quadrature_factor_tilt(f, t, theta);
}

TiltState product_tilt(const std::vector<Factor1D>& factors, double t, const Vector& theta,
                       bool force_quadrature) {
  const auto n = static_cast<Eigen::Index>(factors.size());
  TiltState s;
  s.t = t;
  s.theta = theta;
  s.a = Vector::Zero(n);
  s.A = Matrix::Zero(n, n);
  bool any_quadrature = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Factor1D& f = factors[static_cast<std::size_t>(i)];
    const quad::Moments1D m = factor_tilt_impl(f, t, theta(i), force_quadrature);
    any_quadrature = any_quadrature || force_quadrature || f.kind != FactorKind::Gaussian;
    s.log_z += m.log_mass;
    s.a(i) = m.mean;
    s.A(i, i) = m.variance;
  }
  s.method = any_quadrature ? TiltMethod::Quadrature : TiltMethod::ClosedForm;
  return s;
}

TiltState gaussian_tilt(double t, const Vector& theta) {
  const auto n = theta.size();
  TiltState s;
  s.t = t;
  s.theta = theta;
  s.a = theta / (1.0 + t);
  s.A = Matrix::Identity(n, n) / (1.0 + t);
  s.log_z = 0.5 * theta.squaredNorm() / (1.0 + t) - 0.5 * static_cast<double>(n) * std::log1p(t);
  s.method = TiltMethod::ClosedForm;
  return s;
}

// x = M y + b with y ~ N(0, Id).
TiltState affine_gaussian_tilt(const MeasureSpec& spec, double t, const Vector& theta) {
  const auto n = theta.size();
  const Matrix cov = spec.linear() * spec.linear().transpose();
  const Matrix cov_inv = (spec.inverse().transpose() * spec.inverse());
  const Matrix precision = cov_inv + t * Matrix::Identity(n, n);
  Eigen::LLT<Matrix> llt(precision);
  const Vector h = theta + cov_inv * spec.offset();
  TiltState s;
  s.t = t;
  s.theta = theta;
  s.a = llt.solve(h);
  s.A = llt.solve(Matrix::Identity(n, n));
  s.A = 0.5 * (s.A + s.A.transpose());
  Eigen::LLT<Matrix> llt_det(Matrix::Identity(n, n) + t * cov);
  const double log_det = 2.0 * llt_det.matrixL().toDenseMatrix().diagonal().array().log().sum();
  s.log_z = 0.5 * h.dot(s.a) - 0.5 * spec.offset().dot(cov_inv * spec.offset()) - 0.5 * log_det;
  s.method = TiltMethod::ClosedForm;
  return s;
}

struct BallGeometry {
  int k = 0;
  int ambient = 0;
  double radius = 0.0;
  Vector centre;
};

std::optional<BallGeometry> ball_view(const MeasureSpec& spec) {
  if (spec.family() == Family::UniformBall) {
    return BallGeometry{spec.dim(), spec.ball_ambient_dim(), spec.ball_radius(),
                        Vector::Zero(spec.dim())};
  }
  if (spec.family() == Family::AffineImage && spec.base().family() == Family::UniformBall &&
      spec.capabilities().analytic_tilt_moments) {
    const MeasureSpec& b = spec.base();
    return BallGeometry{b.dim(), b.ball_ambient_dim(), b.ball_radius() * spec.linear()(0, 0),
                        spec.offset()};
  }
  return std::nullopt;
}

// log of int_0^h exp(-t rho^2/2) rho^m (h^2 - rho^2)^p d rho.
double log_radial_integral(double h, double t, int m, double p) {
  if (!(h > 0.0)) return -kInf;
  const double c = 0.5 * t * h * h;
  double log_f = 0.0;
  if (p == 0.0) {
    if (c < 1e-2) {
      double sum = 0.0;
      double term = 1.0;
      for (int j = 0; j < 60; ++j) {
        const double add = term / (m + 1.0 + 2.0 * j);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= -c / (j + 1.0);
      }
      log_f = std::log(sum);
    } else {
      const double a = 0.5 * (m + 1.0);
      log_f = boost::math::lgamma(a) + std::log(boost::math::gamma_p(a, c)) - std::log(2.0) -
              a * std::log(c);
    }
    return (m + 1.0) * std::log(h) + log_f;
  }
  auto integrand = [&](double s) {
    return std::exp(-c * s * s) * std::pow(s, m) * std::pow(std::max(0.0, 1.0 - s * s), p);
  };
  const double v = quad::integrate_scalar(integrand, 0.0, 1.0, 0.0, 1e-13);
  return (m + 1.0 + 2.0 * p) * std::log(h) + std::log(v);
}

TiltState ball_tilt(const BallGeometry& g, double t, const Vector& theta) {
  const int k = g.k;
  const int n = g.ambient;
  const double r = g.radius;
  const double p = 0.5 * (n - k);
  const double log_c = log_unit_ball_volume(n - k) - log_unit_ball_volume(n) - n * std::log(r);
  const Vector shifted = theta - t * g.centre;
  const double shift_log = theta.dot(g.centre) - 0.5 * t * g.centre.squaredNorm();

  TiltState s;
  s.t = t;
  s.theta = theta;
  s.method = TiltMethod::Quadrature;

  quad::LogConcaveProblem prob;
  prob.lo = -r;
  prob.hi = r;
  prob.scale = r / std::sqrt(1.0 + t * r * r);

  if (k == 1) {
    const double th = shifted(0);
    if (p == 0.0) {
      prob.has_mode = true;
      prob.mode = t > 0 ? th / t : (th > 0 ? r : (th < 0 ? -r : 0.0));
    }
    prob.start = t > 0 ? std::clamp(th / t, -0.9 * r, 0.9 * r) : 0.0;
    const double c = t > 0 ? std::clamp(th / t, -r, r) : 0.0;
    const double slope = th - t * c;
    auto lw = [&](double x) {
      const double gap = (r - x) * (r + x);
      if (p > 0.0 && !(gap > 0.0)) return -kInf;
      const double u = x - c;
      return u * (slope - 0.5 * t * u) + log_c + (p > 0.0 ? p * std::log(gap) : 0.0);
    };
    const quad::Moments1D m = quad::log_concave_moments(prob, lw);
    s.log_z = shift_log + th * c - 0.5 * t * c * c + m.log_mass;
    s.a = g.centre + Vector::Constant(1, m.mean);
    s.A = Matrix::Constant(1, 1, m.variance);
    return s;
  }

  const double tau = shifted.norm();
  Vector u = Vector::Zero(k);
  if (tau > 0.0) u = shifted / tau;
  else u(0) = 1.0;
  const int mpow = k - 2;
  const double log_sphere =
      std::log(2.0) + 0.5 * (k - 1) * std::log(std::numbers::pi) - std::lgamma(0.5 * (k - 1));
  prob.start = t > 0 ? std::clamp(tau / t, -0.9 * r, 0.9 * r) : 0.0;
  const double c = t > 0 ? std::clamp(tau / t, -r, r) : 0.0;
  const double slope = tau - t * c;
  auto lw = [&](double x1) {
    // Factored: r^2 - x1^2 cancels badly in the boundary layer x1 -> r.
    const double h = std::sqrt(std::max(0.0, (r - x1) * (r + x1)));
    const double u = x1 - c;
    return u * (slope - 0.5 * t * u) + log_c + log_sphere + log_radial_integral(h, t, mpow, p);
  };
  auto perp = [&](double x1) {
    const double h = std::sqrt(std::max(0.0, (r - x1) * (r + x1)));
    if (!(h > 0.0)) return 0.0;
    return std::exp(log_radial_integral(h, t, mpow + 2, p) - log_radial_integral(h, t, mpow, p));
  };
  const quad::Moments1D m = quad::log_concave_moments(prob, lw, perp);
  const double v_par = m.variance;
  const double v_perp = m.extra / (k - 1);
  s.log_z = shift_log + tau * c - 0.5 * t * c * c + m.log_mass;
  s.a = g.centre + m.mean * u;
  s.A = v_perp * Matrix::Identity(k, k) + (v_par - v_perp) * u * u.transpose();
  return s;
}

TiltState rejection_tilt(const MeasureSpec& spec, double t, const Vector& theta,
                         const TiltOptions& options) {
  const auto n = theta.size();
  if (t == 0.0) {
    if (theta.isZero(0.0)) {
      const Moments mo = analytic_moments(spec);
      TiltState s;
      s.t = t;
      s.theta = theta;
      s.a = mo.mean;
      s.A = mo.cov;
      s.method = TiltMethod::ClosedForm;
      return s;
    }
    throw std::invalid_argument("tilt: rejection route needs t > 0 when theta != 0");
  }
  Rng local = derived_stream(t, theta);
  Rng& rng = options.rng ? *options.rng : local;
  RejectionStats stats;
  const int count = std::max(2, options.rejection_samples);
  const Matrix xs = tilt_sample(spec, t, theta, rng, count, &stats);
  const Moments mo = sample_moments(xs);
  TiltState s;
  s.t = t;
  s.theta = theta;
  s.method = TiltMethod::Rejection;
  s.samples = count;
  s.a = mo.mean;
  s.A = clamp_psd(mo.cov);
  const double nn = static_cast<double>(count);
  s.a_stderr = (mo.cov.diagonal() / nn).cwiseSqrt();
  s.A_stderr = Matrix::Zero(n, n);
  const Matrix centred = xs.colwise() - mo.mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::ArrayXd prod = centred.row(i).array() * centred.row(j).array();
      const double mean = prod.mean();
      const double var = (prod - mean).square().sum() / (nn - 1.0);
      s.A_stderr(i, j) = std::sqrt(var / nn);
    }
  }
  // Z = (2 pi / t)^{n/2} exp(|theta|^2 / 2t) exp(-min psi) P(accept).
  const double acc = stats.acceptance();
  s.log_z = 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi / t) +
            0.5 * theta.squaredNorm() / t - min_potential(spec) + std::log(acc);
  s.log_z_stderr = std::sqrt((1.0 - acc) / (acc * static_cast<double>(stats.proposals)));
  return s;
}

}  // namespace

std::string_view to_string(TiltMethod m) {
  switch (m) {
    case TiltMethod::ClosedForm: return "ClosedForm";
    case TiltMethod::Quadrature: return "Quadrature";
    case TiltMethod::Rejection: return "Rejection";
  }
  return "?";
}

quad::Moments1D factor_tilt(const Factor1D& f, double t, double theta) {
  return factor_tilt_impl(f, t, theta, false);
}

Matrix clamp_psd(const Matrix& m) {
  Matrix sym = 0.5 * (m + m.transpose());
  Matrix offdiag = sym;
  offdiag.diagonal().setZero();
  if (offdiag.isZero(0.0)) {
    for (Eigen::Index i = 0; i < sym.rows(); ++i) {
      if (sym(i, i) < -1e-10) throw std::runtime_error("clamp_psd: matrix is not PSD");
      if (sym(i, i) < 0.0) sym(i, i) = 0.0;
    }
    return sym;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector ev = es.eigenvalues();
  if (ev(0) >= 0.0) return sym;
  if (ev(0) < -1e-10) {
    throw std::runtime_error("clamp_psd: eigenvalue " + format_double(ev(0)) + " below -1e-10");
  }
  ev = ev.cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

TiltState tilt_moments(const MeasureSpec& spec, double t, const Vector& theta,
                       const TiltOptions& options) {
  validate(spec, t, theta);
  const int n = spec.dim();
  if (options.route == TiltRoute::Rejection) return rejection_tilt(spec, t, theta, options);

  const bool force_quadrature = options.route == TiltRoute::Quadrature;
  if (spec.family() == Family::Gaussian) {
    if (!force_quadrature) return gaussian_tilt(t, theta);
    const std::vector<Factor1D> gauss(static_cast<std::size_t>(n), Factor1D{});
    return product_tilt(gauss, t, theta, true);
  }
  if (auto fs = product_view(spec)) return product_tilt(*fs, t, theta, force_quadrature);
  if (auto ball = ball_view(spec)) return ball_tilt(*ball, t, theta);
  if (spec.family() == Family::AffineImage && spec.base().family() == Family::Gaussian) {
    if (!force_quadrature) return affine_gaussian_tilt(spec, t, theta);
    if (spec.is_diagonal_map()) {
      std::vector<Factor1D> fs;
      for (int i = 0; i < n; ++i) fs.push_back({FactorKind::Gaussian, std::abs(spec.linear()(i, i)),
                                                spec.offset()(i)});
      return product_tilt(fs, t, theta, true);
    }
  }
  if (force_quadrature) {
    throw std::invalid_argument("tilt: no quadrature route for '" + spec.label() + "'");
  }
  return rejection_tilt(spec, t, theta, options);
}

Vector tilt_sample(const MeasureSpec& spec, double t, const Vector& theta, Rng& rng) {
  return tilt_sample(spec, t, theta, rng, 1).col(0);
}

Matrix tilt_sample(const MeasureSpec& spec, double t, const Vector& theta, Rng& rng, int count,
                   RejectionStats* stats) {
  validate(spec, t, theta);
  if (!(t > 0.0)) throw std::invalid_argument("tilt_sample: t must be positive");
  if (count < 0) throw std::invalid_argument("tilt_sample: negative count");
  const int n = spec.dim();
  Matrix out(n, count);
  std::normal_distribution<double> nd(0.0, 1.0);

  if (spec.family() == Family::Gaussian ||
      (spec.family() == Family::AffineImage && spec.base().family() == Family::Gaussian)) {
    const TiltState s = tilt_moments(spec, t, theta);
    const Eigen::LLT<Matrix> llt(s.A);
    const Matrix l = llt.matrixL();
    for (int j = 0; j < count; ++j) {
      Vector z(n);
      for (int i = 0; i < n; ++i) z(i) = nd(rng);
      out.col(j) = s.a + l * z;
    }
    if (stats) {
      stats->proposals += count;
      stats->accepted += count;
    }
    return out;
  }

  const double psi_min = min_potential(spec);
  const double sd = 1.0 / std::sqrt(t);
  const Vector centre = theta / t;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  long proposals = 0;
  long accepted = 0;
  long next_check = 10000;
  constexpr long kLastProbe = 10000000;
  Vector x(n);
  while (accepted < count) {
    for (int i = 0; i < n; ++i) x(i) = centre(i) + sd * nd(rng);
    ++proposals;
    const double excess = potential(spec, x) - psi_min;
    if (std::isfinite(excess) && (excess <= 0.0 || std::log(unif(rng)) < -excess)) {
      out.col(accepted++) = x;
    }
    if (proposals == next_check) {
      const double rate = static_cast<double>(accepted) / static_cast<double>(proposals);
      if (rate < kStallAcceptance || accepted == 0) {
        if (next_check >= kLastProbe) {
          std::ostringstream os;
          os << "tilt_sample: rejection stalled for '" << spec.label() << "' at t = " << t
             << " (acceptance " << rate << " after " << proposals << " proposals)";
          throw RejectionStall(os.str(), rate, proposals);
        }
        next_check *= 10;
      } else {
        next_check = std::numeric_limits<long>::max();
      }
    }
  }
  if (stats) {
    stats->proposals += proposals;
    stats->accepted += accepted;
  }
  return out;
}

double tilt_log_density(const MeasureSpec& spec, const TiltState& state, const Vector& x) {
  return state.theta.dot(x) - 0.5 * state.t * x.squaredNorm() - potential(spec, x) - state.log_z;
}

LemmaReport conditional_covariance_identity_check(const MeasureSpec& spec, double t, int n_samples,
                                                  std::uint64_t seed, double sigmas) {
  if (!(t > 0.0)) throw std::invalid_argument("conditional covariance check: t must be positive");
  if (n_samples < 2) throw std::invalid_argument("conditional covariance check: need >= 2 samples");
  const int n = spec.dim();
  const double sqrt_t = std::sqrt(t);
  std::vector<Matrix> path_side;
  std::vector<Matrix> residual_side;
  path_side.reserve(static_cast<std::size_t>(n_samples));
  residual_side.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = make_stream(seed, StreamTag::Paths, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> nd(0.0, 1.0);
    const Vector x = sample_point(spec, rng);
    Vector w(n);
    for (int j = 0; j < n; ++j) w(j) = sqrt_t * nd(rng);
    TiltOptions opt;
    opt.rng = &rng;
    path_side.push_back(tilt_moments(spec, t, t * x + w, opt).A);

    Rng fresh = make_stream(seed, StreamTag::Fresh, static_cast<std::uint64_t>(i));
    const Vector x2 = sample_point(spec, fresh);
    Vector z(n);
    for (int j = 0; j < n; ++j) z(j) = nd(fresh);
    const Vector y = x2 + z / sqrt_t;
    opt.rng = &fresh;
    const Vector a = tilt_moments(spec, t, t * y, opt).a;
    residual_side.push_back((x2 - a) * (x2 - a).transpose());
  }
  const MatrixEstimate lhs = mean_estimate(path_side);
  const MatrixEstimate rhs = mean_estimate(residual_side);
  const Matrix combined = (lhs.stderr.cwiseAbs2() + rhs.stderr.cwiseAbs2()).cwiseSqrt();
  const EntryComparison c = compare_entries(lhs.mean - rhs.mean, combined, sigmas);
  std::ostringstream notes;
  notes << "t=" << t << " samples=" << n_samples << " tr(E A_t)=" << lhs.mean.trace()
        << " tr(E residual)=" << rhs.mean.trace();
  return make_report("conditional-covariance", c, sigmas, notes.str());
}

}  // namespace sloclab
