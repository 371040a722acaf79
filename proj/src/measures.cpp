#include "sloclab/measures.hpp"

#include "sloclab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sloclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBand = 1e-14;
const double kSqrt2 = std::sqrt(2.0);
const double kSqrt3 = std::sqrt(3.0);
const double kLaplaceB = 1.0 / std::sqrt(2.0);

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// Truncated N(0,1) on [-c, c]: mass, standard deviation.
struct TruncConstants {
  double mass;
  double sigma;
  double half_width;  // support half-width after standardisation
};

const TruncConstants& trunc_constants() {
  static const TruncConstants tc = [] {
    const double c = kTruncGaussianCut;
    const double mass = std::erf(c / kSqrt2);
    const double var = 1.0 - 2.0 * c * std_normal_pdf(c) / mass;
    const double sigma = std::sqrt(var);
    return TruncConstants{mass, sigma, c / sigma};
  }();
  return tc;
}

bool inside(double y, double lo, double hi) {
  const double band_lo = kBand * std::max(1.0, std::abs(lo));
  const double band_hi = kBand * std::max(1.0, std::abs(hi));
  return y >= lo - band_lo && y <= hi + band_hi;
}

std::pair<double, double> std_support(FactorKind k) {
  switch (k) {
    case FactorKind::Exponential: return {-1.0, kInf};
    case FactorKind::Uniform: return {-kSqrt3, kSqrt3};
    case FactorKind::TruncGaussian: {
      const double h = trunc_constants().half_width;
      return {-h, h};
    }
    case FactorKind::Laplace:
    case FactorKind::Gaussian: return {-kInf, kInf};
  }
  return {-kInf, kInf};
}

double std_potential(FactorKind k, double y) {
  const auto [lo, hi] = std_support(k);
  if (!inside(y, lo, hi)) return kInf;
  switch (k) {
    case FactorKind::Exponential: return y + 1.0;
    case FactorKind::Laplace: return std::abs(y) / kLaplaceB + std::log(2.0 * kLaplaceB);
    case FactorKind::TruncGaussian: {
      const auto& tc = trunc_constants();
      const double z = tc.sigma * y;
      return 0.5 * z * z + std::log(std::sqrt(2.0 * std::numbers::pi) * tc.mass) -
             std::log(tc.sigma);
    }
    case FactorKind::Uniform: return std::log(2.0 * kSqrt3);
    case FactorKind::Gaussian: return 0.5 * y * y + 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return kInf;
}

double std_entropy(FactorKind k) {
  switch (k) {
    case FactorKind::Exponential: return 1.0;
    case FactorKind::Laplace: return 1.0 + std::log(2.0 * kLaplaceB);
    case FactorKind::TruncGaussian: {
      const auto& tc = trunc_constants();
      const double c = kTruncGaussianCut;
      return std::log(std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * tc.mass) -
             c * std_normal_pdf(c) / tc.mass - std::log(tc.sigma);
    }
    case FactorKind::Uniform: return std::log(2.0 * kSqrt3);
    case FactorKind::Gaussian: return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  }
  return 0.0;
}

double std_cdf(FactorKind k, double y) {
  switch (k) {
    case FactorKind::Exponential: return y <= -1.0 ? 0.0 : -std::expm1(-(y + 1.0));
    case FactorKind::Laplace:
      return y < 0 ? 0.5 * std::exp(y / kLaplaceB) : 1.0 - 0.5 * std::exp(-y / kLaplaceB);
    case FactorKind::TruncGaussian: {
      const auto& tc = trunc_constants();
      const double yy = std::clamp(y, -tc.half_width, tc.half_width);
      return (std_normal_cdf(tc.sigma * yy) - std_normal_cdf(-kTruncGaussianCut)) / tc.mass;
    }
    case FactorKind::Uniform: return std::clamp((y + kSqrt3) / (2.0 * kSqrt3), 0.0, 1.0);
    case FactorKind::Gaussian: return std_normal_cdf(y);
  }
  return 0.0;
}

double std_sample(FactorKind k, Rng& rng) {
  switch (k) {
    case FactorKind::Exponential: {
      std::exponential_distribution<double> e(1.0);
      return e(rng) - 1.0;
    }
    case FactorKind::Laplace: {
      std::exponential_distribution<double> e(1.0);
      std::bernoulli_distribution coin(0.5);
      const double m = kLaplaceB * e(rng);
      return coin(rng) ? m : -m;
    }
    case FactorKind::TruncGaussian: {
      const auto& tc = trunc_constants();
      std::normal_distribution<double> nd(0.0, 1.0);
      for (;;) {
        const double z = nd(rng);
        if (std::abs(z) <= kTruncGaussianCut) return z / tc.sigma;
      }
    }
    case FactorKind::Uniform: {
      std::uniform_real_distribution<double> u(-kSqrt3, kSqrt3);
      return u(rng);
    }
    case FactorKind::Gaussian: {
      std::normal_distribution<double> nd(0.0, 1.0);
      return nd(rng);
    }
  }
  return 0.0;
}

// Derivative of the standardised potential is y * curvature for the
// quadratic kinds; returns the curvature.
double std_curvature(FactorKind k) {
  if (k == FactorKind::Gaussian) return 1.0;
  if (k == FactorKind::TruncGaussian) return trunc_constants().sigma * trunc_constants().sigma;
  return 0.0;
}

std::string join_label(const std::string& head, const std::vector<std::string>& parts) {
  std::string s = head + ":";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ",";
    s += parts[i];
  }
  return s;
}

std::string format_real(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "Gaussian";
    case Family::UniformBox: return "UniformBox";
    case Family::UniformBall: return "UniformBall";
    case Family::Product1D: return "Product1D";
    case Family::AffineImage: return "AffineImage";
  }
  return "?";
}

std::string_view to_string(FactorKind k) {
  switch (k) {
    case FactorKind::Exponential: return "exp";
    case FactorKind::Laplace: return "laplace";
    case FactorKind::TruncGaussian: return "tgauss";
    case FactorKind::Uniform: return "uniform";
    case FactorKind::Gaussian: return "gauss";
  }
  return "?";
}

FactorKind parse_factor_kind(std::string_view tag) {
  if (tag == "exp" || tag == "exponential") return FactorKind::Exponential;
  if (tag == "laplace") return FactorKind::Laplace;
  if (tag == "tgauss" || tag == "truncgauss") return FactorKind::TruncGaussian;
  if (tag == "uniform") return FactorKind::Uniform;
  if (tag == "gauss" || tag == "gaussian") return FactorKind::Gaussian;
  throw ConfigError("unknown 1D factor tag '" + std::string(tag) + "'");
}

double factor_potential(const Factor1D& f, double x) {
  return std_potential(f.kind, (x - f.shift) / f.scale) + std::log(f.scale);
}

double factor_min_potential(const Factor1D& f) {
  double y = 0.0;
  if (f.kind == FactorKind::Exponential) y = -1.0;
  return std_potential(f.kind, y) + std::log(f.scale);
}

std::pair<double, double> factor_support(const Factor1D& f) {
  const auto [lo, hi] = std_support(f.kind);
  return {f.scale * lo + f.shift, f.scale * hi + f.shift};
}

std::vector<double> factor_kinks(const Factor1D& f) {
  if (f.kind == FactorKind::Laplace) return {f.shift};
  return {};
}

double factor_entropy(const Factor1D& f) { return std_entropy(f.kind) + std::log(f.scale); }

double factor_cdf(const Factor1D& f, double x) { return std_cdf(f.kind, (x - f.shift) / f.scale); }

double factor_sample(const Factor1D& f, Rng& rng) {
  return f.scale * std_sample(f.kind, rng) + f.shift;
}

std::pair<double, double> factor_tail_slopes(const Factor1D& f) {
  switch (f.kind) {
    case FactorKind::Exponential: return {kInf, 1.0 / f.scale};
    case FactorKind::Laplace: return {1.0 / (kLaplaceB * f.scale), 1.0 / (kLaplaceB * f.scale)};
    default: return {kInf, kInf};
  }
}

double factor_tilt_mode(const Factor1D& f, double t, double theta) {
  // In standard coordinates maximise k*y - t*s^2*y^2/2 - psi_std(y) with
  // k = s*(theta - t*c), up to constants.
  const double s = f.scale;
  const double k = s * (theta - t * f.shift);
  const double q = t * s * s;
  const auto [lo, hi] = std_support(f.kind);
  double y = 0.0;
  switch (f.kind) {
    case FactorKind::Gaussian:
    case FactorKind::TruncGaussian: y = k / (q + std_curvature(f.kind)); break;
    case FactorKind::Uniform:
      if (q > 0) y = k / q;
      else y = k > 0 ? hi : (k < 0 ? lo : 0.0);
      break;
    case FactorKind::Exponential:
      if (q > 0) y = (k - 1.0) / q;
      else y = (k < 1.0) ? lo : hi;
      break;
    case FactorKind::Laplace: {
      const double slope = 1.0 / kLaplaceB;
      if (k > slope) y = q > 0 ? (k - slope) / q : hi;
      else if (k < -slope) y = q > 0 ? (k + slope) / q : lo;
      else y = 0.0;
      break;
    }
  }
  y = std::clamp(y, lo, hi);
  return s * y + f.shift;
}

MeasureSpec MeasureSpec::with_capabilities(const Capabilities& caps) const {
  MeasureSpec copy = *this;
  copy.caps_ = caps;
  return copy;
}

MeasureSpec make_gaussian(int n) {
  if (n < 1) throw std::invalid_argument("make_gaussian: dimension must be >= 1");
  MeasureSpec m;
  m.family_ = Family::Gaussian;
  m.dim_ = n;
  m.caps_ = {true, true, true};
  m.label_ = "gaussian:" + std::to_string(n);
  return m;
}

MeasureSpec make_uniform_box(const std::vector<double>& half_widths) {
  if (half_widths.empty()) throw std::invalid_argument("make_uniform_box: empty half-width list");
  MeasureSpec m;
  m.family_ = Family::UniformBox;
  m.dim_ = static_cast<int>(half_widths.size());
  m.caps_ = {true, true, true};
  std::vector<std::string> parts;
  for (double w : half_widths) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("make_uniform_box: half-widths must be positive, got " +
                                  format_real(w));
    }
    m.factors_.push_back({FactorKind::Uniform, w / kSqrt3, 0.0});
    parts.push_back(format_real(w));
  }
  m.label_ = join_label("box", parts);
  return m;
}

MeasureSpec make_cube(int n) {
  if (n < 1) throw std::invalid_argument("make_cube: dimension must be >= 1");
  MeasureSpec m = make_uniform_box(std::vector<double>(static_cast<std::size_t>(n), kSqrt3));
  m.label_ = "cube:" + std::to_string(n);
  return m;
}

MeasureSpec make_ball_marginal(int ambient, int k, double radius) {
  if (ambient < 1 || k < 1 || k > ambient) {
    throw std::invalid_argument("make_ball_marginal: need 1 <= k <= ambient");
  }
  if (!(radius > 0.0)) throw std::invalid_argument("make_ball_marginal: radius must be positive");
  MeasureSpec m;
  m.family_ = Family::UniformBall;
  m.dim_ = k;
  m.ambient_ = ambient;
  m.radius_ = radius;
  m.caps_ = {true, true, true};
  m.label_ = k == ambient ? "ball:" + std::to_string(ambient)
                          : "ballmarginal:" + std::to_string(ambient) + "->" + std::to_string(k);
  return m;
}

MeasureSpec make_uniform_ball(int n) {
  if (n < 1) throw std::invalid_argument("make_uniform_ball: dimension must be >= 1");
  return make_ball_marginal(n, n, std::sqrt(n + 2.0));
}

MeasureSpec make_product_factors(std::vector<Factor1D> factors) {
  if (factors.empty()) throw std::invalid_argument("make_product: no factors");
  MeasureSpec m;
  m.family_ = Family::Product1D;
  m.dim_ = static_cast<int>(factors.size());
  m.caps_ = {true, true, true};
  std::vector<std::string> parts;
  for (const auto& f : factors) {
    if (!(f.scale > 0.0)) throw std::invalid_argument("make_product: factor scale must be positive");
    std::string p(to_string(f.kind));
    if (f.scale != 1.0 || f.shift != 0.0) p += "@" + format_real(f.scale) + "+" + format_real(f.shift);
    parts.push_back(p);
  }
  m.factors_ = std::move(factors);
  m.label_ = join_label("product", parts);
  return m;
}

MeasureSpec make_product_1d(const std::vector<FactorKind>& kinds) {
  if (kinds.empty()) throw std::invalid_argument("make_product_1d: no factors");
  const bool all_gauss = std::all_of(kinds.begin(), kinds.end(),
                                     [](FactorKind k) { return k == FactorKind::Gaussian; });
  if (all_gauss) return make_gaussian(static_cast<int>(kinds.size()));
  std::vector<Factor1D> fs;
  for (FactorKind k : kinds) fs.push_back({k, 1.0, 0.0});
  return make_product_factors(std::move(fs));
}

MeasureSpec make_affine(const MeasureSpec& base, const Matrix& linear, const Vector& offset) {
  const int n = base.dim();
  if (linear.rows() != n || linear.cols() != n || offset.size() != n) {
    throw std::invalid_argument("make_affine: map dimensions do not match the base measure");
  }
  Matrix lin = linear;
  Vector off = offset;
  const MeasureSpec* root = &base;
  std::shared_ptr<const MeasureSpec> root_ptr;
  if (base.family() == Family::AffineImage) {
    lin = linear * base.linear();
    off = linear * base.offset() + offset;
    root_ptr = base.base_;
    root = root_ptr.get();
  }
  Eigen::FullPivLU<Matrix> lu(lin);
  if (!lu.isInvertible()) throw std::invalid_argument("make_affine: map is not invertible");

  MeasureSpec m;
  m.family_ = Family::AffineImage;
  m.dim_ = n;
  m.base_ = root_ptr ? root_ptr : std::make_shared<const MeasureSpec>(*root);
  m.linear_ = lin;
  m.offset_ = off;
  m.inverse_ = lu.inverse();
  m.log_abs_det_ = std::log(std::abs(lu.determinant()));
  Matrix offdiag = lin;
  offdiag.diagonal().setZero();
  m.diagonal_ = offdiag.isZero(0.0);

  const MeasureSpec& b = *m.base_;
  const bool scalar_map =
      m.diagonal_ && (lin.diagonal().array() == lin(0, 0)).all() && lin(0, 0) > 0;
  bool tilt = false;
  if (b.family() == Family::Gaussian) tilt = true;
  if ((b.family() == Family::UniformBox || b.family() == Family::Product1D) && m.diagonal_) tilt = true;
  if (b.family() == Family::UniformBall && scalar_map) tilt = true;
  m.caps_ = {b.capabilities().analytic_entropy, tilt && b.capabilities().analytic_tilt_moments,
             b.capabilities().exact_sampler};
  m.label_ = "affine(" + b.label() + ")";
  return m;
}

MeasureSpec parse_measure(std::string_view id) {
  const auto colon = id.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("measure id '" + std::string(id) + "' must look like family:args");
  }
  const std::string family(id.substr(0, colon));
  const std::string args(id.substr(colon + 1));
  std::vector<std::string> items;
  {
    std::string cur;
    for (char ch : args) {
      if (ch == ',') {
        items.push_back(cur);
        cur.clear();
      } else if (ch != ' ') {
        cur += ch;
      }
    }
    items.push_back(cur);
  }
  auto to_int = [&](const std::string& s) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty() || v < 1) {
      throw ConfigError("measure id '" + std::string(id) + "': bad dimension '" + s + "'");
    }
    return v;
  };
  if (family == "gaussian") return make_gaussian(to_int(args));
  if (family == "cube") return make_cube(to_int(args));
  if (family == "ball") return make_uniform_ball(to_int(args));
  if (family == "box") {
    std::vector<double> ws;
    for (const auto& s : items) {
      try {
        ws.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw ConfigError("measure id '" + std::string(id) + "': bad half-width '" + s + "'");
      }
    }
    try {
      return make_uniform_box(ws);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (family == "product") {
    std::vector<FactorKind> kinds;
    for (const auto& s : items) kinds.push_back(parse_factor_kind(s));
    return make_product_1d(kinds);
  }
  throw ConfigError("unknown measure family '" + family + "'");
}

std::optional<std::vector<Factor1D>> product_view(const MeasureSpec& spec) {
  switch (spec.family()) {
    case Family::UniformBox:
    case Family::Product1D: return spec.factors();
    case Family::AffineImage: {
      const MeasureSpec& b = spec.base();
      if (!spec.is_diagonal_map()) return std::nullopt;
      if (b.family() != Family::UniformBox && b.family() != Family::Product1D) return std::nullopt;
      std::vector<Factor1D> fs = b.factors();
      for (int i = 0; i < spec.dim(); ++i) {
        const double d = spec.linear()(i, i);
        if (!(d > 0)) return std::nullopt;  // reflections are not represented
        fs[i].shift = d * fs[i].shift + spec.offset()(i);
        fs[i].scale = d * fs[i].scale;
      }
      return fs;
    }
    default: return std::nullopt;
  }
}

Moments analytic_moments(const MeasureSpec& spec) {
  const int n = spec.dim();
  Moments m{Vector::Zero(n), Matrix::Identity(n, n)};
  switch (spec.family()) {
    case Family::Gaussian: break;
    case Family::UniformBox:
    case Family::Product1D:
      for (int i = 0; i < n; ++i) {
        m.mean(i) = spec.factors()[i].shift;
        m.cov(i, i) = spec.factors()[i].scale * spec.factors()[i].scale;
      }
      break;
    case Family::UniformBall: {
      const double r = spec.ball_radius();
      m.cov *= r * r / (spec.ball_ambient_dim() + 2.0);
      break;
    }
    case Family::AffineImage: {
      const Moments b = analytic_moments(spec.base());
      m.mean = spec.linear() * b.mean + spec.offset();
      m.cov = spec.linear() * b.cov * spec.linear().transpose();
      break;
    }
  }
  return m;
}

Moments sample_moments(const Matrix& samples) {
  const auto count = samples.cols();
  if (count < 2) throw std::invalid_argument("sample_moments: need at least two samples");
  Moments m;
  m.mean = samples.rowwise().mean();
  const Matrix centred = samples.colwise() - m.mean;
  m.cov = centred * centred.transpose() / static_cast<double>(count - 1);
  return m;
}

AffineMap isotropizing_map(const Moments& moments) {
  const Matrix& cov = moments.cov;
  const auto n = cov.rows();
  Matrix offdiag = cov;
  offdiag.diagonal().setZero();
  Matrix s(n, n);
  double lmin = 0.0;
  double lmax = 0.0;
  if (offdiag.isZero(0.0)) {
    lmin = cov.diagonal().minCoeff();
    lmax = cov.diagonal().maxCoeff();
    if (lmin > 1e-12 * std::max(1.0, lmax)) {
      s = cov.diagonal().cwiseSqrt().cwiseInverse().asDiagonal();
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
    lmin = es.eigenvalues()(0);
    lmax = es.eigenvalues()(n - 1);
    if (lmin > 1e-12 * std::max(1.0, lmax)) {
      s = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose();
    }
  }
  if (!(lmin > 1e-12 * std::max(1.0, lmax))) {
    throw std::invalid_argument("isotropize: covariance is singular (smallest eigenvalue " +
                                format_real(lmin) + ")");
  }
  return AffineMap{s, -s * moments.mean};
}

MeasureSpec isotropize(const MeasureSpec& spec, const Moments& moments) {
  const AffineMap map = isotropizing_map(moments);
  return make_affine(spec, map.linear, map.offset);
}

MeasureSpec isotropize(const MeasureSpec& spec) { return isotropize(spec, analytic_moments(spec)); }

bool is_isotropic(const MeasureSpec& spec, double tol) {
  const Moments m = analytic_moments(spec);
  return max_abs(m.mean) <= tol &&
         max_abs(m.cov - Matrix::Identity(spec.dim(), spec.dim())) <= tol;
}

double log_unit_ball_volume(int d) {
  return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0);
}

bool in_support(const MeasureSpec& spec, const Vector& x) {
  return std::isfinite(potential(spec, x));
}

double potential(const MeasureSpec& spec, const Vector& x) {
  if (x.size() != spec.dim()) throw std::invalid_argument("potential: dimension mismatch");
  switch (spec.family()) {
    case Family::Gaussian:
      return 0.5 * x.squaredNorm() + 0.5 * spec.dim() * std::log(2.0 * std::numbers::pi);
    case Family::UniformBox:
    case Family::Product1D: {
      double s = 0.0;
      for (int i = 0; i < spec.dim(); ++i) s += factor_potential(spec.factors()[i], x(i));
      return s;
    }
    case Family::UniformBall: {
      const int n = spec.ball_ambient_dim();
      const int k = spec.dim();
      const double r = spec.ball_radius();
      const double r2 = x.squaredNorm();
      if (r2 > r * r * (1.0 + kBand)) return kInf;
      const double log_norm = log_unit_ball_volume(n) + n * std::log(r);
      if (k == n) return log_norm;
      const double gap = std::max(0.0, r * r - r2);
      if (gap <= 0.0) return kInf;
      return log_norm - log_unit_ball_volume(n - k) - 0.5 * (n - k) * std::log(gap);
    }
    case Family::AffineImage:
      return potential(spec.base(), spec.inverse() * (x - spec.offset())) + spec.log_abs_det();
  }
  return kInf;
}

double min_potential(const MeasureSpec& spec) {
  switch (spec.family()) {
    case Family::Gaussian: return 0.5 * spec.dim() * std::log(2.0 * std::numbers::pi);
    case Family::UniformBox:
    case Family::Product1D: {
      double s = 0.0;
      for (const auto& f : spec.factors()) s += factor_min_potential(f);
      return s;
    }
    case Family::UniformBall: return potential(spec, Vector::Zero(spec.dim()));
    case Family::AffineImage: return min_potential(spec.base()) + spec.log_abs_det();
  }
  return 0.0;
}

Vector sample_point(const MeasureSpec& spec, Rng& rng) {
  if (!spec.capabilities().exact_sampler) {
    throw std::invalid_argument("sample: measure '" + spec.label() + "' has no exact sampler");
  }
  const int n = spec.dim();
  Vector x(n);
  switch (spec.family()) {
    case Family::Gaussian: {
      std::normal_distribution<double> nd(0.0, 1.0);
      for (int i = 0; i < n; ++i) x(i) = nd(rng);
      break;
    }
    case Family::UniformBox:
    case Family::Product1D:
      for (int i = 0; i < n; ++i) x(i) = factor_sample(spec.factors()[i], rng);
      break;
    case Family::UniformBall: {
      const int d = spec.ball_ambient_dim();
      std::normal_distribution<double> nd(0.0, 1.0);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Vector z(d);
      for (int i = 0; i < d; ++i) z(i) = nd(rng);
      const double radius = spec.ball_radius() * std::pow(u(rng), 1.0 / d);
      z *= radius / z.norm();
      x = z.head(n);
      break;
    }
    case Family::AffineImage:
      if (!spec.base().capabilities().exact_sampler) {
        throw std::invalid_argument("sample: affine image of non-samplable base '" +
                                    spec.base().label() + "'");
      }
      x = spec.linear() * sample_point(spec.base(), rng) + spec.offset();
      break;
  }
  return x;
}

Matrix sample(const MeasureSpec& spec, Rng& rng, int count) {
  if (count < 0) throw std::invalid_argument("sample: negative count");
  Matrix out(spec.dim(), count);
  for (int j = 0; j < count; ++j) out.col(j) = sample_point(spec, rng);
  return out;
}

SubspaceBasis::SubspaceBasis(Matrix vectors) : vectors_(std::move(vectors)) {
  if (vectors_.cols() < 1 || vectors_.cols() > vectors_.rows()) {
    throw std::invalid_argument("SubspaceBasis: need 1 <= k <= n columns");
  }
  const Matrix gram = vectors_.transpose() * vectors_;
  const double err = max_abs(gram - Matrix::Identity(gram.rows(), gram.cols()));
  if (err > 1e-12) {
    throw std::invalid_argument("SubspaceBasis: columns are not orthonormal (Gram error " +
                                format_real(err) + ")");
  }
}

SubspaceBasis SubspaceBasis::coordinates(int ambient, const std::vector<int>& indices) {
  Matrix v = Matrix::Zero(ambient, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] < 0 || indices[j] >= ambient) {
      throw std::invalid_argument("SubspaceBasis::coordinates: index out of range");
    }
    v(indices[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return SubspaceBasis(v);
}

std::optional<std::vector<int>> SubspaceBasis::coordinate_indices() const {
  std::vector<int> idx;
  for (Eigen::Index j = 0; j < vectors_.cols(); ++j) {
    Eigen::Index row = 0;
    const double big = vectors_.col(j).cwiseAbs().maxCoeff(&row);
    if (big != 1.0 || vectors_(row, j) != 1.0) return std::nullopt;
    if (vectors_.col(j).cwiseAbs().sum() != 1.0) return std::nullopt;
    idx.push_back(static_cast<int>(row));
  }
  return idx;
}

}  // namespace sloclab
