#pragma once

// Catalog of log-concave probability measures: potentials, exact samplers,
// analytic moments and isotropization.

#include "sloclab/linalg.hpp"
#include "sloclab/rng.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sloclab {

enum class Family { Gaussian, UniformBox, UniformBall, Product1D, AffineImage };

std::string_view to_string(Family f);

// The closed one-dimensional catalog.  Each kind is standardised to mean 0
// and variance 1 before the factor's own scale/shift is applied.
enum class FactorKind { Exponential, Laplace, TruncGaussian, Uniform, Gaussian };

std::string_view to_string(FactorKind k);
FactorKind parse_factor_kind(std::string_view tag);

// Truncation point of the base N(0,1) for the TruncGaussian kind.
inline constexpr double kTruncGaussianCut = 1.0;

// x = scale * y + shift with y drawn from the standardised kind.
struct Factor1D {
  FactorKind kind = FactorKind::Gaussian;
  double scale = 1.0;
  double shift = 0.0;
};

double factor_potential(const Factor1D& f, double x);
double factor_min_potential(const Factor1D& f);
std::pair<double, double> factor_support(const Factor1D& f);
std::vector<double> factor_kinks(const Factor1D& f);
double factor_entropy(const Factor1D& f);
double factor_cdf(const Factor1D& f, double x);
double factor_sample(const Factor1D& f, Rng& rng);
// Asymptotic slopes of the potential at -inf and +inf (inf when the support
// is bounded on that side or the potential is superlinear).
std::pair<double, double> factor_tail_slopes(const Factor1D& f);
// Exact maximiser of theta*x - t*x^2/2 - potential(x) on the support.
double factor_tilt_mode(const Factor1D& f, double t, double theta);

struct Capabilities {
  bool analytic_entropy = false;
  bool analytic_tilt_moments = false;
  bool exact_sampler = false;
};

struct AffineMap {
  Matrix linear;
  Vector offset;
};

class MeasureSpec {
 public:
  Family family() const { return family_; }
  int dim() const { return dim_; }
  const Capabilities& capabilities() const { return caps_; }
  const std::string& label() const { return label_; }

  // UniformBox / Product1D.
  const std::vector<Factor1D>& factors() const { return factors_; }

  // UniformBall: a k-dimensional marginal of the uniform measure on the
  // n-ball of the given radius (k == n for the ball itself).
  double ball_radius() const { return radius_; }
  int ball_ambient_dim() const { return ambient_; }

  // AffineImage: x = linear * y + offset with y drawn from base().
  const MeasureSpec& base() const { return *base_; }
  const Matrix& linear() const { return linear_; }
  const Vector& offset() const { return offset_; }
  const Matrix& inverse() const { return inverse_; }
  double log_abs_det() const { return log_abs_det_; }
  bool is_diagonal_map() const { return diagonal_; }

  // Copy with overridden capability flags (used to exercise guarded paths).
  MeasureSpec with_capabilities(const Capabilities& caps) const;

  friend MeasureSpec make_gaussian(int n);
  friend MeasureSpec make_uniform_box(const std::vector<double>& half_widths);
  friend MeasureSpec make_cube(int n);
  friend MeasureSpec make_uniform_ball(int n);
  friend MeasureSpec make_ball_marginal(int ambient, int k, double radius);
  friend MeasureSpec make_product_1d(const std::vector<FactorKind>& kinds);
  friend MeasureSpec make_product_factors(std::vector<Factor1D> factors);
  friend MeasureSpec make_affine(const MeasureSpec& base, const Matrix& linear,
                                 const Vector& offset);

 private:
  MeasureSpec() = default;

  Family family_ = Family::Gaussian;
  int dim_ = 0;
  Capabilities caps_;
  std::string label_;
  std::vector<Factor1D> factors_;
  double radius_ = 0.0;
  int ambient_ = 0;
  std::shared_ptr<const MeasureSpec> base_;
  Matrix linear_;
  Vector offset_;
  Matrix inverse_;
  double log_abs_det_ = 0.0;
  bool diagonal_ = false;
};

MeasureSpec make_gaussian(int n);
MeasureSpec make_uniform_box(const std::vector<double>& half_widths);
// Isotropic cube [-sqrt3, sqrt3]^n.
MeasureSpec make_cube(int n);
// Uniform on the ball of radius sqrt(n + 2), so that cov = Id.
MeasureSpec make_uniform_ball(int n);
MeasureSpec make_ball_marginal(int ambient, int k, double radius);
MeasureSpec make_product_1d(const std::vector<FactorKind>& kinds);
MeasureSpec make_product_factors(std::vector<Factor1D> factors);
MeasureSpec make_affine(const MeasureSpec& base, const Matrix& linear,
                        const Vector& offset);

// Catalog ids: "gaussian:8", "cube:8", "ball:4", "box:1,2",
// "product:exp,laplace,tgauss,uniform".
MeasureSpec parse_measure(std::string_view id);

// Factor list when the measure is a product of 1D laws in its own
// coordinates (box, product, diagonal affine images of those).
std::optional<std::vector<Factor1D>> product_view(const MeasureSpec& spec);

struct Moments {
  Vector mean;
  Matrix cov;
};

Moments analytic_moments(const MeasureSpec& spec);
Moments sample_moments(const Matrix& samples);

// Normalising map x -> cov^{-1/2} (x - mean).  Throws std::invalid_argument
// when the covariance is not positive definite.
AffineMap isotropizing_map(const Moments& moments);
MeasureSpec isotropize(const MeasureSpec& spec, const Moments& moments);
MeasureSpec isotropize(const MeasureSpec& spec);
bool is_isotropic(const MeasureSpec& spec, double tol = 1e-12);

// psi(x) = -log density(x); +inf outside the support.
double potential(const MeasureSpec& spec, const Vector& x);
// inf of psi over the support.
double min_potential(const MeasureSpec& spec);
bool in_support(const MeasureSpec& spec, const Vector& x);

// `count` i.i.d. draws as the columns of a dim x count matrix.
Matrix sample(const MeasureSpec& spec, Rng& rng, int count);
Vector sample_point(const MeasureSpec& spec, Rng& rng);

// log Vol_d of the unit d-ball.
double log_unit_ball_volume(int d);

class SubspaceBasis {
 public:
  // Throws std::invalid_argument unless columns are orthonormal to 1e-12.
  explicit SubspaceBasis(Matrix vectors);
  static SubspaceBasis coordinates(int ambient, const std::vector<int>& indices);

  int ambient_dim() const { return static_cast<int>(vectors_.rows()); }
  int dim() const { return static_cast<int>(vectors_.cols()); }
  const Matrix& vectors() const { return vectors_; }
  Matrix projector() const { return vectors_ * vectors_.transpose(); }
  // Indices when every column is a standard basis vector.
  std::optional<std::vector<int>> coordinate_indices() const;

 private:
  Matrix vectors_;
};

}  // namespace sloclab
