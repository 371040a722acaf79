#include <doctest.h>

#include "sloclab/errors.hpp"
#include "sloclab/infotheory.hpp"
#include "sloclab/isoconst.hpp"
#include "sloclab/measures.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace sloclab;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt3 = std::sqrt(3.0);

// Mean and covariance of the columns with per-entry standard errors.
struct Empirical {
  Vector mean, mean_se;
  Matrix cov, cov_se;
};

Empirical empirical(const Matrix& xs) {
  const auto n = static_cast<double>(xs.cols());
  const int d = static_cast<int>(xs.rows());
  Empirical e;
  e.mean = xs.rowwise().mean();
  const Matrix c = xs.colwise() - e.mean;
  e.cov = c * c.transpose() / n;
  e.mean_se = (c.array().square().rowwise().sum() / (n * (n - 1.0))).sqrt();
  e.cov_se = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Eigen::ArrayXd prod = c.row(i).array() * c.row(j).array();
      const double var = (prod - prod.mean()).square().sum() / (n - 1.0);
      e.cov_se(i, j) = std::sqrt(var / n);
    }
  }
  return e;
}

void check_isotropic_samples(const MeasureSpec& spec, std::uint64_t seed, int count, double sigmas) {
  Rng rng = make_stream(seed, 0);
  const Empirical e = empirical(sample(spec, rng, count));
  for (int i = 0; i < spec.dim(); ++i) {
    CHECK(std::abs(e.mean(i)) <= sigmas * e.mean_se(i));
    for (int j = 0; j < spec.dim(); ++j) {
      const double target = i == j ? 1.0 : 0.0;
      CHECK(std::abs(e.cov(i, j) - target) <= sigmas * e.cov_se(i, j));
    }
  }
}

}  // namespace

TEST_SUITE("measures") {
  TEST_CASE("gaussian") {
    CHECK(differential_entropy(make_gaussian(1)).value ==
          doctest::Approx(0.5 * std::log(2.0 * kPi * std::numbers::e)).epsilon(1e-14));
    CHECK(differential_entropy(make_gaussian(1)).value == doctest::Approx(1.41894).epsilon(1e-5));
    const Moments m = analytic_moments(make_gaussian(3));
    CHECK(m.cov == Matrix::Identity(3, 3));
    CHECK(m.mean == Vector::Zero(3));
    const auto caps = make_gaussian(2).capabilities();
    CHECK(caps.analytic_entropy);
    CHECK(caps.analytic_tilt_moments);
    CHECK(caps.exact_sampler);
    CHECK_THROWS_AS(make_gaussian(0), std::invalid_argument);
    check_isotropic_samples(make_gaussian(2), 11, 100000, 3.0);
    CHECK(potential(make_gaussian(1), Vector::Zero(1)) ==
          doctest::Approx(0.5 * std::log(2.0 * kPi)).epsilon(1e-14));
  }

  TEST_CASE("uniform box and cube") {
    const MeasureSpec cube = make_cube(5);
    CHECK(max_abs(analytic_moments(cube).cov - Matrix::Identity(5, 5)) < 1e-14);
    CHECK(differential_entropy(make_cube(1)).value ==
          doctest::Approx(std::log(2.0 * kSqrt3)).epsilon(1e-14));
    CHECK(differential_entropy(make_cube(1)).value == doctest::Approx(1.24245).epsilon(1e-5));
    const MeasureSpec unit = make_uniform_box({1.0});
    CHECK(std::exp(-potential(unit, Vector::Constant(1, 0.3))) == doctest::Approx(0.5));
    CHECK(potential(make_cube(2), Vector::Zero(2)) ==
          doctest::Approx(2.0 * std::log(2.0 * kSqrt3)).epsilon(1e-14));
    CHECK(potential(make_cube(2), Vector::Zero(2)) == doctest::Approx(2.48491).epsilon(1e-5));
    Vector out(2);
    out << 0.0, 1.8;
    CHECK(std::isinf(potential(make_cube(2), out)));
    CHECK_THROWS_AS(make_uniform_box({1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_uniform_box({-1.0}), std::invalid_argument);
    check_isotropic_samples(make_cube(8), 12, 100000, 3.0);
  }

  TEST_CASE("boundary band counts as inside") {
    Vector x(1);
    x << kSqrt3 * (1.0 + 5e-15);
    CHECK(in_support(make_cube(1), x));
    x << kSqrt3 * (1.0 + 1e-12);
    CHECK_FALSE(in_support(make_cube(1), x));
  }

  TEST_CASE("uniform ball") {
    const MeasureSpec b1 = make_uniform_ball(1);
    const MeasureSpec c1 = make_cube(1);
    CHECK(b1.ball_radius() == doctest::Approx(kSqrt3));
    for (double x : {-2.0, -1.7, 0.0, 0.4, 1.73, 1.75}) {
      const Vector v = Vector::Constant(1, x);
      const double pb = potential(b1, v), pc = potential(c1, v);
      if (std::isinf(pc)) {
        CHECK(std::isinf(pb));
      } else {
        CHECK(pb == doctest::Approx(pc));
      }
    }
    CHECK(make_uniform_ball(2).ball_radius() == doctest::Approx(2.0));
    check_isotropic_samples(make_uniform_ball(2), 13, 100000, 3.0);
    const double vol3 = 4.0 / 3.0 * kPi;
    CHECK(differential_entropy(make_uniform_ball(3)).value ==
          doctest::Approx(std::log(vol3 * std::pow(std::sqrt(5.0), 3))).epsilon(1e-13));
    CHECK(max_abs(analytic_moments(make_uniform_ball(4)).cov - Matrix::Identity(4, 4)) < 1e-13);
    CHECK_THROWS_AS(make_uniform_ball(0), std::invalid_argument);
  }

  TEST_CASE("one-dimensional factors") {
    CHECK(differential_entropy(parse_measure("product:exp")).value ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(differential_entropy(parse_measure("product:laplace")).value ==
          doctest::Approx(1.0 + std::log(std::sqrt(2.0))).epsilon(1e-14));
    CHECK(differential_entropy(parse_measure("product:laplace")).value ==
          doctest::Approx(1.34657).epsilon(1e-5));
    // Centered exponential: density e^{-(x+1)} on [-1, inf).
    const MeasureSpec e = parse_measure("product:exp");
    CHECK(potential(e, Vector::Constant(1, 0.5)) == doctest::Approx(1.5));
    CHECK(std::isinf(potential(e, Vector::Constant(1, -1.1))));
    for (const char* id : {"product:exp", "product:laplace", "product:tgauss", "product:uniform"}) {
      CAPTURE(id);
      const Moments m = analytic_moments(parse_measure(id));
      CHECK(std::abs(m.mean(0)) < 1e-12);
      CHECK(m.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(parse_measure("product:cauchy"), ConfigError);
    CHECK_THROWS_AS(parse_factor_kind("weibull"), ConfigError);
  }

  TEST_CASE("gaussian product equals gaussian in law") {
    const MeasureSpec g = make_product_factors({Factor1D{}, Factor1D{}});
    const MeasureSpec ref = make_gaussian(2);
    Vector x(2);
    x << 0.3, -1.2;
    CHECK(potential(g, x) == doctest::Approx(potential(ref, x)).epsilon(1e-14));
    CHECK(differential_entropy(g).value == doctest::Approx(differential_entropy(ref).value));
  }

  TEST_CASE("isotropize") {
    const MeasureSpec cube = make_cube(3);
    const AffineMap id = isotropizing_map(analytic_moments(cube));
    CHECK(max_abs(id.linear - Matrix::Identity(3, 3)) < 1e-14);
    CHECK(id.offset.norm() < 1e-14);

    const AffineMap box = isotropizing_map(analytic_moments(make_uniform_box({1.0, 2.0})));
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = std::sqrt(12.0) / 2.0;
    expect(1, 1) = std::sqrt(12.0) / 4.0;
    CHECK(max_abs(box.linear - expect) < 1e-13);

    Moments g4{Vector::Zero(2), 4.0 * Matrix::Identity(2, 2)};
    CHECK(max_abs(isotropizing_map(g4).linear - 0.5 * Matrix::Identity(2, 2)) < 1e-14);

    const MeasureSpec iso = isotropize(make_uniform_box({1.0, 2.0}));
    CHECK(is_isotropic(iso));
    const MeasureSpec twice = isotropize(iso);
    CHECK(max_abs(twice.linear() - iso.linear()) <= 1e-10);
    CHECK(max_abs(twice.offset() - iso.offset()) <= 1e-10);

    Moments singular{Vector::Zero(2), Matrix::Zero(2, 2)};
    singular.cov(0, 0) = 1.0;
    CHECK_THROWS_WITH_AS(isotropizing_map(singular), doctest::Contains("smallest eigenvalue"),
                         std::invalid_argument);
  }

  TEST_CASE("isotropized measures sample with mean 0 and cov Id") {
    check_isotropic_samples(isotropize(parse_measure("box:1,2")), 14, 50000, 4.0);
    check_isotropic_samples(isotropize(parse_measure("product:exp,laplace")), 15, 50000, 4.0);
  }

  TEST_CASE("affine entropy shift") {
    Matrix a(2, 2);
    a << 2.0, 0.5, -0.3, 1.5;
    Vector b(2);
    b << 1.0, -2.0;
    const MeasureSpec base = make_cube(2);
    const MeasureSpec img = make_affine(base, a, b);
    CHECK(img.log_abs_det() == doctest::Approx(std::log(std::abs(a.determinant()))));
    CHECK(differential_entropy(img).value ==
          doctest::Approx(differential_entropy(base).value + std::log(std::abs(a.determinant()))));
    // Affine invariance of L.
    const double l_base = isotropic_constant(base).L;
    const double l_img = isotropic_constant(isotropize(img)).L;
    CHECK(l_img == doctest::Approx(l_base).epsilon(1e-12));
  }

  TEST_CASE("midpoint convexity of potentials") {
    for (const char* id : {"gaussian:3", "cube:3", "ball:3", "box:1,2", "product:exp,laplace,tgauss,uniform"}) {
      CAPTURE(id);
      const MeasureSpec spec = isotropize(parse_measure(id));
      Rng rng = make_stream(99, 1);
      const Matrix xs = sample(spec, rng, 10000);
      const Matrix ys = sample(spec, rng, 10000);
      int violations = 0;
      for (int i = 0; i < xs.cols(); ++i) {
        const double mid = potential(spec, 0.5 * (xs.col(i) + ys.col(i)));
        const double avg = 0.5 * (potential(spec, xs.col(i)) + potential(spec, ys.col(i)));
        if (mid > avg + 1e-9) ++violations;
      }
      CHECK(violations == 0);
    }
  }

  TEST_CASE("sampling") {
    Rng rng = make_stream(1, 2);
    CHECK(sample(make_cube(3), rng, 0).cols() == 0);
    Rng r1 = make_stream(5, 3), r2 = make_stream(5, 3);
    CHECK(sample(make_uniform_ball(3), r1, 10) == sample(make_uniform_ball(3), r2, 10));
    Capabilities none;
    const MeasureSpec blind = make_cube(2).with_capabilities(none);
    CHECK_THROWS_AS(sample(blind, rng, 3), std::invalid_argument);
    CHECK_THROWS_AS(sample(make_affine(blind, Matrix::Identity(2, 2), Vector::Zero(2)), rng, 3),
                    std::invalid_argument);
  }

  TEST_CASE("catalog ids") {
    CHECK(parse_measure("gaussian:8").dim() == 8);
    CHECK(parse_measure("cube:8").family() == Family::UniformBox);
    CHECK(parse_measure("ball:4").family() == Family::UniformBall);
    CHECK(parse_measure("product:exp,laplace,uniform").dim() == 3);
    CHECK_THROWS_AS(parse_measure("simplex:3"), ConfigError);
    CHECK_THROWS_AS(parse_measure("cube"), ConfigError);
    CHECK_THROWS_AS(parse_measure("cube:x"), ConfigError);
  }

  TEST_CASE("subspace basis") {
    Matrix v(3, 1);
    v << 1.0, 1.0, 0.0;
    CHECK_THROWS_AS(SubspaceBasis{v}, std::invalid_argument);
    SubspaceBasis e{v / std::sqrt(2.0)};
    CHECK(max_abs(e.projector() * e.projector() - e.projector()) < 1e-15);
    CHECK_FALSE(e.coordinate_indices());
    const auto c = SubspaceBasis::coordinates(4, {0, 2});
    REQUIRE(c.coordinate_indices());
    CHECK(*c.coordinate_indices() == std::vector<int>{0, 2});
  }
}
