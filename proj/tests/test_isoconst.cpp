#include <doctest.h>

#include "sloclab/isoconst.hpp"

#include <cmath>
#include <numbers>

using namespace sloclab;

TEST_SUITE("isoconst") {
  TEST_CASE("closed-form isotropic constants") {
    const double lg = 1.0 / std::sqrt(2.0 * std::numbers::pi * std::numbers::e);
    CHECK(gaussian_isotropic_constant() == doctest::Approx(0.24197).epsilon(1e-5));
    for (int n : {1, 2, 4, 8}) {
      CHECK(isotropic_constant(make_gaussian(n)).L == doctest::Approx(lg).epsilon(1e-13));
      CHECK(isotropic_constant(make_cube(n)).L ==
            doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-13));
    }
    CHECK(isotropic_constant(parse_measure("product:exp")).L ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
    // Centered but not isotropic: L uses det cov and matches the cube.
    CHECK(isotropic_constant(make_uniform_box({1.0, 2.0})).L ==
          doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-13));
    CHECK_THROWS_AS(
        isotropic_constant(make_affine(make_cube(1), Matrix::Identity(1, 1), Vector::Ones(1))),
        std::invalid_argument);
  }

  TEST_CASE("sandwich") {
    // Cube: f(0)^(1/n) = 1 / (2 sqrt3) = L, the lower end is attained.
    const auto c = isotropic_constant(make_cube(3));
    CHECK(c.sandwich_middle == doctest::Approx(c.L).epsilon(1e-13));
    CHECK(c.sandwich_holds);
    // Exponential: f(0) = 1 / e = L as well.
    const auto e = isotropic_constant(parse_measure("product:exp"));
    CHECK(e.sandwich_middle == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
    CHECK(e.sandwich_holds);
    // Gaussian: f(0)^(1/n) = (2 pi)^(-1/2) = sqrt(e) L.
    const auto g = isotropic_constant(make_gaussian(2));
    CHECK(g.sandwich_middle == doctest::Approx(std::sqrt(std::numbers::e) * g.L).epsilon(1e-13));
    CHECK(g.sandwich_holds);
  }

  TEST_CASE("marginals") {
    const Marginal c = marginal(make_cube(4), SubspaceBasis::coordinates(4, {0, 1}));
    REQUIRE(c.spec);
    CHECK(c.spec->dim() == 2);
    Vector x(2);
    x << 0.2, -1.0;
    CHECK(potential(*c.spec, x) == doctest::Approx(potential(make_cube(2), x)));

    Matrix v(3, 1);
    v << 1.0, 2.0, 2.0;
    const SubspaceBasis e{v / 3.0};
    const Marginal g = marginal(make_gaussian(3), e);
    REQUIRE(g.spec);
    CHECK(g.spec->family() == Family::Gaussian);
    CHECK(g.spec->dim() == 1);

    const Marginal b = marginal(make_uniform_ball(3), e);
    REQUIRE(b.spec);
    CHECK(analytic_moments(*b.spec).cov(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    Rng rng = make_stream(2, 0);
    const Matrix proj = v.transpose() / 3.0 * sample(make_uniform_ball(3), rng, 40000);
    const double m = proj.mean();
    const double var = (proj.array() - m).square().mean();
    const double fourth = (proj.array() - m).pow(4).mean();
    CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt((fourth - var * var) / 40000.0));

    // A non-coordinate subspace of a cube has no exact law here.
    const Marginal s = marginal(make_cube(3), e, 1000, 3);
    CHECK_FALSE(s.spec);
    CHECK(s.samples.cols() == 1000);
  }

  TEST_CASE("projection lemma") {
    const auto coord = SubspaceBasis::coordinates(3, {0, 2});
    const LemmaReport p = check_projection_lemma(parse_measure("product:exp,laplace,uniform"), coord,
                                                 1.0, 1024, 1, 4.0, true);
    CHECK(p.verdict == Verdict::Pass);
    Matrix v(3, 1);
    v << 1.0, 2.0, 2.0;
    const SubspaceBasis e{v / 3.0};
    const LemmaReport g = check_projection_lemma(make_gaussian(3), e, 1.0, 64, 2, 4.0, true);
    CHECK(g.verdict == Verdict::Pass);
    CHECK(std::abs(g.details.front().statistic) < 1e-12);
    CHECK_THROWS_AS(check_projection_lemma(make_cube(3), e, 1.0, 64, 3), std::invalid_argument);
  }

  TEST_CASE("l bounds over the catalog") {
    const auto rows = l_bounds_sweep(default_catalog());
    CHECK(rows.size() == default_catalog().size());
    double best = 0.0;
    std::string best_id;
    for (const auto& r : rows) {
      CAPTURE(r.id);
      CHECK(r.above_gaussian);
      CHECK(r.sandwich_holds);
      if (r.id.rfind("cube:", 0) == 0) CHECK(r.L == doctest::Approx(0.28868).epsilon(1e-5));
      if (r.L > best) {
        best = r.L;
        best_id = r.id;
      }
    }
    CHECK(best_id == "product:exp");
    CHECK(check_l_bounds(rows).verdict == Verdict::Pass);
  }
}
