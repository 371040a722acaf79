#include <doctest.h>

#include "sloclab/localization.hpp"

#include <cmath>

using namespace sloclab;

namespace {

std::shared_ptr<const TimeGrid> share(TimeGrid g) {
  return std::make_shared<const TimeGrid>(std::move(g));
}

std::vector<LocalizationPath> ensemble(const MeasureSpec& spec, const TimeGrid& g, int n,
                                       std::uint64_t seed, Driver driver = Driver::Direct,
                                       int workers = 1) {
  EnsembleOptions opt;
  opt.n_paths = n;
  opt.seed = seed;
  opt.driver = driver;
  opt.workers = workers;
  return simulate_ensemble(spec, share(g), opt);
}

// Sample variance of coordinate 0 of theta at grid index k, with its stderr.
Estimate theta_variance(const std::vector<LocalizationPath>& paths, std::size_t k) {
  const double n = static_cast<double>(paths.size());
  double m = 0.0;
  for (const auto& p : paths) m += p.theta[k](0);
  m /= n;
  std::vector<double> sq;
  for (const auto& p : paths) sq.push_back((p.theta[k](0) - m) * (p.theta[k](0) - m));
  return mean_estimate(sq);
}

}  // namespace

TEST_SUITE("localization") {
  TEST_CASE("grids") {
    const TimeGrid g = default_grid();
    CHECK(g.size() == 41);
    CHECK(g.points[0] == 0.0);
    CHECK(g.points[1] == doctest::Approx(0.01));
    CHECK(g.points.back() == doctest::Approx(100.0));
    CHECK_NOTHROW(validate_grid(g));
    for (std::size_t k = 2; k < g.size(); ++k) CHECK(g.points[k] / g.points[k - 1] <= 1.5);

    const TimeGrid d = dyadic_grid(4, -7, 7);
    CHECK(d.find(0.25));
    CHECK(d.find(1.0));
    CHECK(d.find(4.0));
    CHECK(d.points[*d.find(1.0)] == 1.0);

    TimeGrid bad;
    bad.points = {0.0, 1.0, 1.0};
    CHECK_THROWS_AS(validate_grid(bad), std::invalid_argument);
    bad.points = {0.0, 0.1, 1.0};
    CHECK_THROWS_AS(validate_grid(bad), std::invalid_argument);  // ratio 10 on a geometric grid
    bad.kind = GridKind::Uniform;
    CHECK_NOTHROW(validate_grid(bad));
    CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 10), std::invalid_argument);
  }

  TEST_CASE("direct driver structure") {
    const auto grid = share(default_grid());
    Rng rng = make_stream(1, 0);
    const LocalizationPath p = drive_direct(make_cube(2), grid, rng);
    CHECK(p.theta[0] == Vector::Zero(2));
    CHECK(max_abs(p.tilt[0].A - Matrix::Identity(2, 2)) < 1e-10);
    for (std::size_t k = 0; k < grid->size(); ++k) {
      CHECK(p.theta[k] == grid->points[k] * p.x_star + p.brownian[k]);
    }
    // Large t: A_t <= Id / t on the path.
    const std::size_t last = grid->size() - 1;
    CHECK(lambda_max(p.tilt[last].A) <= 0.01 * (1.0 + 1e-6));
  }

  TEST_CASE("gaussian theta variance is t^2 + t") {
    const TimeGrid g = geometric_grid(0.1, 10.0, 14);
    const auto paths = ensemble(make_gaussian(1), g, 4096, 5);
    for (std::size_t k = 1; k < g.size(); ++k) {
      const double t = g.points[k];
      const Estimate v = theta_variance(paths, k);
      CAPTURE(t);
      CHECK(std::abs(v.value - (t * t + t)) <= 4.0 * v.stderr);
    }
  }

  TEST_CASE("euler scheme on the gaussian follows its exact recursion") {
    // For the Gaussian the drift is theta / (1 + t); the Euler variance obeys
    // v' = (1 + h / (1 + t))^2 v + h, which tends to t^2 + t as h -> 0.
    const int steps = 64;
    const TimeGrid g = uniform_grid(1.0, steps);
    const auto paths = ensemble(make_gaussian(1), g, 8192, 6, Driver::SDE);
    double v = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double t = g.points[static_cast<std::size_t>(k)];
      const double h = g.points[static_cast<std::size_t>(k) + 1] - t;
      v = (1.0 + h / (1.0 + t)) * (1.0 + h / (1.0 + t)) * v + h;
    }
    const Estimate e = theta_variance(paths, g.size() - 1);
    CHECK(std::abs(e.value - v) <= 4.0 * e.stderr);
    CHECK(std::abs(v - 2.0) < 0.05);
    double fine = 0.0;
    const int n_fine = 4096;
    for (int k = 0; k < n_fine; ++k) {
      const double t = static_cast<double>(k) / n_fine, h = 1.0 / n_fine;
      fine = (1.0 + h / (1.0 + t)) * (1.0 + h / (1.0 + t)) * fine + h;
    }
    CHECK(std::abs(fine - 2.0) < std::abs(v - 2.0));
    CHECK(std::abs(fine - 2.0) < 1e-3);
  }

  TEST_CASE("ks distance between drivers shrinks with the step") {
    const auto ks = driver_ks_distances(make_cube(2), 4000, {1, 4, 32}, 7);
    REQUIRE(ks.size() == 3);
    CHECK(ks[0] > ks[1]);
    CHECK(ks[1] > ks[2]);
  }

  TEST_CASE("zero noise on a symmetric measure keeps theta at 0") {
    DriveOptions opt;
    opt.zero_noise = true;
    Rng rng = make_stream(8, 0);
    const LocalizationPath p = drive_sde(make_cube(3), share(uniform_grid(2.0, 16)), rng, opt);
    // a(t, 0) vanishes up to quadrature round-off.
    for (const auto& th : p.theta) CHECK(th.norm() < 1e-14);
  }

  TEST_CASE("ensemble stats") {
    const TimeGrid g = geometric_grid(0.1, 10.0, 14);
    const auto gp = ensemble(make_gaussian(3), g, 16, 9);
    const EnsembleStats gs = ensemble_stats(gp);
    for (const auto& ts : gs.times) {
      CHECK(max_abs(ts.A.mean - Matrix::Identity(3, 3) / (1.0 + ts.t)) < 1e-14);
      CHECK(max_abs(ts.A.stderr) < 1e-14);
    }
    const auto cp = ensemble(make_cube(8), g, 8, 10);
    const EnsembleStats cs = ensemble_stats(cp);
    CHECK(cs.times[0].tr_A2.value == doctest::Approx(8.0).epsilon(1e-10));
    for (const auto& ts : cs.times) {
      CHECK(max_abs(ts.A.mean - ts.A.mean.transpose()) == 0.0);
      CHECK(ts.A.stderr.minCoeff() >= 0.0);
    }
    CHECK_THROWS_AS(ensemble_stats({cp[0]}), std::invalid_argument);
    auto other = ensemble(make_cube(8), geometric_grid(0.1, 10.0, 15), 2, 10);
    CHECK_THROWS_AS(ensemble_stats({cp[0], other[0]}), std::invalid_argument);
  }

  TEST_CASE("determinism across worker counts") {
    const TimeGrid g = geometric_grid(0.1, 10.0, 14);
    const auto a = ensemble(parse_measure("product:exp,laplace"), g, 24, 11, Driver::Direct, 1);
    const auto b = ensemble(parse_measure("product:exp,laplace"), g, 24, 11, Driver::Direct, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(a[i].theta[k] == b[i].theta[k]);
        CHECK(a[i].tilt[k].A == b[i].tilt[k].A);
      }
    }
  }

  TEST_CASE("gaussian identities are exact") {
    const auto paths = ensemble(make_gaussian(2), default_grid(), 1024, 12);
    const EnsembleStats s = ensemble_stats(paths);
    CHECK(check_derivative_identity(paths).verdict == Verdict::Pass);
    CHECK(check_derivative_identity(paths, true).verdict == Verdict::Pass);
    CHECK(check_spectral_bound(paths).verdict == Verdict::Pass);
    CHECK(check_orthogonality(paths).verdict == Verdict::Pass);
    CHECK(check_orthogonality(paths).statistic < 1e-12);
    CHECK(check_monotone_trace(paths).verdict == Verdict::Pass);
    const LemmaReport guan = estimate_guan_ratio(s);
    CHECK(guan.verdict == Verdict::Info);
    CHECK(guan.statistic == doctest::Approx(1.0).epsilon(1e-14));
    // Variance decomposition holds in expectation only: Id/(1+t) + E a a^T.
    CHECK(check_variance_decomposition(s).verdict == Verdict::Pass);
  }

  TEST_CASE("cube checks at moderate size") {
    const TimeGrid g = dyadic_grid(4, -2, 2);
    const auto paths = ensemble(make_cube(4), g, 2048, 13);
    const EnsembleStats s = ensemble_stats(paths);
    CHECK(check_variance_decomposition(s).verdict == Verdict::Pass);
    CHECK(check_derivative_identity(paths).verdict == Verdict::Pass);
    CHECK(check_spectral_bound(paths).verdict == Verdict::Pass);
    CHECK(check_orthogonality(paths, {1.0}).verdict == Verdict::Pass);
    CHECK(check_monotone_trace(paths).verdict == Verdict::Pass);
    CHECK(estimate_guan_ratio(s).statistic <= 1.0 + 1e-12);
  }

  TEST_CASE("martingale property on the 1D cube") {
    const TimeGrid g = dyadic_grid(2, -3, 1);
    const auto paths = ensemble(make_cube(1), g, 4096, 14);
    std::vector<Vector> xs;
    for (double x : {-1.5, -0.7, 0.0, 0.4, 1.2}) xs.push_back(Vector::Constant(1, x));
    const LemmaReport r = check_martingale(make_cube(1), paths, xs, {0.125, 0.5, 1.0});
    CHECK(r.verdict == Verdict::Pass);
  }

  TEST_CASE("driver equivalence at step 1/64") {
    const LemmaReport r = check_driver_equivalence(make_cube(2), 4000, 64, 15);
    CHECK(r.verdict == Verdict::Pass);
    // One step is visibly wrong: Var(theta_1) = 1 instead of about 2.
    const LemmaReport coarse = check_driver_equivalence(make_cube(2), 4000, 1, 15);
    CHECK(coarse.verdict == Verdict::Fail);
  }
}
