#include <doctest.h>

#include "oracles.hpp"
#include "sloclab/follmer.hpp"

#include <cmath>

using namespace sloclab;

namespace {

std::vector<LocalizationPath> ensemble(const MeasureSpec& spec, TimeGrid g, int n,
                                       std::uint64_t seed) {
  EnsembleOptions opt;
  opt.n_paths = n;
  opt.seed = seed;
  return simulate_ensemble(spec, std::make_shared<const TimeGrid>(std::move(g)), opt);
}

}  // namespace

TEST_SUITE("follmer") {
  TEST_CASE("change of variables") {
    CHECK(r_of_t(1.0) == 0.5);
    CHECK(r_of_t(0.0) == 0.0);
    for (double t : {0.01, 0.3, 1.0, 7.5, 100.0}) {
      CHECK(std::abs(t_of_r(r_of_t(t)) - t) <= 1e-15 * std::max(1.0, t) * 4.0);
    }
  }

  TEST_CASE("gaussian frames") {
    const auto paths = ensemble(make_gaussian(2), dyadic_grid(4, -5, 5), 16, 1);
    const FrameEnsemble frames = to_follmer(paths);
    for (const auto& path : frames) {
      for (const auto& f : path) {
        CHECK(f.v.norm() < 1e-12 * (1.0 + f.x.norm() / (1.0 - f.r)));
        CHECK(max_abs(f.gamma - Matrix::Identity(2, 2)) < 1e-14);
      }
    }
    CHECK(fisher_energy_at(frames, 0.5).energy.value < 1e-20);
    const LemmaReport g = check_gamma_properties(paths, frames, {0.2, 0.5});
    CHECK(g.verdict == Verdict::Pass);
  }

  TEST_CASE("frame formulas") {
    const auto paths = ensemble(parse_measure("product:exp,uniform"), dyadic_grid(2, -2, 2), 8, 2);
    const FrameEnsemble frames = to_follmer(paths);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (std::size_t k = 0; k < paths[i].grid->size(); ++k) {
        const double t = paths[i].grid->points[k];
        const auto& f = frames[i][k];
        CHECK(f.r == r_of_t(t));
        CHECK(f.x == (1.0 - f.r) * paths[i].theta[k]);
        CHECK(f.v == (1.0 + t) * paths[i].tilt[k].a - paths[i].theta[k]);
      }
    }
    CHECK(frames[0][0].v.norm() < 1e-10);
    CHECK(max_abs(frames[0][0].gamma - Matrix::Identity(2, 2)) < 1e-10);
    CHECK(check_gamma_route(paths, frames).verdict == Verdict::Pass);
    CHECK(check_trace_route(frames).verdict == Verdict::Pass);
  }

  TEST_CASE("fisher energy of the 1D cube at r = 1/2") {
    TimeGrid g;
    g.kind = GridKind::Uniform;
    g.points = {0.0, 1.0};
    const auto paths = ensemble(make_cube(1), g, 20000, 3);
    const FrameEnsemble frames = to_follmer(paths);
    const FisherEnergy fe = fisher_energy_at(frames, 0.5);
    const double j = oracle::fisher_uniform(0.5);
    CAPTURE(j);
    CAPTURE(fe.energy.value);
    CHECK(std::abs(fe.energy.value - j) <= 4.0 * fe.energy.stderr);
    CHECK(fe.bound == doctest::Approx(16.0));
  }

  TEST_CASE("fisher bound and monotonicity on the cube") {
    const auto paths = ensemble(make_cube(3), default_grid(), 512, 4);
    const FrameEnsemble frames = to_follmer(paths);
    CHECK(check_fisher_bound(frames).verdict == Verdict::Pass);
    CHECK(check_fisher_monotone(frames).verdict == Verdict::Pass);
  }

  TEST_CASE("gamma properties on a small cube ensemble") {
    const auto paths = ensemble(make_cube(2), dyadic_grid(4, -3, 3), 2048, 5);
    const FrameEnsemble frames = to_follmer(paths);
    const LemmaReport r = check_gamma_properties(paths, frames, {0.2, 0.5, 0.8});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.details.size() >= 5);
  }

  TEST_CASE("law of X_r") {
    CHECK(check_xr_law(make_gaussian(2), 0.5, 10000, 6).verdict == Verdict::Pass);
    CHECK(check_xr_law(make_cube(1), 0.5, 10000, 7).verdict == Verdict::Pass);
    CHECK(check_xr_law(parse_measure("product:exp"), 0.3, 10000, 8).verdict == Verdict::Pass);
    CHECK_THROWS_AS(check_xr_law(make_cube(1), 1.0, 100, 9), std::invalid_argument);
  }

  TEST_CASE("r not on the grid image") {
    const auto paths = ensemble(make_cube(1), dyadic_grid(2, -2, 2), 4, 10);
    const FrameEnsemble frames = to_follmer(paths);
    CHECK_NOTHROW(r_index(frames, 0.5));
    CHECK_THROWS_AS(r_index(frames, 0.37), std::invalid_argument);
  }
}
