#include <doctest.h>

#include "oracles.hpp"
#include "sloclab/infotheory.hpp"

#include <cmath>
#include <numbers>

using namespace sloclab;

namespace {

const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

FrameEnsemble frames_for(const MeasureSpec& spec, TimeGrid g, int n, std::uint64_t seed,
                         std::vector<LocalizationPath>* keep = nullptr) {
  EnsembleOptions opt;
  opt.n_paths = n;
  opt.seed = seed;
  auto paths = simulate_ensemble(spec, std::make_shared<const TimeGrid>(std::move(g)), opt);
  FrameEnsemble f = to_follmer(paths);
  if (keep) *keep = std::move(paths);
  return f;
}

}  // namespace

TEST_SUITE("infotheory") {
  TEST_CASE("closed-form entropies") {
    for (int n : {1, 3, 8}) {
      CHECK(differential_entropy(make_gaussian(n)).value == doctest::Approx(n * kHalfLog2PiE));
      CHECK(differential_entropy(make_cube(n)).value ==
            doctest::Approx(n * std::log(2.0 * std::sqrt(3.0))));
    }
    CHECK(differential_entropy(make_cube(1)).method == EntropyMethod::ClosedForm);
  }

  TEST_CASE("plug-in and knn cross-checks") {
    EntropyOptions mc;
    mc.method = EntropyMethod::PlugInMC;
    mc.samples = 40000;
    const EntropyEstimate e = differential_entropy(parse_measure("product:exp"), mc);
    CHECK(e.method == EntropyMethod::PlugInMC);
    CHECK(std::abs(e.value - 1.0) <= 4.0 * e.stderr);
    CHECK(e.stderr > 0.0);

    Rng rng = make_stream(3, 0);
    const Matrix xs = sample(make_gaussian(2), rng, 20000);
    const EntropyEstimate k = knn_entropy(xs);
    CHECK(std::abs(k.value - 2.0 * kHalfLog2PiE) < 0.05);
  }

  TEST_CASE("entropy never exceeds the gaussian value under cov = Id") {
    for (const char* id : {"cube:3", "ball:3", "box:1,2", "product:exp,laplace,tgauss,uniform"}) {
      const MeasureSpec s = isotropize(parse_measure(id));
      CHECK(differential_entropy(s).value <= s.dim() * kHalfLog2PiE + 1e-12);
    }
  }

  TEST_CASE("kl to the gaussian") {
    CHECK(kl_to_gaussian(make_gaussian(3)).value == doctest::Approx(0.0));
    CHECK(kl_to_gaussian(parse_measure("product:laplace")).value ==
          doctest::Approx(0.07237).epsilon(1e-4));
    CHECK(kl_to_gaussian(parse_measure("product:laplace")).value ==
          doctest::Approx(kHalfLog2PiE - 1.0 - std::log(std::sqrt(2.0))));
    CHECK(kl_to_gaussian(parse_measure("product:exp")).value ==
          doctest::Approx(kHalfLog2PiE - 1.0));
    CHECK(kl_to_gaussian(parse_measure("product:exp")).value == doctest::Approx(0.41894).epsilon(1e-5));
    CHECK_THROWS_AS(kl_to_gaussian(parse_measure("box:1,2")), std::invalid_argument);
    for (const char* id : {"cube:4", "ball:2", "product:tgauss,uniform"}) {
      CHECK(check_kl_nonnegative(parse_measure(id)).verdict == Verdict::Pass);
    }
  }

  TEST_CASE("epi deficit against closed forms") {
    const DeficitReport g = epi_deficit(make_gaussian(3));
    CHECK(g.delta.value == doctest::Approx(0.0));
    CHECK(g.bn_upper == 6.0);
    const DeficitReport u = epi_deficit(make_cube(1));
    CHECK(u.delta.value == doctest::Approx(oracle::epi_uniform()).epsilon(1e-4));
    CHECK(u.delta.value == doctest::Approx(0.15343).epsilon(1e-3));
    const DeficitReport e = epi_deficit(parse_measure("product:exp"));
    CHECK(e.delta.value == doctest::Approx(oracle::epi_exponential()).epsilon(1e-4));
    // Deficits add over independent coordinates.
    const DeficitReport ue = epi_deficit(parse_measure("product:uniform,exp"));
    CHECK(ue.delta.value == doctest::Approx(u.delta.value + e.delta.value).epsilon(1e-10));
    const DeficitReport cube = epi_deficit(make_cube(4));
    CHECK(cube.delta.value == doctest::Approx(4.0 * u.delta.value).epsilon(1e-10));
    CHECK(check_epi_deficit(make_cube(4), cube).verdict == Verdict::Pass);
  }

  TEST_CASE("epi deficit for a ball uses the knn fallback") {
    EntropyOptions opt;
    opt.samples = 4000;
    const DeficitReport d = epi_deficit(make_uniform_ball(2), opt);
    CHECK(d.method == EntropyMethod::KNN);
    CHECK(d.low_confidence);
    CHECK(d.delta.value <= 4.0);
  }

  TEST_CASE("de bruijn on the gaussian and grid validation") {
    const FrameEnsemble g = frames_for(make_gaussian(1), default_grid(), 8, 1);
    const LemmaReport r = de_bruijn_check(g, kl_to_gaussian(make_gaussian(1)));
    CHECK(r.verdict == Verdict::Pass);
    CHECK(std::abs(r.statistic) < 1e-12);
    const FrameEnsemble coarse = frames_for(make_cube(1), uniform_grid(10.0, 5), 8, 2);
    CHECK_THROWS_AS(de_bruijn_check(coarse, kl_to_gaussian(make_cube(1))), std::invalid_argument);
  }

  TEST_CASE("eldan-mikulincer bound") {
    const FrameEnsemble g = frames_for(make_gaussian(2), default_grid(), 8, 3);
    const EmBound eg = em_lower_bound(g, 0.5);
    CHECK(eg.value.value == doctest::Approx(0.0));
    CHECK(check_em_bound(eg, epi_deficit(make_gaussian(2)).delta).verdict == Verdict::Pass);

    const FrameEnsemble c = frames_for(make_cube(2), dyadic_grid(4, -5, 8), 1024, 4);
    const EmBound ec = em_lower_bound(c, 0.5);
    CHECK(ec.value.value >= 0.0);
    CHECK(check_em_bound(ec, epi_deficit(make_cube(2)).delta).verdict == Verdict::Pass);
    CHECK(check_em_parity(c, 0.5).verdict == Verdict::Pass);
    CHECK_THROWS_AS(em_lower_bound(c, 0.9999), std::invalid_argument);
    CHECK_THROWS_AS(em_lower_bound(c, 1.5), std::invalid_argument);
  }

  TEST_CASE("proof chain on the gaussian") {
    std::vector<LocalizationPath> paths;
    const FrameEnsemble g = frames_for(make_gaussian(2), dyadic_grid(4, -5, 8), 16, 5, &paths);
    const LemmaReport r = proof_chain_audit(g, paths, 0.5, epi_deficit(make_gaussian(2)).delta);
    CHECK(r.verdict == Verdict::Pass);
    for (const auto& d : r.details) {
      CAPTURE(d.check_id);
      CHECK(d.verdict != Verdict::Fail);
    }
  }
}
