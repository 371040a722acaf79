#include "sloclab/follmer.hpp"

#include "sloclab/finite_diff.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sloclab {

std::vector<FollmerFrame> to_follmer(const LocalizationPath& path) {
  std::vector<FollmerFrame> out;
  out.reserve(path.tilt.size());
  for (std::size_t k = 0; k < path.tilt.size(); ++k) {
    const double t = path.grid->points[k];
    const double r = r_of_t(t);
    FollmerFrame f;
    f.r = r;
    f.x = (1.0 - r) * path.theta[k];
    f.v = (1.0 + t) * path.tilt[k].a - path.theta[k];
    f.gamma = (1.0 + t) * path.tilt[k].A;
    out.push_back(std::move(f));
  }
  return out;
}

FrameEnsemble to_follmer(const std::vector<LocalizationPath>& paths) {
  FrameEnsemble out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(to_follmer(p));
  return out;
}

std::vector<double> r_grid(const FrameEnsemble& frames) {
  if (frames.empty()) throw std::invalid_argument("r_grid: empty ensemble");
  std::vector<double> r;
  for (const auto& f : frames.front()) r.push_back(f.r);
  return r;
}

std::size_t r_index(const FrameEnsemble& frames, double r) {
  const auto rs = r_grid(frames);
  for (std::size_t k = 0; k < rs.size(); ++k) {
    if (std::abs(rs[k] - r) <= 1e-9) return k;
  }
  throw std::invalid_argument("r = " + format_double(r) + " is not on the grid image");
}

namespace {

int frame_dim(const FrameEnsemble& frames) {
  return static_cast<int>(frames.front().front().v.size());
}

void require_units(const FrameEnsemble& frames) {
  if (frames.size() < 2) throw std::invalid_argument("follmer checks need at least 2 paths");
}

}  // namespace

FisherEnergy fisher_energy(const FrameEnsemble& frames, std::size_t k) {
  require_units(frames);
  std::vector<double> e;
  e.reserve(frames.size());
  for (const auto& p : frames) e.push_back(p[k].v.squaredNorm());
  FisherEnergy out;
  out.r = frames.front()[k].r;
  out.energy = mean_estimate(e);
  const double n = frame_dim(frames);
  out.bound = 4.0 * n / ((1.0 - out.r) * (1.0 - out.r));
  return out;
}

FisherEnergy fisher_energy_at(const FrameEnsemble& frames, double r) {
  return fisher_energy(frames, r_index(frames, r));
}

LemmaReport check_fisher_bound(const FrameEnsemble& frames, double sigmas) {
  require_units(frames);
  std::vector<LemmaReport> details;
  for (std::size_t k = 0; k < frames.front().size(); ++k) {
    const FisherEnergy fe = fisher_energy(frames, k);
    details.push_back(bound_report("fisher-bound@" + format_double(fe.r), fe.energy.value,
                                   fe.energy.stderr, fe.bound, sigmas));
  }
  return combine("fisher-bound", std::move(details));
}

LemmaReport check_fisher_monotone(const FrameEnsemble& frames, double sigmas) {
  require_units(frames);
  std::vector<LemmaReport> details;
  for (std::size_t k = 1; k < frames.front().size(); ++k) {
    std::vector<double> diff;
    diff.reserve(frames.size());
    for (const auto& p : frames) diff.push_back(p[k].v.squaredNorm() - p[k - 1].v.squaredNorm());
    const Estimate e = mean_estimate(diff);
    details.push_back(bound_report("fisher-monotone@" + format_double(frames.front()[k].r),
                                   e.value, e.stderr, 0.0, sigmas, false));
  }
  return combine("fisher-monotone", std::move(details));
}

LemmaReport check_trace_route(const FrameEnsemble& frames) {
  require_units(frames);
  double worst = 0.0;
  for (std::size_t k = 0; k < frames.front().size(); ++k) {
    std::vector<Matrix> outer;
    std::vector<double> sq;
    for (const auto& p : frames) {
      outer.push_back(p[k].v * p[k].v.transpose());
      sq.push_back(p[k].v.squaredNorm());
    }
    const double a = mean_estimate(outer).mean.trace();
    const double b = mean_estimate(sq).value;
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
  }
  return equality_report("trace-route", worst, 0.0, 0.0, 0.0, 0.0,
                         "relative gap between tr E v v^T and E |v|^2");
}

LemmaReport check_gamma_route(const std::vector<LocalizationPath>& paths,
                              const FrameEnsemble& frames) {
  long mismatches = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t k = 0; k < paths[i].tilt.size(); ++k) {
      const Matrix direct = (1.0 + paths[i].grid->points[k]) * paths[i].tilt[k].A;
      if (!(direct.array() == frames[i][k].gamma.array()).all()) ++mismatches;
    }
  }
  LemmaReport r;
  r.check_id = "gamma-route";
  r.statistic = static_cast<double>(mismatches);
  r.verdict = mismatches == 0 ? Verdict::Pass : Verdict::Fail;
  r.notes = "frames differing from (1+t) A_t";
  return r;
}

LemmaReport check_gamma_properties(const std::vector<LocalizationPath>& paths,
                                   const FrameEnsemble& frames,
                                   const std::vector<double>& r_targets, double sigmas) {
  require_units(frames);
  const int n = frame_dim(frames);
  const Matrix id = Matrix::Identity(n, n);
  const std::vector<double> rs = r_grid(frames);
  std::vector<std::size_t> idx;
  for (double r : r_targets) idx.push_back(r_index(frames, r));

  std::vector<LemmaReport> p1, p2, p5;
  for (std::size_t k : idx) {
    const double r = rs[k];
    const std::string at = "@" + format_double(r);
    std::vector<Matrix> gam, a, stat2;
    std::vector<Vector> flat;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const FollmerFrame& f = frames[i][k];
      gam.push_back(f.gamma);
      a.push_back(paths[i].tilt[k].A);
      stat2.push_back((1.0 - r) * f.v * f.v.transpose() + f.gamma - id);
      flat.push_back(flatten(f.gamma));
    }
    const MatrixEstimate eg = mean_estimate(gam);
    const MatrixEstimate ea = mean_estimate(a);
    const EntryComparison c1 =
        compare_entries((1.0 - r) * eg.mean - ea.mean, (1.0 - r) * eg.stderr + ea.stderr, sigmas);
    p1.push_back(make_report("gamma-i" + at, c1, sigmas));

    const MatrixEstimate e2 = mean_estimate(stat2);
    p2.push_back(make_report("gamma-ii-identity" + at,
                             compare_entries(e2.mean, e2.stderr, sigmas), sigmas));
    const Estimate lmin =
        jackknife(flat, [n](const Vector& m) { return lambda_min(unflatten(m, n)); });
    const Estimate lmax =
        jackknife(flat, [n](const Vector& m) { return lambda_max(unflatten(m, n)); });
    p2.push_back(bound_report("gamma-ii-psd" + at, lmin.value, lmin.stderr, 0.0, sigmas, false));
    p2.push_back(bound_report("gamma-ii-le-id" + at, lmax.value, lmax.stderr, 1.0, sigmas));

    long violations = 0;
    double worst = -1.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const FollmerFrame& f = frames[i][k];
      double tol = 1e-6;
      const TiltState& st = paths[i].tilt[k];
      if (st.method == TiltMethod::Rejection) tol += 3.0 * r * (1.0 + t_of_r(r)) * st.A_stderr.norm();
      const double excess = r * lambda_max(f.gamma) - 1.0;
      worst = std::max(worst, excess);
      if (excess > tol) ++violations;
    }
    LemmaReport r5;
    r5.check_id = "gamma-v" + at;
    r5.statistic = worst;
    r5.tolerance = 1e-6;
    r5.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
    r5.notes = std::to_string(violations) + " paths with r*lambda_max(Gamma_r) > 1";
    p5.push_back(r5);
  }

  const UnitSeries vv = [&](std::size_t u, std::size_t k) {
    return Matrix(frames[u][k].v * frames[u][k].v.transpose());
  };
  const UnitSeries rhs3 = [&](std::size_t u, std::size_t k) {
    const Matrix d = id - frames[u][k].gamma;
    const double s = 1.0 - rs[k];
    return Matrix(d * d / (s * s));
  };
  const UnitSeries g = [&](std::size_t u, std::size_t k) { return frames[u][k].gamma; };
  const UnitSeries rhs4 = [&](std::size_t u, std::size_t k) {
    const Matrix& m = frames[u][k].gamma;
    return Matrix((m - m * m) / (1.0 - rs[k]));
  };
  LemmaReport r3 = derivative_identity_check("gamma-iii", rs, frames.size(), vv, rhs3, idx, sigmas);
  LemmaReport r4 = derivative_identity_check("gamma-iv", rs, frames.size(), g, rhs4, idx, sigmas);

  std::vector<LemmaReport> parts;
  parts.push_back(combine("gamma-i", std::move(p1)));
  parts.push_back(combine("gamma-ii", std::move(p2)));
  parts.push_back(std::move(r3));
  parts.push_back(std::move(r4));
  parts.push_back(combine("gamma-v", std::move(p5)));
  return combine("gamma-properties", std::move(parts),
                 std::to_string(frames.size()) + " paths");
}

namespace {

LemmaReport xr_law_report(const MeasureSpec& spec, const std::vector<Vector>& xr, double r,
                          std::uint64_t seed, double sigmas, double level) {
  const int n = spec.dim();
  const std::size_t count = xr.size();
  if (count < 2) throw std::invalid_argument("xr law: need at least 2 samples");
  std::vector<Matrix> mean_rows, second;
  for (const Vector& x : xr) {
    mean_rows.push_back(x);
    second.push_back(x * x.transpose() - r * Matrix::Identity(n, n));
  }
  const MatrixEstimate em = mean_estimate(mean_rows);
  const MatrixEstimate es = mean_estimate(second);
  std::vector<LemmaReport> details;
  details.push_back(make_report("xr-mean", compare_entries(em.mean, em.stderr, sigmas), sigmas));
  details.push_back(make_report("xr-cov", compare_entries(es.mean, es.stderr, sigmas), sigmas));

  std::normal_distribution<double> nd(0.0, 1.0);
  const double noise = std::sqrt(r * (1.0 - r));
  std::vector<Vector> fresh;
  fresh.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_stream(seed, StreamTag::Fresh, i);
    Vector z(n);
    for (int j = 0; j < n; ++j) z(j) = nd(rng);
    fresh.push_back(r * sample_point(spec, rng) + noise * z);
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < count; ++i) {
      a.push_back(xr[i](j));
      b.push_back(fresh[i](j));
    }
    const KsResult ks = ks_two_sample(a, b);
    LemmaReport kr;
    kr.check_id = "xr-ks[" + std::to_string(j) + "]";
    kr.statistic = ks.statistic;
    kr.tolerance = std::sqrt(-0.5 * std::log(0.5 * level)) * std::sqrt(2.0 / count);
    kr.verdict = ks.pass(level) ? Verdict::Pass : Verdict::Fail;
    kr.notes = "p=" + format_double(ks.p_value);
    details.push_back(kr);
  }
  std::ostringstream notes;
  notes << "r=" << r << " samples=" << count;
  return combine("xr-law", std::move(details), notes.str());
}

}  // namespace

LemmaReport check_xr_law(const MeasureSpec& spec, double r, int n_samples, std::uint64_t seed,
                         double sigmas, double level) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("xr law: r must lie in (0, 1)");
  const double t = t_of_r(r);
  const int n = spec.dim();
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Vector> xr;
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = make_stream(seed, StreamTag::Paths, static_cast<std::uint64_t>(i));
    Vector w(n);
    for (int j = 0; j < n; ++j) w(j) = std::sqrt(t) * nd(rng);
    xr.push_back((1.0 - r) * (t * sample_point(spec, rng) + w));
  }
  return xr_law_report(spec, xr, r, seed, sigmas, level);
}

LemmaReport check_xr_law(const MeasureSpec& spec, const FrameEnsemble& frames, double r,
                         std::uint64_t seed, double sigmas, double level) {
  const std::size_t k = r_index(frames, r);
  std::vector<Vector> xr;
  for (const auto& p : frames) xr.push_back(p[k].x);
  return xr_law_report(spec, xr, frames.front()[k].r, seed, sigmas, level);
}

}  // namespace sloclab
