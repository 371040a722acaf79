#include "sloclab/localization.hpp"

#include "sloclab/errors.hpp"
#include "sloclab/finite_diff.hpp"
#include "sloclab/pool.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sloclab {

std::string_view to_string(GridKind k) {
  return k == GridKind::Geometric ? "geometric" : "uniform";
}

std::string_view to_string(Driver d) { return d == Driver::Direct ? "direct" : "sde"; }

std::optional<std::size_t> TimeGrid::find(double t, double tol) const {
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (std::abs(points[k] - t) <= tol * std::max(1.0, std::abs(t))) return k;
  }
  return std::nullopt;
}

std::size_t TimeGrid::require(double t) const {
  if (auto k = find(t)) return *k;
  throw std::invalid_argument("time " + format_double(t) + " is not on the grid");
}

TimeGrid geometric_grid(double t_min, double t_max, int points) {
  if (!(t_min > 0.0)) throw std::invalid_argument("t_min must be positive");
  if (!(t_max > t_min)) throw std::invalid_argument("t_max must exceed t_min");
  if (points < 2) throw std::invalid_argument("geometric grid needs at least 2 points");
  TimeGrid g;
  g.kind = GridKind::Geometric;
  g.points.push_back(0.0);
  const double lo = std::log(t_min);
  const double step = (std::log(t_max) - lo) / (points - 1);
  for (int k = 0; k < points; ++k) {
    g.points.push_back(k == 0 ? t_min : (k == points - 1 ? t_max : std::exp(lo + k * step)));
  }
  validate_grid(g);
  return g;
}

TimeGrid uniform_grid(double t_max, int steps) {
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (steps < 1) throw std::invalid_argument("uniform grid needs at least one step");
  TimeGrid g;
  g.kind = GridKind::Uniform;
  for (int k = 0; k <= steps; ++k) g.points.push_back(t_max * k / steps);
  validate_grid(g);
  return g;
}

TimeGrid dyadic_grid(int per_octave, int min_exp, int max_exp) {
  if (per_octave < 1 || max_exp <= min_exp) throw std::invalid_argument("dyadic grid: bad range");
  TimeGrid g;
  g.kind = GridKind::Geometric;
  g.points.push_back(0.0);
  for (int j = min_exp * per_octave; j <= max_exp * per_octave; ++j) {
    g.points.push_back(j % per_octave == 0 ? std::ldexp(1.0, j / per_octave)
                                           : std::exp2(static_cast<double>(j) / per_octave));
  }
  validate_grid(g);
  return g;
}

TimeGrid default_grid() { return geometric_grid(0.01, 100.0, 40); }

void validate_grid(const TimeGrid& grid) {
  if (grid.points.size() < 2) throw std::invalid_argument("grid needs at least 2 times");
  if (grid.points[0] != 0.0) throw std::invalid_argument("grid must start at t = 0");
  for (std::size_t k = 1; k < grid.points.size(); ++k) {
    if (!(grid.points[k] > grid.points[k - 1]) || !std::isfinite(grid.points[k])) {
      throw std::invalid_argument("grid must be strictly increasing and finite");
    }
    if (grid.kind == GridKind::Geometric && k >= 2 &&
        grid.points[k] / grid.points[k - 1] > 1.5 + 1e-12) {
      throw std::invalid_argument("geometric grid step ratio exceeds 1.5");
    }
  }
}

namespace {

std::vector<Vector> brownian_increments(const TimeGrid& g, int n, Rng& rng, bool zero) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Vector> inc(g.size(), Vector::Zero(n));
  for (std::size_t k = 1; k < g.size(); ++k) {
    const double sd = std::sqrt(g.points[k] - g.points[k - 1]);
    for (int i = 0; i < n; ++i) {
      const double z = nd(rng);
      inc[k](i) = zero ? 0.0 : sd * z;
    }
  }
  return inc;
}

void check_path_inputs(const MeasureSpec& spec, const std::shared_ptr<const TimeGrid>& grid) {
  if (!grid) throw std::invalid_argument("localization: null grid");
  validate_grid(*grid);
  if (!spec.capabilities().exact_sampler) {
    throw std::invalid_argument("localization: '" + spec.label() + "' has no exact sampler");
  }
}

}  // namespace

LocalizationPath drive_direct(const MeasureSpec& spec, std::shared_ptr<const TimeGrid> grid,
                              Rng& rng, const DriveOptions& options) {
  check_path_inputs(spec, grid);
  const int n = spec.dim();
  const TimeGrid& g = *grid;
  const auto inc = brownian_increments(g, n, rng, options.zero_noise);
  LocalizationPath p;
  p.grid = grid;
  p.driver = Driver::Direct;
  p.x_star = sample_point(spec, rng);
  Vector w = Vector::Zero(n);
  for (std::size_t k = 0; k < g.size(); ++k) {
    w += inc[k];
    p.brownian.push_back(w);
    p.theta.push_back(g.points[k] * p.x_star + w);
    p.tilt.push_back(tilt_moments(spec, g.points[k], p.theta.back(), options.tilt));
  }
  return p;
}

LocalizationPath drive_sde(const MeasureSpec& spec, std::shared_ptr<const TimeGrid> grid,
                           Rng& rng, const DriveOptions& options) {
  check_path_inputs(spec, grid);
  const int n = spec.dim();
  const TimeGrid& g = *grid;
  const auto inc = brownian_increments(g, n, rng, options.zero_noise);
  // Drawn and discarded so both drivers consume the stream identically.
  (void)sample_point(spec, rng);
  LocalizationPath p;
  p.grid = grid;
  p.driver = Driver::SDE;
  Vector w = Vector::Zero(n);
  Vector theta = Vector::Zero(n);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (k > 0) {
      const double dt = g.points[k] - g.points[k - 1];
      theta = theta + inc[k] + p.tilt.back().a * dt;
    }
    w += inc[k];
    p.brownian.push_back(w);
    p.theta.push_back(theta);
    try {
      p.tilt.push_back(tilt_moments(spec, g.points[k], theta, options.tilt));
    } catch (const DivergentTilt& e) {
      throw DivergentTilt("sde path aborted at t = " + format_double(g.points[k]) + ": " +
                          e.what());
    }
  }
  return p;
}

std::vector<LocalizationPath> simulate_ensemble(const MeasureSpec& spec,
                                                std::shared_ptr<const TimeGrid> grid,
                                                const EnsembleOptions& options) {
  if (options.n_paths < 1) throw std::invalid_argument("simulate_ensemble: n_paths must be >= 1");
  check_path_inputs(spec, grid);
  std::vector<LocalizationPath> paths(static_cast<std::size_t>(options.n_paths));
  parallel_for(paths.size(), options.workers, [&](std::size_t i) {
    Rng rng = make_stream(options.seed, StreamTag::Paths, i);
    Rng tilt_rng = make_stream(options.seed, StreamTag::Probe, i);
    DriveOptions d = options.drive;
    d.tilt.rng = &tilt_rng;
    paths[i] = options.driver == Driver::Direct ? drive_direct(spec, grid, rng, d)
                                                : drive_sde(spec, grid, rng, d);
    paths[i].index = i;
  });
  return paths;
}

EnsembleStats ensemble_stats(const std::vector<LocalizationPath>& paths) {
  if (paths.size() < 2) throw std::invalid_argument("ensemble_stats: need at least 2 paths");
  const auto& grid = paths.front().grid;
  for (const auto& p : paths) {
    if (p.grid != grid && (!p.grid || p.grid->points != grid->points)) {
      throw std::invalid_argument("ensemble_stats: paths are on different grids");
    }
  }
  EnsembleStats s;
  s.grid = grid;
  s.n_paths = static_cast<int>(paths.size());
  s.dim = static_cast<int>(paths.front().theta.front().size());
  const Matrix id = Matrix::Identity(s.dim, s.dim);
  for (std::size_t k = 0; k < grid->size(); ++k) {
    TimeStats ts;
    ts.t = grid->points[k];
    std::vector<Matrix> big_a, outer, decomp;
    std::vector<double> tr, tr2;
    for (const auto& p : paths) {
      const TiltState& st = p.tilt[k];
      big_a.push_back(st.A);
      outer.push_back(st.a * st.a.transpose());
      decomp.push_back(st.A + outer.back() - id);
      tr.push_back(st.A.trace());
      tr2.push_back((st.A * st.A).trace());
      ts.max_t_lambda = std::max(ts.max_t_lambda, ts.t * lambda_max(st.A));
    }
    ts.A = mean_estimate(big_a);
    ts.aa = mean_estimate(outer);
    ts.decomposition = mean_estimate(decomp);
    ts.tr_A = mean_estimate(tr);
    ts.tr_A2 = mean_estimate(tr2);
    ts.lambda_min = lambda_min(ts.A.mean);
    ts.lambda_max = lambda_max(ts.A.mean);
    s.times.push_back(std::move(ts));
  }
  return s;
}

LemmaReport check_variance_decomposition(const EnsembleStats& stats, double sigmas) {
  std::vector<LemmaReport> details;
  for (const TimeStats& ts : stats.times) {
    const EntryComparison c =
        compare_entries(ts.decomposition.mean, ts.decomposition.stderr, sigmas);
    details.push_back(make_report("variance-decomposition@" + format_double(ts.t), c, sigmas));
  }
  std::ostringstream notes;
  notes << stats.n_paths << " paths, " << stats.times.size() << " grid times";
  return combine("variance-decomposition", std::move(details), notes.str());
}

LemmaReport check_derivative_identity(const std::vector<LocalizationPath>& paths, bool trace,
                                      double sigmas) {
  if (paths.size() < 2) throw std::invalid_argument("derivative identity: need 2 paths");
  const TimeGrid& g = *paths.front().grid;
  if (g.size() < 3) throw std::invalid_argument("derivative identity: need 3 grid times");
  UnitSeries f;
  UnitSeries h;
  if (trace) {
    f = [&](std::size_t u, std::size_t k) {
      return Matrix::Constant(1, 1, paths[u].tilt[k].A.trace());
    };
    h = [&](std::size_t u, std::size_t k) {
      const Matrix& a = paths[u].tilt[k].A;
      return Matrix::Constant(1, 1, -(a * a).trace());
    };
  } else {
    f = [&](std::size_t u, std::size_t k) { return paths[u].tilt[k].A; };
    h = [&](std::size_t u, std::size_t k) {
      const Matrix& a = paths[u].tilt[k].A;
      return Matrix(-(a * a));
    };
  }
  std::vector<std::size_t> targets;
  for (std::size_t k = 1; k + 1 < g.size(); ++k) targets.push_back(k);
  LemmaReport r = derivative_identity_check(trace ? "derivative-identity-trace"
                                                  : "derivative-identity",
                                            g.points, paths.size(), f, h, targets, sigmas);
  r.notes = std::to_string(targets.size()) + " interior times, " +
            std::to_string(paths.size()) + " paths";
  return r;
}

LemmaReport check_spectral_bound(const std::vector<LocalizationPath>& paths) {
  long violations = 0;
  double worst = 0.0;
  double worst_tol = 0.0;
  std::string first;
  for (const auto& p : paths) {
    const TimeGrid& g = *p.grid;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double t = g.points[k];
      if (t == 0.0) continue;
      const TiltState& st = p.tilt[k];
      double tol = 1e-6;
      if (st.method == TiltMethod::Rejection) tol += 3.0 * t * st.A_stderr.norm();
      const double excess = t * lambda_max(st.A) - 1.0;
      if (excess > worst) {
        worst = excess;
        worst_tol = tol;
      }
      if (excess > tol) {
        if (violations == 0) {
          first = "path " + std::to_string(p.index) + " at t=" + format_double(t);
        }
        ++violations;
      }
    }
  }
  LemmaReport r;
  r.check_id = "spectral-bound";
  r.statistic = worst;
  r.tolerance = worst_tol > 0 ? worst_tol : 1e-6;
  r.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
  r.notes = std::to_string(violations) + " violations of t*lambda_max(A_t) <= 1";
  if (violations > 0) r.notes += "; first: " + first;
  return r;
}

LemmaReport estimate_guan_ratio(const EnsembleStats& stats) {
  double best = -1.0;
  double best_se = 0.0;
  double best_t = 0.0;
  for (const TimeStats& ts : stats.times) {
    const double ratio = ts.tr_A2.value / stats.dim;
    if (ratio > best) {
      best = ratio;
      best_se = ts.tr_A2.stderr / stats.dim;
      best_t = ts.t;
    }
  }
  return info_report("guan-ratio", best, best_se,
                     "max_t E tr[A_t^2]/n attained at t=" + format_double(best_t));
}

LemmaReport check_orthogonality(const std::vector<LocalizationPath>& paths,
                                const std::vector<double>& times, double sigmas) {
  if (paths.size() < 2) throw std::invalid_argument("orthogonality: need 2 paths");
  const TimeGrid& g = *paths.front().grid;
  std::vector<std::size_t> idx;
  if (times.empty()) {
    for (std::size_t k = 1; k < g.size(); ++k) idx.push_back(k);
  } else {
    for (double t : times) idx.push_back(g.require(t));
  }
  std::vector<LemmaReport> details;
  for (std::size_t k : idx) {
    const double t = g.points[k];
    std::vector<Matrix> prod;
    prod.reserve(paths.size());
    for (const auto& p : paths) {
      const Vector& th = p.theta[k];
      prod.push_back((p.tilt[k].a - th / (1.0 + t)) * th.transpose());
    }
    const MatrixEstimate e = mean_estimate(prod);
    details.push_back(make_report("orthogonality@" + format_double(t),
                                  compare_entries(e.mean, e.stderr, sigmas), sigmas));
  }
  return combine("orthogonality", std::move(details));
}

LemmaReport check_martingale(const MeasureSpec& spec, const std::vector<LocalizationPath>& paths,
                             const std::vector<Vector>& points, const std::vector<double>& times,
                             double sigmas) {
  if (paths.size() < 2) throw std::invalid_argument("martingale: need 2 paths");
  const TimeGrid& g = *paths.front().grid;
  std::vector<LemmaReport> details;
  for (double t : times) {
    const std::size_t k = g.require(t);
    Matrix gap(static_cast<Eigen::Index>(points.size()), 1);
    Matrix se(static_cast<Eigen::Index>(points.size()), 1);
    double worst_ess = static_cast<double>(paths.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
      std::vector<double> vals;
      vals.reserve(paths.size());
      double s1 = 0.0, s2 = 0.0;
      for (const auto& p : paths) {
        vals.push_back(std::exp(tilt_log_density(spec, p.tilt[k], points[j])));
        s1 += vals.back();
        s2 += vals.back() * vals.back();
      }
      worst_ess = std::min(worst_ess, s2 > 0.0 ? s1 * s1 / s2 : 0.0);
      const Estimate e = mean_estimate(vals);
      gap(static_cast<Eigen::Index>(j), 0) = e.value - std::exp(-potential(spec, points[j]));
      se(static_cast<Eigen::Index>(j), 0) = e.stderr;
    }
    const std::string id = "martingale@" + format_double(t);
    if (worst_ess < kMartingaleMinEss) {
      // A handful of paths carry the whole mean; the sample stderr is not a
      // usable scale, so the point is logged rather than graded.
      details.push_back(info_report(id, max_abs(gap), 0.0,
                                    "effective sample size " + format_double(worst_ess) +
                                        " below " + format_double(kMartingaleMinEss)));
      continue;
    }
    details.push_back(make_report(id, compare_entries(gap, se, sigmas), sigmas));
  }
  return combine("martingale", std::move(details),
                 std::to_string(points.size()) + " points per time");
}

LemmaReport check_monotone_trace(const std::vector<LocalizationPath>& paths, double sigmas) {
  if (paths.size() < 2) throw std::invalid_argument("monotone trace: need 2 paths");
  const TimeGrid& g = *paths.front().grid;
  std::vector<LemmaReport> details;
  for (std::size_t k = 1; k < g.size(); ++k) {
    std::vector<double> diff;
    diff.reserve(paths.size());
    for (const auto& p : paths) diff.push_back(p.tilt[k].A.trace() - p.tilt[k - 1].A.trace());
    const Estimate e = mean_estimate(diff);
    details.push_back(bound_report("monotone-trace@" + format_double(g.points[k]), e.value,
                                   e.stderr, 0.0, sigmas));
  }
  return combine("monotone-trace", std::move(details));
}

namespace {

struct DriverPair {
  std::vector<Vector> sde;
  std::vector<Vector> direct;
};

DriverPair simulate_drivers(const MeasureSpec& spec, int n_paths, int steps, std::uint64_t seed,
                            double t_end, int workers) {
  auto grid = std::make_shared<const TimeGrid>(uniform_grid(t_end, steps));
  EnsembleOptions opt;
  opt.n_paths = n_paths;
  opt.seed = seed;
  opt.workers = workers;
  opt.driver = Driver::SDE;
  const auto sde = simulate_ensemble(spec, grid, opt);
  DriverPair out;
  for (const auto& p : sde) out.sde.push_back(p.theta.back());
  // Direct theta_{t_end} = t_end X + W_{t_end}; tilts are not needed.
  out.direct.resize(static_cast<std::size_t>(n_paths));
  parallel_for(out.direct.size(), workers, [&](std::size_t i) {
    Rng rng = make_stream(seed, StreamTag::Paths, i);
    const auto inc = brownian_increments(*grid, spec.dim(), rng, false);
    Vector w = Vector::Zero(spec.dim());
    for (const auto& d : inc) w += d;
    out.direct[i] = t_end * sample_point(spec, rng) + w;
  });
  return out;
}

}  // namespace

LemmaReport check_driver_equivalence(const MeasureSpec& spec, int n_paths, int steps,
                                     std::uint64_t seed, double t_end, double sigmas,
                                     double level, int workers) {
  if (n_paths < 2) throw std::invalid_argument("driver equivalence: need 2 paths");
  const DriverPair d = simulate_drivers(spec, n_paths, steps, seed, t_end, workers);
  const int n = spec.dim();
  std::vector<LemmaReport> details;
  for (int i = 0; i < n; ++i) {
    std::vector<Vector> rows;
    std::vector<double> a, b;
    for (int p = 0; p < n_paths; ++p) {
      const double s = d.sde[static_cast<std::size_t>(p)](i);
      const double x = d.direct[static_cast<std::size_t>(p)](i);
      Vector row(4);
      row << s, x, s * s, x * x;
      rows.push_back(row);
      a.push_back(s);
      b.push_back(x);
    }
    const Estimate dmean = jackknife(rows, [](const Vector& m) { return m(0) - m(1); });
    const Estimate dvar = jackknife(rows, [](const Vector& m) {
      return (m(2) - m(0) * m(0)) - (m(3) - m(1) * m(1));
    });
    const std::string c = std::to_string(i);
    details.push_back(equality_report("driver-mean[" + c + "]", dmean.value, 0.0, dmean.stderr,
                                      sigmas, 0.0, "paired sde - direct"));
    details.push_back(equality_report("driver-variance[" + c + "]", dvar.value, 0.0, dvar.stderr,
                                      sigmas, 0.0, "paired sde - direct"));
    const KsResult ks = ks_two_sample(a, b);
    LemmaReport kr;
    kr.check_id = "driver-ks[" + c + "]";
    kr.statistic = ks.statistic;
    // Asymptotic critical distance c(level) sqrt((n + m) / (n m)).
    kr.tolerance = std::sqrt(-0.5 * std::log(0.5 * level)) * std::sqrt(2.0 / n_paths);
    kr.stderr = 0.0;
    kr.verdict = ks.pass(level) ? Verdict::Pass : Verdict::Fail;
    kr.notes = "p=" + format_double(ks.p_value);
    details.push_back(kr);
  }
  std::ostringstream notes;
  notes << n_paths << " paths, step " << t_end / steps << ", common Brownian increments";
  return combine("driver-equivalence", std::move(details), notes.str());
}

std::vector<double> driver_ks_distances(const MeasureSpec& spec, int n_paths,
                                        const std::vector<int>& steps, std::uint64_t seed,
                                        double t_end, int workers) {
  std::vector<double> out;
  for (int s : steps) {
    const DriverPair d = simulate_drivers(spec, n_paths, s, seed, t_end, workers);
    std::vector<double> a, b;
    for (const auto& v : d.sde) a.push_back(v(0));
    for (const auto& v : d.direct) b.push_back(v(0));
    out.push_back(ks_two_sample(a, b).statistic);
  }
  return out;
}

}  // namespace sloclab
