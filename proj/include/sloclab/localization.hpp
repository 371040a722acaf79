#pragma once

// Stochastic localization: theta_t = t X + W_t (direct driver) or the
// Euler-Maruyama scheme for d theta = dW + a(t, theta) dt, ensemble
// statistics of the covariance process A_t and the checks built on them.

#include "sloclab/measures.hpp"
#include "sloclab/report.hpp"
#include "sloclab/stats.hpp"
#include "sloclab/tilt.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace sloclab {

enum class GridKind { Geometric, Uniform };

std::string_view to_string(GridKind k);

struct TimeGrid {
  std::vector<double> points;  // points[0] == 0, strictly increasing
  GridKind kind = GridKind::Geometric;

  std::size_t size() const { return points.size(); }
  // Index of the grid time within relative distance `tol` of t.
  std::optional<std::size_t> find(double t, double tol = 1e-9) const;
  std::size_t require(double t) const;
};

// t = 0 followed by `points` geometric times on [t_min, t_max].
TimeGrid geometric_grid(double t_min, double t_max, int points);
// 0, h, 2h, ..., steps * h = t_max.
TimeGrid uniform_grid(double t_max, int steps);
// t = 0 followed by 2^(j / per_octave) for j in [min_exp * per_octave, max_exp * per_octave].
// Every power of two in range is represented exactly.  Kind is Geometric.
TimeGrid dyadic_grid(int per_octave, int min_exp, int max_exp);
// 40 geometric points on [0.01, 100] plus t = 0.
TimeGrid default_grid();
// Throws std::invalid_argument unless strictly increasing from 0, and for
// geometric grids every step ratio is at most 1.5.
void validate_grid(const TimeGrid& grid);

enum class Driver { Direct, SDE };

std::string_view to_string(Driver d);

struct LocalizationPath {
  std::shared_ptr<const TimeGrid> grid;
  std::vector<Vector> theta;     // theta_t at each grid time
  std::vector<Vector> brownian;  // W_t at each grid time
  std::vector<TiltState> tilt;   // p_{t, theta_t}
  Vector x_star;                 // hidden sample (direct driver only)
  Driver driver = Driver::Direct;
  std::uint64_t index = 0;
};

struct DriveOptions {
  TiltOptions tilt;
  // Forces every Brownian increment to zero (degenerate checks only).
  bool zero_noise = false;
};

// Both drivers draw the Brownian increments first, then X, from `rng`, so
// the same stream gives common random numbers across drivers.
LocalizationPath drive_direct(const MeasureSpec& spec, std::shared_ptr<const TimeGrid> grid,
                              Rng& rng, const DriveOptions& options = {});
LocalizationPath drive_sde(const MeasureSpec& spec, std::shared_ptr<const TimeGrid> grid,
                           Rng& rng, const DriveOptions& options = {});

struct EnsembleOptions {
  int n_paths = 256;
  std::uint64_t seed = 42;
  Driver driver = Driver::Direct;
  int workers = 1;
  DriveOptions drive;
};

// Path i uses stream make_stream(seed, Paths, i) (and Probe, i for any
// rejection tilts), so the ensemble is independent of the worker count.
std::vector<LocalizationPath> simulate_ensemble(const MeasureSpec& spec,
                                                std::shared_ptr<const TimeGrid> grid,
                                                const EnsembleOptions& options);

struct TimeStats {
  double t = 0.0;
  MatrixEstimate A;              // E A_t
  MatrixEstimate aa;             // E a_t a_t^T
  MatrixEstimate decomposition;  // E (A_t + a_t a_t^T) - Id
  Estimate tr_A;
  Estimate tr_A2;
  double lambda_min = 0.0;       // of E A_t
  double lambda_max = 0.0;
  double max_t_lambda = 0.0;     // max over paths of t * lambda_max(A_t)
};

struct EnsembleStats {
  std::shared_ptr<const TimeGrid> grid;
  int n_paths = 0;
  int dim = 0;
  std::vector<TimeStats> times;
};

// Throws std::invalid_argument for fewer than 2 paths or mismatched grids.
EnsembleStats ensemble_stats(const std::vector<LocalizationPath>& paths);

LemmaReport check_variance_decomposition(const EnsembleStats& stats, double sigmas = 4.0);

// d/dt E A_t = -E A_t^2 at every interior grid time (or `trace` version).
LemmaReport check_derivative_identity(const std::vector<LocalizationPath>& paths,
                                      bool trace = false, double sigmas = 4.0);

// Per path and grid time t > 0: t * lambda_max(A_t) <= 1 + 1e-6 for exact
// tilts, 1 + 3 stderr for rejection tilts.
LemmaReport check_spectral_bound(const std::vector<LocalizationPath>& paths);

// INFO: max over the grid of E tr[A_t^2] / n.
LemmaReport estimate_guan_ratio(const EnsembleStats& stats);

// E (a_t - theta_t / (1 + t)) theta_t^T = 0 at the given times (all t > 0
// when empty).
LemmaReport check_orthogonality(const std::vector<LocalizationPath>& paths,
                                const std::vector<double>& times = {}, double sigmas = 4.0);

// E p_{t, theta_t}(x) = rho(x) at the given points and times.  A time whose
// weights have effective sample size (sum w)^2 / sum w^2 below
// kMartingaleMinEss is reported INFO.
inline constexpr double kMartingaleMinEss = 50.0;
LemmaReport check_martingale(const MeasureSpec& spec, const std::vector<LocalizationPath>& paths,
                             const std::vector<Vector>& points, const std::vector<double>& times,
                             double sigmas = 4.0);

// E tr A_t is non-increasing along the grid.
LemmaReport check_monotone_trace(const std::vector<LocalizationPath>& paths, double sigmas = 4.0);

// SDE (step t_end / steps) against the direct driver at t_end: paired
// per-coordinate mean and variance within `sigmas`, and a two-sample KS test
// per coordinate at `level`.
LemmaReport check_driver_equivalence(const MeasureSpec& spec, int n_paths, int steps,
                                     std::uint64_t seed, double t_end = 1.0,
                                     double sigmas = 4.0, double level = 0.01, int workers = 1);

// Two-sample KS distances between SDE and direct theta_{t_end} marginals on
// coordinate 0 for each step count (diagnostic for step refinement).
std::vector<double> driver_ks_distances(const MeasureSpec& spec, int n_paths,
                                        const std::vector<int>& steps, std::uint64_t seed,
                                        double t_end = 1.0, int workers = 1);

}  // namespace sloclab
