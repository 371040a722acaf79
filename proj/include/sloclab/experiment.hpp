#pragma once

// Config-driven runner: one JSON config selects a measure, a time grid, a
// path budget and a list of checks; `run` simulates, grades and writes
// times.csv, follmer.csv and report.json into the output directory.

#include "sloclab/localization.hpp"
#include "sloclab/report.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sloclab {

struct GridConfig {
  GridKind kind = GridKind::Geometric;
  double t_min = 0.01;
  double t_max = 100.0;
  int points = 40;
};

struct ExperimentConfig {
  std::string measure = "gaussian:4";
  std::optional<int> dim;  // cross-checked against the measure id
  int n_paths = 256;
  GridConfig grid;
  std::uint64_t seed = 42;
  std::vector<std::string> checks;  // empty: every registered check
  std::filesystem::path output_dir = "sloclab-out";
  double tolerance_sigma = 4.0;
  int workers = 0;  // 0: processor count
  Driver driver = Driver::Direct;
  // The r-integral checks run on their own dyadic grid 2^(j/5) up to the
  // first power of two >= this value.
  double de_bruijn_t_max = 1e6;
  double xi = 0.5;
  // Upper end of the proof-chain window, as a time (r = t / (1 + t)).
  double audit_t_max = 128.0;
  int sde_steps = 64;  // driver-equivalence step count on [0, 1]
};

// Parses JSON text.  Errors (syntax with line:column, unknown keys, wrong
// types, failed invariants) throw ConfigError naming the field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);
// Invariants: n_paths >= 2, t_min > 0, points >= 10, known check ids,
// positive tolerance, and dim consistent with the measure.
void validate_config(const ExperimentConfig& config);
std::string to_json(const ExperimentConfig& config);

// SLOCLAB_<FIELD> environment variables (MEASURE, DIM, N_PATHS or PATHS,
// SEED, OUTPUT_DIR or OUT, TOLERANCE_SIGMA, WORKERS, DRIVER, CHECKS as a
// comma list, GRID_KIND, GRID_T_MIN, GRID_T_MAX, GRID_POINTS,
// DE_BRUIJN_T_MAX, XI, AUDIT_T_MAX, SDE_STEPS).  `env` maps names to values; pass
// environment_overrides() for the process environment.
void apply_overrides(ExperimentConfig& config, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> environment_overrides();

struct CheckInfo {
  std::string id;
  std::string statement;  // the identity or inequality graded
  bool info_only = false;
  std::string note;
};

// Every check id the runner knows, in execution order.
const std::vector<CheckInfo>& check_registry();
const CheckInfo* find_check(const std::string& id);

TimeGrid build_grid(const GridConfig& grid);
// The measure named by the config, isotropized when it is not isotropic.
MeasureSpec resolve_measure(const ExperimentConfig& config, bool* isotropized = nullptr);

struct RunResult {
  int exit_code = 0;  // 0 all graded checks pass, 2 any FAIL
  std::vector<LemmaReport> reports;
  std::vector<std::filesystem::path> artifacts;
};

// Simulates the main ensemble and writes times.csv and follmer.csv.
RunResult simulate(const ExperimentConfig& config);
// simulate plus every configured check, then report.json.
RunResult run(const ExperimentConfig& config);

// Rows of (t, theta, logZ, a, A) for every t and theta = s * (1, ..., 1).
std::string tilt_probe_csv(const MeasureSpec& spec, const std::vector<double>& ts,
                           const std::vector<double>& scales);
std::string lk_table_csv(const std::vector<std::string>& catalog);
std::string list_checks_text();

// Report records as JSON text: {id, statistic, stderr, tolerance, verdict,
// notes, details}.
std::string reports_json(const std::vector<LemmaReport>& reports, const ExperimentConfig& config);

// 17 significant digits, '.' decimal point regardless of locale.
std::string csv_double(double x);

}  // namespace sloclab
