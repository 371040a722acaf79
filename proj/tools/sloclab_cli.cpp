// sloclab: simulate, verify, tilt-probe, lk-table, list-checks.
// Precedence: built-in defaults < --config file < SLOCLAB_* env < flags.

#include "sloclab/errors.hpp"
#include "sloclab/experiment.hpp"
#include "sloclab/isoconst.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> paths;
  std::string measure;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "64-bit seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--paths", f.paths, "number of localization paths");
  cmd->add_option("--measure", f.measure, "measure id, e.g. cube:8");
}

sloclab::ExperimentConfig resolve_config(const CommonFlags& f) {
  const auto env = sloclab::environment_overrides();
  sloclab::ExperimentConfig c;
  std::string file = f.config;
  if (file.empty()) {
    if (auto it = env.find("SLOCLAB_CONFIG"); it != env.end()) file = it->second;
  }
  if (!file.empty()) c = sloclab::load_config(file);
  sloclab::apply_overrides(c, env);
  if (f.seed) c.seed = *f.seed;
  if (f.paths) c.n_paths = *f.paths;
  if (!f.out.empty()) c.output_dir = f.out;
  if (!f.measure.empty()) {
    c.measure = f.measure;
    c.dim.reset();
  }
  sloclab::validate_config(c);
  return c;
}

void emit(const std::string& text, const std::string& out_dir, const std::string& name) {
  if (out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(out_dir);
  const auto file = std::filesystem::path(out_dir) / name;
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + file.string());
  std::cout << file.string() << '\n';
}

void print_report(const sloclab::LemmaReport& r, int depth) {
  std::cout << std::string(static_cast<std::size_t>(depth) * 2, ' ') << to_string(r.verdict)
            << "  " << r.check_id << "  statistic=" << sloclab::format_double(r.statistic)
            << " tolerance=" << sloclab::format_double(r.tolerance);
  if (!r.notes.empty()) std::cout << "  (" << r.notes << ')';
  std::cout << '\n';
  if (depth == 0) {
    for (const auto& d : r.details) print_report(d, depth + 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic localization lab"};
  app.require_subcommand(1);

  CommonFlags sim_flags, verify_flags, probe_flags, lk_flags;
  bool verbose = false;
  std::vector<double> probe_t{0.1, 1.0, 10.0};
  std::vector<double> probe_theta{-1.0, 0.0, 1.0};

  auto* sim = app.add_subcommand("simulate", "simulate the ensemble; write times.csv, follmer.csv");
  add_common(sim, sim_flags);
  auto* verify = app.add_subcommand("verify", "simulate and grade checks; write report.json");
  add_common(verify, verify_flags);
  verify->add_flag("-v,--verbose", verbose, "print sub-checks");
  auto* probe = app.add_subcommand("tilt-probe", "print logZ, a, A as CSV over a (t, theta) grid");
  add_common(probe, probe_flags);
  probe->add_option("--t", probe_t, "tilt times")->delimiter(',');
  probe->add_option("--theta", probe_theta, "theta = s * (1, ..., 1) for each s")->delimiter(',');
  auto* lk = app.add_subcommand("lk-table", "isotropic constants of the catalog as CSV");
  add_common(lk, lk_flags);
  auto* list = app.add_subcommand("list-checks", "check ids and the statements they grade");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      const auto config = resolve_config(sim_flags);
      const auto res = sloclab::simulate(config);
      for (const auto& p : res.artifacts) std::cout << p.string() << '\n';
      return 0;
    }
    if (*verify) {
      const auto config = resolve_config(verify_flags);
      const auto res = sloclab::run(config);
      for (const auto& r : res.reports) {
        if (verbose) {
          print_report(r, 0);
        } else {
          std::cout << to_string(r.verdict) << "  " << r.check_id << '\n';
        }
      }
      std::cout << "report: " << (config.output_dir / "report.json").string() << '\n';
      return res.exit_code;
    }
    if (*probe) {
      const auto config = resolve_config(probe_flags);
      const auto spec = sloclab::parse_measure(config.measure);
      emit(sloclab::tilt_probe_csv(spec, probe_t, probe_theta), probe_flags.out, "tilt_probe.csv");
      return 0;
    }
    if (*lk) {
      std::vector<std::string> catalog = sloclab::default_catalog();
      if (!lk_flags.measure.empty()) catalog = {lk_flags.measure};
      emit(sloclab::lk_table_csv(catalog), lk_flags.out, "lk_table.csv");
      return 0;
    }
    if (*list) {
      std::cout << sloclab::list_checks_text();
      return 0;
    }
  } catch (const sloclab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
