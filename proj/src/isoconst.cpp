#include "sloclab/isoconst.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sloclab {

double gaussian_isotropic_constant() {
  return 1.0 / std::sqrt(2.0 * std::numbers::pi * std::numbers::e);
}

IsotropicConstantReport isotropic_constant(const MeasureSpec& spec,
                                           const EntropyOptions& options) {
  const Moments mo = analytic_moments(spec);
  if (max_abs(mo.mean) > 1e-9) {
    throw std::invalid_argument("isotropic_constant: '" + spec.label() +
                                "' is not centered; isotropize first");
  }
  const double n = spec.dim();
  IsotropicConstantReport r;
  r.ent = differential_entropy(spec, options);
  const Eigen::LLT<Matrix> llt(mo.cov);
  const double log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  r.det_cov_pow = std::exp(log_det / (2.0 * n));
  r.L = std::exp(-r.ent.value / n) * r.det_cov_pow;
  r.L_stderr = r.L * r.ent.stderr / n;
  const double log_f0 = -potential(spec, Vector::Zero(spec.dim()));
  r.sandwich_middle = std::exp(log_f0 / n) * r.det_cov_pow;
  const double slack = 1e-12 * r.L + 4.0 * r.L_stderr;
  r.sandwich_holds = r.L <= r.sandwich_middle + slack &&
                     r.sandwich_middle <= std::numbers::e * r.L + std::numbers::e * slack;
  return r;
}

Marginal marginal(const MeasureSpec& spec, const SubspaceBasis& basis, int samples,
                  std::uint64_t seed) {
  if (basis.ambient_dim() != spec.dim()) {
    throw std::invalid_argument("marginal: basis ambient dimension does not match the measure");
  }
  Marginal out;
  const int k = basis.dim();
  if (auto idx = basis.coordinate_indices()) {
    if (auto fs = product_view(spec)) {
      std::vector<Factor1D> sub;
      for (int i : *idx) sub.push_back((*fs)[static_cast<std::size_t>(i)]);
      out.spec = make_product_factors(std::move(sub));
      return out;
    }
  }
  if (spec.family() == Family::Gaussian) {
    out.spec = make_gaussian(k);
    return out;
  }
  if (spec.family() == Family::UniformBall) {
    out.spec = make_ball_marginal(spec.ball_ambient_dim(), k, spec.ball_radius());
    return out;
  }
  if (samples <= 0) return out;
  Rng rng = make_stream(seed, StreamTag::Marginal, 0);
  out.samples = basis.vectors().transpose() * sample(spec, rng, samples);
  return out;
}

namespace {

std::vector<Vector> final_covariances(const std::vector<LocalizationPath>& paths,
                                      const Matrix* project) {
  std::vector<Vector> rows;
  rows.reserve(paths.size());
  for (const auto& p : paths) {
    const Matrix& a = p.tilt.back().A;
    rows.push_back(flatten(project ? Matrix(project->transpose() * a * *project) : a));
  }
  return rows;
}

Vector mean_row(const std::vector<Vector>& rows) {
  Vector m = Vector::Zero(rows.front().size());
  for (const auto& r : rows) m += r;
  return m / static_cast<double>(rows.size());
}

}  // namespace

LemmaReport check_projection_lemma(const MeasureSpec& spec, const SubspaceBasis& basis, double t,
                                   int n_paths, std::uint64_t seed, double sigmas,
                                   bool expect_equality, int workers) {
  if (!(t > 0.0)) throw std::invalid_argument("projection lemma: t must be positive");
  const Marginal mg = marginal(spec, basis);
  if (!mg.spec) {
    throw std::invalid_argument(
        "projection lemma: the marginal of '" + spec.label() +
        "' is only available as samples; use a coordinate subspace of a product, a Gaussian or "
        "a ball");
  }
  auto grid = std::make_shared<const TimeGrid>(uniform_grid(t, 1));
  EnsembleOptions opt;
  opt.n_paths = n_paths;
  opt.seed = seed;
  opt.workers = workers;
  const auto full = simulate_ensemble(spec, grid, opt);
  opt.seed = mix64(seed + static_cast<std::uint64_t>(StreamTag::Marginal));
  const auto sub = simulate_ensemble(*mg.spec, grid, opt);

  const Matrix v = basis.vectors();
  const int k = basis.dim();
  const auto rows_full = final_covariances(full, &v);
  const auto rows_sub = final_covariances(sub, nullptr);
  const Vector m_full = mean_row(rows_full);
  const Vector m_sub = mean_row(rows_sub);
  auto diff_min = [k](const Vector& sub_mean, const Vector& full_mean) {
    return lambda_min(unflatten(sub_mean, k) - unflatten(full_mean, k));
  };
  const Estimate j1 = jackknife(rows_full, [&](const Vector& m) { return diff_min(m_sub, m); });
  const Estimate j2 = jackknife(rows_sub, [&](const Vector& m) { return diff_min(m, m_full); });
  const double value = diff_min(m_sub, m_full);
  const double se = std::hypot(j1.stderr, j2.stderr);

  std::vector<LemmaReport> details;
  std::ostringstream notes;
  notes << spec.label() << " onto " << k << "-dim subspace, t=" << t << ", " << n_paths
        << " paths per ensemble";
  details.push_back(bound_report("projection-psd", value, se, 0.0, sigmas, false, notes.str()));
  if (expect_equality) {
    std::vector<Matrix> a_full, a_sub;
    for (const auto& r : rows_full) a_full.push_back(unflatten(r, k));
    for (const auto& r : rows_sub) a_sub.push_back(unflatten(r, k));
    const MatrixEstimate e_full = mean_estimate(a_full);
    const MatrixEstimate e_sub = mean_estimate(a_sub);
    const Matrix se_m = (e_full.stderr.cwiseAbs2() + e_sub.stderr.cwiseAbs2()).cwiseSqrt();
    details.push_back(make_report("projection-equality",
                                  compare_entries(e_sub.mean - e_full.mean, se_m, sigmas), sigmas));
  }
  return combine("projection-lemma", std::move(details), notes.str());
}

std::vector<std::string> default_catalog() {
  return {"gaussian:1",     "gaussian:2",      "gaussian:4",     "gaussian:8",
          "cube:1",         "cube:2",          "cube:4",         "cube:8",
          "ball:1",         "ball:2",          "ball:3",         "ball:4",
          "product:exp",    "product:laplace", "product:tgauss", "product:uniform",
          "product:exp,laplace,tgauss,uniform", "box:1,2"};
}

std::vector<LRow> l_bounds_sweep(const std::vector<std::string>& catalog) {
  std::vector<LRow> rows;
  const double lower = gaussian_isotropic_constant();
  for (const auto& id : catalog) {
    const MeasureSpec spec = isotropize(parse_measure(id));
    const IsotropicConstantReport rep = isotropic_constant(spec);
    LRow row;
    row.id = id;
    row.L = rep.L;
    row.L_stderr = rep.L_stderr;
    row.method = std::string(to_string(rep.ent.method));
    row.above_gaussian = rep.L >= lower - 1e-9 - 4.0 * rep.L_stderr;
    row.sandwich_middle = rep.sandwich_middle;
    row.sandwich_holds = rep.sandwich_holds;
    rows.push_back(row);
  }
  return rows;
}

LemmaReport check_l_bounds(const std::vector<LRow>& rows) {
  std::vector<LemmaReport> details;
  const double lower = gaussian_isotropic_constant();
  double best = 0.0;
  std::string best_id;
  for (const auto& row : rows) {
    LemmaReport r = bound_report("L-lower@" + row.id, row.L, row.L_stderr, lower - 1e-9, 4.0, false);
    if (std::abs(row.L - lower) <= 1e-9) r.notes = "lower bound attained";
    details.push_back(r);
    LemmaReport s;
    s.check_id = "sandwich@" + row.id;
    s.statistic = row.sandwich_middle;
    s.verdict = row.sandwich_holds ? Verdict::Pass : Verdict::Fail;
    s.notes = "L <= f(0)^(1/n) det^(1/2n) <= e L";
    details.push_back(s);
    if (row.L > best) {
      best = row.L;
      best_id = row.id;
    }
  }
  details.push_back(info_report("L-max", best, 0.0, "largest L in catalog: " + best_id));
  return combine("l-bounds", std::move(details));
}

}  // namespace sloclab
