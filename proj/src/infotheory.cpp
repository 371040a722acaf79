#include "sloclab/infotheory.hpp"

#include "sloclab/finite_diff.hpp"
#include "sloclab/quadrature.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sloclab {

namespace {

const double kLog2PiE = std::log(2.0 * std::numbers::pi * std::numbers::e);

std::optional<double> closed_form_entropy(const MeasureSpec& spec) {
  switch (spec.family()) {
    case Family::Gaussian: return 0.5 * spec.dim() * kLog2PiE;
    case Family::UniformBox:
    case Family::Product1D: {
      double s = 0.0;
      for (const auto& f : spec.factors()) s += factor_entropy(f);
      return s;
    }
    case Family::UniformBall: {
      const int n = spec.ball_ambient_dim();
      const int k = spec.dim();
      const double r = spec.ball_radius();
      const double log_norm = log_unit_ball_volume(n) + n * std::log(r);
      if (k == n) return log_norm;
      // |Y|^2 / R^2 ~ Beta(k/2, p + 1) for the k-marginal, p = (n - k)/2.
      const double p = 0.5 * (n - k);
      const double e_log_gap = 2.0 * std::log(r) + boost::math::digamma(p + 1.0) -
                               boost::math::digamma(0.5 * n + 1.0);
      return log_norm - log_unit_ball_volume(n - k) - p * e_log_gap;
    }
    case Family::AffineImage: {
      const auto b = closed_form_entropy(spec.base());
      if (!b) return std::nullopt;
      return *b + spec.log_abs_det();
    }
  }
  return std::nullopt;
}

double quadrature_factor_entropy(const Factor1D& f) {
  quad::LogConcaveProblem p;
  std::tie(p.lo, p.hi) = factor_support(f);
  p.breakpoints = factor_kinks(f);
  p.scale = f.scale;
  p.has_mode = true;
  p.mode = factor_tilt_mode(f, 0.0, 0.0);
  p.start = p.mode;
  auto psi = [&](double x) { return factor_potential(f, x); };
  auto lw = [&](double x) { return -psi(x); };
  auto extra = [&](double x) {
    const double v = psi(x);
    return std::isfinite(v) ? v : 0.0;
  };
  return quad::log_concave_moments(p, lw, extra).extra;
}

EntropyEstimate quadrature_entropy(const MeasureSpec& spec) {
  EntropyEstimate e;
  e.method = EntropyMethod::Quadrature1D;
  if (auto fs = product_view(spec)) {
    for (const auto& f : *fs) e.value += quadrature_factor_entropy(f);
    return e;
  }
  if (spec.family() == Family::Gaussian) {
    for (int i = 0; i < spec.dim(); ++i) e.value += quadrature_factor_entropy(Factor1D{});
    return e;
  }
  if (spec.family() == Family::UniformBall && spec.dim() == 1) {
    const double r = spec.ball_radius();
    quad::LogConcaveProblem p;
    p.lo = -r;
    p.hi = r;
    p.scale = r;
    p.has_mode = true;
    p.mode = 0.0;
    auto psi = [&](double x) { return potential(spec, Vector::Constant(1, x)); };
    auto lw = [&](double x) { return -psi(x); };
    auto extra = [&](double x) {
      const double v = psi(x);
      return std::isfinite(v) ? v : 0.0;
    };
    e.value = quad::log_concave_moments(p, lw, extra).extra;
    return e;
  }
  throw std::invalid_argument("entropy: no quadrature route for '" + spec.label() + "'");
}

EntropyEstimate plugin_entropy(const MeasureSpec& spec, int samples, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::Entropy, 0);
  const Matrix xs = sample(spec, rng, samples);
  std::vector<double> psi;
  psi.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) psi.push_back(potential(spec, xs.col(i)));
  const Estimate m = mean_estimate(psi);
  return EntropyEstimate{m.value, EntropyMethod::PlugInMC, m.stderr};
}

}  // namespace

std::string_view to_string(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::ClosedForm: return "ClosedForm";
    case EntropyMethod::Quadrature1D: return "Quadrature1D";
    case EntropyMethod::PlugInMC: return "PlugInMC";
    case EntropyMethod::KNN: return "KNN";
  }
  return "?";
}

EntropyEstimate knn_entropy(const Matrix& samples, int k) {
  const auto n = samples.rows();
  const auto count = samples.cols();
  if (count <= k + 1) throw std::invalid_argument("knn entropy: too few samples");
  std::vector<double> log_eps(static_cast<std::size_t>(count));
  std::vector<double> d2(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < count; ++j) {
      d2[static_cast<std::size_t>(j)] =
          j == i ? std::numeric_limits<double>::infinity()
                 : (samples.col(i) - samples.col(j)).squaredNorm();
    }
    std::nth_element(d2.begin(), d2.begin() + (k - 1), d2.end());
    log_eps[static_cast<std::size_t>(i)] = 0.5 * std::log(d2[static_cast<std::size_t>(k - 1)]);
  }
  const Estimate m = mean_estimate(log_eps);
  const double nn = static_cast<double>(n);
  EntropyEstimate e;
  e.method = EntropyMethod::KNN;
  e.value = boost::math::digamma(static_cast<double>(count)) - boost::math::digamma(k) +
            log_unit_ball_volume(static_cast<int>(n)) + nn * m.value;
  e.stderr = nn * m.stderr;
  return e;
}

EntropyEstimate differential_entropy(const MeasureSpec& spec, const EntropyOptions& options) {
  EntropyMethod method = options.method.value_or(
      spec.capabilities().analytic_entropy && closed_form_entropy(spec) ? EntropyMethod::ClosedForm
                                                                        : EntropyMethod::PlugInMC);
  switch (method) {
    case EntropyMethod::ClosedForm: {
      const auto v = closed_form_entropy(spec);
      if (!v) throw std::invalid_argument("entropy: no closed form for '" + spec.label() + "'");
      return EntropyEstimate{*v, EntropyMethod::ClosedForm, 0.0};
    }
    case EntropyMethod::Quadrature1D: return quadrature_entropy(spec);
    case EntropyMethod::PlugInMC: return plugin_entropy(spec, options.samples, options.seed);
    case EntropyMethod::KNN: {
      Rng rng = make_stream(options.seed, StreamTag::Entropy, 1);
      return knn_entropy(sample(spec, rng, options.samples), options.knn_k);
    }
  }
  throw std::logic_error("entropy: unknown method");
}

Estimate kl_to_gaussian(const MeasureSpec& spec, const EntropyOptions& options) {
  if (!is_isotropic(spec, 1e-9)) {
    throw std::invalid_argument("kl_to_gaussian: '" + spec.label() + "' is not isotropic");
  }
  const EntropyEstimate e = differential_entropy(spec, options);
  return Estimate{-e.value + 0.5 * spec.dim() * kLog2PiE, e.stderr};
}

LemmaReport check_kl_nonnegative(const MeasureSpec& spec, double sigmas) {
  const Estimate kl = kl_to_gaussian(spec);
  return bound_report("kl-nonnegative", kl.value, kl.stderr, 0.0, sigmas, false, spec.label());
}

LemmaReport de_bruijn_check(const FrameEnsemble& frames, const Estimate& kl, double sigmas,
                            double rel_tol) {
  if (frames.size() < 2) throw std::invalid_argument("de Bruijn: need at least 2 paths");
  const std::vector<double> rs = r_grid(frames);
  if (rs.size() < 10) throw std::invalid_argument("de Bruijn: grid too coarse (< 10 r-points)");
  const std::size_t last = rs.size() - 1;
  const auto w = trapezoid_weights(rs, 0, last);
  std::vector<double> per_path;
  per_path.reserve(frames.size());
  std::vector<double> end_energy;
  for (const auto& p : frames) {
    double s = 0.0;
    for (std::size_t k = 0; k <= last; ++k) s += w[k] * 0.5 * p[k].v.squaredNorm();
    per_path.push_back(s);
    end_energy.push_back(p[last].v.squaredNorm());
  }
  const Estimate integral = mean_estimate(per_path);
  const double e_end = mean_estimate(end_energy).value;
  const double r_max = rs[last];
  // Tail models for (r_max, 1): bounded integrand, and C / sqrt(1 - r) growth.
  const double tail_flat = 0.5 * e_end * (1.0 - r_max);
  const double tail_sqrt = e_end * (1.0 - r_max);
  const double se = std::hypot(integral.stderr, kl.stderr);
  LemmaReport r;
  r.check_id = "de-bruijn";
  r.statistic = std::abs(integral.value - kl.value);
  r.stderr = se;
  r.tolerance = std::max(rel_tol * std::abs(kl.value), sigmas * se) + kRoundoff;
  r.verdict = r.statistic <= r.tolerance ? Verdict::Pass : Verdict::Fail;
  std::ostringstream notes;
  notes << "integral=" << format_double(integral.value) << " kl=" << format_double(kl.value)
        << " r_max=" << format_double(r_max) << " tail estimate in [" << tail_flat << ", "
        << tail_sqrt << "] (not added)";
  r.notes = notes.str();
  return r;
}

double factor_epi_deficit(FactorKind kind) {
  if (kind == FactorKind::Gaussian) return 0.0;
  static std::mutex mu;
  static std::array<std::optional<double>, 5> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[static_cast<std::size_t>(kind)];
  if (slot) return *slot;
  constexpr int kCells = 1 << 14;
  constexpr double kSpan = 12.0;
  const double h = 2.0 * kSpan / kCells;
  const Factor1D f{kind, 1.0, 0.0};
  std::vector<double> mass(kCells);
  double prev = factor_cdf(f, -kSpan);
  for (int j = 0; j < kCells; ++j) {
    const double next = factor_cdf(f, -kSpan + (j + 1) * h);
    mass[static_cast<std::size_t>(j)] = next - prev;
    prev = next;
  }
  std::vector<double> conv(2 * kCells - 1, 0.0);
  for (int i = 0; i < kCells; ++i) {
    const double mi = mass[static_cast<std::size_t>(i)];
    if (mi == 0.0) continue;
    double* out = conv.data() + i;
    for (int j = 0; j < kCells; ++j) out[j] += mi * mass[static_cast<std::size_t>(j)];
  }
  double total = 0.0;
  for (double q : conv) total += q;
  double ent = 0.0;
  for (double q : conv) {
    if (q > 0.0) {
      const double p = q / total;
      ent -= p * std::log(p / h);
    }
  }
  const double sum_entropy = ent - 0.5 * std::log(2.0);
  slot = sum_entropy - factor_entropy(f);
  return *slot;
}

DeficitReport epi_deficit(const MeasureSpec& spec, const EntropyOptions& options) {
  DeficitReport d;
  d.bn_upper = 2.0 * spec.dim();
  if (spec.family() == Family::Gaussian ||
      (spec.family() == Family::AffineImage && spec.base().family() == Family::Gaussian)) {
    d.method = EntropyMethod::ClosedForm;
    return d;
  }
  if (auto fs = product_view(spec)) {
    d.method = EntropyMethod::Quadrature1D;
    for (const auto& f : *fs) d.delta.value += factor_epi_deficit(f.kind);
    return d;
  }
  // KNN on both terms so their biases partly cancel.
  const int count = options.samples;
  Rng rng = make_stream(options.seed, StreamTag::Entropy, 2);
  const Matrix x1 = sample(spec, rng, count);
  const Matrix x2 = sample(spec, rng, count);
  const Matrix x3 = sample(spec, rng, count);
  const Matrix sum = (x1 + x2) / std::sqrt(2.0);
  const EntropyEstimate es = knn_entropy(sum, options.knn_k);
  const EntropyEstimate ex = knn_entropy(x3, options.knn_k);
  d.method = EntropyMethod::KNN;
  d.low_confidence = true;
  d.delta = Estimate{es.value - ex.value, std::hypot(es.stderr, ex.stderr)};
  return d;
}

LemmaReport check_epi_deficit(const MeasureSpec& spec, const DeficitReport& d, double sigmas) {
  std::vector<LemmaReport> details;
  details.push_back(bound_report("epi-nonnegative", d.delta.value, d.delta.stderr, 0.0, sigmas,
                                 false));
  details.push_back(bound_report("epi-upper-2n", d.delta.value, d.delta.stderr, d.bn_upper, sigmas));
  std::string notes = spec.label() + " delta=" + format_double(d.delta.value) + " via " +
                      std::string(to_string(d.method));
  if (d.low_confidence) notes += " (low confidence: KNN bias not quantified)";
  return combine("epi-deficit", std::move(details), notes);
}

namespace {

// Unbiased E|G - EG|^2 from column means of flattened G and |G|^2.
double variance_from_means(const Vector& mean_flat, double mean_sq, double n_units) {
  return n_units / (n_units - 1.0) * (mean_sq - mean_flat.squaredNorm());
}

struct RangeNodes {
  std::size_t first = 0;  // first grid index with r > xi (or == xi)
  double xi = 0.0;
  bool on_grid = false;
};

RangeNodes range_nodes(const std::vector<double>& rs, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("xi must lie in (0, 1)");
  if (xi < rs.front() || xi >= rs.back()) {
    throw std::invalid_argument("xi = " + format_double(xi) + " is outside the grid range");
  }
  RangeNodes out;
  out.xi = xi;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    if (std::abs(rs[k] - xi) <= 1e-12) {
      out.first = k;
      out.on_grid = true;
      return out;
    }
    if (rs[k] > xi) {
      out.first = k;
      return out;
    }
  }
  throw std::invalid_argument("xi outside the grid range");
}

}  // namespace

EmBound em_lower_bound(const FrameEnsemble& frames, double xi, std::optional<double> eps) {
  if (frames.size() < 2) throw std::invalid_argument("em bound: need at least 2 paths");
  const double e = eps.value_or(xi);
  const std::vector<double> rs = r_grid(frames);
  const RangeNodes nodes = range_nodes(rs, xi);
  const std::size_t last = rs.size() - 1;
  const std::size_t lo = nodes.on_grid ? nodes.first : nodes.first - 1;
  const int n = static_cast<int>(frames.front().front().gamma.rows());
  const std::size_t block = static_cast<std::size_t>(n * n + 1);
  const std::size_t count = last - lo + 1;
  std::vector<Vector> rows;
  rows.reserve(frames.size());
  for (const auto& p : frames) {
    Vector row(static_cast<Eigen::Index>(block * count));
    for (std::size_t k = lo; k <= last; ++k) {
      const auto off = static_cast<Eigen::Index>((k - lo) * block);
      row.segment(off, n * n) = flatten(p[k].gamma);
      row(off + n * n) = p[k].gamma.squaredNorm();
    }
    rows.push_back(std::move(row));
  }
  const double units = static_cast<double>(frames.size());
  auto integral = [&](const Vector& m) {
    auto var_at = [&](std::size_t k) {
      const auto off = static_cast<Eigen::Index>((k - lo) * block);
      return variance_from_means(m.segment(off, n * n), m(off + n * n), units) /
             (4.0 * (1.0 - rs[k]));
    };
    std::vector<double> xs;
    std::vector<double> ys;
    if (!nodes.on_grid) {
      const double w = (xi - rs[lo]) / (rs[lo + 1] - rs[lo]);
      xs.push_back(xi);
      ys.push_back((1.0 - w) * var_at(lo) + w * var_at(lo + 1));
    }
    for (std::size_t k = nodes.first; k <= last; ++k) {
      xs.push_back(rs[k]);
      ys.push_back(var_at(k));
    }
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < xs.size(); ++j) s += 0.5 * (xs[j + 1] - xs[j]) * (ys[j] + ys[j + 1]);
    return e * s;
  };
  EmBound out;
  out.value = jackknife(rows, integral);
  out.r_max = rs[last];
  std::ostringstream note;
  note << "eps=" << e << " integrated over [" << xi << ", " << out.r_max
       << "]; tail (r_max, 1) not observed";
  out.note = note.str();
  return out;
}

LemmaReport check_em_parity(const FrameEnsemble& frames, double xi, double sigmas) {
  if (frames.size() < 4) throw std::invalid_argument("em parity: need at least 4 paths");
  const std::vector<double> rs = r_grid(frames);
  const RangeNodes nodes = range_nodes(rs, xi);
  const int n = static_cast<int>(frames.front().front().gamma.rows());
  const double units = static_cast<double>(frames.size());
  std::vector<LemmaReport> details;
  for (std::size_t k = nodes.first; k < rs.size(); ++k) {
    std::vector<Vector> rows;
    for (const auto& p : frames) {
      Vector row(n * n + 1);
      row.head(n * n) = flatten(p[k].gamma);
      row(n * n) = p[k].gamma.squaredNorm();
      rows.push_back(std::move(row));
    }
    const Estimate direct = jackknife(rows, [&](const Vector& m) {
      return variance_from_means(m.head(n * n), m(n * n), units);
    });
    std::vector<double> pairs;
    for (std::size_t i = 0; i + 1 < frames.size(); i += 2) {
      pairs.push_back(0.5 * (frames[i][k].gamma - frames[i + 1][k].gamma).squaredNorm());
    }
    const Estimate split = mean_estimate(pairs);
    details.push_back(equality_report("em-parity@" + format_double(rs[k]), direct.value,
                                      split.value, std::hypot(direct.stderr, split.stderr),
                                      sigmas));
  }
  return combine("em-parity", std::move(details), "even/odd path pairs as independent copies");
}

LemmaReport check_em_bound(const EmBound& em, const Estimate& delta, double sigmas) {
  const double se = std::hypot(em.value.stderr, delta.stderr);
  LemmaReport r = bound_report("em-lower-bound", em.value.value, se, delta.value, sigmas, true,
                               "em=" + format_double(em.value.value) +
                                   " delta=" + format_double(delta.value) + "; " + em.note);
  return r;
}

LemmaReport proof_chain_audit(const FrameEnsemble& frames,
                              const std::vector<LocalizationPath>& paths, double xi,
                              const Estimate& delta, double sigmas, double r_upper) {
  if (frames.size() < 2) throw std::invalid_argument("proof chain: need at least 2 paths");
  const std::vector<double> rs = r_grid(frames);
  const std::size_t kx = r_index(frames, xi);
  std::size_t last = rs.size() - 1;
  while (last > 0 && rs[last] > r_upper + 1e-12) --last;
  if (kx == 0 || kx >= last) throw std::invalid_argument("proof chain: xi must be interior");
  const int n = static_cast<int>(frames.front().front().gamma.rows());
  const double m_dim = n;
  const double units = static_cast<double>(frames.size());
  const double big_r = rs[last];
  const Matrix id = Matrix::Identity(n, n);

  // Row layout per path: for every grid k, [flatten(Gamma) | |Id - Gamma|^2 | |v|^2].
  const Eigen::Index nn = n * n;
  const Eigen::Index block = nn + 2;
  std::vector<Vector> rows;
  rows.reserve(frames.size());
  for (const auto& p : frames) {
    Vector row(block * static_cast<Eigen::Index>(rs.size()));
    for (std::size_t k = 0; k <= last; ++k) {
      const Eigen::Index off = block * static_cast<Eigen::Index>(k);
      row.segment(off, nn) = flatten(p[k].gamma);
      row(off + nn) = (id - p[k].gamma).squaredNorm();
      row(off + nn + 1) = p[k].v.squaredNorm();
    }
    rows.push_back(std::move(row));
  }
  auto eg = [&](const Vector& m, std::size_t k) {
    return unflatten(m, n, block * static_cast<Eigen::Index>(k));
  };
  auto e_id_gamma = [&](const Vector& m, std::size_t k) {
    return m(block * static_cast<Eigen::Index>(k) + nn);
  };
  auto e_v2 = [&](const Vector& m, std::size_t k) {
    return m(block * static_cast<Eigen::Index>(k) + nn + 1);
  };
  // E|Gamma - E Gamma|^2 via the decomposition E|Id - Gamma|^2 - |Id - E Gamma|^2.
  auto e_var = [&](const Vector& m, std::size_t k) {
    return e_id_gamma(m, k) - (id - eg(m, k)).squaredNorm();
  };

  Vector full_mean = Vector::Zero(rows.front().size());
  for (const auto& r : rows) full_mean += r;
  full_mean /= units;

  double c_tilde = std::numeric_limits<double>::infinity();
  for (std::size_t k = kx; k <= last; ++k) c_tilde = std::min(c_tilde, lambda_min(eg(full_mean, k)));

  const auto w_fine = trapezoid_weights(rs, kx, last);
  const auto w_coarse = coarse_trapezoid_weights(rs, kx, last);
  const auto w_all = trapezoid_weights(rs, 0, last);

  auto integrate = [&](const std::vector<double>& w, auto&& f, const Vector& m) {
    double s = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
      if (w[k] != 0.0) s += w[k] * f(m, k);
    }
    return s;
  };
  auto id_gamma_over = [&](const Vector& m, std::size_t k) { return e_id_gamma(m, k) / (1.0 - rs[k]); };
  auto var_over = [&](const Vector& m, std::size_t k) { return e_var(m, k) / (1.0 - rs[k]); };

  std::vector<LemmaReport> lines;

  // Trace bound |Id - E Gamma_r|^2 / (1 - r) <= (1 - c~) E|v_r|^2 for r >= xi.
  {
    std::vector<LemmaReport> d;
    for (std::size_t k = kx; k <= last; ++k) {
      const Estimate gap = jackknife(rows, [&](const Vector& m) {
        return (id - eg(m, k)).squaredNorm() / (1.0 - rs[k]) - (1.0 - c_tilde) * e_v2(m, k);
      });
      d.push_back(bound_report("trace-bound@" + format_double(rs[k]), gap.value, gap.stderr, 0.0,
                               sigmas));
    }
    lines.push_back(combine("trace-bound", std::move(d),
                            "c~ = min lambda_min(E Gamma_r), r >= xi = " + format_double(c_tilde)));
  }

  // c~ Id <= E Gamma_r <= Id for r >= xi, and r E Gamma_r non-decreasing.
  {
    std::vector<LemmaReport> d;
    for (std::size_t k = kx; k <= last; ++k) {
      const Estimate lmax = jackknife(rows, [&](const Vector& m) { return lambda_max(eg(m, k)); });
      d.push_back(bound_report("gamma-le-id@" + format_double(rs[k]), lmax.value, lmax.stderr,
                               1.0, sigmas));
      if (k > kx) {
        const Estimate inc = jackknife(rows, [&](const Vector& m) {
          return lambda_min(rs[k] * eg(m, k) - rs[k - 1] * eg(m, k - 1));
        });
        d.push_back(bound_report("r-gamma-increasing@" + format_double(rs[k]), inc.value,
                                 inc.stderr, 0.0, sigmas, false));
      }
    }
    LemmaReport c;
    c.check_id = "c-tilde-positive";
    c.statistic = c_tilde;
    c.verdict = c_tilde > 0.0 ? Verdict::Pass : Verdict::Fail;
    d.push_back(c);
    lines.push_back(combine("gamma-sandwich", std::move(d)));
  }

  // Integration by parts on [xi, R]:
  //   int E|v|^2 = int E|Id - Gamma|^2/(1-r) + (1-xi) E|v_xi|^2 - (1-R) E|v_R|^2.
  {
    auto gap_with = [&](const std::vector<double>& w) {
      return [&, w](const Vector& m) {
        return integrate(w, e_v2, m) - integrate(w, id_gamma_over, m) -
               (1.0 - xi) * e_v2(m, kx) + (1.0 - big_r) * e_v2(m, last);
      };
    };
    const Estimate fine = jackknife(rows, gap_with(w_fine));
    const double coarse = gap_with(w_coarse)(full_mean);
    const double budget = std::abs(fine.value - coarse) / 3.0;
    LemmaReport r = equality_report("integration-by-parts", fine.value, 0.0, fine.stderr, sigmas,
                                    sigmas * budget);
    std::ostringstream notes;
    notes << "lhs=" << format_double(integrate(w_fine, e_v2, full_mean)) << " R=" << big_r
          << " trapezoid budget=" << budget;
    r.notes = notes.str();
    lines.push_back(r);
  }

  // Decomposition E|Gamma - E Gamma|^2 = E|Id - Gamma|^2 - |Id - E Gamma|^2 on the
  // sample itself (biased variance), exact up to round-off.
  {
    double worst = 0.0;
    for (std::size_t k = kx; k <= last; ++k) {
      const Matrix mean = eg(full_mean, k);
      double direct = 0.0;
      for (const auto& p : frames) direct += (p[k].gamma - mean).squaredNorm();
      direct /= units;
      const double via = e_var(full_mean, k);
      worst = std::max(worst, std::abs(direct - via) / std::max(1.0, std::abs(via)));
    }
    lines.push_back(equality_report("variance-decomposition-gamma", worst, 0.0, 0.0, sigmas, 0.0,
                                    "relative gap"));
  }

  // Chain 2m >= delta >= xi * int_xi^R E|Gamma - E Gamma|^2 / (4(1 - r)).
  {
    const Estimate em = jackknife(rows, [&](const Vector& m) {
      return xi * units / (units - 1.0) * integrate(w_fine, var_over, m) / 4.0;
    });
    std::vector<LemmaReport> d;
    d.push_back(bound_report("delta-le-2m", delta.value, delta.stderr, 2.0 * m_dim, sigmas));
    d.push_back(bound_report("delta-ge-em", em.value, std::hypot(em.stderr, delta.stderr),
                             delta.value, sigmas));
    lines.push_back(combine("deficit-chain", std::move(d),
                            "em=" + format_double(em.value) + " delta=" + format_double(delta.value)));
  }

  // 8m/xi >= int E|Gamma - E Gamma|^2/(1-r)
  //        >= int E|v|^2 - (1-xi) E|v_xi|^2 + (1-R) E|v_R|^2 - (1-c~) int E|v|^2.
  {
    std::vector<LemmaReport> d;
    const Estimate upper = jackknife(rows, [&](const Vector& m) {
      return units / (units - 1.0) * integrate(w_fine, var_over, m);
    });
    d.push_back(bound_report("variance-integral-le-8m/xi", upper.value, upper.stderr,
                             8.0 * m_dim / xi, sigmas));
    auto lower_gap = [&](const std::vector<double>& w) {
      return [&, w](const Vector& m) {
        const double iv = integrate(w, e_v2, m);
        const double rhs = iv - (1.0 - xi) * e_v2(m, kx) + (1.0 - big_r) * e_v2(m, last) -
                           (1.0 - c_tilde) * iv;
        return rhs - integrate(w, var_over, m);
      };
    };
    const Estimate lg = jackknife(rows, lower_gap(w_fine));
    const double budget = std::abs(lg.value - lower_gap(w_coarse)(full_mean)) / 3.0;
    LemmaReport lr = bound_report("variance-integral-lower", lg.value, lg.stderr + budget, 0.0,
                                  sigmas);
    lr.notes = "trapezoid budget=" + format_double(budget);
    d.push_back(lr);
    lines.push_back(combine("energy-chain", std::move(d)));
  }

  // Empirical constants.
  {
    const double iv = integrate(w_fine, e_v2, full_mean);
    const double c_emp = (iv - (1.0 - xi) / c_tilde * e_v2(full_mean, kx)) / m_dim;
    lines.push_back(info_report("energy-constant", c_emp, 0.0,
                                "(int_xi^R E|v|^2 - (1-xi)/c~ E|v_xi|^2) / m"));
    const Estimate monotone = jackknife(rows, [&](const Vector& m) {
      return integrate(w_all, e_v2, m) - big_r / (big_r - xi) * integrate(w_fine, e_v2, m);
    });
    lines.push_back(bound_report("energy-monotone-extension", monotone.value, monotone.stderr, 0.0,
                                 sigmas, true,
                                 "int_0^R E|v|^2 <= R/(R-xi) int_xi^R E|v|^2"));
    const Estimate total = jackknife(rows, [&](const Vector& m) {
      return integrate(w_all, e_v2, m) / m_dim;
    });
    lines.push_back(info_report("energy-over-m", total.value, total.stderr,
                                "int_0^R E|v_r|^2 dr / m"));
  }

  // E A_{t0} >= Id/4 at t0 = xi/(1-xi): recorded, not asserted.
  {
    std::vector<Vector> flat;
    for (const auto& p : paths) flat.push_back(flatten(p.tilt[kx].A));
    const Estimate lmin = jackknife(flat, [n](const Vector& m) { return lambda_min(unflatten(m, n)); });
    lines.push_back(info_report("initial-covariance", lmin.value, lmin.stderr,
                                "lambda_min(E A_t0) at t0=" + format_double(t_of_r(xi)) +
                                    " (compare 1/4)"));
  }

  return combine("proof-chain", std::move(lines),
                 "xi=" + format_double(xi) + " R=" + format_double(big_r));
}

}  // namespace sloclab
