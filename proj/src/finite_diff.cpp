#include "sloclab/finite_diff.hpp"

#include "sloclab/stats.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sloclab {

Stencil central_stencil(const std::vector<double>& x, std::size_t lo, std::size_t mid,
                        std::size_t hi) {
  if (!(lo < mid && mid < hi && hi < x.size())) throw std::invalid_argument("stencil: bad indices");
  const double hm = x[mid] - x[lo];
  const double hp = x[hi] - x[mid];
  Stencil s{lo, mid, hi};
  s.w_lo = -hp / (hm * (hm + hp));
  s.w_mid = (hp - hm) / (hm * hp);
  s.w_hi = hm / (hp * (hm + hp));
  s.spread = hm * hp;
  return s;
}

namespace {

Matrix apply(const Stencil& s, const UnitSeries& f, std::size_t unit) {
  return s.w_lo * f(unit, s.lo) + s.w_mid * f(unit, s.mid) + s.w_hi * f(unit, s.hi);
}

}  // namespace

LemmaReport derivative_identity_check(const std::string& id, const std::vector<double>& x,
                                      std::size_t units, const UnitSeries& f,
                                      const UnitSeries& g,
                                      const std::vector<std::size_t>& targets, double sigmas) {
  if (x.size() < 3) throw std::invalid_argument(id + ": need at least 3 grid points");
  if (units < 2) throw std::invalid_argument(id + ": need at least 2 units");
  const std::size_t last = x.size() - 1;
  std::vector<LemmaReport> details;
  for (std::size_t k : targets) {
    if (k == 0 || k >= last) throw std::invalid_argument(id + ": target must be interior");
    const Stencil narrow = central_stencil(x, k - 1, k, k + 1);
    const bool have_wide = !(k < 2 && k + 2 > last);
    Stencil wide = narrow;
    if (have_wide) wide = central_stencil(x, k >= 2 ? k - 2 : k - 1, k, std::min(last, k + 2));
    std::vector<Matrix> gaps;
    std::vector<Matrix> shifts;
    gaps.reserve(units);
    shifts.reserve(units);
    for (std::size_t u = 0; u < units; ++u) {
      const Matrix dn = apply(narrow, f, u);
      gaps.push_back(dn - g(u, k));
      if (have_wide) shifts.push_back(apply(wide, f, u) - dn);
    }
    const MatrixEstimate gap = mean_estimate(gaps);
    Matrix budget = Matrix::Zero(gap.mean.rows(), gap.mean.cols());
    if (have_wide) {
      const double ratio = wide.spread / narrow.spread;
      const MatrixEstimate shift = mean_estimate(shifts);
      budget = shift.mean.cwiseAbs() / (ratio - 1.0);
    }
    const EntryComparison c = compare_entries(gap.mean, gap.stderr + budget, sigmas);
    std::ostringstream notes;
    notes << "x=" << x[k] << " max|gap|=" << c.max_gap << " budget=" << max_abs(budget);
    details.push_back(make_report(id + "@" + format_double(x[k]), c, sigmas, notes.str()));
  }
  return combine(id, std::move(details));
}

std::vector<double> trapezoid_weights(const std::vector<double>& x, std::size_t lo,
                                      std::size_t hi) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t k = lo; k < hi; ++k) {
    const double h = x[k + 1] - x[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

std::vector<double> coarse_trapezoid_weights(const std::vector<double>& x, std::size_t lo,
                                             std::size_t hi) {
  std::vector<double> w(x.size(), 0.0);
  std::size_t k = lo;
  while (k < hi) {
    const std::size_t next = std::min(hi, k + 2);
    const double h = x[next] - x[k];
    w[k] += 0.5 * h;
    w[next] += 0.5 * h;
    k = next;
  }
  return w;
}

}  // namespace sloclab
