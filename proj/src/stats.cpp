#include "sloclab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sloclab {

Estimate mean_estimate(std::span<const double> xs) {
  Estimate e;
  const std::size_t n = xs.size();
  if (n == 0) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.value = sum / static_cast<double>(n);
  if (n < 2) return e;
  double ss = 0.0;
  for (double x : xs) ss += (x - e.value) * (x - e.value);
  e.stderr = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return e;
}

MatrixEstimate mean_estimate(std::span<const Matrix> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_estimate: empty ensemble");
  const auto rows = xs.front().rows();
  const auto cols = xs.front().cols();
  const double n = static_cast<double>(xs.size());
  MatrixEstimate e{Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
  for (const Matrix& m : xs) e.mean += m;
  e.mean /= n;
  if (xs.size() < 2) return e;
  for (const Matrix& m : xs) e.stderr += (m - e.mean).cwiseAbs2();
  e.stderr = (e.stderr / ((n - 1.0) * n)).cwiseSqrt();
  return e;
}

Estimate jackknife(const std::vector<Vector>& rows,
                   const std::function<double(const Vector&)>& f) {
  if (rows.empty()) throw std::invalid_argument("jackknife: no units");
  const double n = static_cast<double>(rows.size());
  Vector total = Vector::Zero(rows.front().size());
  for (const Vector& r : rows) total += r;
  Estimate e;
  e.value = f(total / n);
  if (rows.size() < 2) return e;
  std::vector<double> loo(rows.size());
  double mean_loo = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    loo[i] = f((total - rows[i]) / (n - 1.0));
    mean_loo += loo[i];
  }
  mean_loo /= n;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  e.stderr = std::sqrt((n - 1.0) / n * ss);
  return e;
}

Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unflatten(const Vector& v, Eigen::Index n, Eigen::Index offset) {
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = v(offset + j * n + i);
  return m;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

}  // namespace sloclab
