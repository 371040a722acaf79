#pragma once

// Adaptive Gauss-Kronrod (G7/K15) quadrature for vector-valued integrands and
// a moment routine specialised to unnormalised log-concave weights on an
// interval.  Everything downstream that needs Z(t, theta), a(t, theta) or
// A(t, theta) for a one-dimensional factor goes through log_concave_moments.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace sloclab::quad {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// Below this multiple of eps times the summed panel magnitudes the error
// estimate is round-off and refining further only adds panels.
inline constexpr double kRoundoffFactor = 50.0 * std::numeric_limits<double>::epsilon();

template <std::size_t N>
using Values = std::array<double, N>;

template <std::size_t N>
struct Panel {
  double a = 0.0;
  double b = 0.0;
  Values<N> integral{};
  double error = 0.0;
  double magnitude = 0.0;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <std::size_t N, class F>
Panel<N> kronrod_panel(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Values<N> kronrod{};
  Values<N> gauss{};
  const Values<N> fc = f(centre);
  for (std::size_t k = 0; k < N; ++k) {
    kronrod[k] = kKronrodWeights[7] * fc[k];
    gauss[k] = kGaussWeights[3] * fc[k];
  }
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const Values<N> lo = f(centre - dx);
    const Values<N> hi = f(centre + dx);
    for (std::size_t k = 0; k < N; ++k) {
      const double s = lo[k] + hi[k];
      kronrod[k] += kKronrodWeights[j] * s;
      if (j % 2 == 1) gauss[k] += kGaussWeights[j / 2] * s;
    }
  }
  Panel<N> p;
  p.a = a;
  p.b = b;
  for (std::size_t k = 0; k < N; ++k) {
    p.integral[k] = kronrod[k] * half;
    // G7 vs K15 overstates the K15 error badly on smooth panels; damp it
    // the usual way, against the panel's own magnitude.
    const double raw = std::abs((kronrod[k] - gauss[k]) * half);
    const double mag = std::abs(p.integral[k]);
    const double err = mag > 0.0 ? mag * std::min(1.0, std::pow(200.0 * raw / mag, 1.5)) : raw;
    p.error = std::max(p.error, err);
    p.magnitude = std::max(p.magnitude, mag);
  }
  return p;
}

// Integrates f over the union of consecutive panels [cuts[i], cuts[i+1]].
// Subdivides the worst panel until the summed error estimate drops below
// max(abs_tol, rel_tol * |integral[0]|).
template <std::size_t N, class F>
Values<N> integrate(F&& f, std::span<const double> cuts, double abs_tol,
                    double rel_tol, int max_panels = 4000) {
  if (cuts.size() < 2) throw std::invalid_argument("integrate: need two cuts");
  std::priority_queue<Panel<N>> queue;
  double total_error = 0.0;
  double total_magnitude = 0.0;
  Values<N> total{};
  auto push = [&](const Panel<N>& p) {
    total_error += p.error;
    total_magnitude += p.magnitude;
    for (std::size_t k = 0; k < N; ++k) total[k] += p.integral[k];
    queue.push(p);
  };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) push(kronrod_panel<N>(f, cuts[i], cuts[i + 1]));
  }
  int panels = static_cast<int>(queue.size());
  while (!queue.empty() && panels < max_panels &&
         total_error > std::max({abs_tol, rel_tol * std::abs(total[0]),
                                 kRoundoffFactor * total_magnitude})) {
    Panel<N> worst = queue.top();
    queue.pop();
    total_error -= worst.error;
    total_magnitude -= worst.magnitude;
    for (std::size_t k = 0; k < N; ++k) total[k] -= worst.integral[k];
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval exhausted at double precision; keep it and stop refining.
      push(worst);
      break;
    }
    push(kronrod_panel<N>(f, worst.a, mid));
    push(kronrod_panel<N>(f, mid, worst.b));
    ++panels;
  }
  // Re-sum from scratch to shed accumulated cancellation error.
  Values<N> exact{};
  while (!queue.empty()) {
    for (std::size_t k = 0; k < N; ++k) exact[k] += queue.top().integral[k];
    queue.pop();
  }
  return exact;
}

double integrate_scalar(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, double rel_tol);

struct Moments1D {
  double log_mass = 0.0;  // log of the integral of exp(log_weight)
  double mean = 0.0;
  double variance = 0.0;
  double extra = 0.0;     // weighted mean of the extra function, if any
};

struct LogConcaveProblem {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> breakpoints;  // kinks of the log-weight
  double scale = 1.0;               // characteristic width for bracketing
  double start = 0.0;               // a point of the support near the mode
  bool has_mode = false;            // set when `mode` is known exactly
  double mode = 0.0;
};

namespace detail {

inline constexpr double kTailDrop = 46.0;  // exp(-46) ~ 1e-20

template <class G>
double golden_maximise(G& g, double a, double b) {
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double gc = g(c);
  double gd = g(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b));
       ++it) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - inv_phi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + inv_phi * (b - a);
      gd = g(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Moments of the density proportional to exp(log_weight(x)) on [lo, hi],
// where log_weight is concave.  `extra(x)` is averaged against the same
// density (pass a function returning 0 when unused).
template <class G, class H>
Moments1D log_concave_moments(const LogConcaveProblem& prob, G&& log_weight,
                              H&& extra) {
  const double scale = prob.scale > 0 ? prob.scale : 1.0;
  double mode = 0.0;
  if (prob.has_mode) {
    mode = std::clamp(prob.mode, prob.lo, prob.hi);
  } else {
    double x0 = std::clamp(prob.start, prob.lo, prob.hi);
    if (!std::isfinite(x0)) x0 = 0.0;
    const double g0 = log_weight(x0);
    double left = x0;
    double right = x0;
    double step = scale;
    for (int it = 0; it < 200; ++it) {
      right = std::min(x0 + step, prob.hi);
      if (right >= prob.hi || log_weight(right) < g0) break;
      step *= 2.0;
      if (it == 199) throw std::runtime_error("log_concave_moments: unbounded weight");
    }
    step = scale;
    for (int it = 0; it < 200; ++it) {
      left = std::max(x0 - step, prob.lo);
      if (left <= prob.lo || log_weight(left) < g0) break;
      step *= 2.0;
      if (it == 199) throw std::runtime_error("log_concave_moments: unbounded weight");
    }
    mode = detail::golden_maximise(log_weight, left, right);
  }
  double gmax = log_weight(mode);
  if (!std::isfinite(gmax)) {
    // Mode sits on a boundary where the weight vanishes; move inward.
    const double probe = std::isfinite(prob.start) ? prob.start : 0.0;
    mode = 0.5 * (mode + std::clamp(probe, prob.lo, prob.hi));
    gmax = log_weight(mode);
    if (!std::isfinite(gmax)) throw std::runtime_error("log_concave_moments: empty support");
  }
  const double floor = gmax - detail::kTailDrop;

  auto tail_cut = [&](double direction, double bound) {
    double step = scale;
    for (int it = 0; it < 400; ++it) {
      const double x = mode + direction * step;
      if ((direction > 0 && x >= bound) || (direction < 0 && x <= bound)) return bound;
      if (log_weight(x) < floor) return x;
      step *= 2.0;
    }
    throw std::runtime_error("log_concave_moments: tail does not decay");
  };
  const double right = tail_cut(+1.0, prob.hi);
  const double left = tail_cut(-1.0, prob.lo);
  if (!(std::isfinite(left) && std::isfinite(right))) {
    throw std::runtime_error("log_concave_moments: infinite integration range");
  }

  std::vector<double> cuts{left};
  std::vector<double> inner = prob.breakpoints;
  inner.push_back(mode);
  std::sort(inner.begin(), inner.end());
  for (double x : inner) {
    if (x > cuts.back() && x < right) cuts.push_back(x);
  }
  cuts.push_back(right);

  auto integrand = [&](double x) {
    const double g = log_weight(x);
    const double w = std::isfinite(g) ? std::exp(g - gmax) : 0.0;
    const double u = (x - mode) / scale;
    return Values<4>{w, w * u, w * u * u, w * extra(x)};
  };
  const Values<4> m = integrate<4>(integrand, cuts, 0.0, 1e-14);
  if (!(m[0] > 0.0)) throw std::runtime_error("log_concave_moments: zero mass");

  Moments1D out;
  out.log_mass = gmax + std::log(m[0]);
  const double mu = m[1] / m[0];
  out.mean = mode + scale * mu;
  out.variance = std::max(0.0, scale * scale * (m[2] / m[0] - mu * mu));
  out.extra = m[3] / m[0];
  return out;
}

template <class G>
Moments1D log_concave_moments(const LogConcaveProblem& prob, G&& log_weight) {
  return log_concave_moments(prob, std::forward<G>(log_weight),
                             [](double) { return 0.0; });
}

}  // namespace sloclab::quad
