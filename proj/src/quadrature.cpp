#include "sloclab/quadrature.hpp"

namespace sloclab::quad {

double integrate_scalar(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, double rel_tol) {
  const std::array<double, 2> cuts{a, b};
  auto wrapped = [&](double x) { return Values<1>{f(x)}; };
  return integrate<1>(wrapped, cuts, abs_tol, rel_tol)[0];
}

}  // namespace sloclab::quad
