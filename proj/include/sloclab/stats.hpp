#pragma once

#include "sloclab/linalg.hpp"

#include <functional>
#include <span>
#include <vector>

namespace sloclab {

// A Monte Carlo (or exact, stderr = 0) estimate of a scalar.
struct Estimate {
  double value = 0.0;
  double stderr = 0.0;
};

struct MatrixEstimate {
  Matrix mean;
  Matrix stderr;  // entrywise
};

// Sample mean with its standard error s / sqrt(N); for a plain mean this is
// exactly the delete-one jackknife standard error.
Estimate mean_estimate(std::span<const double> xs);

MatrixEstimate mean_estimate(std::span<const Matrix> xs);

// Delete-one jackknife for a smooth function of the mean of per-unit vectors.
// Each `rows[i]` holds the statistics contributed by unit i.
Estimate jackknife(const std::vector<Vector>& rows,
                   const std::function<double(const Vector&)>& f);

// Flatten a symmetric matrix into a vector and back (column-major), used to
// jackknife spectral functions of an ensemble-mean matrix.
Vector flatten(const Matrix& m);
Matrix unflatten(const Vector& v, Eigen::Index n, Eigen::Index offset = 0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool pass(double level) const { return p_value > level; }
};

// Two-sample Kolmogorov-Smirnov test (asymptotic Kolmogorov distribution
// with the Stephens small-sample correction).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Complementary Kolmogorov distribution Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

}  // namespace sloclab
