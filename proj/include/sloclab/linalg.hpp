#pragma once

#include <Eigen/Dense>

#include <vector>

namespace sloclab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline double lambda_min(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double lambda_max(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Frobenius norm squared, |M|^2 = tr[M^T M].
inline double frob2(const Matrix& m) { return m.squaredNorm(); }

}  // namespace sloclab
