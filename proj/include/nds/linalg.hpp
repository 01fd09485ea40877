#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace nds {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Numerical failure outside parsing/evaluation (singular metric, Newton
/// divergence, integrator stall, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Mat symmetric_part(const Mat& a) { return 0.5 * (a + a.transpose()); }

/// Largest eigenvalue of the symmetric part of a (the logarithmic norm
/// with respect to the Euclidean inner product).
inline double lambda_max_sym(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Spectral condition number sigma_max / sigma_min.
inline double spectral_cond(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  double smin = svd.singularValues().minCoeff();
  if (smin <= 0.0) throw NumericError("singular matrix in condition number");
  return svd.singularValues().maxCoeff() / smin;
}

}  // namespace nds
