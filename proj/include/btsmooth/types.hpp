#pragma once

#include <Eigen/Core>

namespace bts {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative tolerance for symmetry checks on input blocks.
inline constexpr double kSymTol = 1e-12;

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double asymmetry(const Matrix& m) {
  return m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& m, double rel_tol = kSymTol) {
  if (m.rows() != m.cols()) return false;
  const double scale = max_abs(m);
  return asymmetry(m) <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

// (m + m^T)/2. Addition commutes exactly in IEEE arithmetic, so the result
// satisfies max|d - d^T| = 0.
inline Matrix symmetrized(const Matrix& m) {
  return ((m + m.transpose()) * 0.5).eval();
}

inline double frobenius(const Matrix& m) { return m.norm(); }

}  // namespace bts
