#include "btsmooth/cholesky.hpp"

#include <cmath>

namespace bts {

SpdCholesky::SpdCholesky(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) return;
  l_ = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      ok_ = false;
      return;
    }
    const double ljj = std::sqrt(d);
    l_(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / ljj;
    }
  }
  ok_ = true;
}

Matrix SpdCholesky::solve(const Matrix& b) const {
  const Eigen::Index n = l_.rows();
  Matrix x = b;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = x(i, c);
      for (Eigen::Index k = 0; k < i; ++k) s -= l_(i, k) * x(k, c);
      x(i, c) = s / l_(i, i);
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      double s = x(i, c);
      for (Eigen::Index k = i + 1; k < n; ++k) s -= l_(k, i) * x(k, c);
      x(i, c) = s / l_(i, i);
    }
  }
  return x;
}

Vector SpdCholesky::solve(const Vector& b) const {
  Matrix x = solve(Matrix(b));
  return Vector(x.col(0));
}

Matrix SpdCholesky::inverse() const {
  return solve(Matrix(Matrix::Identity(l_.rows(), l_.cols())));
}

double SpdCholesky::log_det() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < l_.rows(); ++i) s += std::log(l_(i, i));
  return 2.0 * s;
}

}  // namespace bts
