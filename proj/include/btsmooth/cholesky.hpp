#pragma once

#include "btsmooth/types.hpp"

namespace bts {

/// Cholesky factorization A = L L^T of a small symmetric positive definite
/// block. Factorization failure (a non-positive leading minor) is the
/// positive-definiteness detector used by all elimination sweeps.
class SpdCholesky {
 public:
  explicit SpdCholesky(const Matrix& a);

  bool ok() const { return ok_; }
  const Matrix& lower() const { return l_; }

  // A^{-1} b via two triangular solves. Requires ok().
  Matrix solve(const Matrix& b) const;
  Vector solve(const Vector& b) const;

  // A^{-1} as a dense matrix (solve against the identity).
  Matrix inverse() const;

  double log_det() const;

 private:
  Matrix l_;
  bool ok_ = false;
};

}  // namespace bts
