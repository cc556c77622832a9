#pragma once

#include <vector>

#include "btsmooth/types.hpp"

namespace bts {

inline constexpr int kDenseSizeCap = 4096;

/// Symmetric positive-definite block-tridiagonal system
///
///   [ diag_1  sub_2^T                 ] [e_1]   [rhs_1]
///   [ sub_2   diag_2  sub_3^T         ] [e_2] = [rhs_2]
///   [         ...     ...      ...    ] [...]   [...]
///   [                 sub_N    diag_N ] [e_N]   [rhs_N]
///
/// Blocks are n x n; the right-hand side blocks are n x rhs_cols. sub[j]
/// (0-based) couples block j+1 to block j; the super-diagonal is its
/// transpose by symmetry.
struct BlockTriSystem {
  int n = 0;
  int num_blocks = 0;  // N
  int rhs_cols = 1;    // ell
  std::vector<Matrix> diag;
  std::vector<Matrix> sub;
  std::vector<Matrix> rhs;

  // Checks dimensions and symmetry of the diagonal blocks. Throws
  // DimensionMismatch / NotSymmetric / BadParameters.
  void validate() const;

  int size() const { return n * num_blocks; }
};

// Materialize the dense symmetric matrix. Refuses orders above `size_cap`.
Matrix assemble_dense(const BlockTriSystem& sys, int size_cap = kDenseSizeCap);

// Frobenius norm of A e - rhs computed blockwise, without materializing A.
double residual(const BlockTriSystem& sys, const std::vector<Matrix>& e);

// rhs stacked as a dense (N n) x ell matrix, and the inverse placement.
Matrix stack_rhs(const BlockTriSystem& sys);
std::vector<Matrix> split_blocks(const Matrix& stacked, int n, int num_blocks);

}  // namespace bts
