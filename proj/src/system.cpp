#include "btsmooth/system.hpp"

#include <cmath>
#include <string>

#include "btsmooth/errors.hpp"

namespace bts {

void BlockTriSystem::validate() const {
  if (n <= 0) throw BadParameters("system: block dimension must be positive");
  if (num_blocks <= 0) throw BadParameters("system: block count must be positive");
  if (rhs_cols <= 0) throw BadParameters("system: rhs must have at least one column");
  if (static_cast<int>(diag.size()) != num_blocks)
    throw DimensionMismatch("system: expected " + std::to_string(num_blocks) +
                            " diagonal blocks, got " + std::to_string(diag.size()));
  if (static_cast<int>(sub.size()) != num_blocks - 1)
    throw DimensionMismatch("system: expected " + std::to_string(num_blocks - 1) +
                            " sub-diagonal blocks, got " + std::to_string(sub.size()));
  if (static_cast<int>(rhs.size()) != num_blocks)
    throw DimensionMismatch("system: expected " + std::to_string(num_blocks) + " rhs blocks");
  for (int k = 0; k < num_blocks; ++k) {
    const Matrix& b = diag[static_cast<size_t>(k)];
    if (b.rows() != n || b.cols() != n)
      throw DimensionMismatch("system: diagonal block " + std::to_string(k + 1) +
                              " is not n x n");
    if (!b.allFinite())
      throw BadParameters("system: diagonal block " + std::to_string(k + 1) +
                          " has non-finite entries");
    if (!is_symmetric(b))
      throw NotSymmetric("system: diagonal block " + std::to_string(k + 1) +
                         " is not symmetric");
    const Matrix& r = rhs[static_cast<size_t>(k)];
    if (r.rows() != n || r.cols() != rhs_cols)
      throw DimensionMismatch("system: rhs block " + std::to_string(k + 1) +
                              " is not n x ell");
  }
  for (int j = 0; j + 1 < num_blocks; ++j) {
    const Matrix& c = sub[static_cast<size_t>(j)];
    if (c.rows() != n || c.cols() != n)
      throw DimensionMismatch("system: sub-diagonal block " + std::to_string(j + 2) +
                              " is not n x n");
    if (!c.allFinite())
      throw BadParameters("system: sub-diagonal block " + std::to_string(j + 2) +
                          " has non-finite entries");
  }
}

Matrix assemble_dense(const BlockTriSystem& sys, int size_cap) {
  sys.validate();
  const int total = sys.size();
  if (total > size_cap)
    throw SizeCapExceeded("assemble_dense: order " + std::to_string(total) +
                          " exceeds cap " + std::to_string(size_cap));
  Matrix a = Matrix::Zero(total, total);
  const int n = sys.n;
  for (int k = 0; k < sys.num_blocks; ++k)
    a.block(k * n, k * n, n, n) = symmetrized(sys.diag[static_cast<size_t>(k)]);
  for (int j = 0; j + 1 < sys.num_blocks; ++j) {
    a.block((j + 1) * n, j * n, n, n) = sys.sub[static_cast<size_t>(j)];
    a.block(j * n, (j + 1) * n, n, n) = sys.sub[static_cast<size_t>(j)].transpose();
  }
  return a;
}

double residual(const BlockTriSystem& sys, const std::vector<Matrix>& e) {
  sys.validate();
  if (static_cast<int>(e.size()) != sys.num_blocks)
    throw DimensionMismatch("residual: solution block count mismatch");
  for (const Matrix& ek : e)
    if (ek.rows() != sys.n || ek.cols() != sys.rhs_cols)
      throw DimensionMismatch("residual: solution block size mismatch");

  double sum = 0.0;
  for (int k = 0; k < sys.num_blocks; ++k) {
    Matrix r = sys.diag[static_cast<size_t>(k)] * e[static_cast<size_t>(k)] -
               sys.rhs[static_cast<size_t>(k)];
    if (k > 0) r += sys.sub[static_cast<size_t>(k - 1)] * e[static_cast<size_t>(k - 1)];
    if (k + 1 < sys.num_blocks)
      r += sys.sub[static_cast<size_t>(k)].transpose() * e[static_cast<size_t>(k + 1)];
    sum += r.squaredNorm();
  }
  return std::sqrt(sum);
}

Matrix stack_rhs(const BlockTriSystem& sys) {
  Matrix r(sys.size(), sys.rhs_cols);
  for (int k = 0; k < sys.num_blocks; ++k)
    r.middleRows(k * sys.n, sys.n) = sys.rhs[static_cast<size_t>(k)];
  return r;
}

std::vector<Matrix> split_blocks(const Matrix& stacked, int n, int num_blocks) {
  if (stacked.rows() != static_cast<Eigen::Index>(n) * num_blocks)
    throw DimensionMismatch("split_blocks: row count is not N n");
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(num_blocks));
  for (int k = 0; k < num_blocks; ++k) out.push_back(stacked.middleRows(k * n, n));
  return out;
}

}  // namespace bts
