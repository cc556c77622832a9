#pragma once

#include <utility>
#include <vector>

#include "btsmooth/types.hpp"

namespace bts::spectral {

// Dense symmetric matrices above this order are refused; callers fall back to
// bounds-only reasoning.
inline constexpr int kEigSizeCap = 4096;

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Self-contained oracle for every spectral check in this library: rotations
/// are accumulated into V so that M = V diag(values) V^T with V orthonormal to
/// machine precision. Sweeps run until the off-diagonal Frobenius mass drops
/// below 1e-14 of the matrix norm. Input must be symmetric to within
/// `sym_tol` relative; it is symmetrized exactly before iterating.
EigenDecomposition sym_eig(const Matrix& m, double sym_tol = kSymTol,
                           int size_cap = kEigSizeCap);

// Largest / smallest singular value via sym_eig of m^T m.
double operator_norm(const Matrix& m);
double min_singular_value(const Matrix& m);

struct BlockSpectrum {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond = 0.0;  // lambda_max / lambda_min
};

BlockSpectrum block_spectrum(const Matrix& symmetric_block);

/// Process-only description of the chain: SPD noise blocks q_1..q_N, coupling
/// blocks g_2..g_N (the implicit trailing coupling is zero), and optional PSD
/// measurement-information blocks u_1..u_N.
struct ProcessOnlySystem {
  int n = 0;
  int num_blocks = 0;       // N
  std::vector<Matrix> q;    // N blocks, SPD
  std::vector<Matrix> g;    // N-1 blocks; g[j] couples block j+1 to block j (0-based)
  std::vector<Matrix> u;    // empty, or N PSD blocks

  void validate() const;
};

// The unit-lower-bidiagonal coupling matrix (identity diagonal, g blocks on
// the first sub-diagonal), materialized dense.
Matrix assemble_coupling(const ProcessOnlySystem& pos);

// Gram matrix of the coupling: coupling^T coupling.
Matrix assemble_coupling_gram(const ProcessOnlySystem& pos);

// The full system coupling^T q^{-1} coupling (+ diag(u) when present).
Matrix assemble_process_matrix(const ProcessOnlySystem& pos);

/// Eigenvalue sandwich for the process matrix from the extremes of q and the
/// singular values of the coupling matrix:
///   sigma_min(coupling)^2 / lambda_max(q) <= lambda(E) <=
///   sigma_max(coupling)^2 / lambda_min(q).
std::pair<double, double> eigenvalue_bounds(const ProcessOnlySystem& pos);

/// Bounds on the eigenvalues of the coupling Gram matrix in terms of the
/// per-block singular values:
///   lower = max(0, min_k {1 + sigma_min(g_{k+1})^2 - sigma_max(g_k)
///                           - sigma_max(g_{k+1})})
///   upper = max_k {1 + sigma_max(g_{k+1})^2 + sigma_max(g_k)
///                    + sigma_max(g_{k+1})}
/// with the leading block's left neighbor and the trailing block's right
/// neighbor taken as zero.
std::pair<double, double> coupling_gram_bounds(const std::vector<Matrix>& g_blocks);

struct WeakestLinkReport {
  double bound = 0.0;       // 1 - sigma_max(g_N)
  bool vacuous = false;     // sigma_max(g_N) >= 1: the final block is suspect
  int argmax_block = -1;    // 1-based block index of the largest component of
                            // the minimal eigenvector of the Gram matrix, or
                            // -1 when the dense path was not affordable
  Vector min_eigenvector;   // empty when the dense path was not affordable
};

/// Lower bound 1 - sigma_max(g_N) on the smallest Gram eigenvalue, plus the
/// dense diagnosis of which block dominates the minimal eigenvector.
WeakestLinkReport weakest_link(const std::vector<Matrix>& g_blocks,
                               int size_cap = kEigSizeCap);

/// lambda_max(q) sigma_max(coupling)^2 / (lambda_min(q) sigma_min(coupling)^2),
/// an upper bound on the condition number of the process matrix. Throws
/// VacuousBound when sigma_min(coupling) vanishes numerically.
double condition_bound(const ProcessOnlySystem& pos);

struct SpectralReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 0.0;
  double bound_lower = 0.0;
  double bound_upper = 0.0;
  double sv_bound_lower = 0.0;
  double sv_bound_upper = 0.0;
  double weakest_link_bound = 0.0;
  bool weakest_link_vacuous = false;
  int argmax_block = -1;
  bool dense_path = false;  // eigen extremes measured (vs bounds-only mode)
};

SpectralReport analyze(const ProcessOnlySystem& pos, int size_cap = kEigSizeCap);

}  // namespace bts::spectral
