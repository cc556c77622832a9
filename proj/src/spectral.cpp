#include "btsmooth/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "btsmooth/cholesky.hpp"
#include "btsmooth/errors.hpp"

namespace bts::spectral {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition sym_eig(const Matrix& m, double sym_tol, int size_cap) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw DimensionMismatch("sym_eig: matrix is not square");
  if (n > size_cap)
    throw SizeCapExceeded("sym_eig: order " + std::to_string(n) + " exceeds cap " +
                          std::to_string(size_cap));
  if (!m.allFinite()) throw NotSymmetric("sym_eig: matrix has non-finite entries");
  if (!is_symmetric(m, sym_tol)) throw NotSymmetric("sym_eig: matrix is not symmetric");

  Matrix a = symmetrized(m);
  Matrix v = Matrix::Identity(n, n);
  const double total = a.norm();
  const double tol = 1e-14 * (total > 0.0 ? total : 1.0);

  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        if (std::abs(apq) <= 1e-300 + 1e-20 * (std::abs(app) + std::abs(aqq))) continue;

        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(p, i) = a(i, p);
          a(i, q) = s * aip + c * aiq;
          a(q, i) = a(i, q);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&a](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.values = Vector(n);
  out.vectors = Matrix(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = a(order[static_cast<size_t>(i)], order[static_cast<size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<size_t>(i)]);
  }
  return out;
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.transpose() * m;
  const EigenDecomposition e = sym_eig(symmetrized(gram));
  return std::sqrt(std::max(0.0, e.values[e.values.size() - 1]));
}

double min_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.transpose() * m;
  const EigenDecomposition e = sym_eig(symmetrized(gram));
  return std::sqrt(std::max(0.0, e.values[0]));
}

BlockSpectrum block_spectrum(const Matrix& symmetric_block) {
  const EigenDecomposition e = sym_eig(symmetric_block);
  BlockSpectrum s;
  s.lambda_min = e.values[0];
  s.lambda_max = e.values[e.values.size() - 1];
  s.cond = s.lambda_min != 0.0 ? s.lambda_max / s.lambda_min
                               : std::numeric_limits<double>::infinity();
  return s;
}

void ProcessOnlySystem::validate() const {
  if (n <= 0 || num_blocks <= 0) throw BadParameters("process system: n and N must be positive");
  if (static_cast<int>(q.size()) != num_blocks)
    throw DimensionMismatch("process system: expected N noise blocks");
  if (static_cast<int>(g.size()) != num_blocks - 1)
    throw DimensionMismatch("process system: expected N-1 coupling blocks");
  if (!u.empty() && static_cast<int>(u.size()) != num_blocks)
    throw DimensionMismatch("process system: measurement blocks must be empty or N long");
  for (int k = 0; k < num_blocks; ++k) {
    if (q[k].rows() != n || q[k].cols() != n)
      throw DimensionMismatch("process system: noise block size mismatch");
    if (!is_symmetric(q[k])) throw NotSymmetric("process system: noise block not symmetric");
    if (!SpdCholesky(q[k]).ok())
      throw BadParameters("process system: noise block " + std::to_string(k + 1) +
                          " is not positive definite");
    if (!u.empty() && (u[k].rows() != n || u[k].cols() != n))
      throw DimensionMismatch("process system: measurement block size mismatch");
  }
  for (const Matrix& gk : g)
    if (gk.rows() != n || gk.cols() != n)
      throw DimensionMismatch("process system: coupling block size mismatch");
}

Matrix assemble_coupling(const ProcessOnlySystem& pos) {
  pos.validate();
  const int n = pos.n;
  const int total = pos.num_blocks * n;
  Matrix c = Matrix::Identity(total, total);
  for (int j = 0; j + 1 < pos.num_blocks; ++j)
    c.block((j + 1) * n, j * n, n, n) = pos.g[static_cast<size_t>(j)];
  return c;
}

Matrix assemble_coupling_gram(const ProcessOnlySystem& pos) {
  const Matrix c = assemble_coupling(pos);
  return symmetrized(c.transpose() * c);
}

Matrix assemble_process_matrix(const ProcessOnlySystem& pos) {
  pos.validate();
  const int n = pos.n;
  const int total = pos.num_blocks * n;
  const Matrix c = assemble_coupling(pos);
  Matrix qinv = Matrix::Zero(total, total);
  for (int k = 0; k < pos.num_blocks; ++k) {
    SpdCholesky chol(pos.q[static_cast<size_t>(k)]);
    qinv.block(k * n, k * n, n, n) = chol.inverse();
  }
  Matrix e = symmetrized(c.transpose() * qinv * c);
  if (!pos.u.empty())
    for (int k = 0; k < pos.num_blocks; ++k)
      e.block(k * n, k * n, n, n) += pos.u[static_cast<size_t>(k)];
  return symmetrized(e);
}

std::pair<double, double> eigenvalue_bounds(const ProcessOnlySystem& pos) {
  pos.validate();
  double q_min = std::numeric_limits<double>::infinity();
  double q_max = 0.0;
  for (const Matrix& qk : pos.q) {
    const EigenDecomposition e = sym_eig(qk);
    q_min = std::min(q_min, e.values[0]);
    q_max = std::max(q_max, e.values[e.values.size() - 1]);
  }
  const EigenDecomposition gram = sym_eig(assemble_coupling_gram(pos));
  const double s2_min = std::max(0.0, gram.values[0]);
  const double s2_max = std::max(0.0, gram.values[gram.values.size() - 1]);
  return {s2_min / q_max, s2_max / q_min};
}

std::pair<double, double> coupling_gram_bounds(const std::vector<Matrix>& g_blocks) {
  if (g_blocks.empty()) throw EmptySequence("coupling bounds: no coupling blocks given");
  const int num_couplings = static_cast<int>(g_blocks.size());
  const int num_blocks = num_couplings + 1;

  // smax[k] / smin[k] are the sigma extremes of the coupling entering block k
  // (1-based); block 1 has no incoming coupling and the trailing coupling past
  // block N is zero, so both ends stay 0.
  std::vector<double> smax(static_cast<size_t>(num_blocks) + 2, 0.0);
  std::vector<double> smin(static_cast<size_t>(num_blocks) + 2, 0.0);
  for (int j = 0; j < num_couplings; ++j) {
    smax[static_cast<size_t>(j) + 2] = operator_norm(g_blocks[static_cast<size_t>(j)]);
    smin[static_cast<size_t>(j) + 2] = min_singular_value(g_blocks[static_cast<size_t>(j)]);
  }

  double lower = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= num_blocks; ++k) {
    const double s_in = smax[static_cast<size_t>(k)];
    const double s_out_max = smax[static_cast<size_t>(k) + 1];
    const double s_out_min = smin[static_cast<size_t>(k) + 1];
    lower = std::min(lower, 1.0 + s_out_min * s_out_min - s_in - s_out_max);
    upper = std::max(upper, 1.0 + s_out_max * s_out_max + s_in + s_out_max);
  }
  return {std::max(0.0, lower), upper};
}

WeakestLinkReport weakest_link(const std::vector<Matrix>& g_blocks, int size_cap) {
  if (g_blocks.empty()) throw EmptySequence("weakest link: no coupling blocks given");
  WeakestLinkReport rep;
  const double s_last = operator_norm(g_blocks.back());
  rep.bound = 1.0 - s_last;
  rep.vacuous = s_last >= 1.0;

  const int n = static_cast<int>(g_blocks.front().rows());
  const int num_blocks = static_cast<int>(g_blocks.size()) + 1;
  if (num_blocks * n <= size_cap) {
    ProcessOnlySystem pos;
    pos.n = n;
    pos.num_blocks = num_blocks;
    pos.g = g_blocks;
    pos.q.assign(static_cast<size_t>(num_blocks), Matrix::Identity(n, n));
    const EigenDecomposition e = sym_eig(assemble_coupling_gram(pos), kSymTol, size_cap);
    rep.min_eigenvector = e.vectors.col(0);
    double best = -1.0;
    for (int k = 0; k < num_blocks; ++k) {
      const double norm_k = rep.min_eigenvector.segment(k * n, n).norm();
      if (norm_k > best) {  // ties resolve to the lowest index
        best = norm_k;
        rep.argmax_block = k + 1;
      }
    }
  }
  return rep;
}

double condition_bound(const ProcessOnlySystem& pos) {
  const auto [lower, upper] = eigenvalue_bounds(pos);
  if (!(lower > 0.0))
    throw VacuousBound("condition bound: coupling matrix has a vanishing singular value");
  return upper / lower;
}

SpectralReport analyze(const ProcessOnlySystem& pos, int size_cap) {
  pos.validate();
  SpectralReport rep;
  std::tie(rep.bound_lower, rep.bound_upper) = eigenvalue_bounds(pos);
  std::tie(rep.sv_bound_lower, rep.sv_bound_upper) = coupling_gram_bounds(pos.g);

  const WeakestLinkReport wl = weakest_link(pos.g, size_cap);
  rep.weakest_link_bound = wl.bound;
  rep.weakest_link_vacuous = wl.vacuous;

  if (pos.num_blocks * pos.n <= size_cap) {
    const Matrix full = assemble_process_matrix(pos);
    const EigenDecomposition e = sym_eig(full, kSymTol, size_cap);
    rep.lambda_min = e.values[0];
    rep.lambda_max = e.values[e.values.size() - 1];
    rep.kappa = rep.lambda_min != 0.0 ? rep.lambda_max / rep.lambda_min
                                      : std::numeric_limits<double>::infinity();
    rep.dense_path = true;
    double best = -1.0;
    for (int k = 0; k < pos.num_blocks; ++k) {
      const double norm_k = e.vectors.col(0).segment(k * pos.n, pos.n).norm();
      if (norm_k > best) {
        best = norm_k;
        rep.argmax_block = k + 1;
      }
    }
  }
  return rep;
}

}  // namespace bts::spectral
