#include "btsmooth/solvers.hpp"

#include <exception>
#include <limits>
#include <utility>

#include "btsmooth/cholesky.hpp"
#include "btsmooth/errors.hpp"

namespace bts {

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::Forward: return "forward";
    case SolveMethod::Backward: return "backward";
    case SolveMethod::TwoFilter: return "twofilter";
    case SolveMethod::Hybrid: return "hybrid";
  }
  return "unknown";
}

namespace {

[[noreturn]] void throw_pivot_failure(const Matrix& d, int block_1based,
                                      const std::string& stage) {
  double lmin = 0.0;
  try {
    lmin = spectral::sym_eig(symmetrized(d)).values[0];
  } catch (const Error&) {
    lmin = std::numeric_limits<double>::quiet_NaN();
  }
  throw PivotNotPositiveDefinite(
      block_1based, lmin, stage,
      "pivot block " + std::to_string(block_1based) + " (" + stage +
          ") is not positive definite, lambda_min = " + std::to_string(lmin));
}

SpdCholesky factor_or_throw(const Matrix& d, int block_1based, const std::string& stage) {
  SpdCholesky chol(d);
  if (!chol.ok()) throw_pivot_failure(d, block_1based, stage);
  return chol;
}

// Work arrays indexed by 0-based block; eliminations fill only their range.
struct Sweep {
  std::vector<Matrix> pivot;
  std::vector<Matrix> red_rhs;
  std::vector<SpdCholesky> factor;

  explicit Sweep(int num_blocks)
      : pivot(static_cast<size_t>(num_blocks)),
        red_rhs(static_cast<size_t>(num_blocks)),
        factor(static_cast<size_t>(num_blocks), SpdCholesky(Matrix())) {}
};

// Eliminate blocks first..last walking forward (both 0-based, inclusive).
void forward_eliminate(const BlockTriSystem& sys, int first, int last, Sweep& w,
                       const std::string& stage) {
  w.pivot[static_cast<size_t>(first)] = symmetrized(sys.diag[static_cast<size_t>(first)]);
  w.red_rhs[static_cast<size_t>(first)] = sys.rhs[static_cast<size_t>(first)];
  w.factor[static_cast<size_t>(first)] =
      factor_or_throw(w.pivot[static_cast<size_t>(first)], first + 1, stage);
  for (int j = first + 1; j <= last; ++j) {
    const Matrix& c = sys.sub[static_cast<size_t>(j - 1)];
    if (c.isZero(0.0)) {
      w.pivot[static_cast<size_t>(j)] = symmetrized(sys.diag[static_cast<size_t>(j)]);
      w.red_rhs[static_cast<size_t>(j)] = sys.rhs[static_cast<size_t>(j)];
    } else {
      const SpdCholesky& prev = w.factor[static_cast<size_t>(j - 1)];
      w.pivot[static_cast<size_t>(j)] = symmetrized(
          sys.diag[static_cast<size_t>(j)] - c * prev.solve(Matrix(c.transpose())));
      w.red_rhs[static_cast<size_t>(j)] =
          sys.rhs[static_cast<size_t>(j)] - c * prev.solve(w.red_rhs[static_cast<size_t>(j - 1)]);
    }
    w.factor[static_cast<size_t>(j)] =
        factor_or_throw(w.pivot[static_cast<size_t>(j)], j + 1, stage);
  }
}

// Eliminate blocks last..first walking backward (both 0-based, inclusive).
void backward_eliminate(const BlockTriSystem& sys, int first, int last, Sweep& w,
                        const std::string& stage) {
  w.pivot[static_cast<size_t>(last)] = symmetrized(sys.diag[static_cast<size_t>(last)]);
  w.red_rhs[static_cast<size_t>(last)] = sys.rhs[static_cast<size_t>(last)];
  w.factor[static_cast<size_t>(last)] =
      factor_or_throw(w.pivot[static_cast<size_t>(last)], last + 1, stage);
  for (int j = last - 1; j >= first; --j) {
    const Matrix& c = sys.sub[static_cast<size_t>(j)];
    if (c.isZero(0.0)) {
      w.pivot[static_cast<size_t>(j)] = symmetrized(sys.diag[static_cast<size_t>(j)]);
      w.red_rhs[static_cast<size_t>(j)] = sys.rhs[static_cast<size_t>(j)];
    } else {
      const SpdCholesky& next = w.factor[static_cast<size_t>(j + 1)];
      w.pivot[static_cast<size_t>(j)] = symmetrized(
          sys.diag[static_cast<size_t>(j)] - c.transpose() * next.solve(c));
      w.red_rhs[static_cast<size_t>(j)] =
          sys.rhs[static_cast<size_t>(j)] -
          c.transpose() * next.solve(w.red_rhs[static_cast<size_t>(j + 1)]);
    }
    w.factor[static_cast<size_t>(j)] =
        factor_or_throw(w.pivot[static_cast<size_t>(j)], j + 1, stage);
  }
}

// e_j = pivot_j^{-1} (s_j - sub_j^T e_{j+1}) for j = last-1..first, seeded at last.
void forward_substitute(const BlockTriSystem& sys, const Sweep& w, int first, int last,
                        std::vector<Matrix>& e, bool seed_last) {
  if (seed_last)
    e[static_cast<size_t>(last)] =
        w.factor[static_cast<size_t>(last)].solve(w.red_rhs[static_cast<size_t>(last)]);
  for (int j = last - 1; j >= first; --j)
    e[static_cast<size_t>(j)] = w.factor[static_cast<size_t>(j)].solve(Matrix(
        w.red_rhs[static_cast<size_t>(j)] -
        sys.sub[static_cast<size_t>(j)].transpose() * e[static_cast<size_t>(j + 1)]));
}

// e_j = pivot_j^{-1} (s_j - sub_{j-1} e_{j-1}) for j = first+1..last, seeded at first.
void backward_substitute(const BlockTriSystem& sys, const Sweep& w, int first, int last,
                         std::vector<Matrix>& e, bool seed_first) {
  if (seed_first)
    e[static_cast<size_t>(first)] =
        w.factor[static_cast<size_t>(first)].solve(w.red_rhs[static_cast<size_t>(first)]);
  for (int j = first + 1; j <= last; ++j)
    e[static_cast<size_t>(j)] = w.factor[static_cast<size_t>(j)].solve(
        Matrix(w.red_rhs[static_cast<size_t>(j)] -
               sys.sub[static_cast<size_t>(j - 1)] * e[static_cast<size_t>(j - 1)]));
}

void move_range(std::vector<Matrix>& src, int first, int last, std::vector<Matrix>& dst) {
  dst.clear();
  dst.reserve(static_cast<size_t>(last - first + 1));
  for (int j = first; j <= last; ++j) dst.push_back(std::move(src[static_cast<size_t>(j)]));
}

BlockSolution finish(const BlockTriSystem& sys, SolveTrace trace, std::vector<Matrix> e) {
  BlockSolution sol;
  sol.residual_norm = residual(sys, e);
  sol.e = std::move(e);
  sol.trace = std::move(trace);
  return sol;
}

}  // namespace

BlockSolution fbt_solve(const BlockTriSystem& sys) {
  sys.validate();
  const int last = sys.num_blocks - 1;
  Sweep w(sys.num_blocks);
  forward_eliminate(sys, 0, last, w, "forward");
  std::vector<Matrix> e(static_cast<size_t>(sys.num_blocks));
  forward_substitute(sys, w, 0, last, e, /*seed_last=*/true);

  SolveTrace trace;
  trace.method = SolveMethod::Forward;
  trace.total_blocks = sys.num_blocks;
  move_range(w.pivot, 0, last, trace.fwd_pivots);
  move_range(w.red_rhs, 0, last, trace.fwd_rhs);
  return finish(sys, std::move(trace), std::move(e));
}

BlockSolution bbt_solve(const BlockTriSystem& sys) {
  sys.validate();
  const int last = sys.num_blocks - 1;
  Sweep w(sys.num_blocks);
  backward_eliminate(sys, 0, last, w, "backward");
  std::vector<Matrix> e(static_cast<size_t>(sys.num_blocks));
  backward_substitute(sys, w, 0, last, e, /*seed_first=*/true);

  SolveTrace trace;
  trace.method = SolveMethod::Backward;
  trace.total_blocks = sys.num_blocks;
  move_range(w.pivot, 0, last, trace.bwd_pivots);
  move_range(w.red_rhs, 0, last, trace.bwd_rhs);
  return finish(sys, std::move(trace), std::move(e));
}

BlockSolution twofilter_solve(const BlockTriSystem& sys, bool parallel) {
  sys.validate();
  if (sys.num_blocks == 1) parallel = false;  // nothing to split across workers
  const int last = sys.num_blocks - 1;
  Sweep wf(sys.num_blocks);
  Sweep wb(sys.num_blocks);

  if (parallel) {
    std::exception_ptr err_f, err_b;
#pragma omp parallel sections num_threads(2)
    {
#pragma omp section
      {
        try {
          forward_eliminate(sys, 0, last, wf, "forward");
        } catch (...) {
          err_f = std::current_exception();
        }
      }
#pragma omp section
      {
        try {
          backward_eliminate(sys, 0, last, wb, "backward");
        } catch (...) {
          err_b = std::current_exception();
        }
      }
    }
    if (err_f) std::rethrow_exception(err_f);
    if (err_b) std::rethrow_exception(err_b);
  } else {
    forward_eliminate(sys, 0, last, wf, "forward");
    backward_eliminate(sys, 0, last, wb, "backward");
  }

  std::vector<Matrix> e(static_cast<size_t>(sys.num_blocks));
  std::exception_ptr err;
#pragma omp parallel for num_threads(2) if (parallel) schedule(static)
  for (int k = 0; k <= last; ++k) {
    try {
      // Grouped as d_f + (d_b - b): at the trailing block d_b is b itself and
      // the combined block reproduces d_f exactly.
      const Matrix combined =
          symmetrized(wf.pivot[static_cast<size_t>(k)] +
                      (wb.pivot[static_cast<size_t>(k)] - sys.diag[static_cast<size_t>(k)]));
      SpdCholesky chol(combined);
      if (!chol.ok()) throw_pivot_failure(combined, k + 1, "combined");
      e[static_cast<size_t>(k)] =
          chol.solve(Matrix(wf.red_rhs[static_cast<size_t>(k)] +
                            (wb.red_rhs[static_cast<size_t>(k)] - sys.rhs[static_cast<size_t>(k)])));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  SolveTrace trace;
  trace.method = SolveMethod::TwoFilter;
  trace.total_blocks = sys.num_blocks;
  move_range(wf.pivot, 0, last, trace.fwd_pivots);
  move_range(wf.red_rhs, 0, last, trace.fwd_rhs);
  move_range(wb.pivot, 0, last, trace.bwd_pivots);
  move_range(wb.red_rhs, 0, last, trace.bwd_rhs);
  return finish(sys, std::move(trace), std::move(e));
}

BlockSolution hybrid_solve(const BlockTriSystem& sys, bool parallel) {
  sys.validate();
  if (sys.num_blocks == 1) return fbt_solve(sys);

  const int num_blocks = sys.num_blocks;
  const int m = num_blocks / 2;  // forward half covers blocks 1..m (1-based)
  const int mid_f = m - 1;       // 0-based last block of the forward half
  const int mid_b = m;           // 0-based first block of the backward half
  Sweep wf(num_blocks);
  Sweep wb(num_blocks);

  if (parallel) {
    std::exception_ptr err_f, err_b;
#pragma omp parallel sections num_threads(2)
    {
#pragma omp section
      {
        try {
          forward_eliminate(sys, 0, mid_f, wf, "hybrid-forward");
        } catch (...) {
          err_f = std::current_exception();
        }
      }
#pragma omp section
      {
        try {
          backward_eliminate(sys, mid_b, num_blocks - 1, wb, "hybrid-backward");
        } catch (...) {
          err_b = std::current_exception();
        }
      }
    }
    if (err_f) std::rethrow_exception(err_f);
    if (err_b) std::rethrow_exception(err_b);
  } else {
    forward_eliminate(sys, 0, mid_f, wf, "hybrid-forward");
    backward_eliminate(sys, mid_b, num_blocks - 1, wb, "hybrid-backward");
  }

  // Midpoint exchange; the backward sweep leads. `c` couples the two halves.
  const Matrix& c = sys.sub[static_cast<size_t>(mid_f)];
  const SpdCholesky& bwd_mid = wb.factor[static_cast<size_t>(mid_b)];
  MidpointExchange mid;
  mid.index = m;
  mid.pivot = symmetrized(wf.pivot[static_cast<size_t>(mid_f)] -
                          c.transpose() * bwd_mid.solve(c));
  mid.fwd_rhs = wf.red_rhs[static_cast<size_t>(mid_f)] -
                c.transpose() * bwd_mid.solve(wb.red_rhs[static_cast<size_t>(mid_b)]);
  SpdCholesky mid_factor(mid.pivot);
  if (!mid_factor.ok()) throw_pivot_failure(mid.pivot, m, "exchange");
  mid.bwd_rhs = wb.red_rhs[static_cast<size_t>(mid_b)] - c * mid_factor.solve(mid.fwd_rhs);

  std::vector<Matrix> e(static_cast<size_t>(num_blocks));
  e[static_cast<size_t>(mid_f)] = mid_factor.solve(mid.fwd_rhs);
  e[static_cast<size_t>(mid_b)] = bwd_mid.solve(mid.bwd_rhs);

  if (parallel) {
    std::exception_ptr err_f, err_b;
#pragma omp parallel sections num_threads(2)
    {
#pragma omp section
      {
        try {
          forward_substitute(sys, wf, 0, mid_f, e, /*seed_last=*/false);
        } catch (...) {
          err_f = std::current_exception();
        }
      }
#pragma omp section
      {
        try {
          backward_substitute(sys, wb, mid_b, num_blocks - 1, e, /*seed_first=*/false);
        } catch (...) {
          err_b = std::current_exception();
        }
      }
    }
    if (err_f) std::rethrow_exception(err_f);
    if (err_b) std::rethrow_exception(err_b);
  } else {
    forward_substitute(sys, wf, 0, mid_f, e, /*seed_last=*/false);
    backward_substitute(sys, wb, mid_b, num_blocks - 1, e, /*seed_first=*/false);
  }

  SolveTrace trace;
  trace.method = SolveMethod::Hybrid;
  trace.total_blocks = num_blocks;
  move_range(wf.pivot, 0, mid_f, trace.fwd_pivots);
  move_range(wf.red_rhs, 0, mid_f, trace.fwd_rhs);
  move_range(wb.pivot, mid_b, num_blocks - 1, trace.bwd_pivots);
  move_range(wb.red_rhs, mid_b, num_blocks - 1, trace.bwd_rhs);
  trace.midpoint = std::move(mid);
  return finish(sys, std::move(trace), std::move(e));
}

void annotate_trace(SolveTrace& trace) {
  trace.fwd_spectra.clear();
  trace.bwd_spectra.clear();
  trace.fwd_spectra.reserve(trace.fwd_pivots.size());
  trace.bwd_spectra.reserve(trace.bwd_pivots.size());
  for (const Matrix& d : trace.fwd_pivots)
    trace.fwd_spectra.push_back(spectral::block_spectrum(d));
  for (const Matrix& d : trace.bwd_pivots)
    trace.bwd_spectra.push_back(spectral::block_spectrum(d));
  if (trace.midpoint) trace.midpoint_spectrum = spectral::block_spectrum(trace.midpoint->pivot);
}

Matrix combined_block(const SolveTrace& trace, const BlockTriSystem& sys, int k) {
  if (trace.method != SolveMethod::TwoFilter)
    throw BadParameters("combined_block: trace does not hold both full sweeps");
  if (k < 1 || k > trace.total_blocks) throw BadParameters("combined_block: index out of range");
  return symmetrized(trace.fwd_pivots[static_cast<size_t>(k - 1)] +
                     (trace.bwd_pivots[static_cast<size_t>(k - 1)] -
                      sys.diag[static_cast<size_t>(k - 1)]));
}

}  // namespace bts
