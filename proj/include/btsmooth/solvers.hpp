#pragma once

#include <optional>
#include <string>
#include <vector>

#include "btsmooth/spectral.hpp"
#include "btsmooth/system.hpp"
#include "btsmooth/types.hpp"

namespace bts {

enum class SolveMethod { Forward, Backward, TwoFilter, Hybrid };

std::string to_string(SolveMethod m);

/// Midpoint exchange record of the hybrid solver: the re-pivoted forward
/// block at the meeting index m and the two exchanged reduced right-hand
/// sides (blocks m and m+1, 1-based).
struct MidpointExchange {
  int index = 0;  // m, 1-based
  Matrix pivot;   // repivoted forward block at m
  Matrix fwd_rhs; // exchanged reduced rhs at m
  Matrix bwd_rhs; // exchanged reduced rhs at m+1
};

/// Elimination trace. Forward sequences cover blocks 1..fwd_pivots.size();
/// backward sequences cover the trailing blocks
/// (total_blocks - bwd_pivots.size() + 1)..total_blocks, both stored in
/// increasing block order. Pivot blocks are exactly symmetric (symmetrized
/// after every update). Spectra are filled on demand by annotate_trace.
struct SolveTrace {
  SolveMethod method = SolveMethod::Forward;
  int total_blocks = 0;
  std::vector<Matrix> fwd_pivots;
  std::vector<Matrix> fwd_rhs;
  std::vector<Matrix> bwd_pivots;
  std::vector<Matrix> bwd_rhs;
  std::optional<MidpointExchange> midpoint;
  std::vector<spectral::BlockSpectrum> fwd_spectra;
  std::vector<spectral::BlockSpectrum> bwd_spectra;
  std::optional<spectral::BlockSpectrum> midpoint_spectrum;

  int bwd_first_block() const {
    return total_blocks - static_cast<int>(bwd_pivots.size()) + 1;
  }
};

struct BlockSolution {
  std::vector<Matrix> e;
  double residual_norm = 0.0;
  SolveTrace trace;
};

/// Forward elimination from the first block, back-substitution from the last
/// (the block Thomas sweep). Throws PivotNotPositiveDefinite when a pivot
/// loses positive definiteness.
BlockSolution fbt_solve(const BlockTriSystem& sys);

/// Backward elimination from the last block, substitution from the first.
BlockSolution bbt_solve(const BlockTriSystem& sys);

/// Both eliminations in full, then the per-block combination
/// e_k = (d_k^f + d_k^b - b_k)^{-1} (s_k^f + s_k^b - r_k).
/// With `parallel` set the two eliminations run as two workers and the
/// combination as a parallel loop; output is identical either way.
BlockSolution twofilter_solve(const BlockTriSystem& sys, bool parallel = false);

/// Meet-in-the-middle scheme: forward elimination over blocks 1..m and
/// backward elimination over m+1..N with m = floor(N/2), one exchange at the
/// midpoint, then back-substitution outward in both halves. With `parallel`
/// set the two halves run as two workers that synchronize only at the
/// exchange; output is identical either way. N = 1 delegates to fbt_solve.
BlockSolution hybrid_solve(const BlockTriSystem& sys, bool parallel = false);

// Fills the per-pivot spectra of a trace (kept out of the solve hot path).
void annotate_trace(SolveTrace& trace);

// Combined two-filter block at k (1-based): d_k^f + d_k^b - b_k, grouped as
// d_f + (d_b - b) so the trailing block reproduces d_N^f exactly.
Matrix combined_block(const SolveTrace& trace, const BlockTriSystem& sys, int k);

}  // namespace bts
