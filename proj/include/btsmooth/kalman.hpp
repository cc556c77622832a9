#pragma once

#include <vector>

#include "btsmooth/system.hpp"
#include "btsmooth/types.hpp"

namespace bts::kalman {

/// Linear-Gaussian state-space model
///
///   x_1 = x_0 + w_1
///   x_k = G_k x_{k-1} + w_k          k = 2..N
///   z_k = H_k x_k + v_k              k = 1..N
///
/// with w_k ~ N(0, Q_k), v_k ~ N(0, R_k) and x_0 known exactly. G is stored
/// for all k with G_1 = I so indexing stays uniform. Measurement dimensions
/// m(k) may vary per step; m(k) = 0 (no measurement) is an H block with zero
/// rows. Process matrices need not be invertible.
struct LinearGaussianModel {
  int state_dim = 0;  // n
  int num_steps = 0;  // N
  Vector x0;
  std::vector<Matrix> G;  // N blocks, n x n, G[0] = I
  std::vector<Matrix> Q;  // N blocks, n x n SPD
  std::vector<Matrix> H;  // N blocks, m(k) x n
  std::vector<Matrix> R;  // N blocks, m(k) x m(k) SPD
  std::vector<Vector> z;  // N vectors, length m(k)

  void validate() const;
  int meas_dim(int k) const { return static_cast<int>(H[static_cast<size_t>(k)].rows()); }
};

/// Normal equations of the smoothing problem as a block-tridiagonal system:
///   diag_k = Q_k^{-1} + G_{k+1}^T Q_{k+1}^{-1} G_{k+1} + H_k^T R_k^{-1} H_k
///   sub_k  = -Q_k^{-1} G_k
///   rhs_k  = H_k^T R_k^{-1} z_k   (+ Q_1^{-1} x_0 at k = 1)
/// with the trailing process term zero at k = N.
BlockTriSystem assemble_system(const LinearGaussianModel& model);

/// Negative log posterior (up to a constant):
///   sum_k 1/2 |z_k - H_k x_k|^2_{R_k^{-1}} + 1/2 |x_k - G_k x_{k-1}|^2_{Q_k^{-1}}
double objective(const LinearGaussianModel& model, const std::vector<Vector>& x);

// Gradient of the objective; equals A x - rhs of the assembled system.
std::vector<Vector> objective_gradient(const LinearGaussianModel& model,
                                       const std::vector<Vector>& x);

/// Per-step filter quantities, information form: y = P^{-1} x.
struct FilterState {
  Matrix P_filt;   // P_{k|k}
  Matrix P_pred;   // P_{k|k-1}
  Matrix Y_filt;   // P_{k|k}^{-1}
  Matrix Y_pred;   // P_{k|k-1}^{-1}
  Vector x_filt;   // x_{k|k}
  Vector x_pred;   // x_{k|k-1}
  Vector y_filt;   // P_{k|k}^{-1} x_{k|k}
  Vector y_pred;   // P_{k|k-1}^{-1} x_{k|k-1}
  Matrix C_gain;   // P_{k|k} G_{k+1}^T P_{k+1|k}^{-1}; empty at the last step
};

struct RtsResult {
  std::vector<Vector> x;              // smoothed estimates x_{k|N}
  std::vector<FilterState> filter;    // forward filter trace
};

/// Classic fixed-interval smoother: forward Kalman filter run in information
/// form (prediction by Woodbury, so singular process matrices are fine),
/// then the backward gain sweep. Fully independent of the block solvers.
RtsResult rts_smoother(const LinearGaussianModel& model);

struct IdentityReport {
  double max_pivot_err = 0.0;   // pivots vs filtered information + next-step process term
  double max_rhs_err = 0.0;     // reduced rhs vs filtered information vectors
  double final_state_err = 0.0; // trailing solve block vs final filtered state
  int worst_block = 0;
  bool ok = false;
};

/// Verifies the per-block identities tying the forward elimination trace to
/// the filter: pivot_k = P_{k|k}^{-1} + G_{k+1}^T Q_{k+1}^{-1} G_{k+1},
/// reduced_rhs_k = y_{k|k}, and e_N = x_{N|N}. Errors are relative.
IdentityReport rts_block_identities(const LinearGaussianModel& model, double tol = 1e-8,
                                    bool throw_on_violation = false);

/// Per-step quantities of the backward information recursion.
struct MayneState {
  Matrix P;      // backward information matrix
  Matrix Delta;  // (I + C^T P C)^{-1} used in the step that produced this P
  Matrix Qchol;  // lower factor C with Q_k = C C^T
  Vector phi;    // backward information vector
};

struct MayneResult {
  std::vector<Vector> x;
  std::vector<MayneState> states;
};

/// Backward-then-forward smoother: the backward information recursion
///   P_k   = G_{k+1}^T [I - P_{k+1} C Delta C^T] P_{k+1} G_{k+1} + H_k^T R_k^{-1} H_k
///   Delta = (I + C^T P_{k+1} C)^{-1},  Q_{k+1} = C C^T
///   phi_k = -H_k^T R_k^{-1} z_k + G_{k+1}^T [I - P_{k+1} C Delta C^T] phi_{k+1}
/// initialized with P_N = H_N^T R_N^{-1} H_N, phi_N = -H_N^T R_N^{-1} z_N,
/// followed by the forward substitution
///   x_1 = (P_1 + Q_1^{-1})^{-1} (-phi_1 + Q_1^{-1} x_0)
///   x_k = (P_k + Q_k^{-1})^{-1} (-phi_k + Q_k^{-1} G_k x_{k-1}).
MayneResult mayne_a_smoother(const LinearGaussianModel& model);

/// Checks P - P(Q^{-1}+P)^{-1}P = Q^{-1} - Q^{-1}(Q^{-1}+P)^{-1}Q^{-1} for a
/// pair of invertible matrices, to `tol` relative. Throws SingularInput.
bool pq_identity_check(const Matrix& p, const Matrix& q, double tol = 1e-9);

/// Two-filter smoother: combines the forward information filter with the
/// backward information recursion per block,
///   x_k = (d_k^f + d_k^b - b_k)^{-1} (s_k^f + s_k^b - r_k),
/// all quantities computed from the classic recursions (not the block
/// solvers).
std::vector<Vector> mf_smoother(const LinearGaussianModel& model);

/// Alternative solve for models whose measurement information
/// Lambda_k = H_k^T R_k^{-1} H_k is invertible at every step: solves the
/// companion block-tridiagonal system (Q + G Lambda^{-1} G^T) w = G Lambda^{-1} rhs
/// and recovers x = Lambda^{-1} rhs - Lambda^{-1} G^T w. Throws
/// MeasurementInfoSingular when some Lambda_k is singular.
std::vector<Vector> woodbury_solve(const LinearGaussianModel& model);

/// The companion system Q + G Lambda^{-1} G^T of the route above (exposed for
/// verification; its eigenvalues are bounded below by those of Q).
BlockTriSystem woodbury_companion_system(const LinearGaussianModel& model);

}  // namespace bts::kalman
