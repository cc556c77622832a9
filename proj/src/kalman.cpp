#include "btsmooth/kalman.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>

#include "btsmooth/cholesky.hpp"
#include "btsmooth/errors.hpp"
#include "btsmooth/solvers.hpp"

namespace bts::kalman {

namespace {

size_t idx(int k) { return static_cast<size_t>(k); }

SpdCholesky covariance_factor(const Matrix& cov, int step, const char* label) {
  SpdCholesky chol(cov);
  if (!chol.ok())
    throw CovarianceNotPD(step, std::string(label) + " covariance at step " +
                              std::to_string(step) + " is not positive definite");
  return chol;
}

std::vector<SpdCholesky> process_factors(const LinearGaussianModel& m) {
  std::vector<SpdCholesky> f;
  f.reserve(idx(m.num_steps));
  for (int k = 0; k < m.num_steps; ++k)
    f.push_back(covariance_factor(m.Q[idx(k)], k + 1, "process"));
  return f;
}

// H_k^T R_k^{-1} H_k; an m(k) = 0 step contributes the zero matrix.
Matrix measurement_info(const LinearGaussianModel& m, int k) {
  if (m.meas_dim(k) == 0) return Matrix::Zero(m.state_dim, m.state_dim);
  const SpdCholesky rchol = covariance_factor(m.R[idx(k)], k + 1, "measurement");
  return symmetrized(m.H[idx(k)].transpose() * rchol.solve(m.H[idx(k)]));
}

// H_k^T R_k^{-1} z_k; zero for m(k) = 0.
Vector measurement_info_vector(const LinearGaussianModel& m, int k) {
  if (m.meas_dim(k) == 0) return Vector::Zero(m.state_dim);
  const SpdCholesky rchol = covariance_factor(m.R[idx(k)], k + 1, "measurement");
  return m.H[idx(k)].transpose() * rchol.solve(m.z[idx(k)]);
}

// Full right-hand side block of the normal equations.
Vector rhs_block(const LinearGaussianModel& m, int k, const std::vector<SpdCholesky>& qchol) {
  Vector r = measurement_info_vector(m, k);
  if (k == 0) r += qchol[0].solve(m.x0);
  return r;
}

std::vector<FilterState> run_information_filter(const LinearGaussianModel& m,
                                                const std::vector<SpdCholesky>& qchol) {
  std::vector<FilterState> st(idx(m.num_steps));

  for (int k = 0; k < m.num_steps; ++k) {
    FilterState& s = st[idx(k)];
    if (k == 0) {
      // Prediction from the known initial state through the identity process.
      s.P_pred = m.Q[0];
      s.Y_pred = symmetrized(qchol[0].inverse());
      s.x_pred = m.x0;
      s.y_pred = qchol[0].solve(m.x0);
    } else {
      const FilterState& prev = st[idx(k - 1)];
      const Matrix& g = m.G[idx(k)];
      const Matrix qinv_g = qchol[idx(k)].solve(g);
      const Matrix w = symmetrized(prev.Y_filt + g.transpose() * qinv_g);
      SpdCholesky wchol(w);
      if (!wchol.ok())
        throw CovarianceNotPD(k + 1, "information prediction at step " +
                                  std::to_string(k + 1) + " lost positive definiteness");
      s.Y_pred = symmetrized(qchol[idx(k)].inverse() -
                             qinv_g * wchol.solve(Matrix(qinv_g.transpose())));
      s.y_pred = qinv_g * wchol.solve(prev.y_filt);
      s.x_pred = g * prev.x_filt;
      s.P_pred = symmetrized(g * prev.P_filt * g.transpose() + m.Q[idx(k)]);
    }
    s.Y_filt = symmetrized(s.Y_pred + measurement_info(m, k));
    s.y_filt = s.y_pred + measurement_info_vector(m, k);
    SpdCholesky fchol(s.Y_filt);
    if (!fchol.ok())
      throw CovarianceNotPD(k + 1, "filtered information at step " + std::to_string(k + 1) +
                                " is not positive definite");
    s.P_filt = symmetrized(fchol.inverse());
    s.x_filt = fchol.solve(s.y_filt);
  }
  for (int k = 0; k + 1 < m.num_steps; ++k)
    st[idx(k)].C_gain = st[idx(k)].P_filt * m.G[idx(k + 1)].transpose() * st[idx(k + 1)].Y_pred;
  return st;
}

struct BackwardRecursion {
  std::vector<MayneState> states;
  std::vector<Matrix> q_inverse;  // Q_k^{-1}, reused by the substitution pass
};

BackwardRecursion run_backward_recursion(const LinearGaussianModel& m,
                                         const std::vector<SpdCholesky>& qchol) {
  const int n = m.state_dim;
  const int last = m.num_steps - 1;
  BackwardRecursion rec;
  rec.states.assign(idx(m.num_steps), MayneState{});
  rec.q_inverse.reserve(idx(m.num_steps));
  for (int k = 0; k < m.num_steps; ++k) {
    rec.states[idx(k)].Qchol = qchol[idx(k)].lower();
    rec.q_inverse.push_back(symmetrized(qchol[idx(k)].inverse()));
  }

  rec.states[idx(last)].P = measurement_info(m, last);
  rec.states[idx(last)].phi = -measurement_info_vector(m, last);
  rec.states[idx(last)].Delta = Matrix::Identity(n, n);

  for (int k = last - 1; k >= 0; --k) {
    const Matrix& p_next = rec.states[idx(k + 1)].P;
    const Vector& phi_next = rec.states[idx(k + 1)].phi;
    const Matrix& c = rec.states[idx(k + 1)].Qchol;  // factor of the noise entering step k+1
    const Matrix& g = m.G[idx(k + 1)];

    SpdCholesky dchol(symmetrized(Matrix::Identity(n, n) + c.transpose() * p_next * c));
    if (!dchol.ok())
      throw CombinedNotPD(k + 1, "backward recursion gain at step " + std::to_string(k + 1) +
                              " is not positive definite");
    const Matrix delta = symmetrized(dchol.inverse());
    const Matrix shrink =
        Matrix::Identity(n, n) - p_next * (c * (delta * c.transpose()));

    rec.states[idx(k)].Delta = delta;
    rec.states[idx(k)].P =
        symmetrized(g.transpose() * (shrink * p_next) * g + measurement_info(m, k));
    rec.states[idx(k)].phi =
        -measurement_info_vector(m, k) + g.transpose() * (shrink * phi_next);
  }
  return rec;
}

double rel_err(const Matrix& got, const Matrix& want) {
  const double scale = std::max(want.norm(), got.norm());
  if (scale == 0.0) return 0.0;
  return (got - want).norm() / scale;
}

}  // namespace

void LinearGaussianModel::validate() const {
  if (state_dim <= 0 || num_steps <= 0)
    throw BadParameters("model: state dimension and step count must be positive");
  if (x0.size() != state_dim) throw DimensionMismatch("model: x0 length mismatch");
  const auto expect = [&](size_t got, const char* what) {
    if (static_cast<int>(got) != num_steps)
      throw DimensionMismatch(std::string("model: expected N ") + what + " blocks");
  };
  expect(G.size(), "process");
  expect(Q.size(), "process-covariance");
  expect(H.size(), "measurement");
  expect(R.size(), "measurement-covariance");
  expect(z.size(), "data");
  if (!(G[0] - Matrix::Identity(state_dim, state_dim)).isZero(0.0))
    throw BadParameters("model: the leading process matrix must be the identity");
  for (int k = 0; k < num_steps; ++k) {
    if (G[idx(k)].rows() != state_dim || G[idx(k)].cols() != state_dim)
      throw DimensionMismatch("model: process matrix size mismatch at step " +
                              std::to_string(k + 1));
    if (Q[idx(k)].rows() != state_dim || Q[idx(k)].cols() != state_dim)
      throw DimensionMismatch("model: process covariance size mismatch at step " +
                              std::to_string(k + 1));
    if (!is_symmetric(Q[idx(k)]))
      throw NotSymmetric("model: process covariance not symmetric at step " +
                         std::to_string(k + 1));
    const int mk = static_cast<int>(H[idx(k)].rows());
    if (H[idx(k)].cols() != state_dim && mk > 0)
      throw DimensionMismatch("model: measurement matrix size mismatch at step " +
                              std::to_string(k + 1));
    if (R[idx(k)].rows() != mk || R[idx(k)].cols() != mk)
      throw DimensionMismatch("model: measurement covariance size mismatch at step " +
                              std::to_string(k + 1));
    if (mk > 0 && !is_symmetric(R[idx(k)]))
      throw NotSymmetric("model: measurement covariance not symmetric at step " +
                         std::to_string(k + 1));
    if (z[idx(k)].size() != mk)
      throw DimensionMismatch("model: data length mismatch at step " + std::to_string(k + 1));
  }
}

BlockTriSystem assemble_system(const LinearGaussianModel& model) {
  model.validate();
  const int n = model.state_dim;
  const int num = model.num_steps;
  const std::vector<SpdCholesky> qchol = process_factors(model);

  BlockTriSystem sys;
  sys.n = n;
  sys.num_blocks = num;
  sys.rhs_cols = 1;
  sys.diag.reserve(idx(num));
  sys.sub.reserve(idx(num) - 1);
  sys.rhs.reserve(idx(num));

  for (int k = 0; k < num; ++k) {
    Matrix d = qchol[idx(k)].inverse() + measurement_info(model, k);
    if (k + 1 < num) {
      const Matrix& g_next = model.G[idx(k + 1)];
      d += g_next.transpose() * qchol[idx(k + 1)].solve(g_next);
    }
    sys.diag.push_back(symmetrized(d));
    sys.rhs.push_back(Matrix(rhs_block(model, k, qchol)));
  }
  for (int k = 1; k < num; ++k)
    sys.sub.push_back(Matrix(-qchol[idx(k)].solve(model.G[idx(k)])));
  sys.validate();
  return sys;
}

double objective(const LinearGaussianModel& model, const std::vector<Vector>& x) {
  model.validate();
  if (static_cast<int>(x.size()) != model.num_steps)
    throw DimensionMismatch("objective: state sequence length mismatch");
  const std::vector<SpdCholesky> qchol = process_factors(model);
  double f = 0.0;
  for (int k = 0; k < model.num_steps; ++k) {
    if (x[idx(k)].size() != model.state_dim)
      throw DimensionMismatch("objective: state vector size mismatch");
    const Vector& prev = k == 0 ? model.x0 : x[idx(k - 1)];
    const Vector w = x[idx(k)] - model.G[idx(k)] * prev;
    f += 0.5 * w.dot(qchol[idx(k)].solve(w));
    if (model.meas_dim(k) > 0) {
      const SpdCholesky rchol = covariance_factor(model.R[idx(k)], k + 1, "measurement");
      const Vector r = model.z[idx(k)] - model.H[idx(k)] * x[idx(k)];
      f += 0.5 * r.dot(rchol.solve(r));
    }
  }
  return f;
}

std::vector<Vector> objective_gradient(const LinearGaussianModel& model,
                                       const std::vector<Vector>& x) {
  model.validate();
  if (static_cast<int>(x.size()) != model.num_steps)
    throw DimensionMismatch("gradient: state sequence length mismatch");
  const std::vector<SpdCholesky> qchol = process_factors(model);
  std::vector<Vector> grad(idx(model.num_steps));
  std::vector<Vector> qinv_w(idx(model.num_steps));
  for (int k = 0; k < model.num_steps; ++k) {
    const Vector& prev = k == 0 ? model.x0 : x[idx(k - 1)];
    qinv_w[idx(k)] = qchol[idx(k)].solve(Vector(x[idx(k)] - model.G[idx(k)] * prev));
  }
  for (int k = 0; k < model.num_steps; ++k) {
    Vector g = qinv_w[idx(k)];
    if (k + 1 < model.num_steps) g -= model.G[idx(k + 1)].transpose() * qinv_w[idx(k + 1)];
    if (model.meas_dim(k) > 0) {
      const SpdCholesky rchol = covariance_factor(model.R[idx(k)], k + 1, "measurement");
      g += model.H[idx(k)].transpose() *
           rchol.solve(Vector(model.H[idx(k)] * x[idx(k)] - model.z[idx(k)]));
    }
    grad[idx(k)] = g;
  }
  return grad;
}

RtsResult rts_smoother(const LinearGaussianModel& model) {
  model.validate();
  const std::vector<SpdCholesky> qchol = process_factors(model);
  RtsResult out;
  out.filter = run_information_filter(model, qchol);
  const int last = model.num_steps - 1;
  out.x.assign(idx(model.num_steps), Vector());
  out.x[idx(last)] = out.filter[idx(last)].x_filt;
  for (int k = last - 1; k >= 0; --k) {
    const FilterState& s = out.filter[idx(k)];
    out.x[idx(k)] =
        s.x_filt + s.C_gain * (out.x[idx(k + 1)] - out.filter[idx(k + 1)].x_pred);
  }
  return out;
}

IdentityReport rts_block_identities(const LinearGaussianModel& model, double tol,
                                    bool throw_on_violation) {
  model.validate();
  const std::vector<SpdCholesky> qchol = process_factors(model);
  const std::vector<FilterState> filter = run_information_filter(model, qchol);
  const BlockSolution sol = fbt_solve(assemble_system(model));

  IdentityReport rep;
  for (int k = 0; k < model.num_steps; ++k) {
    Matrix want = filter[idx(k)].Y_filt;
    if (k + 1 < model.num_steps) {
      const Matrix& g_next = model.G[idx(k + 1)];
      want = symmetrized(want + g_next.transpose() * qchol[idx(k + 1)].solve(g_next));
    }
    const double err_d = rel_err(sol.trace.fwd_pivots[idx(k)], want);
    const double err_s = rel_err(sol.trace.fwd_rhs[idx(k)], Matrix(filter[idx(k)].y_filt));
    if (std::max(err_d, err_s) > std::max(rep.max_pivot_err, rep.max_rhs_err))
      rep.worst_block = k + 1;
    rep.max_pivot_err = std::max(rep.max_pivot_err, err_d);
    rep.max_rhs_err = std::max(rep.max_rhs_err, err_s);
  }
  rep.final_state_err = rel_err(sol.e.back(), Matrix(filter.back().x_filt));
  rep.ok = rep.max_pivot_err <= tol && rep.max_rhs_err <= tol && rep.final_state_err <= tol;
  if (!rep.ok && throw_on_violation) {
    const double worst = std::max({rep.max_pivot_err, rep.max_rhs_err, rep.final_state_err});
    throw IdentityViolation(rep.worst_block, "forward-trace filter identity", worst,
                            "forward elimination trace deviates from the filter recursion by " +
                                std::to_string(worst));
  }
  return rep;
}

MayneResult mayne_a_smoother(const LinearGaussianModel& model) {
  model.validate();
  const std::vector<SpdCholesky> qchol = process_factors(model);
  BackwardRecursion rec = run_backward_recursion(model, qchol);

  MayneResult out;
  out.x.assign(idx(model.num_steps), Vector());
  for (int k = 0; k < model.num_steps; ++k) {
    const Matrix d = symmetrized(rec.states[idx(k)].P + rec.q_inverse[idx(k)]);
    SpdCholesky dchol(d);
    if (!dchol.ok())
      throw CombinedNotPD(k + 1, "backward smoother block at step " + std::to_string(k + 1) +
                              " is not positive definite");
    Vector rhs = -rec.states[idx(k)].phi;
    rhs += k == 0 ? Vector(qchol[0].solve(model.x0))
                  : Vector(qchol[idx(k)].solve(Vector(model.G[idx(k)] * out.x[idx(k - 1)])));
    out.x[idx(k)] = dchol.solve(rhs);
  }
  out.states = std::move(rec.states);
  return out;
}

bool pq_identity_check(const Matrix& p, const Matrix& q, double tol) {
  if (p.rows() != p.cols() || q.rows() != q.cols() || p.rows() != q.rows())
    throw DimensionMismatch("pq identity: matrices must be square and same order");
  const Eigen::FullPivLU<Matrix> q_lu(q);
  if (!q_lu.isInvertible()) throw SingularInput("pq identity: second matrix is singular");
  const Eigen::FullPivLU<Matrix> p_lu(p);
  if (!p_lu.isInvertible()) throw SingularInput("pq identity: first matrix is singular");
  const Matrix q_inv = q_lu.inverse();
  const Eigen::FullPivLU<Matrix> mid(Matrix(q_inv + p));
  if (!mid.isInvertible()) throw SingularInput("pq identity: combined matrix is singular");
  const Matrix mid_inv = mid.inverse();
  const Matrix lhs = p - p * mid_inv * p;
  const Matrix rhs = q_inv - q_inv * mid_inv * q_inv;
  return rel_err(lhs, rhs) <= tol;
}

std::vector<Vector> mf_smoother(const LinearGaussianModel& model) {
  model.validate();
  const std::vector<SpdCholesky> qchol = process_factors(model);
  const std::vector<FilterState> filter = run_information_filter(model, qchol);
  const BackwardRecursion rec = run_backward_recursion(model, qchol);

  std::vector<Vector> x(idx(model.num_steps));
  for (int k = 0; k < model.num_steps; ++k) {
    Matrix process_term = Matrix::Zero(model.state_dim, model.state_dim);
    if (k + 1 < model.num_steps) {
      const Matrix& g_next = model.G[idx(k + 1)];
      process_term = symmetrized(g_next.transpose() * qchol[idx(k + 1)].solve(g_next));
    }
    const Matrix d_fwd = filter[idx(k)].Y_filt + process_term;
    const Matrix d_bwd = rec.states[idx(k)].P + rec.q_inverse[idx(k)];
    const Matrix b = rec.q_inverse[idx(k)] + process_term + measurement_info(model, k);

    const Vector s_fwd = filter[idx(k)].y_filt;
    Vector s_bwd = -rec.states[idx(k)].phi;
    Vector r = measurement_info_vector(model, k);
    if (k == 0) {
      const Vector prior = qchol[0].solve(model.x0);
      s_bwd += prior;
      r += prior;
    }

    const Matrix combined = symmetrized(d_fwd + (d_bwd - b));
    SpdCholesky chol(combined);
    if (!chol.ok())
      throw CombinedNotPD(k + 1, "two-filter combination at step " + std::to_string(k + 1) +
                              " is not positive definite");
    x[idx(k)] = chol.solve(Vector(s_fwd + (s_bwd - r)));
  }
  return x;
}

BlockTriSystem woodbury_companion_system(const LinearGaussianModel& model) {
  model.validate();
  const int n = model.state_dim;
  const int num = model.num_steps;
  const std::vector<SpdCholesky> qchol = process_factors(model);

  std::vector<SpdCholesky> lchol;
  lchol.reserve(idx(num));
  for (int k = 0; k < num; ++k) {
    SpdCholesky chol(measurement_info(model, k));
    if (!chol.ok())
      throw MeasurementInfoSingular(
          k + 1, "measurement information at step " + std::to_string(k + 1) +
                     " is singular; the companion route needs full-column-rank measurements");
    lchol.push_back(std::move(chol));
  }

  BlockTriSystem sys;
  sys.n = n;
  sys.num_blocks = num;
  sys.rhs_cols = 1;
  for (int k = 0; k < num; ++k) {
    Matrix d = model.Q[idx(k)] + lchol[idx(k)].inverse();
    if (k > 0) {
      const Matrix& g = model.G[idx(k)];
      d += g * lchol[idx(k - 1)].solve(Matrix(g.transpose()));
    }
    sys.diag.push_back(symmetrized(d));
  }
  for (int k = 1; k < num; ++k)
    sys.sub.push_back(
        Matrix(-lchol[idx(k - 1)].solve(Matrix(model.G[idx(k)].transpose())).transpose()));

  // Right-hand side: (G Lambda^{-1} rhs)_k.
  std::vector<Vector> v(idx(num));
  for (int k = 0; k < num; ++k)
    v[idx(k)] = lchol[idx(k)].solve(rhs_block(model, k, qchol));
  for (int k = 0; k < num; ++k) {
    Vector b = v[idx(k)];
    if (k > 0) b -= model.G[idx(k)] * v[idx(k - 1)];
    sys.rhs.push_back(Matrix(b));
  }
  sys.validate();
  return sys;
}

std::vector<Vector> woodbury_solve(const LinearGaussianModel& model) {
  model.validate();
  const std::vector<SpdCholesky> qchol = process_factors(model);
  std::vector<SpdCholesky> lchol;
  lchol.reserve(idx(model.num_steps));
  for (int k = 0; k < model.num_steps; ++k) {
    SpdCholesky chol(measurement_info(model, k));
    if (!chol.ok())
      throw MeasurementInfoSingular(
          k + 1, "measurement information at step " + std::to_string(k + 1) +
                     " is singular; the companion route needs full-column-rank measurements");
    lchol.push_back(std::move(chol));
  }

  const BlockTriSystem companion = woodbury_companion_system(model);
  const BlockSolution w = fbt_solve(companion);

  std::vector<Vector> x(idx(model.num_steps));
  for (int k = 0; k < model.num_steps; ++k) {
    const Vector v = lchol[idx(k)].solve(rhs_block(model, k, qchol));
    Vector gt_w = w.e[idx(k)].col(0);
    if (k + 1 < model.num_steps)
      gt_w -= model.G[idx(k + 1)].transpose() * w.e[idx(k + 1)].col(0);
    x[idx(k)] = v - lchol[idx(k)].solve(gt_w);
  }
  return x;
}

}  // namespace bts::kalman
