#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Cholesky>
#include <cmath>

#include "btsmooth/errors.hpp"
#include "btsmooth/kalman.hpp"
#include "btsmooth/sim.hpp"
#include "btsmooth/solvers.hpp"
#include "btsmooth/spectral.hpp"
#include "test_helpers.hpp"

using namespace bts;
using namespace bts::kalman;
using testutil::rel_diff;

namespace {

double vec_rel_diff(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]).squaredNorm();
    na += a[i].squaredNorm();
    nb += b[i].squaredNorm();
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

std::vector<Vector> blocks_to_vectors(const std::vector<Matrix>& blocks) {
  std::vector<Vector> out;
  out.reserve(blocks.size());
  for (const Matrix& b : blocks) out.push_back(b.col(0));
  return out;
}

LinearGaussianModel small_model(uint64_t seed, int n, int num,
                                sim::MeasPattern pattern = sim::MeasPattern::Scalar) {
  sim::ModelParams p;
  p.seed = seed;
  p.n = n;
  p.num_steps = num;
  p.pattern = pattern;
  return *sim::random_model(p).model;
}

// Dense normal equations built from the big stacked matrices, as an
// independent assembly oracle.
std::pair<Matrix, Vector> stacked_normal_equations(const LinearGaussianModel& m) {
  const int n = m.state_dim;
  const int total = n * m.num_steps;
  int meas_total = 0;
  for (int k = 0; k < m.num_steps; ++k) meas_total += m.meas_dim(k);

  Matrix big_g = Matrix::Identity(total, total);
  for (int k = 1; k < m.num_steps; ++k) big_g.block(k * n, (k - 1) * n, n, n) = -m.G[k];
  Matrix big_q = Matrix::Zero(total, total);
  for (int k = 0; k < m.num_steps; ++k) big_q.block(k * n, k * n, n, n) = m.Q[k];
  Matrix big_h = Matrix::Zero(meas_total, total);
  Matrix big_r = Matrix::Zero(meas_total, meas_total);
  Vector big_z = Vector::Zero(meas_total);
  int row = 0;
  for (int k = 0; k < m.num_steps; ++k) {
    const int mk = m.meas_dim(k);
    if (mk > 0) {
      big_h.block(row, k * n, mk, n) = m.H[k];
      big_r.block(row, row, mk, mk) = m.R[k];
      big_z.segment(row, mk) = m.z[k];
      row += mk;
    }
  }
  Vector zeta = Vector::Zero(total);
  zeta.head(n) = m.x0;

  const Matrix q_inv = big_q.inverse();
  Matrix a = big_g.transpose() * q_inv * big_g;
  Vector rhs = big_g.transpose() * q_inv * zeta;
  if (meas_total > 0) {
    const Matrix r_inv = big_r.inverse();
    a += big_h.transpose() * r_inv * big_h;
    rhs += big_h.transpose() * r_inv * big_z;
  }
  return {symmetrized(a), rhs};
}

}  // namespace

TEST_CASE("assembly matches the scalar two-step formulas") {
  LinearGaussianModel m;
  m.state_dim = 1;
  m.num_steps = 2;
  m.x0 = Vector::Zero(1);
  const double g = 0.7;
  m.G = {Matrix::Identity(1, 1), Matrix::Constant(1, 1, g)};
  m.Q = {Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  m.H = {Matrix(0, 1), Matrix(0, 1)};
  m.R = {Matrix(0, 0), Matrix(0, 0)};
  m.z = {Vector(0), Vector(0)};

  const BlockTriSystem sys = assemble_system(m);
  CHECK(sys.diag[0](0, 0) == doctest::Approx(1.0 + g * g).epsilon(1e-15));
  CHECK(sys.diag[1](0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sys.sub[0](0, 0) == doctest::Approx(-g).epsilon(1e-15));
}

TEST_CASE("assembly matches the stacked-matrix construction") {
  for (uint64_t seed : {3, 4}) {
    const LinearGaussianModel m = small_model(seed, 2, 4, sim::MeasPattern::Mixed);
    const auto [a_want, rhs_want] = stacked_normal_equations(m);
    const BlockTriSystem sys = assemble_system(m);
    CHECK(rel_diff(assemble_dense(sys), a_want) < 1e-12);
    CHECK(rel_diff(stack_rhs(sys), Matrix(rhs_want)) < 1e-12);
  }
}

TEST_CASE("assembly rhs blocks are the data plus the prior term at the head") {
  LinearGaussianModel m = small_model(5, 2, 3, sim::MeasPattern::Full);
  for (int k = 0; k < 3; ++k) {
    m.H[k] = Matrix::Identity(2, 2);
    m.R[k] = Matrix::Identity(2, 2);
  }
  const BlockTriSystem sys = assemble_system(m);
  const Vector prior = Eigen::LLT<Matrix>(m.Q[0]).solve(m.x0);
  CHECK((sys.rhs[0].col(0) - (m.z[0] + prior)).norm() < 1e-12);
  CHECK((sys.rhs[1].col(0) - m.z[1]).norm() < 1e-14);
  CHECK((sys.rhs[2].col(0) - m.z[2]).norm() < 1e-14);
}

TEST_CASE("objective is zero for zero data and zero states") {
  LinearGaussianModel m = small_model(6, 2, 3, sim::MeasPattern::Scalar);
  m.x0.setZero();
  for (int k = 0; k < 3; ++k) m.z[k].setZero();
  const std::vector<Vector> x(3, Vector::Zero(2));
  CHECK(objective(m, x) == doctest::Approx(0.0));
}

TEST_CASE("gradient equals the normal-equation residual A x - rhs") {
  const LinearGaussianModel m = small_model(7, 2, 4, sim::MeasPattern::Mixed);
  sim::Rng rng(99);
  std::vector<Vector> x;
  for (int k = 0; k < 4; ++k) x.push_back(rng.normal_vector(2));
  const std::vector<Vector> grad = objective_gradient(m, x);

  const BlockTriSystem sys = assemble_system(m);
  const Matrix a = assemble_dense(sys);
  Vector stacked(sys.size());
  for (int k = 0; k < 4; ++k) stacked.segment(2 * k, 2) = x[k];
  const Vector want = a * stacked - stack_rhs(sys).col(0);
  for (int k = 0; k < 4; ++k)
    CHECK((grad[k] - want.segment(2 * k, 2)).norm() <= 1e-10 * std::max(1.0, want.norm()));
}

TEST_CASE("gradient matches central finite differences") {
  const LinearGaussianModel m = small_model(8, 2, 3, sim::MeasPattern::Full);
  sim::Rng rng(123);
  std::vector<Vector> x;
  for (int k = 0; k < 3; ++k) x.push_back(rng.normal_vector(2));
  const std::vector<Vector> grad = objective_gradient(m, x);

  double max_err = 0.0;
  double scale = 0.0;
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 2; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[k][i]));
      std::vector<Vector> xp = x, xm = x;
      xp[k][i] += h;
      xm[k][i] -= h;
      const double fd = (objective(m, xp) - objective(m, xm)) / (2.0 * h);
      max_err = std::max(max_err, std::abs(fd - grad[k][i]));
      scale = std::max(scale, std::abs(grad[k][i]));
    }
  }
  CHECK(max_err <= 1e-5 * std::max(1.0, scale));
}

TEST_CASE("single-step smoother is the closed-form posterior") {
  const LinearGaussianModel m = small_model(9, 2, 1, sim::MeasPattern::Full);
  const RtsResult rts = rts_smoother(m);
  const Matrix q_inv = m.Q[0].inverse();
  const Matrix r_inv = m.R[0].inverse();
  const Matrix info = q_inv + m.H[0].transpose() * r_inv * m.H[0];
  const Vector want = info.ldlt().solve(m.H[0].transpose() * r_inv * m.z[0] + q_inv * m.x0);
  CHECK((rts.x[0] - want).norm() <= 1e-12 * want.norm());
}

TEST_CASE("smoother equals the forward block solve on random models") {
  for (uint64_t seed : {10, 11, 12}) {
    const LinearGaussianModel m = small_model(seed, 2, 8, sim::MeasPattern::Mixed);
    const BlockTriSystem sys = assemble_system(m);
    const double kappa = testutil::measured_kappa(sys);
    const RtsResult rts = rts_smoother(m);
    const BlockSolution f = fbt_solve(sys);
    CHECK(vec_rel_diff(rts.x, blocks_to_vectors(f.e)) < 1e-8 * kappa);
  }
}

TEST_CASE("smoother with no measurements reproduces the deterministic rollout") {
  const LinearGaussianModel m = small_model(13, 2, 5, sim::MeasPattern::None);
  const RtsResult rts = rts_smoother(m);
  Vector x = m.x0;
  for (int k = 0; k < 5; ++k) {
    x = m.G[k] * x;
    CHECK((rts.x[k] - x).norm() <= 1e-10 * std::max(1.0, x.norm()));
  }
}

TEST_CASE("filter states satisfy the information-form invariants") {
  const LinearGaussianModel m = small_model(14, 3, 6, sim::MeasPattern::Scalar);
  const RtsResult rts = rts_smoother(m);
  for (const FilterState& s : rts.filter) {
    CHECK(spectral::block_spectrum(s.P_filt).lambda_min > 0.0);
    CHECK(spectral::block_spectrum(s.P_pred).lambda_min > 0.0);
    const Vector y = Eigen::LLT<Matrix>(s.P_filt).solve(s.x_filt);
    CHECK((y - s.y_filt).norm() <= 1e-10 * std::max(1.0, s.y_filt.norm()));
  }
}

TEST_CASE("forward-trace identities connect the elimination to the filter") {
  for (uint64_t seed : {15, 16}) {
    const LinearGaussianModel m = small_model(seed, 1, 3, sim::MeasPattern::Scalar);
    const IdentityReport rep = rts_block_identities(m);
    CHECK(rep.ok);
    CHECK(rep.max_pivot_err < 1e-8);
    CHECK(rep.max_rhs_err < 1e-8);
    CHECK(rep.final_state_err < 1e-8);
  }
  // Single step: the pivot is exactly the filtered information matrix.
  const LinearGaussianModel single = small_model(17, 2, 1, sim::MeasPattern::Full);
  const BlockSolution sol = fbt_solve(assemble_system(single));
  const RtsResult rts = rts_smoother(single);
  CHECK(rel_diff(sol.trace.fwd_pivots[0], rts.filter[0].Y_filt) < 1e-12);
  // Measurement-free models still satisfy the identities.
  const LinearGaussianModel blind = small_model(18, 2, 4, sim::MeasPattern::None);
  CHECK(rts_block_identities(blind).ok);
}

TEST_CASE("backward smoother matches the backward block solve with its trace identities") {
  for (uint64_t seed : {19, 20, 21}) {
    const LinearGaussianModel m = small_model(seed, 2, 7, sim::MeasPattern::Mixed);
    const BlockTriSystem sys = assemble_system(m);
    const double kappa = testutil::measured_kappa(sys);
    const MayneResult mayne = mayne_a_smoother(m);
    const BlockSolution b = bbt_solve(sys);
    CHECK(vec_rel_diff(mayne.x, blocks_to_vectors(b.e)) < 1e-8 * kappa);

    // Pivot identity d_k^b = P_k + Q_k^{-1} for every k; rhs identity
    // s_k^b = -phi_k away from the head, with the prior folded in at k=1.
    for (int k = 0; k < m.num_steps; ++k) {
      const Matrix want = mayne.states[k].P + m.Q[k].inverse();
      CHECK(rel_diff(b.trace.bwd_pivots[k], want) < 1e-8);
      Vector want_s = -mayne.states[k].phi;
      if (k == 0) want_s += Eigen::LLT<Matrix>(m.Q[0]).solve(m.x0);
      CHECK((b.trace.bwd_rhs[k].col(0) - want_s).norm() <=
            1e-8 * std::max(1.0, want_s.norm()));
    }
  }
}

TEST_CASE("backward recursion with no measurements stays at zero information") {
  const LinearGaussianModel m = small_model(22, 2, 5, sim::MeasPattern::None);
  const MayneResult mayne = mayne_a_smoother(m);
  for (const MayneState& s : mayne.states) {
    CHECK(s.P.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(s.phi.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(spectral::block_spectrum(s.Delta).lambda_min > 0.0);
    CHECK(rel_diff(Matrix(s.Qchol * s.Qchol.transpose()), m.Q[&s - mayne.states.data()]) <
          1e-10);
  }
}

TEST_CASE("toy-shaped model yields unit backward pivots") {
  const sim::Scenario sc = sim::toy6_scenario(false);
  const LinearGaussianModel& m = *sc.model;
  const BlockTriSystem sys = assemble_system(m);
  CHECK(rel_diff(assemble_dense(sys), assemble_dense(*sc.system)) < 1e-14);
  const BlockSolution b = bbt_solve(sys);
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(b.trace.bwd_pivots[k](0, 0) - 1.0) < 1e-10);
  const MayneResult mayne = mayne_a_smoother(m);
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(mayne.states[k].P(0, 0) + m.Q[k].inverse()(0, 0) - 1.0) < 1e-10);
}

TEST_CASE("pq identity holds for identity, random, and diagonal pairs") {
  CHECK(pq_identity_check(Matrix::Identity(3, 3), Matrix::Identity(3, 3)));

  sim::Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix b1 = rng.normal_matrix(3, 3);
    const Matrix p = symmetrized(b1 * b1.transpose()) + Matrix::Identity(3, 3);
    const Matrix b2 = rng.normal_matrix(3, 3);
    const Matrix q = symmetrized(b2 * b2.transpose()) + 0.5 * Matrix::Identity(3, 3);
    CHECK(pq_identity_check(p, q));
  }

  // Scalar closed form: p - p^2/(1/q + p) = 1/q - (1/q^2)/(1/q + p).
  const Matrix p = Matrix::Constant(1, 1, 2.5);
  const Matrix q = Matrix::Constant(1, 1, 0.8);
  CHECK(pq_identity_check(p, q));
  CHECK_THROWS_AS(pq_identity_check(Matrix::Zero(2, 2), Matrix::Identity(2, 2)),
                  SingularInput);
}

TEST_CASE("two-filter smoother agrees with the gain smoother and collapses at N=1") {
  for (uint64_t seed : {24, 25}) {
    const LinearGaussianModel m = small_model(seed, 2, 6, sim::MeasPattern::Mixed);
    const double kappa = testutil::measured_kappa(assemble_system(m));
    CHECK(vec_rel_diff(mf_smoother(m), rts_smoother(m).x) < 1e-8 * kappa);
  }
  const LinearGaussianModel single = small_model(26, 2, 1, sim::MeasPattern::Full);
  const RtsResult rts = rts_smoother(single);
  CHECK(vec_rel_diff(mf_smoother(single), {rts.filter[0].x_filt}) < 1e-10);
}

TEST_CASE("two-filter combination at the trailing step inverts the forward pivot") {
  const LinearGaussianModel m = small_model(27, 2, 5, sim::MeasPattern::Scalar);
  const BlockTriSystem sys = assemble_system(m);
  const BlockSolution tf = twofilter_solve(sys);
  const Matrix combined = combined_block(tf.trace, sys, sys.num_blocks);
  CHECK(rel_diff(combined, tf.trace.fwd_pivots[sys.num_blocks - 1]) == 0.0);
}

TEST_CASE("measurement-inverting route matches the gain smoother") {
  LinearGaussianModel m = small_model(28, 2, 5, sim::MeasPattern::Full);
  SUBCASE("identity measurements") {
    for (int k = 0; k < 5; ++k) {
      m.H[k] = Matrix::Identity(2, 2);
      m.R[k] = Matrix::Identity(2, 2);
      m.z[k] = sim::Rng(50 + k).normal_vector(2);
    }
    const double kappa = testutil::measured_kappa(assemble_system(m));
    CHECK(vec_rel_diff(woodbury_solve(m), rts_smoother(m).x) < 1e-8 * kappa);
  }
  SUBCASE("random full-rank measurements") {
    const double kappa = testutil::measured_kappa(assemble_system(m));
    CHECK(vec_rel_diff(woodbury_solve(m), rts_smoother(m).x) < 1e-8 * kappa);
  }
}

TEST_CASE("scalar measurement-inverting route agrees with direct scalar algebra") {
  const LinearGaussianModel m = small_model(29, 1, 3, sim::MeasPattern::Scalar);
  const std::vector<Vector> x = woodbury_solve(m);
  // Direct dense route through the same companion equation, scalars only.
  const auto [a, rhs] = stacked_normal_equations(m);
  const Vector want = a.ldlt().solve(rhs);
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(x[k][0] - want[k]) <= 1e-9 * std::max(1.0, want.norm()));
}

TEST_CASE("rank-deficient measurements are rejected by the inverting route") {
  LinearGaussianModel m = small_model(30, 2, 3, sim::MeasPattern::Scalar);
  CHECK_THROWS_AS(woodbury_solve(m), MeasurementInfoSingular);
}

TEST_CASE("companion system is block tridiagonal with noise-bounded spectrum") {
  const LinearGaussianModel m = small_model(31, 2, 6, sim::MeasPattern::Full);
  const BlockTriSystem companion = woodbury_companion_system(m);
  companion.validate();

  // Dense check of the companion matrix against big stacked matrices.
  const int n = m.state_dim, total = n * m.num_steps;
  Matrix big_g = Matrix::Identity(total, total);
  for (int k = 1; k < m.num_steps; ++k) big_g.block(k * n, (k - 1) * n, n, n) = -m.G[k];
  Matrix big_q = Matrix::Zero(total, total);
  Matrix lambda_inv = Matrix::Zero(total, total);
  for (int k = 0; k < m.num_steps; ++k) {
    big_q.block(k * n, k * n, n, n) = m.Q[k];
    const Matrix lam = m.H[k].transpose() * m.R[k].inverse() * m.H[k];
    lambda_inv.block(k * n, k * n, n, n) = lam.inverse();
  }
  const Matrix want = symmetrized(big_q + big_g * lambda_inv * big_g.transpose());
  CHECK(rel_diff(assemble_dense(companion), want) < 1e-10);

  double q_min = 1e300;
  for (int k = 0; k < m.num_steps; ++k)
    q_min = std::min(q_min, spectral::block_spectrum(m.Q[k]).lambda_min);
  const Vector evs = testutil::dense_oracle_eigs(assemble_dense(companion));
  CHECK(evs[0] >= q_min - 1e-10);
}

TEST_CASE("all smoothing routes agree pairwise on a mixed mini corpus") {
  for (uint64_t seed : {32, 33, 34, 35}) {
    const int n = 1 + static_cast<int>(seed % 3);
    const LinearGaussianModel m =
        small_model(seed, n, 10, seed % 2 == 0 ? sim::MeasPattern::Full : sim::MeasPattern::Mixed);
    const BlockTriSystem sys = assemble_system(m);
    const double kappa = testutil::measured_kappa(sys);
    const double tol = 1e-8 * kappa;

    std::vector<std::vector<Vector>> routes;
    routes.push_back(rts_smoother(m).x);
    routes.push_back(mayne_a_smoother(m).x);
    routes.push_back(mf_smoother(m));
    routes.push_back(blocks_to_vectors(fbt_solve(sys).e));
    routes.push_back(blocks_to_vectors(bbt_solve(sys).e));
    routes.push_back(blocks_to_vectors(twofilter_solve(sys).e));
    routes.push_back(blocks_to_vectors(hybrid_solve(sys).e));
    bool woodbury_applies = true;
    try {
      routes.push_back(woodbury_solve(m));
    } catch (const MeasurementInfoSingular&) {
      woodbury_applies = false;
    }
    for (size_t i = 0; i < routes.size(); ++i)
      for (size_t j = i + 1; j < routes.size(); ++j)
        CHECK(vec_rel_diff(routes[i], routes[j]) < tol);
    CHECK((woodbury_applies || seed % 2 == 1));

    // Stationarity at every route's output.
    const double rhs_norm = stack_rhs(sys).norm();
    for (const auto& route : routes) {
      const std::vector<Vector> grad = objective_gradient(m, route);
      double g2 = 0.0;
      for (const Vector& g : grad) g2 += g.squaredNorm();
      CHECK(std::sqrt(g2) <= 1e-6 * rhs_norm);
    }
  }
}

TEST_CASE("singular process matrices break nothing") {
  sim::ModelParams p;
  p.seed = 36;
  p.n = 3;
  p.num_steps = 8;
  p.pattern = sim::MeasPattern::Scalar;
  p.rank_deficient_process = true;
  const LinearGaussianModel m = *sim::random_model(p).model;
  bool some_singular = false;
  for (const Matrix& g : m.G)
    if (std::abs(g.determinant()) < 1e-12) some_singular = true;
  CHECK(some_singular);

  const BlockTriSystem sys = assemble_system(m);
  const double kappa = testutil::measured_kappa(sys);
  CHECK(vec_rel_diff(rts_smoother(m).x, blocks_to_vectors(fbt_solve(sys).e)) < 1e-8 * kappa);
  CHECK(vec_rel_diff(mayne_a_smoother(m).x, blocks_to_vectors(bbt_solve(sys).e)) <
        1e-8 * kappa);
}

TEST_CASE("backward pivots stay conditioned on ill systems while forward pivots blow up") {
  for (const sim::Scenario& sc : sim::ill_family()) {
    const LinearGaussianModel& m = *sc.model;
    const BlockTriSystem sys = assemble_system(m);

    double alpha = 1.0;
    for (int k = 0; k < m.num_steps; ++k) {
      alpha = std::max(alpha, spectral::operator_norm(m.Q[k]));
      alpha = std::max(alpha, spectral::operator_norm(Matrix(m.Q[k].inverse())));
      alpha = std::max(alpha, spectral::operator_norm(m.G[k]));
      if (m.meas_dim(k) > 0)
        alpha = std::max(alpha, spectral::operator_norm(
                                    Matrix(m.H[k].transpose() * m.R[k].inverse() * m.H[k])));
    }
    const double kappa_bound = alpha * alpha + std::pow(alpha, 6);

    const BlockSolution b = bbt_solve(sys);
    for (int k = 0; k < m.num_steps; ++k) {
      const Matrix& d = b.trace.bwd_pivots[k];
      const Matrix slack = d - m.Q[k].inverse();
      const auto s = spectral::block_spectrum(symmetrized(slack));
      CHECK(s.lambda_min >= -1e-10 * spectral::block_spectrum(d).lambda_max);
      const auto ds = spectral::block_spectrum(d);
      CHECK(ds.cond <= kappa_bound);
    }
  }
}
