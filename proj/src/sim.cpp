#include "btsmooth/sim.hpp"

#include <cmath>
#include <numbers>

#include "btsmooth/cholesky.hpp"
#include "btsmooth/errors.hpp"

namespace bts::sim {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

size_t idx(int k) { return static_cast<size_t>(k); }

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // Box-Muller; the first uniform is shifted off zero so the log is finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector Rng::normal_vector(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Matrix Rng::normal_matrix(int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal();
  return m;
}

Rng Rng::split(uint64_t tag) const { return Rng(splitmix64(seed_ ^ tag)); }

Scenario toy6_scenario(bool stabilized) {
  Scenario sc;
  sc.name = stabilized ? "toy6-stabilized" : "toy6";
  sc.seed = 0;

  BlockTriSystem sys;
  sys.n = 1;
  sys.num_blocks = 3;
  sys.rhs_cols = 1;
  const double coupling = stabilized ? 0.9 : 120.0;
  sys.diag = {Matrix::Constant(1, 1, 14401.0), Matrix::Constant(1, 1, 14401.0),
              Matrix::Constant(1, 1, 1.0)};
  sys.sub = {Matrix::Constant(1, 1, coupling), Matrix::Constant(1, 1, coupling)};
  sys.rhs = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
             Matrix::Constant(1, 1, 1.0)};
  sc.system = sys;

  if (!stabilized) {
    // Equivalent state-space form: couplings of -120 assemble to the same
    // matrix (the sub blocks are -Q^{-1} G = +120).
    kalman::LinearGaussianModel m;
    m.state_dim = 1;
    m.num_steps = 3;
    m.x0 = Vector::Zero(1);
    m.G = {Matrix::Identity(1, 1), Matrix::Constant(1, 1, -120.0),
           Matrix::Constant(1, 1, -120.0)};
    m.Q = {Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
    m.H = {Matrix(0, 1), Matrix(0, 1), Matrix(0, 1)};
    m.R = {Matrix(0, 0), Matrix(0, 0), Matrix(0, 0)};
    m.z = {Vector(0), Vector(0), Vector(0)};
    sc.model = m;

    sc.expected["lambda_min"] = {4.8e-9, "literature"};
    sc.expected["fwd_pivot_1"] = {14401.0, "literature"};
    sc.expected["fwd_pivot_2"] = {14400.0, "literature"};
    sc.expected["fwd_pivot_3"] = {4.8222e-9, "literature"};
    sc.expected["bwd_pivot_1"] = {1.0, "literature"};
    sc.expected["bwd_pivot_2"] = {1.0, "literature"};
    sc.expected["bwd_pivot_3"] = {1.0, "literature"};
    sc.expected["min_eigenvector_argmax_block"] = {3.0, "literature"};
  } else {
    sc.expected["lambda_min"] = {1.0, "literature"};
    // True bottom eigenvalue of the edited matrix: 1 - 0.81/14400.
    sc.expected["lambda_min_measured"] = {0.99994375, "computed"};
  }
  return sc;
}

MeasPattern meas_pattern_from_string(const std::string& s) {
  if (s == "none") return MeasPattern::None;
  if (s == "scalar") return MeasPattern::Scalar;
  if (s == "full") return MeasPattern::Full;
  if (s == "mixed") return MeasPattern::Mixed;
  throw BadParameters("unknown measurement pattern: " + s);
}

Conditioning conditioning_from_string(const std::string& s) {
  if (s == "well") return Conditioning::Well;
  if (s == "ill-last-block") return Conditioning::IllLastBlock;
  throw BadParameters("unknown conditioning: " + s);
}

std::string to_string(MeasPattern p) {
  switch (p) {
    case MeasPattern::None: return "none";
    case MeasPattern::Scalar: return "scalar";
    case MeasPattern::Full: return "full";
    case MeasPattern::Mixed: return "mixed";
  }
  return "unknown";
}

std::string to_string(Conditioning c) {
  return c == Conditioning::Well ? "well" : "ill-last-block";
}

namespace {

// Random SPD matrix with eigenvalues roughly in [lo, lo + spread].
Matrix random_spd(Rng& rng, int n, double lo, double spread) {
  const Matrix b = rng.normal_matrix(n, n);
  Matrix s = symmetrized(b * b.transpose());
  const double top = spectral::operator_norm(s);
  if (top > 0.0) s *= spread / top;
  return symmetrized(s + lo * Matrix::Identity(n, n));
}

// Random matrix rescaled to a target operator norm.
Matrix random_with_norm(Rng& rng, int n, double target) {
  Matrix g = rng.normal_matrix(n, n);
  const double norm = spectral::operator_norm(g);
  if (norm > 0.0) g *= target / norm;
  return g;
}

int pattern_dim(MeasPattern p, int n, int step) {
  switch (p) {
    case MeasPattern::None: return 0;
    case MeasPattern::Scalar: return 1;
    case MeasPattern::Full: return n;
    case MeasPattern::Mixed: {
      const int cycle = step % 3;
      return cycle == 0 ? 0 : (cycle == 1 ? 1 : n);
    }
  }
  return 0;
}

}  // namespace

Scenario random_model(const ModelParams& params) {
  if (params.n <= 0 || params.num_steps <= 0)
    throw BadParameters("random_model: n and N must be positive");
  const int n = params.n;
  const int num = params.num_steps;
  Rng rng(params.seed);

  kalman::LinearGaussianModel m;
  m.state_dim = n;
  m.num_steps = num;
  m.x0 = rng.normal_vector(n);

  m.G.push_back(Matrix::Identity(n, n));
  for (int k = 1; k < num; ++k)
    m.G.push_back(random_with_norm(rng, n, rng.uniform(0.3, 0.8)));
  if (params.rank_deficient_process && n >= 2 && num >= 2) {
    const int victim = 1 + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(num - 1));
    m.G[idx(victim)].col(n - 1).setZero();
  }
  if (params.conditioning == Conditioning::IllLastBlock && num >= 2) {
    // Two consecutive couplings at operator norm 120 collapse the state
    // information twice on the way into the final block, pushing the bottom
    // eigenvalue of the assembled system to about 120^-4 like the 3-block toy
    // chain, while blocks 1..N-2 stay tame. A single scaled coupling only
    // reaches about 1e-4.
    if (num >= 3) {
      Matrix& penultimate = m.G[idx(num - 2)];
      penultimate *= 120.0 / spectral::operator_norm(penultimate);
    }
    if (n == 1) {
      m.G[idx(num - 1)] = Matrix::Constant(1, 1, 120.0);
    } else {
      // Rank-one final process matrix at operator norm 120: the trailing
      // forward pivot collapses in one direction only, so its condition
      // number explodes while the backward pivots stay tame.
      Vector u = rng.normal_vector(n);
      Vector v = rng.normal_vector(n);
      u.normalize();
      v.normalize();
      m.G[idx(num - 1)] = 120.0 * u * v.transpose();
    }
  }

  for (int k = 0; k < num; ++k) m.Q.push_back(random_spd(rng, n, 0.6, 0.8));

  for (int k = 0; k < num; ++k) {
    const bool ill = params.conditioning == Conditioning::IllLastBlock;
    // Ill measurement schedule: full measurements up to step N-2 keep the
    // backward-slack matrices d^b - Q^{-1} safely inside the PSD cone; the
    // weak identity measurement at N-1 leaves only a 1e-5 information floor
    // so the two scaled couplings still collapse the bottom eigenvalue; the
    // final step is unmeasured so nothing rescues the last block.
    const int mk = ill ? (k == num - 1 ? 0 : n) : pattern_dim(params.pattern, n, k);
    if (mk == 0) {
      m.H.push_back(Matrix(0, n));
      m.R.push_back(Matrix(0, 0));
    } else if (ill && k == num - 2) {
      m.H.push_back(std::sqrt(1e-5) * Matrix::Identity(n, n));
      m.R.push_back(Matrix(Matrix::Identity(n, n)));
    } else {
      m.H.push_back(rng.normal_matrix(mk, n));
      m.R.push_back(random_spd(rng, mk, 0.5, 0.5));
    }
  }

  // Data from a rollout of the model itself.
  Vector x_prev = m.x0;
  for (int k = 0; k < num; ++k) {
    const Vector w = SpdCholesky(m.Q[idx(k)]).lower() * rng.normal_vector(n);
    const Vector x = m.G[idx(k)] * x_prev + w;
    const int mk = static_cast<int>(m.H[idx(k)].rows());
    Vector zk(mk);
    if (mk > 0) {
      const Vector v = SpdCholesky(m.R[idx(k)]).lower() * rng.normal_vector(mk);
      zk = m.H[idx(k)] * x + v;
    }
    m.z.push_back(zk);
    x_prev = x;
  }
  m.validate();

  Scenario sc;
  sc.name = "model-s" + std::to_string(params.seed) + "-n" + std::to_string(n) + "-N" +
            std::to_string(num) + "-" + to_string(params.pattern) + "-" +
            to_string(params.conditioning);
  sc.seed = params.seed;
  sc.model = std::move(m);
  return sc;
}

Scenario random_system(uint64_t seed, int n, int num_blocks, int rhs_cols) {
  if (n <= 0 || num_blocks <= 0 || rhs_cols <= 0)
    throw BadParameters("random_system: sizes must be positive");
  Rng rng(seed);
  BlockTriSystem sys;
  sys.n = n;
  sys.num_blocks = num_blocks;
  sys.rhs_cols = rhs_cols;
  for (int k = 0; k < num_blocks; ++k) {
    sys.diag.push_back(random_spd(rng, n, 1.0 + rng.uniform(), 0.5));
    sys.rhs.push_back(rng.normal_matrix(n, rhs_cols));
  }
  for (int j = 0; j + 1 < num_blocks; ++j) {
    // One in eight couplings is exactly zero to exercise the decoupled path.
    if (rng.next_u64() % 8 == 0)
      sys.sub.push_back(Matrix::Zero(n, n));
    else
      sys.sub.push_back(random_with_norm(rng, n, rng.uniform(0.1, 0.35)));
  }
  sys.validate();

  Scenario sc;
  sc.name = "system-s" + std::to_string(seed) + "-n" + std::to_string(n) + "-N" +
            std::to_string(num_blocks);
  sc.seed = seed;
  sc.system = std::move(sys);
  return sc;
}

spectral::ProcessOnlySystem random_process_chain(uint64_t seed, int n, int num_blocks,
                                                 bool tame_couplings) {
  Rng rng(seed);
  spectral::ProcessOnlySystem pos;
  pos.n = n;
  pos.num_blocks = num_blocks;
  for (int k = 0; k < num_blocks; ++k) pos.q.push_back(random_spd(rng, n, 0.5, 1.0));
  for (int j = 0; j + 1 < num_blocks; ++j) {
    const double target = tame_couplings ? rng.uniform(0.1, 0.9) : rng.uniform(0.5, 4.0);
    pos.g.push_back(random_with_norm(rng, n, target));
  }
  if (rng.next_u64() % 2 == 0) {
    for (int k = 0; k < num_blocks; ++k) {
      Matrix h = rng.normal_matrix(n, n);
      pos.u.push_back(symmetrized(0.3 * h * h.transpose()));
    }
  }
  pos.validate();
  return pos;
}

std::vector<Scenario> smoother_corpus(int count) {
  const int dims[] = {1, 2, 3};
  const int steps[] = {1, 2, 3, 10, 50};
  const MeasPattern patterns[] = {MeasPattern::None, MeasPattern::Scalar, MeasPattern::Full,
                                  MeasPattern::Mixed};
  std::vector<Scenario> corpus;
  corpus.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    ModelParams p;
    p.seed = 1000 + static_cast<uint64_t>(i);
    p.n = dims[i % 3];
    p.num_steps = steps[(i / 3) % 5];
    p.pattern = patterns[(i / 15) % 4];
    p.conditioning = Conditioning::Well;
    p.rank_deficient_process = (i % 7 == 3);
    corpus.push_back(random_model(p));
  }
  return corpus;
}

std::vector<Scenario> ill_family() {
  std::vector<Scenario> family;
  const int dims[] = {1, 2, 3};
  const int steps[] = {3, 10, 50};
  uint64_t seed = 9000;
  for (int n : dims)
    for (int num : steps) {
      ModelParams p;
      p.seed = seed++;
      p.n = n;
      p.num_steps = num;
      p.pattern = MeasPattern::None;
      p.conditioning = Conditioning::IllLastBlock;
      family.push_back(random_model(p));
    }
  return family;
}

std::vector<Scenario> system_corpus() {
  std::vector<Scenario> corpus;
  const int dims[] = {1, 2, 3, 5};
  const int steps[] = {1, 2, 3, 10, 50};
  uint64_t seed = 5000;
  for (int n : dims)
    for (int num : steps) {
      corpus.push_back(random_system(seed++, n, num, 1));
      if (n == 2 && num >= 3) corpus.push_back(random_system(seed++, n, num, 3));
    }
  return corpus;
}

std::vector<spectral::ProcessOnlySystem> spectral_corpus(int count) {
  const int dims[] = {1, 2, 3};
  const int steps[] = {2, 3, 5, 10};
  std::vector<spectral::ProcessOnlySystem> corpus;
  corpus.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int n = dims[i % 3];
    const int num = steps[(i / 3) % 4];
    corpus.push_back(random_process_chain(2000 + static_cast<uint64_t>(i), n, num,
                                          /*tame_couplings=*/i % 2 == 0));
  }
  return corpus;
}

std::vector<std::string> preset_names() { return {"toy6", "toy6-stabilized"}; }

Scenario preset(const std::string& name, bool stabilized) {
  if (name == "toy6") return toy6_scenario(stabilized);
  if (name == "toy6-stabilized") return toy6_scenario(true);
  throw BadParameters("unknown preset: " + name);
}

}  // namespace bts::sim
