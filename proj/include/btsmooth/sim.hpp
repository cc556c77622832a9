#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "btsmooth/kalman.hpp"
#include "btsmooth/spectral.hpp"
#include "btsmooth/system.hpp"

namespace bts::sim {

/// Deterministic random stream. Fixed algorithm, documented so the stream
/// contract is reproducible: a 64-bit seed is scrambled through splitmix64
/// and feeds std::mt19937_64; uniforms are (x >> 11) * 2^-53 and normals come
/// from the basic Box-Muller transform on two uniforms. Same seed, same
/// stream, bit for bit.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  double normal();                        // standard normal
  Vector normal_vector(int n);
  Matrix normal_matrix(int rows, int cols);

  // Derive an independent substream (splitmix64 of seed xor tag).
  Rng split(uint64_t tag) const;

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

struct ExpectedValue {
  double value = 0.0;
  std::string provenance;  // "literature" | "computed"
};

struct Scenario {
  std::string name;
  uint64_t seed = 0;
  std::optional<kalman::LinearGaussianModel> model;
  std::optional<BlockTriSystem> system;
  std::map<std::string, ExpectedValue> expected;
};

/// The classic 3-block scalar chain with couplings of 120 on unit noise:
/// diagonal [14401, 14401, 1], couplings 120, an extremely small bottom
/// eigenvalue driven entirely by the last block. The stabilized variant
/// replaces the couplings with 0.9, leaving the diagonal untouched. Stored as
/// literal constants; the unstabilized scenario also carries the equivalent
/// state-space model (process matrices -120 on unit noise, no measurements).
Scenario toy6_scenario(bool stabilized = false);

enum class MeasPattern { None, Scalar, Full, Mixed };
enum class Conditioning { Well, IllLastBlock };

MeasPattern meas_pattern_from_string(const std::string& s);
Conditioning conditioning_from_string(const std::string& s);
std::string to_string(MeasPattern p);
std::string to_string(Conditioning c);

struct ModelParams {
  uint64_t seed = 1;
  int n = 2;
  int num_steps = 10;
  MeasPattern pattern = MeasPattern::Scalar;
  Conditioning conditioning = Conditioning::Well;
  bool rank_deficient_process = false;  // zero a column of one interior block
};

/// Random linear-Gaussian model. Well-conditioned draws keep process-matrix
/// operator norms at or below 0.8 and covariance eigenvalues near 1. The
/// ill-last-block construction scales the final process matrix to operator
/// norm 120 (rank one first when n > 1, so the forward pivots also become
/// anisotropic) and drops all measurements, which drives the bottom
/// eigenvalue of the assembled system toward zero through the final block.
Scenario random_model(const ModelParams& params);

/// Random SPD block-tridiagonal system with coupling norms kept below 0.35
/// and diagonal blocks with eigenvalues in about [1, 2.5], so the assembled
/// condition number stays modest by block diagonal dominance.
Scenario random_system(uint64_t seed, int n, int num_blocks, int rhs_cols = 1);

/// Random process-only chain for the spectral sandwich corpus.
spectral::ProcessOnlySystem random_process_chain(uint64_t seed, int n, int num_blocks,
                                                 bool tame_couplings);

// Seeded corpora used across the test and acceptance suites.
std::vector<Scenario> smoother_corpus(int count = 100);         // well-conditioned models
std::vector<Scenario> ill_family();                             // ill-last-block models
std::vector<Scenario> system_corpus();                          // SPD block-tridiagonal systems
std::vector<spectral::ProcessOnlySystem> spectral_corpus(int count = 200);

std::vector<std::string> preset_names();
Scenario preset(const std::string& name, bool stabilized = false);

}  // namespace bts::sim
