#pragma once

#include <stdexcept>
#include <string>

namespace bts {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NotSymmetric : Error {
  using Error::Error;
};

struct SizeCapExceeded : Error {
  using Error::Error;
};

// A pivot block lost positive definiteness during elimination. `block` is the
// 1-based block index, `stage` names the sweep (forward, backward, combined,
// exchange), `lambda_min` is the diagnostic minimum eigenvalue of the block.
struct PivotNotPositiveDefinite : Error {
  PivotNotPositiveDefinite(int block_index, double lmin, std::string stage_tag,
                           const std::string& what)
      : Error(what), block(block_index), lambda_min(lmin), stage(std::move(stage_tag)) {}
  int block;
  double lambda_min;
  std::string stage;
};

struct CovarianceNotPD : Error {
  CovarianceNotPD(int step_index, const std::string& what) : Error(what), step(step_index) {}
  int step;
};

struct CombinedNotPD : Error {
  CombinedNotPD(int step_index, const std::string& what) : Error(what), step(step_index) {}
  int step;
};

struct IdentityViolation : Error {
  IdentityViolation(int block_index, std::string which_identity, double err,
                    const std::string& what)
      : Error(what), block(block_index), which(std::move(which_identity)), magnitude(err) {}
  int block;
  std::string which;
  double magnitude;
};

struct SingularInput : Error {
  using Error::Error;
};

struct MeasurementInfoSingular : Error {
  MeasurementInfoSingular(int step_index, const std::string& what) : Error(what), step(step_index) {}
  int step;
};

struct VacuousBound : Error {
  using Error::Error;
};

struct EmptySequence : Error {
  using Error::Error;
};

struct BadParameters : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace bts
