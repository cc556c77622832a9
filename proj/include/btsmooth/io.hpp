#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "btsmooth/kalman.hpp"
#include "btsmooth/sim.hpp"
#include "btsmooth/solvers.hpp"
#include "btsmooth/spectral.hpp"
#include "btsmooth/system.hpp"

namespace bts::io {

using nlohmann::json;

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// System document: {"n":..,"N":..,"ell":..,"diag":[[row-major n*n]..],
// "sub":[..],"rhs":[..]}.
json system_to_json(const BlockTriSystem& sys);
BlockTriSystem system_from_json(const json& j);

// Model document: {"n":..,"N":..,"x0":[..],"G":[..],"Q":[..],"H":[[m(k)*n]..],
// "R":[..],"z":[..]} with m(k) inferred from the H block sizes.
json model_to_json(const kalman::LinearGaussianModel& model);
kalman::LinearGaussianModel model_from_json(const json& j);

json scenario_to_json(const sim::Scenario& sc);
sim::Scenario scenario_from_json(const json& j);

json spectral_report_to_json(const spectral::SpectralReport& rep);

// Trace CSV: one row per recorded pivot block, columns
// k,direction,lambda_min,lambda_max,cond. Spectra are computed if missing.
void trace_to_csv(const SolveTrace& trace, std::ostream& out);

// Estimates CSV: k followed by the state components.
void estimates_to_csv(const std::vector<Vector>& estimates, std::ostream& out);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

}  // namespace bts::io
