#include "btsmooth/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "btsmooth/errors.hpp"

namespace bts::io {

namespace {

json matrix_to_json(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

Matrix matrix_from_json(const json& arr, int rows, int cols, const char* what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) !=
                             static_cast<Eigen::Index>(rows) * cols)
    throw IoError(std::string("json: ") + what + " has wrong element count");
  Matrix m(rows, cols);
  size_t p = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = arr[p++].get<double>();
  return m;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw IoError(std::string("json: ") + what + " is not an array");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[static_cast<size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json system_to_json(const BlockTriSystem& sys) {
  sys.validate();
  json j;
  j["n"] = sys.n;
  j["N"] = sys.num_blocks;
  j["ell"] = sys.rhs_cols;
  j["diag"] = json::array();
  j["sub"] = json::array();
  j["rhs"] = json::array();
  for (const Matrix& b : sys.diag) j["diag"].push_back(matrix_to_json(b));
  for (const Matrix& c : sys.sub) j["sub"].push_back(matrix_to_json(c));
  for (const Matrix& r : sys.rhs) j["rhs"].push_back(matrix_to_json(r));
  return j;
}

BlockTriSystem system_from_json(const json& j) {
  BlockTriSystem sys;
  try {
    sys.n = j.at("n").get<int>();
    sys.num_blocks = j.at("N").get<int>();
    sys.rhs_cols = j.at("ell").get<int>();
    for (const json& b : j.at("diag")) sys.diag.push_back(matrix_from_json(b, sys.n, sys.n, "diag"));
    for (const json& c : j.at("sub")) sys.sub.push_back(matrix_from_json(c, sys.n, sys.n, "sub"));
    for (const json& r : j.at("rhs"))
      sys.rhs.push_back(matrix_from_json(r, sys.n, sys.rhs_cols, "rhs"));
  } catch (const json::exception& e) {
    throw IoError(std::string("json: malformed system document: ") + e.what());
  }
  sys.validate();
  return sys;
}

json model_to_json(const kalman::LinearGaussianModel& model) {
  model.validate();
  json j;
  j["n"] = model.state_dim;
  j["N"] = model.num_steps;
  j["x0"] = vector_to_json(model.x0);
  j["G"] = json::array();
  j["Q"] = json::array();
  j["H"] = json::array();
  j["R"] = json::array();
  j["z"] = json::array();
  for (const Matrix& g : model.G) j["G"].push_back(matrix_to_json(g));
  for (const Matrix& q : model.Q) j["Q"].push_back(matrix_to_json(q));
  for (const Matrix& h : model.H) j["H"].push_back(matrix_to_json(h));
  for (const Matrix& r : model.R) j["R"].push_back(matrix_to_json(r));
  for (const Vector& z : model.z) j["z"].push_back(vector_to_json(z));
  return j;
}

kalman::LinearGaussianModel model_from_json(const json& j) {
  kalman::LinearGaussianModel m;
  try {
    m.state_dim = j.at("n").get<int>();
    m.num_steps = j.at("N").get<int>();
    m.x0 = vector_from_json(j.at("x0"), "x0");
    for (const json& g : j.at("G"))
      m.G.push_back(matrix_from_json(g, m.state_dim, m.state_dim, "G"));
    for (const json& q : j.at("Q"))
      m.Q.push_back(matrix_from_json(q, m.state_dim, m.state_dim, "Q"));
    for (const json& h : j.at("H")) {
      const int mk = m.state_dim > 0 ? static_cast<int>(h.size()) / m.state_dim : 0;
      m.H.push_back(matrix_from_json(h, mk, m.state_dim, "H"));
    }
    size_t k = 0;
    for (const json& r : j.at("R")) {
      const int mk = k < m.H.size() ? static_cast<int>(m.H[k].rows()) : 0;
      m.R.push_back(matrix_from_json(r, mk, mk, "R"));
      ++k;
    }
    for (const json& z : j.at("z")) m.z.push_back(vector_from_json(z, "z"));
  } catch (const json::exception& e) {
    throw IoError(std::string("json: malformed model document: ") + e.what());
  }
  m.validate();
  return m;
}

json scenario_to_json(const sim::Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["seed"] = sc.seed;
  j["model"] = sc.model ? model_to_json(*sc.model) : json(nullptr);
  j["system"] = sc.system ? system_to_json(*sc.system) : json(nullptr);
  json exp = json::object();
  for (const auto& [key, ev] : sc.expected)
    exp[key] = {{"value", ev.value}, {"provenance", ev.provenance}};
  j["expected"] = exp;
  return j;
}

sim::Scenario scenario_from_json(const json& j) {
  sim::Scenario sc;
  try {
    sc.name = j.at("name").get<std::string>();
    sc.seed = j.at("seed").get<uint64_t>();
    if (j.contains("model") && !j["model"].is_null()) sc.model = model_from_json(j["model"]);
    if (j.contains("system") && !j["system"].is_null()) sc.system = system_from_json(j["system"]);
    if (j.contains("expected"))
      for (const auto& [key, ev] : j["expected"].items())
        sc.expected[key] = {ev.at("value").get<double>(),
                            ev.value("provenance", std::string("computed"))};
  } catch (const json::exception& e) {
    throw IoError(std::string("json: malformed scenario document: ") + e.what());
  }
  return sc;
}

json spectral_report_to_json(const spectral::SpectralReport& rep) {
  json j;
  j["lambda_min"] = rep.lambda_min;
  j["lambda_max"] = rep.lambda_max;
  j["kappa"] = rep.kappa;
  j["bound_lower"] = rep.bound_lower;
  j["bound_upper"] = rep.bound_upper;
  j["sv_bound_lower"] = rep.sv_bound_lower;
  j["sv_bound_upper"] = rep.sv_bound_upper;
  j["weakest_link_bound"] = rep.weakest_link_bound;
  j["weakest_link_vacuous"] = rep.weakest_link_vacuous;
  j["argmax_block"] = rep.argmax_block;
  j["dense_path"] = rep.dense_path;
  return j;
}

void trace_to_csv(const SolveTrace& trace, std::ostream& out) {
  SolveTrace annotated;
  const SolveTrace* t = &trace;
  if (trace.fwd_spectra.size() != trace.fwd_pivots.size() ||
      trace.bwd_spectra.size() != trace.bwd_pivots.size() ||
      (trace.midpoint && !trace.midpoint_spectrum)) {
    annotated = trace;
    annotate_trace(annotated);
    t = &annotated;
  }
  out << "k,direction,lambda_min,lambda_max,cond\n";
  for (size_t i = 0; i < t->fwd_pivots.size(); ++i) {
    const auto& s = t->fwd_spectra[i];
    out << (i + 1) << ",forward," << format_double(s.lambda_min) << ','
        << format_double(s.lambda_max) << ',' << format_double(s.cond) << '\n';
  }
  const int bwd_base = t->bwd_first_block();
  for (size_t i = 0; i < t->bwd_pivots.size(); ++i) {
    const auto& s = t->bwd_spectra[i];
    out << (bwd_base + static_cast<int>(i)) << ",backward," << format_double(s.lambda_min)
        << ',' << format_double(s.lambda_max) << ',' << format_double(s.cond) << '\n';
  }
  if (t->midpoint && t->midpoint_spectrum) {
    const auto& s = *t->midpoint_spectrum;
    out << t->midpoint->index << ",exchange," << format_double(s.lambda_min) << ','
        << format_double(s.lambda_max) << ',' << format_double(s.cond) << '\n';
  }
}

void estimates_to_csv(const std::vector<Vector>& estimates, std::ostream& out) {
  if (estimates.empty()) return;
  out << "k";
  for (Eigen::Index i = 0; i < estimates.front().size(); ++i) out << ",x" << (i + 1);
  out << '\n';
  for (size_t k = 0; k < estimates.size(); ++k) {
    out << (k + 1);
    for (Eigen::Index i = 0; i < estimates[k].size(); ++i)
      out << ',' << format_double(estimates[k][i]);
    out << '\n';
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace bts::io
