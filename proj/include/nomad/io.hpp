#pragma once

#include "nomad/bm.hpp"
#include "nomad/cgm.hpp"
#include "nomad/datasets.hpp"
#include "nomad/linalg.hpp"
#include "nomad/manifold.hpp"
#include "nomad/ring.hpp"
#include "nomad/snmf.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomad {

using Json = nlohmann::ordered_json;

/// JSON has no infinity or NaN; those become null.
inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json json_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

inline Json json_array(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(json_number(v(i)));
  return a;
}

inline Json to_json(const SolveReport& r) {
  Json j;
  j["solver"] = "cgm";
  j["n"] = r.Q.n();
  j["outer_iters"] = r.outer_iters;
  j["converged"] = r.converged;
  j["eig_unconverged"] = r.eig_unconverged;
  j["final_objective"] = r.objective_trace.empty() ? Json(nullptr) : json_number(r.objective_trace.back());
  j["final_neg_rmse"] = r.neg_rmse_trace.empty() ? Json(nullptr) : json_number(r.neg_rmse_trace.back());
  j["objective_trace"] = json_array(r.objective_trace);
  j["neg_rmse_trace"] = json_array(r.neg_rmse_trace);
  j["gap_trace"] = json_array(r.gap_trace);
  return j;
}

inline Json to_json(const BmReport& r) {
  Json j;
  j["solver"] = "bm";
  j["n"] = r.Q.n();
  j["r"] = r.Y.rows();
  j["objective"] = json_number(r.objective);
  j["row_residual"] = json_number(r.row_residual);
  j["trace_residual"] = json_number(r.trace_residual);
  j["outer_iters"] = r.outer_iters;
  j["converged"] = r.converged;
  j["stagnated"] = r.stagnated;
  j["lagrangian_trace"] = json_array(r.lagrangian_trace);
  j["residual_trace"] = json_array(r.residual_trace);
  return j;
}

inline Json to_json(const FourierProfile& p) {
  Json j;
  j["n"] = p.n();
  j["circulant_residual"] = json_number(p.circulant_residual);
  j["imag_residual"] = json_number(p.imag_residual);
  j["q"] = json_array(p.q);
  j["diag_values"] = json_array(p.diag_values);
  return j;
}

inline Json to_json(const LpReport& r) {
  return Json{{"passed", r.passed()},
              {"min_q", json_number(r.min_q)},
              {"q0_error", json_number(r.q0_error)},
              {"budget_error", json_number(r.budget_error)},
              {"min_entry_margin", json_number(r.min_entry_margin)},
              {"worst_tau", r.worst_tau}};
}

inline Json to_json(const ConeReport& r) {
  return Json{{"passed", r.passed}, {"mean_cosine", json_number(r.mean)}, {"std_cosine", json_number(r.std)}};
}

inline Json to_json(const CpDiagnostics& d) {
  return Json{{"diag_dominant", d.diag_dominant},
              {"diag_value_check", d.diag_value_check},
              {"dominance_margin", json_number(d.dominance_margin)},
              {"diag_value_error", json_number(d.diag_value_error)},
              {"regime", to_string(d.regime)}};
}

inline Json to_json(const BullseyeReport& r) {
  return Json{{"n_neighbors", r.n_neighbors},
              {"percentiles", json_array(r.percentiles)},
              {"scores", json_array(r.scores)}};
}

/// Writes `j` pretty-printed with a trailing newline.
inline void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

/// Dense matrix CSV. The optional `header` is written as a '#' line.
inline void save_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                            const std::string& header = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (!header.empty()) out << "# " << header << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

/// Q as CSV with header line `# n=<n>,K=<K>`.
inline void save_q_csv(const SymMatrix& q, double k, const std::filesystem::path& path) {
  save_matrix_csv(q.mat(), path,
                  "n=" + std::to_string(q.n()) + ",K=" + detail::format_double(k));
}

/// Reads a matrix CSV; '#' lines are skipped.
inline Matrix load_matrix_csv(const std::filesystem::path& path) {
  return load_csv(path, false).points;
}

/// Parses K from a `# n=..,K=..` header when present.
inline std::optional<double> read_q_header_k(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') return std::nullopt;
  const auto pos = line.find("K=");
  if (pos == std::string::npos) return std::nullopt;
  try {
    return std::stod(line.substr(pos + 2));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline void save_cp_sweep_csv(const std::vector<CpRankRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "r,mean,std\n";
  for (const auto& r : rows) {
    out << r.r << ',' << detail::format_double(r.mean) << ',' << detail::format_double(r.std) << '\n';
  }
}

/// Flat `key = value` configuration. Values may be quoted; '#' starts a
/// comment outside quotes; [sections] are rejected.
inline std::map<std::string, std::string> parse_flat_config(std::istream& in,
                                                            const std::string& source = "config") {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string body;
    bool in_quote = false;
    for (char c : line) {
      if (c == '"') in_quote = !in_quote;
      if (c == '#' && !in_quote) break;
      body.push_back(c);
    }
    body = trim(body);
    if (body.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (body.front() == '[') throw std::invalid_argument(where + ": sections are not supported");
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(where + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (in_quote) {
      throw std::invalid_argument(where + ": unterminated string");
    }
    if (kv.count(key) != 0) throw std::invalid_argument(where + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

inline std::map<std::string, std::string> load_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  return parse_flat_config(in, path.string());
}

}  // namespace nomad
