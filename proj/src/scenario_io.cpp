#include "tlp/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tlp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::InvalidScenario, where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number()) invalid(where + "." + key, "expected a number");
  return v.get<double>();
}

int integer(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_integer()) invalid(where + "." + key, "expected an integer");
  return v.get<int>();
}

Matrix matrix_field(const json& j, const char* key, const std::string& where, const fs::path& base,
                    int rows, int cols) {
  const json& v = field(j, key, where);
  const std::string path = where.empty() ? key : where + "." + key;
  Matrix m;
  if (v.is_string()) {
    fs::path file = v.get<std::string>();
    if (file.is_relative()) file = base / file;
    m = read_csv_matrix(file);
  } else {
    m = matrix_from_json(v, path);
  }
  if (m.rows() != rows || m.cols() != cols)
    invalid(path, "expected " + std::to_string(rows) + " x " + std::to_string(cols) + ", got " +
                      std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
  return m;
}

UtilitySpec parse_utility(const json& j, const std::string& where) {
  const json& u = field(j, "utility", where);
  const std::string at = where + ".utility";
  const json& kind = field(u, "kind", at);
  if (!kind.is_string()) invalid(at + ".kind", "expected a string");
  const double param = number(u, "param", at);
  const std::string k = kind.get<std::string>();
  if (k == "log") return Logarithmic{param};
  if (k == "linear") return Linear{param};
  invalid(at + ".kind", "unknown utility kind '" + k + "' (expected log or linear)");
}

LocalMobility parse_beta(const json& j, const std::string& where, int T0, int L, int T) {
  const json& b = field(j, "beta", where);
  const std::string at = where + ".beta";
  if (b.is_string()) {
    if (b.get<std::string>() != "uniform") invalid(at, "the only named profile is \"uniform\"");
    return LocalMobility::uniform(T0, L, T);
  }
  if (!b.is_array()) invalid(at, "expected a list of entries or \"uniform\"");
  LocalMobility beta(T0, L, T);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const std::string e = at + "[" + std::to_string(i) + "]";
    const int t = integer(b[i], "t", e) - 1;
    const int l = integer(b[i], "l", e) - 1;
    const int tn = integer(b[i], "t_next", e) - 1;
    const int ln = integer(b[i], "l_next", e) - 1;
    if (!beta.contains(t, l, tn, ln)) invalid(e, "entry lies outside the scheduling window");
    beta.at(t, l, tn, ln) = number(b[i], "prob", e);
  }
  return beta;
}

}  // namespace

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open CSV file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidScenario,
                    path.string() + ":" + std::to_string(line_no) + ": not a number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorCode::InvalidScenario,
                  path.string() + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::InvalidScenario, path.string() + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) invalid(what, "expected a non-empty list of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) invalid(what, "rows must be non-empty lists");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) invalid(what, "ragged row " + std::to_string(i + 1));
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) invalid(what, "non-numeric entry in row " + std::to_string(i + 1));
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Scenario parse_scenario(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) invalid("scenario", "expected a JSON object");
  Scenario s;
  s.T0 = integer(j, "T0", "scenario");
  s.L = integer(j, "L", "scenario");
  s.T = integer(j, "T", "scenario");
  if (s.T0 < 1 || s.L < 1 || s.T < 1) invalid("scenario", "T0, L and T must be >= 1");
  s.capacity = number(j, "C", "scenario");
  s.gamma = number(j, "gamma", "scenario");
  s.p0 = number(j, "p0", "scenario");
  s.alpha = matrix_field(j, "alpha", "", base_dir, s.T0, s.L);

  const json& types = field(j, "user_types", "scenario");
  if (!types.is_array() || types.empty()) invalid("user_types", "expected a non-empty list");
  for (std::size_t a = 0; a < types.size(); ++a) {
    const std::string where = "user_types[" + std::to_string(a) + "]";
    UserType u;
    u.utility = parse_utility(types[a], where);
    u.delta = number(types[a], "delta", where);
    u.x_ini = matrix_field(types[a], "x_ini", where, base_dir, s.T0, s.L);
    u.beta = parse_beta(types[a], where, s.T0, s.L, s.T);
    s.user_types.push_back(std::move(u));
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidScenario, path.string() + ": " + e.what());
  }
  Scenario s = parse_scenario(j, path.parent_path());
  renormalize_profiles(s);
  require_valid(s);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["T0"] = s.T0;
  j["L"] = s.L;
  j["T"] = s.T;
  j["C"] = s.capacity;
  j["gamma"] = s.gamma;
  j["p0"] = s.p0;
  j["alpha"] = matrix_to_json(s.alpha);
  j["user_types"] = json::array();
  for (const auto& u : s.user_types) {
    json ut;
    if (const auto* lg = std::get_if<Logarithmic>(&u.utility))
      ut["utility"] = {{"kind", "log"}, {"param", lg->k}};
    else if (const auto* ln = std::get_if<Linear>(&u.utility))
      ut["utility"] = {{"kind", "linear"}, {"param", ln->rho}};
    else
      throw Error(ErrorCode::Incompatible, "general concave utilities cannot be written to a scenario file");
    ut["delta"] = u.delta;
    ut["x_ini"] = matrix_to_json(u.x_ini);
    json beta = json::array();
    for (int t = 0; t < s.T0; ++t)
      for (int l = 0; l < s.L; ++l)
        for (int tn = t + 1; tn <= s.window_end(t); ++tn)
          for (int ln = 0; ln < s.L; ++ln)
            if (const double b = u.beta(t, l, tn, ln); b != 0.0)
              beta.push_back({{"t", t + 1}, {"l", l + 1}, {"t_next", tn + 1}, {"l_next", ln + 1}, {"prob", b}});
    ut["beta"] = std::move(beta);
    j["user_types"].push_back(std::move(ut));
  }
  return j;
}

json report_to_json(const SolveReport& r) {
  json j;
  j["solver"] = r.solver;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["tie_break"] = to_string(r.tie_break);
  j["objective"] = r.objective;
  j["best_prices"] = matrix_to_json(r.best_prices);
  j["costs"] = {{"excess", r.costs.excess},
                {"discount_loss", r.costs.discount_loss},
                {"total", r.costs.total()}};
  j["metrics"] = {{"average_discount", r.metrics.average_discount},
                  {"excess_demand", r.metrics.excess_demand},
                  {"traffic_variance", r.metrics.traffic_variance},
                  {"total_user_payoff", r.metrics.total_user_payoff}};
  j["load"] = matrix_to_json(r.load);
  j["trace"] = r.trace;
  j["evaluations"] = r.evaluations;
  j["wall_time_s"] = r.wall_time_s;
  json diag = json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = std::isfinite(v) ? json(v) : json(nullptr);
  j["diagnostics"] = std::move(diag);
  j["notes"] = r.notes;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

PriceMatrix read_report_prices(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open report " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
  return matrix_from_json(field(j, "best_prices", "report"), "report.best_prices");
}

}  // namespace tlp
