#ifndef TLP_SCENARIO_IO_HPP
#define TLP_SCENARIO_IO_HPP

#include "tlp/model.hpp"
#include "tlp/objective.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace tlp {

/// Scenario file layout (indices in beta entries are 1-based):
///
///   {
///     "T0": 2, "L": 1, "T": 2, "C": 1.0, "gamma": 1.0, "p0": 1.0,
///     "alpha": [[1.0], [1.0]],
///     "user_types": [{
///       "utility": {"kind": "linear", "param": 1.0},
///       "delta": 1.0,
///       "x_ini": [[1.0], [1.0]],
///       "beta": [{"t": 1, "l": 1, "t_next": 2, "l_next": 1, "prob": 1.0}]
///     }]
///   }
///
/// Matrices are rows = time slots, columns = locations. Any matrix may be
/// given instead as a CSV path, resolved relative to the scenario file.
/// "beta" may also be the string "uniform" (1/L on every admissible entry).
/// Utility kinds: "log" (param k) and "linear" (param rho).
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Reads, parses, renormalizes near-stochastic profiles and validates.
/// Throws Io for unreadable files and InvalidScenario otherwise.
Scenario load_scenario(const std::filesystem::path& path);

/// Inverse of parse_scenario (beta written sparsely). Throws Incompatible
/// for utilities without a file representation.
nlohmann::json scenario_to_json(const Scenario& s);

/// Comma separated, one row per line, blank lines and '#' comments ignored.
Matrix read_csv_matrix(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json report_to_json(const SolveReport& r);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
/// best_prices of a report file written by report_to_json.
PriceMatrix read_report_prices(const std::filesystem::path& path);

}  // namespace tlp

#endif
