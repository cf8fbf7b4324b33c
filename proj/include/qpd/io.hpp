#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qpd/model.hpp"
#include "qpd/phase_diagram.hpp"
#include "qpd/solver.hpp"

namespace qpd {

inline constexpr int kSchemaVersion = 1;

/// Model description file: `key = value` lines, `#` comments, JSON values.
///
///   config = "Lambda"         # optional named topology
///   levels = [0, 0.1, 1]
///   modes  = [1, 0.9]
///   edges  = [[1, 3, 1], [2, 3, 2]]   # one-based [lower, upper, mode]
///   Na     = 1
///
/// `config` alone gives the preset frequencies; `levels`/`modes` override
/// them. `config` and `edges` are mutually exclusive.
ModelSpec parse_model_text(std::string_view text);
ModelSpec read_model_file(const std::filesystem::path& path);

nlohmann::json model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);

/// 12 significant digits; "nan" for missing values.
std::string format_number(double v);

/// Everything that determines the output of a scan.
struct ScanConfig {
  ModelSpec spec;
  GridSpec grid;
  ScanOptions scan;
  SolverOptions solver;
  Thresholds thresholds;
};

nlohmann::json scan_config_to_json(const ScanConfig& config);
ScanConfig scan_config_from_json(const nlohmann::json& j);

void write_surface_csv(std::ostream& out, const ScanResult& scan, int levels);
void write_fidelity_csv(std::ostream& out, const ScanResult& scan);
void write_separatrix_csv(std::ostream& out, const std::vector<SeparatrixPoint>& points);
void write_simplex_csv(std::ostream& out, const ScanResult& scan);
void write_pairs_csv(std::ostream& out, const ScanResult& scan, Configuration config);
nlohmann::json scan_meta(const ScanConfig& config, const ScanResult& scan);

/// Writes prefix_surface.csv, prefix_fidelity.csv, prefix_separatrix.csv and
/// prefix_meta.json; with `observables` also prefix_simplex.csv and, for
/// named configurations, prefix_pairs.csv. Returns the paths written.
std::vector<std::filesystem::path> write_scan_outputs(const std::string& prefix, const ScanConfig& config,
                                                      const ScanResult& scan, bool observables);

/// Rebuilds labels, populations, status and fidelities of a scan from its
/// surface and fidelity files; states are not stored.
ScanResult read_scan_outputs(const std::string& prefix);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::vector<std::vector<std::string>> read_csv_rows(std::istream& in);

}  // namespace qpd
