#include "qpd/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qpd/errors.hpp"
#include "qpd/observables.hpp"

namespace qpd {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Drops a trailing `#` comment that is not inside a JSON string.
std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("'{}' has the wrong type", key));
  }
}

std::vector<Edge> edges_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("'edges' must be a list of [lower, upper, mode] triples");
  std::vector<Edge> edges;
  for (const auto& e : j) {
    const auto v = get_as<std::vector<int>>(e, "edges");
    if (v.size() != 3) throw ConfigError("each edge needs [lower, upper, mode]");
    if (v[0] < 1 || v[1] < 1 || v[2] < 1) throw ConfigError("edge indices are one-based");
    edges.push_back({v[0] - 1, v[1] - 1, v[2] - 1});
  }
  return edges;
}

json edge_to_json(const Edge& e) { return json::array({e.lower + 1, e.upper + 1, e.mode + 1}); }

ModelSpec model_from_fields(const json& fields) {
  static const std::vector<std::string> known{"config", "levels", "modes", "edges", "Na", "atoms"};
  for (const auto& [key, value] : fields.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(fmt::format("unknown model key '{}'", key));
    }
  }
  if (fields.contains("Na") && fields.contains("atoms")) throw ConfigError("give either 'Na' or 'atoms'");
  int atoms = 1;
  if (fields.contains("Na")) atoms = get_as<int>(fields["Na"], "Na");
  if (fields.contains("atoms")) atoms = get_as<int>(fields["atoms"], "atoms");

  std::optional<Configuration> config;
  if (fields.contains("config")) {
    const auto name = get_as<std::string>(fields["config"], "config");
    config = parse_configuration(name);
    if (!config) throw ConfigError(fmt::format("unknown configuration '{}'", name));
    if (fields.contains("edges")) throw ConfigError("'config' and 'edges' are mutually exclusive");
  } else if (!fields.contains("edges")) {
    throw ConfigError("the model needs 'config' or 'edges'");
  }

  if (config) {
    const ModelSpec preset = ModelSpec::preset(*config, std::max(atoms, 1));
    std::vector<double> levels = preset.levels().omegas();
    std::vector<double> modes = preset.modes().frequencies();
    if (fields.contains("levels")) levels = get_as<std::vector<double>>(fields["levels"], "levels");
    if (fields.contains("modes")) modes = get_as<std::vector<double>>(fields["modes"], "modes");
    return ModelSpec(LevelScheme(std::move(levels)), ModeSet(std::move(modes)), preset.topology(), atoms);
  }
  if (!fields.contains("levels") || !fields.contains("modes")) {
    throw ConfigError("a custom topology needs 'levels' and 'modes'");
  }
  return ModelSpec(LevelScheme(get_as<std::vector<double>>(fields["levels"], "levels")),
                   ModeSet(get_as<std::vector<double>>(fields["modes"], "modes")),
                   CouplingTopology(edges_from_json(fields["edges"])), atoms);
}

}  // namespace

ModelSpec parse_model_text(std::string_view text) {
  json fields = json::object();
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    if (fields.contains(key)) throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    try {
      fields[key] = json::parse(value);
    } catch (const json::parse_error&) {
      // Bare words are accepted as strings.
      if (value.find_first_of("[]{}\",") != std::string::npos) {
        throw ConfigError(fmt::format("line {}: cannot parse value of '{}'", line_no, key));
      }
      fields[key] = value;
    }
  }
  return model_from_fields(fields);
}

ModelSpec read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open model file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model_text(buffer.str());
}

json model_to_json(const ModelSpec& spec) {
  json j;
  if (auto c = spec.configuration()) j["config"] = to_string(*c);
  j["levels"] = spec.levels().omegas();
  j["modes"] = spec.modes().frequencies();
  if (!spec.configuration()) {
    json edges = json::array();
    for (const auto& e : spec.topology().edges()) edges.push_back(edge_to_json(e));
    j["edges"] = edges;
  }
  j["Na"] = spec.atoms();
  return j;
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model must be a JSON object");
  return model_from_fields(j);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // no negative zero
  return fmt::format("{:.12g}", v);
}

namespace {

json axis_to_json(const AxisRange& r) { return {{"lo", r.lo}, {"hi", r.hi}, {"n", r.n}}; }

AxisRange axis_from_json(const json& j) {
  return {get_as<double>(j.at("lo"), "lo"), get_as<double>(j.at("hi"), "hi"), get_as<int>(j.at("n"), "n")};
}

}  // namespace

json scan_config_to_json(const ScanConfig& c) {
  const auto& e = c.solver.eigen;
  const auto& conv = c.solver.convergence;
  json j;
  j["model"] = model_to_json(c.spec);
  j["hamiltonian"] = to_string(c.grid.model);
  j["grid"] = {{"x1", axis_to_json(c.grid.x1)},
               {"x2", axis_to_json(c.grid.x2)},
               {"order", c.scan.order == ScanOrder::AlongX1 ? "x1" : "x2"}};
  j["axes"] = {{"x1_edge", edge_to_json(c.spec.topology().edge(c.scan.edge1))},
               {"x2_edge", edge_to_json(c.spec.topology().edge(c.scan.edge2))},
               {"base", c.scan.base}};
  j["rwa"] = {{"full_box", c.scan.full_box},
              {"kmax", c.scan.kmax ? json::array({c.scan.kmax->first, c.scan.kmax->second}) : json(nullptr)}};
  j["solver"] = {{"method", to_string(e.method)},
                 {"residual_tolerance", e.tolerance},
                 {"dense_threshold", e.dense_threshold},
                 {"krylov_dim", e.krylov_dim},
                 {"max_restarts", e.max_restarts},
                 {"subspace", e.subspace},
                 {"max_iterations", e.max_iterations},
                 {"seed", e.seed},
                 {"fidelity_tolerance", conv.fidelity_tolerance},
                 {"energy_tolerance", conv.energy_tolerance},
                 {"cutoff_step", conv.step},
                 {"max_cutoff", conv.max_cutoff},
                 {"tail_tolerance", conv.tail_tolerance},
                 {"degeneracy_tolerance", c.solver.degeneracy_tolerance},
                 {"start_cutoff", c.solver.start_cutoff}};
  j["thresholds"] = {{"disc", c.thresholds.disc},
                     {"unstable", c.thresholds.unstable},
                     {"minimum", c.thresholds.minimum}};
  return j;
}

ScanConfig scan_config_from_json(const json& j) {
  try {
    ModelSpec spec = model_from_json(j.at("model"));
    GridSpec grid;
    grid.x1 = axis_from_json(j.at("grid").at("x1"));
    grid.x2 = axis_from_json(j.at("grid").at("x2"));
    const auto model = parse_model(j.at("hamiltonian").get<std::string>());
    if (!model) throw ConfigError("unknown hamiltonian");
    grid.model = *model;
    ScanOptions scan;
    scan.order = j.at("grid").at("order").get<std::string>() == "x2" ? ScanOrder::AlongX2 : ScanOrder::AlongX1;
    auto edge_index = [&](const json& e) {
      auto edges = edges_from_json(json::array({e}));
      auto idx = spec.topology().index_of(edges.front());
      if (!idx) throw ConfigError("scan axis is not an edge of the topology");
      return *idx;
    };
    scan.edge1 = edge_index(j.at("axes").at("x1_edge"));
    scan.edge2 = edge_index(j.at("axes").at("x2_edge"));
    scan.base = j.at("axes").at("base").get<std::vector<double>>();
    scan.full_box = j.at("rwa").at("full_box").get<bool>();
    if (!j.at("rwa").at("kmax").is_null()) {
      const auto k = j.at("rwa").at("kmax").get<std::vector<int>>();
      if (k.size() != 2) throw ConfigError("kmax needs two entries");
      scan.kmax = std::pair{k[0], k[1]};
    }
    SolverOptions solver;
    const auto& s = j.at("solver");
    const auto method = parse_eigen_method(s.at("method").get<std::string>());
    if (!method) throw ConfigError("unknown eigensolver method");
    solver.eigen.method = *method;
    solver.eigen.tolerance = s.at("residual_tolerance").get<double>();
    solver.eigen.dense_threshold = s.at("dense_threshold").get<std::size_t>();
    solver.eigen.krylov_dim = s.at("krylov_dim").get<int>();
    solver.eigen.max_restarts = s.at("max_restarts").get<int>();
    solver.eigen.subspace = s.at("subspace").get<int>();
    solver.eigen.max_iterations = s.at("max_iterations").get<int>();
    solver.eigen.seed = s.at("seed").get<std::uint64_t>();
    solver.convergence.fidelity_tolerance = s.at("fidelity_tolerance").get<double>();
    solver.convergence.energy_tolerance = s.at("energy_tolerance").get<double>();
    solver.convergence.step = s.at("cutoff_step").get<int>();
    solver.convergence.max_cutoff = s.at("max_cutoff").get<int>();
    solver.convergence.tail_tolerance = s.at("tail_tolerance").get<double>();
    solver.degeneracy_tolerance = s.at("degeneracy_tolerance").get<double>();
    solver.start_cutoff = s.at("start_cutoff").get<int>();
    Thresholds th;
    th.disc = j.at("thresholds").at("disc").get<double>();
    th.unstable = j.at("thresholds").at("unstable").get<double>();
    th.minimum = j.at("thresholds").at("minimum").get<double>();
    return ScanConfig{std::move(spec), grid, std::move(scan), solver, th};
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed scan configuration: {}", e.what()));
  }
}

namespace {

void schema_line(std::ostream& out) { fmt::print(out, "# schema={}\n", kSchemaVersion); }

std::string parity_text(const BlockLabel& label) {
  auto p = parity_of(label);
  return p ? to_string(*p) : "-";
}

}  // namespace

void write_surface_csv(std::ostream& out, const ScanResult& scan, int levels) {
  schema_line(out);
  fmt::print(out, "x1,x2,E_g,label,parity");
  for (int k = 1; k <= levels; ++k) fmt::print(out, ",p{}", k);
  fmt::print(out, ",S_L,status\n");
  for (const auto& p : scan.points) {
    const bool ok = p.status != PointStatus::NotConverged;
    fmt::print(out, "{},{},{},{},{}", format_number(p.x1), format_number(p.x2), format_number(p.energy),
               ok ? to_string(p.label) : "-", ok ? parity_text(p.label) : "-");
    for (int k = 0; k < levels; ++k) {
      fmt::print(out, ",{}", format_number(k < static_cast<int>(p.populations.size()) ? p.populations[k] : NAN));
    }
    fmt::print(out, ",{},{}\n", format_number(p.linear_entropy), to_string(p.status));
  }
}

void write_fidelity_csv(std::ostream& out, const ScanResult& scan) {
  schema_line(out);
  fmt::print(out, "x1,x2,F_along_x1,F_along_x2\n");
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    fmt::print(out, "{},{},{},{}\n", format_number(p.x1), format_number(p.x2),
               format_number(scan.fidelity_x1[i]), format_number(scan.fidelity_x2[i]));
  }
}

void write_separatrix_csv(std::ostream& out, const std::vector<SeparatrixPoint>& points) {
  schema_line(out);
  fmt::print(out, "x1,x2,kind,parity_change,axis,fidelity,label_change\n");
  for (const auto& s : points) {
    fmt::print(out, "{},{},{},{},{},{},{}\n", format_number(s.x1), format_number(s.x2), to_string(s.cls.kind),
               s.cls.parity_change ? 1 : 0, s.axis, format_number(s.fidelity), s.label_change ? 1 : 0);
  }
}

void write_simplex_csv(std::ostream& out, const ScanResult& scan) {
  schema_line(out);
  fmt::print(out, "x1,x2,p1,p2,p3,sx,sy,S_L\n");
  for (const auto& p : scan.points) {
    if (p.status == PointStatus::NotConverged || p.populations.size() != 3) continue;
    const auto s = simplex_coords(p.populations);
    fmt::print(out, "{},{},{},{},{},{},{},{}\n", format_number(p.x1), format_number(p.x2),
               format_number(p.populations[0]), format_number(p.populations[1]),
               format_number(p.populations[2]), format_number(s[0]), format_number(s[1]),
               format_number(p.linear_entropy));
  }
}

void write_pairs_csv(std::ostream& out, const ScanResult& scan, Configuration config) {
  static const char* names[3][2] = {{"p1+p2", "p2+p3"}, {"p1+p3", "p2+p3"}, {"p1+p2", "p1+p3"}};
  const auto& n = names[static_cast<int>(config)];
  schema_line(out);
  fmt::print(out, "x1,x2,{},{}\n", n[0], n[1]);
  for (const auto& p : scan.points) {
    if (p.status == PointStatus::NotConverged) continue;
    const auto [a, b] = pair_occupation_sums(config, p.populations);
    fmt::print(out, "{},{},{},{}\n", format_number(p.x1), format_number(p.x2), format_number(a), format_number(b));
  }
}

json scan_meta(const ScanConfig& config, const ScanResult& scan) {
  json meta;
  meta["schema"] = kSchemaVersion;
  meta["config"] = scan_config_to_json(config);
  const SymmetryInfo info =
      symmetry_generators(config.spec.topology(), config.spec.num_levels(), config.spec.num_modes());
  json gens = json::array();
  for (const auto& g : info.generators) gens.push_back({{"eta", g.eta}, {"lambda", g.lambda}});
  meta["constants_of_motion"] = gens;
  json points = json::array();
  std::size_t failed = 0;
  std::size_t edge = 0;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    json e = {{"index", i}, {"cutoff", p.cutoff}, {"dimension", p.dimension}, {"status", to_string(p.status)}};
    if (p.degenerate) {
      json tied = json::array();
      for (const auto& l : p.tied) tied.push_back(to_string(l));
      e["tied"] = tied;
    }
    if (!p.message.empty()) e["message"] = p.message;
    failed += p.status == PointStatus::NotConverged;
    edge += p.status == PointStatus::BoxEdge;
    points.push_back(std::move(e));
  }
  meta["points"] = std::move(points);
  meta["status"] = failed == 0 ? "ok" : "not_converged";
  meta["not_converged"] = failed;
  meta["box_edge"] = edge;
  return meta;
}

std::vector<std::filesystem::path> write_scan_outputs(const std::string& prefix, const ScanConfig& config,
                                                      const ScanResult& scan, bool observables) {
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& suffix) {
    std::filesystem::path path(prefix + suffix);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    written.push_back(path);
    return out;
  };
  {
    auto out = open("_surface.csv");
    write_surface_csv(out, scan, config.spec.num_levels());
  }
  {
    auto out = open("_fidelity.csv");
    write_fidelity_csv(out, scan);
  }
  {
    auto out = open("_separatrix.csv");
    write_separatrix_csv(out, detect_separatrix(scan, config.thresholds));
  }
  {
    auto out = open("_meta.json");
    out << scan_meta(config, scan).dump(2) << '\n';
  }
  if (observables && config.spec.num_levels() == 3) {
    auto out = open("_simplex.csv");
    write_simplex_csv(out, scan);
    if (auto c = config.spec.configuration()) {
      auto pairs = open("_pairs.csv");
      write_pairs_csv(pairs, scan, *c);
    }
  }
  return written;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

std::vector<std::vector<std::string>> read_csv_rows(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool schema = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line == fmt::format("# schema={}", kSchemaVersion)) schema = true;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  if (!schema) throw ConfigError("CSV file lacks a matching '# schema' line");
  return rows;
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(fmt::format("'{}' is not a number", s));
}

std::vector<std::vector<std::string>> read_csv_file(const std::filesystem::path& path,
                                                    const std::vector<std::string>& leading) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  auto rows = read_csv_rows(in);
  if (rows.empty() || rows.front().size() < leading.size() ||
      !std::equal(leading.begin(), leading.end(), rows.front().begin())) {
    throw ConfigError(fmt::format("'{}' has an unexpected header", path.string()));
  }
  return rows;
}

}  // namespace

ScanResult read_scan_outputs(const std::string& prefix) {
  const json meta = read_json_file(prefix + "_meta.json");
  if (meta.value("schema", 0) != kSchemaVersion) throw ConfigError("meta file schema mismatch");
  const ScanConfig config = scan_config_from_json(meta.at("config"));
  ScanResult scan;
  scan.grid = config.grid;
  scan.kmax = config.scan.kmax;
  const std::size_t n = scan.grid.size();

  const int levels = config.spec.num_levels();
  const auto surface = read_csv_file(prefix + "_surface.csv", {"x1", "x2", "E_g", "label", "parity"});
  if (surface.size() != n + 1) throw ConfigError("surface file does not match the grid");
  const std::size_t width = 5 + static_cast<std::size_t>(levels) + 2;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = surface[i + 1];
    if (r.size() != width) throw ConfigError(fmt::format("surface row {} has {} columns", i + 1, r.size()));
    PointRecord p;
    p.x1 = parse_double(r[0]);
    p.x2 = parse_double(r[1]);
    p.energy = parse_double(r[2]);
    auto status = parse_point_status(r[width - 1]);
    if (!status) throw ConfigError(fmt::format("unknown status '{}'", r[width - 1]));
    p.status = *status;
    if (p.status != PointStatus::NotConverged) {
      auto label = parse_label(r[3]);
      if (!label) throw ConfigError(fmt::format("unknown label '{}'", r[3]));
      p.label = *label;
    }
    for (int k = 0; k < levels; ++k) p.populations.push_back(parse_double(r[5 + k]));
    p.linear_entropy = parse_double(r[5 + levels]);
    scan.points.push_back(std::move(p));
  }
  const auto fid = read_csv_file(prefix + "_fidelity.csv", {"x1", "x2", "F_along_x1", "F_along_x2"});
  if (fid.size() != n + 1) throw ConfigError("fidelity file does not match the grid");
  for (std::size_t i = 0; i < n; ++i) {
    scan.fidelity_x1.push_back(parse_double(fid[i + 1].at(2)));
    scan.fidelity_x2.push_back(parse_double(fid[i + 1].at(3)));
  }
  return scan;
}

}  // namespace qpd
