#include "conetree/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace conetree {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw MalformedInputError("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(where, "unknown key '" + item.key() + "'");
  }
}

double get_number(const json& obj, const std::string& where, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(where, std::string(key) + " must be a number");
  return obj[key].get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& where, const char* key,
                         std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) fail(where, std::string(key) + " must be an integer");
  return obj[key].get<std::int64_t>();
}

Distribution parse_distribution(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where, "distribution must be an object");
  if (!obj.contains("type") || !obj["type"].is_string()) {
    fail(where, "distribution needs a string 'type'");
  }
  const std::string type = obj["type"].get<std::string>();
  if (type == "uniform") {
    check_keys(obj, where, {"type", "low", "high"});
    UniformDist u;
    u.lo = get_number(obj, where, "low", -1.0);
    u.hi = get_number(obj, where, "high", 1.0);
    Distribution d = u;
    validate_distribution(d);
    return d;
  }
  if (type == "discrete") {
    check_keys(obj, where, {"type", "points"});
    if (!obj.contains("points") || !obj["points"].is_array()) {
      fail(where, "discrete distribution needs a 'points' array");
    }
    DiscreteDist dd;
    for (const json& pt : obj["points"]) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
        fail(where, "each point must be [value, probability]");
      }
      dd.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
    }
    Distribution d = dd;
    validate_distribution(d);
    return d;
  }
  fail(where, "unknown distribution type '" + type + "'");
}

std::vector<Distribution> parse_distribution_list(const json& node,
                                                  const std::string& where,
                                                  int label_count) {
  std::vector<Distribution> out;
  if (node.is_array()) {
    for (const json& item : node) out.push_back(parse_distribution(item, where));
    if (out.size() != 1 && static_cast<int>(out.size()) != label_count) {
      fail(where, "need one distribution or one per label");
    }
  } else {
    out.push_back(parse_distribution(node, where));
  }
  return out;
}

json distribution_to_json(const Distribution& d) {
  json out;
  if (const auto* u = std::get_if<UniformDist>(&d)) {
    out["type"] = "uniform";
    out["low"] = u->lo;
    out["high"] = u->hi;
  } else {
    const auto& dd = std::get<DiscreteDist>(d);
    out["type"] = "discrete";
    json pts = json::array();
    for (const auto& [value, prob] : dd.points) pts.push_back({value, prob});
    out["points"] = pts;
  }
  return out;
}

SubstitutionMatrix parse_matrix(const json& root, int* root_label) {
  if (!root.contains("matrix") || !root["matrix"].is_object()) {
    fail("matrix", "required object is missing");
  }
  const json& mtx = root["matrix"];
  check_keys(mtx, "matrix", {"labels", "rows", "root"});
  if (!mtx.contains("rows") || !mtx["rows"].is_array()) {
    fail("matrix", "needs a 'rows' array");
  }
  std::vector<std::vector<std::int64_t>> rows;
  for (const json& row : mtx["rows"]) {
    if (!row.is_array()) fail("matrix", "each row must be an array");
    std::vector<std::int64_t> r;
    for (const json& e : row) {
      if (!e.is_number_integer()) fail("matrix", "entries must be integers");
      r.push_back(e.get<std::int64_t>());
    }
    rows.push_back(std::move(r));
  }
  std::vector<std::string> labels;
  if (mtx.contains("labels")) {
    if (!mtx["labels"].is_array()) fail("matrix", "'labels' must be an array");
    for (const json& l : mtx["labels"]) {
      if (!l.is_string()) fail("matrix", "labels must be strings");
      labels.push_back(l.get<std::string>());
    }
  }
  SubstitutionMatrix m(std::move(rows), std::move(labels));
  *root_label = 0;
  if (mtx.contains("root")) {
    if (!mtx["root"].is_string()) fail("matrix", "'root' must be a label name");
    *root_label = m.label_index(mtx["root"].get<std::string>());
  }
  return m;
}

void parse_solver(const json& root, ExperimentConfig& cfg) {
  if (!root.contains("solver")) {
    cfg.detect.window = default_window(cfg.matrix);
    cfg.detect.indicator_threshold = 10.0 * std::sqrt(cfg.solver.eta_floor);
    return;
  }
  const json& sol = root["solver"];
  if (!sol.is_object()) fail("solver", "must be an object");
  check_keys(sol, "solver",
             {"tolerance", "max_iterations", "damping", "eta_floor", "eta_schedule",
              "window", "coarse_step", "indicator_threshold", "endpoint_tol",
              "vertex_cap"});
  SolverSettings& s = cfg.solver;
  s.tolerance = get_number(sol, "solver", "tolerance", s.tolerance);
  s.max_iterations = get_integer(sol, "solver", "max_iterations", s.max_iterations);
  s.damping = get_number(sol, "solver", "damping", s.damping);

  const bool has_floor = sol.contains("eta_floor");
  const bool has_schedule = sol.contains("eta_schedule");
  if (has_floor) s.eta_floor = get_number(sol, "solver", "eta_floor", s.eta_floor);
  if (has_schedule) {
    if (!sol["eta_schedule"].is_array()) fail("solver", "'eta_schedule' must be an array");
    s.eta_schedule.clear();
    for (const json& e : sol["eta_schedule"]) {
      if (!e.is_number()) fail("solver", "schedule entries must be numbers");
      s.eta_schedule.push_back(e.get<double>());
    }
    if (!has_floor && !s.eta_schedule.empty()) s.eta_floor = s.eta_schedule.back();
  } else if (has_floor) {
    s.eta_schedule = default_eta_schedule(s.eta_floor);
  }
  validate_settings(s);

  DetectSettings& d = cfg.detect;
  if (sol.contains("window")) {
    const json& w = sol["window"];
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
      fail("solver", "'window' must be [lo, hi]");
    }
    d.window = std::make_pair(w[0].get<double>(), w[1].get<double>());
  } else {
    d.window = default_window(cfg.matrix);
  }
  d.coarse_step = get_number(sol, "solver", "coarse_step", d.coarse_step);
  d.indicator_threshold = get_number(sol, "solver", "indicator_threshold",
                                     10.0 * std::sqrt(s.eta_floor));
  d.endpoint_tol = get_number(sol, "solver", "endpoint_tol", d.endpoint_tol);
  const std::int64_t cap = get_integer(sol, "solver", "vertex_cap",
                                       static_cast<std::int64_t>(cfg.vertex_cap));
  if (cap < 1) fail("solver", "vertex_cap must be positive");
  cfg.vertex_cap = static_cast<std::uint64_t>(cap);
}

void parse_perturbation(const json& root, ExperimentConfig& cfg) {
  if (!root.contains("perturbation")) return;
  const json& pert = root["perturbation"];
  if (!pert.is_object()) fail("perturbation", "must be an object");
  check_keys(pert, "perturbation", {"lambda", "energy", "potential", "edge"});
  PerturbationModel pm;
  pm.lambda = get_number(pert, "perturbation", "lambda", 0.0);
  if (pert.contains("potential")) {
    pm.potential = parse_distribution_list(pert["potential"], "perturbation.potential",
                                           cfg.matrix.label_count());
  }
  if (pert.contains("edge")) {
    pm.edge = parse_distribution_list(pert["edge"], "perturbation.edge",
                                      cfg.matrix.label_count());
  }
  validate_model(pm, cfg.matrix.label_count());
  cfg.perturbation = std::move(pm);
  if (pert.contains("energy")) {
    if (!pert["energy"].is_number()) fail("perturbation", "'energy' must be a number");
    cfg.energy = pert["energy"].get<double>();
  }
}

void parse_radial(const json& root, ExperimentConfig& cfg) {
  if (!root.contains("radial")) return;
  const json& rad = root["radial"];
  if (!rad.is_object()) fail("radial", "must be an object");
  check_keys(rad, "radial", {"lambda", "values"});
  RadialPotential v;
  if (!rad.contains("values") || !rad["values"].is_array()) {
    fail("radial", "needs a 'values' array (one row per label)");
  }
  for (const json& row : rad["values"]) {
    if (!row.is_array()) fail("radial", "value rows must be arrays");
    std::vector<double> r;
    for (const json& x : row) {
      if (!x.is_number()) fail("radial", "values must be numbers");
      r.push_back(x.get<double>());
    }
    v.values.push_back(std::move(r));
  }
  validate_radial(v, cfg.matrix.label_count());
  cfg.radial = std::move(v);
  cfg.radial_lambda = get_number(rad, "radial", "lambda", 0.0);
  if (!(cfg.radial_lambda >= 0.0) || cfg.radial_lambda > 1.0) {
    fail("radial", "lambda must lie in [0, 1]");
  }
}

void parse_branching(const json& root, ExperimentConfig& cfg) {
  if (!root.contains("branching")) return;
  const json& br = root["branching"];
  if (!br.is_object()) fail("branching", "must be an object");
  check_keys(br, "branching", {"laws"});
  if (!br.contains("laws") || !br["laws"].is_array()) {
    fail("branching", "needs a 'laws' array (one law per label)");
  }
  BranchingProcess b;
  b.label_count = cfg.matrix.label_count();
  for (const json& law : br["laws"]) {
    if (!law.is_array()) fail("branching", "each law must be an array of configurations");
    std::vector<OffspringConfig> parsed;
    for (const json& cfg_node : law) {
      if (!cfg_node.is_object()) fail("branching", "configurations must be objects");
      check_keys(cfg_node, "branching", {"offspring", "prob"});
      if (!cfg_node.contains("offspring") || !cfg_node["offspring"].is_array() ||
          !cfg_node.contains("prob") || !cfg_node["prob"].is_number()) {
        fail("branching", "configurations need 'offspring' (array) and 'prob' (number)");
      }
      OffspringConfig oc;
      for (const json& c : cfg_node["offspring"]) {
        if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
          fail("branching", "offspring counts must be nonnegative integers");
        }
        oc.counts.push_back(static_cast<std::uint32_t>(c.get<std::int64_t>()));
      }
      oc.prob = cfg_node["prob"].get<double>();
      parsed.push_back(std::move(oc));
    }
    b.laws.push_back(std::move(parsed));
  }
  const BranchingReport report = validate_process(b);
  if (!report.pass()) {
    fail("branching", "laws rejected (normalization or empty configurations)");
  }
  cfg.branching = std::move(b);
}

void parse_output(const json& root, ExperimentConfig& cfg) {
  if (!root.contains("output")) return;
  const json& out = root["output"];
  if (!out.is_object()) fail("output", "must be an object");
  check_keys(out, "output", {"format", "path"});
  if (out.contains("format")) {
    if (!out["format"].is_string()) fail("output", "'format' must be a string");
    cfg.output.format = out["format"].get<std::string>();
    if (cfg.output.format != "csv" && cfg.output.format != "json") {
      fail("output", "format must be 'csv' or 'json'");
    }
  }
  if (out.contains("path")) {
    if (!out["path"].is_string()) fail("output", "'path' must be a string");
    cfg.output.path = out["path"].get<std::string>();
  }
}

json resolved_to_json(const ExperimentConfig& cfg) {
  json doc;
  json mtx;
  mtx["labels"] = cfg.matrix.labels();
  json rows = json::array();
  for (int l = 0; l < cfg.matrix.label_count(); ++l) {
    json row = json::array();
    for (int k = 0; k < cfg.matrix.label_count(); ++k) row.push_back(cfg.matrix.entry(l, k));
    rows.push_back(row);
  }
  mtx["rows"] = rows;
  mtx["root"] = cfg.matrix.labels()[cfg.root_label];
  doc["matrix"] = mtx;

  json sol;
  sol["tolerance"] = cfg.solver.tolerance;
  sol["max_iterations"] = cfg.solver.max_iterations;
  sol["damping"] = cfg.solver.damping;
  sol["eta_floor"] = cfg.solver.eta_floor;
  sol["eta_schedule"] = cfg.solver.eta_schedule;
  sol["window"] = {cfg.detect.window->first, cfg.detect.window->second};
  sol["coarse_step"] = cfg.detect.coarse_step;
  sol["indicator_threshold"] = *cfg.detect.indicator_threshold;
  sol["endpoint_tol"] = cfg.detect.endpoint_tol;
  sol["vertex_cap"] = cfg.vertex_cap;
  doc["solver"] = sol;

  if (cfg.perturbation.has_value()) {
    json pert;
    pert["lambda"] = cfg.perturbation->lambda;
    json pots = json::array();
    for (const Distribution& d : cfg.perturbation->potential) {
      pots.push_back(distribution_to_json(d));
    }
    pert["potential"] = pots;
    json edges = json::array();
    for (const Distribution& d : cfg.perturbation->edge) {
      edges.push_back(distribution_to_json(d));
    }
    pert["edge"] = edges;
    if (cfg.energy.has_value()) pert["energy"] = *cfg.energy;
    doc["perturbation"] = pert;
  }
  if (cfg.radial.has_value()) {
    json rad;
    rad["lambda"] = cfg.radial_lambda;
    rad["values"] = cfg.radial->values;
    doc["radial"] = rad;
  }
  if (cfg.branching.has_value()) {
    json laws = json::array();
    for (const auto& law : cfg.branching->laws) {
      json jl = json::array();
      for (const OffspringConfig& oc : law) {
        json node;
        node["offspring"] = oc.counts;
        node["prob"] = oc.prob;
        jl.push_back(node);
      }
      laws.push_back(jl);
    }
    doc["branching"] = {{"laws", laws}};
  }
  doc["output"] = {{"format", cfg.output.format}, {"path", cfg.output.path}};
  doc["seed"] = cfg.seed;
  return doc;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    // Recover a line/column from the byte offset the parser reports.
    const std::size_t byte = std::min<std::size_t>(
        err.byte > 0 ? err.byte - 1 : 0, text.size());
    int line = 1, column = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigParseError("config: " + std::string(err.what()), line, column);
  }
  if (!root.is_object()) throw MalformedInputError("config: top level must be an object");
  check_keys(root, "top level",
             {"matrix", "solver", "perturbation", "radial", "branching", "output", "seed"});

  int root_label = 0;
  ExperimentConfig cfg(parse_matrix(root, &root_label));
  cfg.root_label = root_label;
  parse_solver(root, cfg);
  parse_perturbation(root, cfg);
  parse_radial(root, cfg);
  parse_branching(root, cfg);
  parse_output(root, cfg);
  if (root.contains("seed")) {
    if (!root["seed"].is_number_integer() || root["seed"].get<std::int64_t>() < 0) {
      fail("seed", "must be a nonnegative integer");
    }
    cfg.seed = root["seed"].get<std::uint64_t>();
  }

  cfg.canonical = resolved_to_json(cfg).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.canonical)));
  cfg.hash = buf;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedInputError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace conetree
