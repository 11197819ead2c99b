#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "p2lab/assembly.hpp"
#include "p2lab/error.hpp"
#include "p2lab/mesh.hpp"
#include "p2lab/mesh_io.hpp"
#include "p2lab/nonlinear_solvers.hpp"
#include "p2lab/verification.hpp"
#include "p2lab/weights.hpp"

namespace p2lab {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct MeshSpec {
  std::string generator = "interval";  // interval | rectangle | disk | file
  int n = 64;
  double length = 1.0;
  int nx = 8, ny = 8;
  double lx = 1.0, ly = 1.0;
  int m = 64, rings = 4;
  double radius = 1.0;
  std::filesystem::path path;
};

struct WeightSpec {
  std::string kind = "constant";  // constant | affine | per_element
  double value = 0.0;
  std::vector<double> coefficients;
  std::vector<double> values;  // per_element given inline
  std::filesystem::path path;  // per_element given as a file
};

/// Fully resolved run configuration. Every field has a default except mesh, a, b and p.
struct RunConfig {
  MeshSpec mesh;
  WeightSpec a;
  WeightSpec b;
  double p = 3.0;
  double eps = 0.0;
  SolverOptions solver;
  std::uint64_t seed = kDefaultSeed;
  int workers = 1;
  std::optional<double> lambda;
  std::vector<double> grid;
  bool relative_to_nu1 = false;  // lambda and grid are multiples of nu1
  std::vector<double> t_list;    // empty: default per p-regime
  std::vector<double> p_list{1.3, 1.5, 1.8};
  double lambda_factor = 1.05;
  int gap_samples = 100;
  int trace_samples = 1000;
  std::vector<double> trace_epsilons{0.1, 1.0, 10.0};
  std::string output;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { fail(ErrorKind::config, what); }

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) config_error("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T read_key(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) config_error("missing key '" + std::string(key) + "' in " + where);
  try {
    return obj.at(key).template get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

template <class T>
void get_optional(const Json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = read_key<T>(obj, key, where);
}

inline std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute()) return p;
  return (base / p).lexically_normal();
}

inline MeshSpec parse_mesh(const Json& j, const std::filesystem::path& base) {
  MeshSpec m;
  if (j.contains("path")) {
    check_keys(j, {"generator", "path"}, "mesh");
    m.generator = "file";
    if (j.contains("generator") && read_key<std::string>(j, "generator", "mesh") != "file")
      config_error("mesh with 'path' must use generator 'file'");
    m.path = resolve_path(read_key<std::string>(j, "path", "mesh"), base);
    return m;
  }
  m.generator = read_key<std::string>(j, "generator", "mesh");
  if (m.generator == "interval") {
    check_keys(j, {"generator", "n", "length"}, "mesh");
    m.n = read_key<int>(j, "n", "mesh");
    get_optional(j, "length", "mesh", m.length);
  } else if (m.generator == "rectangle") {
    check_keys(j, {"generator", "nx", "ny", "lx", "ly"}, "mesh");
    m.nx = read_key<int>(j, "nx", "mesh");
    m.ny = read_key<int>(j, "ny", "mesh");
    get_optional(j, "lx", "mesh", m.lx);
    get_optional(j, "ly", "mesh", m.ly);
  } else if (m.generator == "disk") {
    check_keys(j, {"generator", "m", "rings", "radius"}, "mesh");
    m.m = read_key<int>(j, "m", "mesh");
    m.rings = read_key<int>(j, "rings", "mesh");
    get_optional(j, "radius", "mesh", m.radius);
  } else {
    config_error("unknown mesh generator '" + m.generator + "' (interval, rectangle, disk, or a 'path')");
  }
  return m;
}

inline WeightSpec parse_weight(const Json& j, const std::string& where, const std::filesystem::path& base) {
  WeightSpec w;
  w.kind = read_key<std::string>(j, "kind", where);
  if (w.kind == "constant") {
    check_keys(j, {"kind", "value"}, where);
    w.value = read_key<double>(j, "value", where);
  } else if (w.kind == "affine") {
    check_keys(j, {"kind", "coefficients"}, where);
    w.coefficients = read_key<std::vector<double>>(j, "coefficients", where);
  } else if (w.kind == "per_element") {
    check_keys(j, {"kind", "path", "values"}, where);
    if (j.contains("path") == j.contains("values")) config_error(where + " per_element needs exactly one of 'path' or 'values'");
    if (j.contains("path")) w.path = resolve_path(read_key<std::string>(j, "path", where), base);
    else w.values = read_key<std::vector<double>>(j, "values", where);
  } else {
    config_error("unknown weight kind '" + w.kind + "' in " + where);
  }
  return w;
}

inline void parse_solver(const Json& j, RunConfig& cfg) {
  check_keys(j,
             {"tol", "max_iterations", "eps", "margin", "seed", "armijo_slope", "backtrack_factor", "max_backtracks",
              "memory"},
             "solver");
  get_optional(j, "tol", "solver", cfg.solver.tol);
  get_optional(j, "max_iterations", "solver", cfg.solver.max_iterations);
  get_optional(j, "eps", "solver", cfg.eps);
  get_optional(j, "margin", "solver", cfg.solver.margin);
  get_optional(j, "seed", "solver", cfg.seed);
  get_optional(j, "armijo_slope", "solver", cfg.solver.armijo_slope);
  get_optional(j, "backtrack_factor", "solver", cfg.solver.backtrack_factor);
  get_optional(j, "max_backtracks", "solver", cfg.solver.max_backtracks);
  get_optional(j, "memory", "solver", cfg.solver.memory);
}

inline void validate(const RunConfig& cfg) {
  if (!(cfg.p > 1.0)) config_error("p must be greater than 1");
  if (cfg.p == 2.0)
    config_error("p = 2 is not supported: the problem is then the linear Steklov problem for the Laplacian");
  if (!(cfg.eps >= 0.0)) config_error("solver.eps must be nonnegative");
  if (cfg.p > 2.0 && cfg.eps != 0.0) config_error("solver.eps is only meaningful for p < 2");
  if (!(cfg.solver.tol > 0.0)) config_error("solver.tol must be positive");
  if (cfg.solver.max_iterations < 0) config_error("solver.max_iterations must be nonnegative");
  if (!(cfg.solver.margin >= 0.0)) config_error("solver.margin must be nonnegative");
  if (!(cfg.solver.armijo_slope > 0.0 && cfg.solver.armijo_slope < 0.5)) config_error("solver.armijo_slope must be in (0, 0.5)");
  if (!(cfg.solver.backtrack_factor > 0.0 && cfg.solver.backtrack_factor < 1.0))
    config_error("solver.backtrack_factor must be in (0, 1)");
  if (cfg.solver.max_backtracks < 1) config_error("solver.max_backtracks must be at least 1");
  if (cfg.solver.memory < 0) config_error("solver.memory must be nonnegative");
  if (cfg.workers < 1) config_error("workers must be at least 1");
  if (cfg.gap_samples < 1 || cfg.trace_samples < 1) config_error("sample counts must be positive");
  for (double t : cfg.t_list)
    if (!(t > 0.0)) config_error("t_list entries must be positive");
  for (double e : cfg.trace_epsilons)
    if (!(e > 0.0)) config_error("trace_epsilons entries must be positive");
  for (double q : cfg.p_list)
    if (!(q > 1.0 && q < 2.0)) config_error("p_list entries must lie in (1, 2)");
}

}  // namespace detail

/// Parses a config document; `base` resolves relative file paths.
inline RunConfig parse_config(const Json& j, const std::filesystem::path& base = {}) {
  detail::check_keys(j,
                     {"format_version", "mesh", "a", "b", "p", "solver", "workers", "lambda", "grid", "relative_to_nu1",
                      "t_list", "p_list", "lambda_factor", "gap_samples", "trace_samples", "trace_epsilons", "output"},
                     "config");
  if (j.contains("format_version") && detail::read_key<int>(j, "format_version", "config") != kFormatVersion)
    detail::config_error("unsupported format_version (expected " + std::to_string(kFormatVersion) + ")");
  RunConfig cfg;
  if (!j.contains("mesh")) detail::config_error("missing key 'mesh' in config");
  cfg.mesh = detail::parse_mesh(j.at("mesh"), base);
  if (!j.contains("a") || !j.contains("b")) detail::config_error("config needs both weights 'a' and 'b'");
  cfg.a = detail::parse_weight(j.at("a"), "a", base);
  cfg.b = detail::parse_weight(j.at("b"), "b", base);
  cfg.p = detail::read_key<double>(j, "p", "config");
  if (j.contains("solver")) detail::parse_solver(j.at("solver"), cfg);
  detail::get_optional(j, "workers", "config", cfg.workers);
  if (j.contains("lambda")) cfg.lambda = detail::read_key<double>(j, "lambda", "config");
  detail::get_optional(j, "grid", "config", cfg.grid);
  detail::get_optional(j, "relative_to_nu1", "config", cfg.relative_to_nu1);
  detail::get_optional(j, "t_list", "config", cfg.t_list);
  detail::get_optional(j, "p_list", "config", cfg.p_list);
  detail::get_optional(j, "lambda_factor", "config", cfg.lambda_factor);
  detail::get_optional(j, "gap_samples", "config", cfg.gap_samples);
  detail::get_optional(j, "trace_samples", "config", cfg.trace_samples);
  detail::get_optional(j, "trace_epsilons", "config", cfg.trace_epsilons);
  detail::get_optional(j, "output", "config", cfg.output);
  detail::validate(cfg);
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return parse_config(j, std::filesystem::absolute(path).parent_path());
}

/// P2LAB_SEED, when set, replaces the configured seed.
inline void apply_environment(RunConfig& cfg) {
  if (const char* env = std::getenv("P2LAB_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      cfg.seed = seed;
    } catch (const std::exception&) {
      detail::config_error(std::string("P2LAB_SEED is not an unsigned integer: ") + env);
    }
  }
}

inline Json to_json(const MeshSpec& m) {
  if (m.generator == "interval") return {{"generator", "interval"}, {"n", m.n}, {"length", m.length}};
  if (m.generator == "rectangle")
    return {{"generator", "rectangle"}, {"nx", m.nx}, {"ny", m.ny}, {"lx", m.lx}, {"ly", m.ly}};
  if (m.generator == "disk") return {{"generator", "disk"}, {"m", m.m}, {"rings", m.rings}, {"radius", m.radius}};
  return {{"generator", "file"}, {"path", m.path.string()}};
}

inline Json to_json(const WeightSpec& w) {
  if (w.kind == "constant") return {{"kind", "constant"}, {"value", w.value}};
  if (w.kind == "affine") return {{"kind", "affine"}, {"coefficients", w.coefficients}};
  if (!w.path.empty()) return {{"kind", "per_element"}, {"path", w.path.string()}};
  return {{"kind", "per_element"}, {"values", w.values}};
}

/// The resolved config; parse_config(to_json(cfg)) reproduces cfg.
inline Json to_json(const RunConfig& cfg) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["mesh"] = to_json(cfg.mesh);
  j["a"] = to_json(cfg.a);
  j["b"] = to_json(cfg.b);
  j["p"] = cfg.p;
  j["solver"] = {{"tol", cfg.solver.tol},
                 {"max_iterations", cfg.solver.max_iterations},
                 {"eps", cfg.eps},
                 {"margin", cfg.solver.margin},
                 {"seed", cfg.seed},
                 {"armijo_slope", cfg.solver.armijo_slope},
                 {"backtrack_factor", cfg.solver.backtrack_factor},
                 {"max_backtracks", cfg.solver.max_backtracks},
                 {"memory", cfg.solver.memory}};
  j["workers"] = cfg.workers;
  if (cfg.lambda) j["lambda"] = *cfg.lambda;
  j["grid"] = cfg.grid;
  j["relative_to_nu1"] = cfg.relative_to_nu1;
  j["t_list"] = cfg.t_list;
  j["p_list"] = cfg.p_list;
  j["lambda_factor"] = cfg.lambda_factor;
  j["gap_samples"] = cfg.gap_samples;
  j["trace_samples"] = cfg.trace_samples;
  j["trace_epsilons"] = cfg.trace_epsilons;
  j["output"] = cfg.output;
  return j;
}

// ---------------------------------------------------------------------------
// Building the problem

inline Mesh build_mesh(const MeshSpec& m) {
  if (m.generator == "interval") return build_interval_mesh(m.n, m.length);
  if (m.generator == "rectangle") return build_rectangle_mesh(m.nx, m.ny, m.lx, m.ly);
  if (m.generator == "disk") return build_disk_mesh(m.m, m.rings, m.radius);
  return load_mesh(m.path);
}

inline WeightField build_weight(const WeightSpec& w, WeightTarget target) {
  if (w.kind == "constant") return WeightField::constant(w.value, target);
  if (w.kind == "affine") return WeightField::affine(w.coefficients, target);
  return WeightField::per_element(w.path.empty() ? w.values : load_weight_values(w.path), target);
}

inline DiscreteProblem build_problem(const RunConfig& cfg) {
  return assemble(build_mesh(cfg.mesh), build_weight(cfg.a, WeightTarget::domain),
                  build_weight(cfg.b, WeightTarget::boundary), cfg.p, cfg.eps);
}

inline ClassifyOptions classify_options(const RunConfig& cfg) {
  ClassifyOptions o;
  o.solver = cfg.solver;
  o.gap_samples = cfg.gap_samples;
  o.seed = cfg.seed;
  return o;
}

}  // namespace p2lab
