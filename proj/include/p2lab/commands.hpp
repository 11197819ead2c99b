#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "p2lab/config.hpp"
#include "p2lab/linear_spectrum.hpp"
#include "p2lab/mesh_io.hpp"
#include "p2lab/nonlinear_solvers.hpp"
#include "p2lab/properties.hpp"
#include "p2lab/verification.hpp"

namespace p2lab {

/// Process exit codes.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitConfig = 2,
  kExitWeights = 3,
  kExitBelowThreshold = 4,
  kExitNonconvergence = 5,
  kExitPropertyFailure = 6,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::weights_condition:
    case ErrorKind::constants_inside_subspace:
    case ErrorKind::degenerate_problem: return kExitWeights;
    case ErrorKind::below_threshold: return kExitBelowThreshold;
    case ErrorKind::nonconvergence: return kExitNonconvergence;
    case ErrorKind::invalid_mesh:
    case ErrorKind::invalid_discretization:
    case ErrorKind::property_failure: return kExitPropertyFailure;
    default: return kExitConfig;
  }
}

/// Output of one command before anything touches the filesystem.
struct CommandResult {
  Json report;
  int exit_code = kExitSuccess;
  std::optional<std::string> csv;
  std::optional<std::string> mesh_text;  // meshgen writes the mesh itself
};

/// Arrays under these keys longer than this are moved to sidecar files.
inline constexpr std::size_t kSidecarThreshold = 2000;

namespace detail {

inline Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline std::string hex(std::uint64_t x) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline Json problem_json(const DiscreteProblem& problem) {
  const Mesh& m = problem.mesh();
  return {{"dim", m.dim()},
          {"n_nodes", m.num_nodes()},
          {"n_elements", m.num_elements()},
          {"n_boundary_facets", m.num_facets()},
          {"mesh_fingerprint", hex(m.fingerprint())},
          {"domain_measure", m.domain_measure()},
          {"boundary_measure", m.boundary_measure()},
          {"p", problem.p()},
          {"eps", problem.eps()},
          {"total_weight", problem.c().sum()}};
}

inline Json base_report(std::string_view command, const RunConfig& cfg) {
  return {{"format_version", kFormatVersion}, {"command", command}, {"config", to_json(cfg)}};
}

inline Json property_json(const PropertyResult& r) {
  return {{"name", r.name}, {"passed", r.passed}, {"measured", r.measured}, {"threshold", r.threshold}, {"detail", r.detail}};
}

// Non-finite values are stored as null so the in-memory report matches what gets written.
inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json row_json(const ScanRow& row) {
  return {{"lambda", row.lambda},
          {"classification", to_string(row.classification)},
          {"I_value", number_or_null(row.I_value)},
          {"residual", number_or_null(row.residual_dual)},
          {"iterations", row.iterations},
          {"converged", row.converged},
          {"note", row.note},
          {"certificate", row.certificate},
          {"constraint_defect", row.constraint_defect},
          {"constant_test_defect", row.constant_test_defect},
          {"domination_ok", row.domination_ok}};
}

inline double resolve_lambda(double value, const RunConfig& cfg, double nu1) {
  return cfg.relative_to_nu1 ? value * nu1 : value;
}

inline std::string csv_number(double x) { return format_double(x); }

}  // namespace detail

/// Threshold nu1, its minimizer, and the scaling table along t u*.
inline CommandResult cmd_nu1(const RunConfig& cfg) {
  const DiscreteProblem problem = build_problem(cfg);
  const ThresholdEstimate est = compute_nu1(problem);
  const auto t_list = cfg.t_list.empty() ? default_t_list(cfg.p) : cfg.t_list;
  const auto rows = verify_threshold_scaling(problem, est, t_list);

  CommandResult out;
  out.report = detail::base_report("nu1", cfg);
  out.report["problem"] = detail::problem_json(problem);
  out.report["threshold"] = {{"nu1", est.nu1},
                             {"pencil_residual", est.pencil_residual},
                             {"reduced_dim", est.reduced_dim},
                             {"minimizer", detail::vector_json(est.minimizer)}};
  Json scaling = Json::array();
  for (const auto& r : rows) scaling.push_back({{"t", r.t}, {"rayleigh_full", r.value}, {"gap", r.gap}, {"gap_ratio", r.ratio}});
  out.report["scaling"] = scaling;
  return out;
}

/// One eigenpair at the configured lambda, with every eigenpair invariant checked.
inline CommandResult cmd_solve(const RunConfig& cfg) {
  if (!cfg.lambda) fail(ErrorKind::config, "solve needs 'lambda' in the config");
  const DiscreteProblem problem = build_problem(cfg);
  const ThresholdEstimate est = compute_nu1(problem);
  const double lambda = detail::resolve_lambda(*cfg.lambda, cfg, est.nu1);

  CommandResult out;
  out.report = detail::base_report("solve", cfg);
  out.report["problem"] = detail::problem_json(problem);
  out.report["nu1"] = est.nu1;
  try {
    const EigenPair pair = solve_eigenpair(problem, lambda, cfg.solver, &est);
    out.report["status"] = "converged";
    out.report["eigenpair"] = {{"lambda", pair.lambda},
                               {"method", to_string(pair.method)},
                               {"iterations", pair.iterations},
                               {"residual_dual", pair.residual_dual},
                               {"I_value", pair.I_value},
                               {"eps_used", pair.eps_used},
                               {"eigenvector", detail::vector_json(pair.u)}};
    Json checks = Json::array();
    for (const auto& r : check_eigenpair(problem, pair, cfg.solver)) {
      checks.push_back(detail::property_json(r));
      if (!r.passed) out.exit_code = kExitPropertyFailure;
    }
    out.report["checks"] = checks;
  } catch (const NonconvergenceError& e) {
    out.report["status"] = "nonconvergence";
    out.report["message"] = e.what();
    out.report["last_residual"] = e.last_residual();
    out.report["iterations"] = e.iterations();
    out.report["last_iterate"] = detail::vector_json(e.last_iterate());
    out.exit_code = kExitNonconvergence;
  }
  return out;
}

/// Classification of every grid point, plus a plot-ready CSV.
inline CommandResult cmd_scan(const RunConfig& cfg) {
  if (cfg.grid.empty()) fail(ErrorKind::config, "scan needs a nonempty 'grid' in the config");
  const DiscreteProblem problem = build_problem(cfg);
  const ThresholdEstimate est = compute_nu1(problem);
  std::vector<double> grid;
  for (double g : cfg.grid) grid.push_back(detail::resolve_lambda(g, cfg, est.nu1));
  const ScanReport report = scan(problem, grid, classify_options(cfg), cfg.workers, &est);

  CommandResult out;
  out.report = detail::base_report("scan", cfg);
  out.report["problem"] = detail::problem_json(problem);
  out.report["nu1"] = report.nu1;
  out.report["margin"] = cfg.solver.margin;
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "lambda,classification,I_value,residual,iterations\n";
  bool all_converged = true;
  for (const auto& row : report.rows) {
    rows.push_back(detail::row_json(row));
    all_converged = all_converged && row.converged;
    csv << detail::csv_number(row.lambda) << ',' << to_string(row.classification) << ','
        << detail::csv_number(row.I_value) << ',' << detail::csv_number(row.residual_dual) << ',' << row.iterations
        << '\n';
  }
  out.report["rows"] = rows;
  const bool consistent = scan_is_consistent(report, cfg.solver.margin);
  out.report["consistent"] = consistent;
  out.csv = csv.str();
  if (!all_converged) out.exit_code = kExitNonconvergence;
  else if (!consistent) out.exit_code = kExitPropertyFailure;
  return out;
}

/// Runs every invariant of every module on the configured problem.
inline CommandResult cmd_verify(const RunConfig& cfg) {
  const DiscreteProblem problem = build_problem(cfg);
  const std::uint64_t seed = cfg.seed;
  std::vector<PropertyResult> results;
  auto add = [&results](auto&& r) {
    if constexpr (std::is_same_v<std::decay_t<decltype(r)>, PropertyResult>) results.push_back(r);
    else results.insert(results.end(), r.begin(), r.end());
  };

  add(check_constraint_vector(problem));
  add(check_stiffness_constants(problem));
  add(check_gradient_constants(problem, 10, seed));
  add(check_energy_homogeneity(problem, 10, seed + 1));
  add(check_gradient_fd(problem, 10, seed + 2));
  add(check_quadratic_domination(problem, 100, seed + 3));
  add(check_zero_eigenvalue(problem));

  const ThresholdEstimate est = compute_nu1(problem);
  add(check_threshold(problem, est));
  add(check_threshold_scaling(problem, est, cfg.t_list.empty() ? default_t_list(cfg.p) : cfg.t_list));
  add(check_gap_certificate(problem, est, cfg.gap_samples, seed + 4));
  add(check_nehari_identities(problem, 50, seed + 5));
  add(check_trace_constant(problem.mesh(), cfg.trace_epsilons, cfg.trace_samples, seed + 6));

  const double lambda = 2.0 * est.nu1;
  try {
    const EigenPair pair = solve_eigenpair(problem, lambda, cfg.solver, &est);
    add(check_eigenpair(problem, pair, cfg.solver));
  } catch (const NonconvergenceError& e) {
    results.push_back({"eigenpair_converged", false, e.last_residual(), cfg.solver.tol, e.what()});
  }

  const std::vector<double> factors{-1.0 / est.nu1, 0.0, 0.5, 0.9, 1.0, 1.1, 2.0, 10.0};
  std::vector<double> grid;
  for (double f : factors) grid.push_back(f * est.nu1);
  const ScanReport rep = scan(problem, grid, classify_options(cfg), cfg.workers, &est);
  bool rows_ok = scan_is_consistent(rep, cfg.solver.margin);
  for (const auto& row : rep.rows) {
    if (row.classification == Classification::eigenvalue)
      rows_ok = rows_ok && row.converged && row.constraint_defect <= 1e-12 && row.constant_test_defect <= 1e-12 &&
                row.domination_ok;
    if (row.classification == Classification::gap_not_eigenvalue) rows_ok = rows_ok && row.certificate;
  }
  results.push_back({"scan_structure", rows_ok, rep.nu1, 0.0,
                     "{-1, 0, .5, .9, 1, 1.1, 2, 10} x nu1 classify as negative, zero, gap, gap, threshold, eigenvalue x3"});

  const ProblemFamily family{problem.mesh(), problem.weight_a(), problem.weight_b(), cfg.p < 2.0 ? cfg.eps : 0.0};
  const auto pind = p_independence_check(family, cfg.lambda_factor, cfg.p_list, classify_options(cfg));
  results.push_back({"p_independence_below_2", pind.passed, pind.lambda, 0.0,
                     "lambda = lambda_factor * nu1 is an eigenvalue for every p in p_list"});

  CommandResult out;
  out.report = detail::base_report("verify", cfg);
  out.report["problem"] = detail::problem_json(problem);
  out.report["nu1"] = est.nu1;
  Json props = Json::array();
  bool all = true;
  for (const auto& r : results) {
    props.push_back(detail::property_json(r));
    all = all && r.passed;
  }
  out.report["properties"] = props;
  out.report["all_passed"] = all;
  if (!all) out.exit_code = kExitPropertyFailure;
  return out;
}

/// Builds the configured mesh and renders it in the mesh text format.
inline CommandResult cmd_meshgen(const RunConfig& cfg) {
  const Mesh mesh = build_mesh(cfg.mesh);
  std::ostringstream text;
  write_mesh(text, mesh);
  CommandResult out;
  out.report = detail::base_report("meshgen", cfg);
  out.mesh_text = text.str();
  return out;
}

inline CommandResult run_command(std::string_view command, const RunConfig& cfg) {
  if (command == "nu1") return cmd_nu1(cfg);
  if (command == "solve") return cmd_solve(cfg);
  if (command == "scan") return cmd_scan(cfg);
  if (command == "verify") return cmd_verify(cfg);
  if (command == "meshgen") return cmd_meshgen(cfg);
  fail(ErrorKind::config, "unknown command '" + std::string(command) + "'");
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
}

/// Replaces long vectors under the known keys with a reference to a one-value-per-line file.
inline void move_long_vectors(Json& node, const std::filesystem::path& report_path) {
  if (!node.is_object()) return;
  for (auto& [key, value] : node.items()) {
    if ((key == "eigenvector" || key == "minimizer" || key == "last_iterate") && value.is_array() &&
        value.size() > kSidecarThreshold) {
      std::filesystem::path sidecar = report_path;
      sidecar += "." + key + ".txt";
      std::string text;
      for (const auto& x : value) text += format_double(x.get<double>()) + '\n';
      write_text(sidecar, text);
      value = Json{{"sidecar", sidecar.filename().string()}, {"size", value.size()}};
    } else if (key != "config") {
      move_long_vectors(value, report_path);
    }
  }
}

}  // namespace detail

/// The scan CSV lives next to the report with extension .csv.
inline std::filesystem::path csv_path_for(const std::filesystem::path& report_path) {
  std::filesystem::path p = report_path;
  p.replace_extension(".csv");
  return p;
}

/// Writes the report (or mesh) to `path` plus any sidecar and CSV files.
inline void write_outputs(CommandResult& result, const std::filesystem::path& path) {
  if (result.mesh_text) {
    detail::write_text(path, *result.mesh_text);
    return;
  }
  detail::move_long_vectors(result.report, path);
  detail::write_text(path, result.report.dump(2) + "\n");
  if (result.csv) detail::write_text(csv_path_for(path), *result.csv);
}

}  // namespace p2lab
