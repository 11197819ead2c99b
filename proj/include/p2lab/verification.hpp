#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "p2lab/assembly.hpp"
#include "p2lab/error.hpp"
#include "p2lab/linear_spectrum.hpp"
#include "p2lab/nonlinear_solvers.hpp"
#include "p2lab/subspace.hpp"

namespace p2lab {

/// Seed for every sampled certificate unless overridden.
inline constexpr std::uint64_t kDefaultSeed = 20160531;

enum class Classification {
  negative_not_eigenvalue,
  zero_eigenvalue,
  gap_not_eigenvalue,
  threshold_not_eigenvalue,
  eigenvalue,
};

constexpr std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::negative_not_eigenvalue: return "negative_not_eigenvalue";
    case Classification::zero_eigenvalue: return "zero_eigenvalue";
    case Classification::gap_not_eigenvalue: return "gap_not_eigenvalue";
    case Classification::threshold_not_eigenvalue: return "threshold_not_eigenvalue";
    case Classification::eigenvalue: return "eigenvalue";
  }
  return "unknown";
}

struct ClassifyOptions {
  SolverOptions solver;
  int gap_samples = 100;
  std::uint64_t seed = kDefaultSeed;
};

struct ScanRow {
  double lambda = 0.0;
  Classification classification = Classification::negative_not_eigenvalue;
  double I_value = std::numeric_limits<double>::quiet_NaN();
  double residual_dual = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = true;    // false only for eigenvalue rows whose solve failed
  std::string note;         // solver failure message, if any
  bool certificate = true;  // gap rows: sampled certificate outcome
  // Eigenvalue rows: |c'u| / (|c| |u|) and (grad_I(u)'1 + lambda c'u) / |grad terms|
  double constraint_defect = 0.0;
  double constant_test_defect = 0.0;
  bool domination_ok = true;
  std::optional<EigenPair> pair;
};

struct ScanReport {
  std::vector<ScanRow> rows;
  double nu1 = 0.0;
  double p = 0.0;
  double eps = 0.0;
  std::uint64_t mesh_fingerprint = 0;
};

// ---------------------------------------------------------------------------
// Certificates

/// v'Kv - lambda v'(Ma + Bb)v; nonnegative means no Nehari point exists along v.
inline double certificate_margin(const DiscreteProblem& problem, double lambda, const Vector& v) {
  return quadratic_form(problem.K(), v) - lambda * quadratic_form(problem.mass(), v);
}

/// Samples Gaussian directions v = Z x in W and checks lambda v'(Ma + Bb)v <= v'Kv for each.
inline bool gap_certificate(const DiscreteProblem& problem, double lambda, int sample_count,
                            std::uint64_t seed = kDefaultSeed) {
  if (!(lambda > 0.0)) fail(ErrorKind::invalid_argument, "gap certificate needs lambda > 0");
  if (sample_count < 1) fail(ErrorKind::invalid_argument, "gap certificate needs at least one sample");
  const ConstrainedSubspace subspace(problem.c());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector x(subspace.dim());
  for (int s = 0; s < sample_count; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    if (certificate_margin(problem, lambda, subspace.lift(x)) < 0.0) return false;
  }
  return true;
}

/// u'(Ma + Bb)u <= w'(Ma + Bb)w with w = u - mean(u), for u in W.
inline bool quadratic_domination_holds(const DiscreteProblem& problem, const Vector& u) {
  const double lhs = quadratic_form(problem.mass(), u);
  const double rhs = quadratic_form(problem.mass(), mean_zero(problem.mesh(), u));
  return lhs <= rhs + 1e-12 * std::max(lhs, rhs);
}

namespace detail {

inline void fill_eigen_row_checks(const DiscreteProblem& problem, ScanRow& row) {
  const Vector& u = row.pair->u;
  const Vector& c = problem.c();
  const double cu = c.dot(u);
  row.constraint_defect = std::abs(cu) / (c.norm() * u.norm());
  const Vector r = grad_I(problem, row.lambda, u);
  const double scale = detail::stiffness_action(problem, u, 1.0, 1.0).cwiseAbs().sum() +
                       std::abs(row.lambda) * (problem.mass() * u).cwiseAbs().sum();
  row.constant_test_defect = std::abs(r.sum() + row.lambda * cu) / std::max(scale, std::numeric_limits<double>::min());
  row.domination_ok = quadratic_domination_holds(problem, u);
}

}  // namespace detail

/// Places lambda in the point-plus-continuum picture: {0} and (nu1, inf) are eigenvalues.
inline ScanRow classify_lambda(const DiscreteProblem& problem, double lambda, const ClassifyOptions& opts,
                               const ThresholdEstimate& estimate) {
  if (!std::isfinite(lambda)) fail(ErrorKind::invalid_argument, "lambda must be finite");
  ScanRow row;
  row.lambda = lambda;
  const double nu1 = estimate.nu1;
  const double margin = opts.solver.margin;
  if (lambda < 0.0) {
    row.classification = Classification::negative_not_eigenvalue;
  } else if (lambda == 0.0) {
    row.classification = Classification::zero_eigenvalue;
    const Vector ones = Vector::Ones(problem.size());
    row.residual_dual = residual_dual_norm(problem, 0.0, ones);
    row.I_value = functional_I(problem, 0.0, ones);
  } else if (std::abs(lambda - nu1) <= margin * nu1) {
    row.classification = Classification::threshold_not_eigenvalue;
  } else if (lambda < nu1) {
    row.classification = Classification::gap_not_eigenvalue;
    row.certificate = gap_certificate(problem, lambda, opts.gap_samples, opts.seed);
  } else {
    row.classification = Classification::eigenvalue;
    try {
      row.pair = solve_eigenpair(problem, lambda, opts.solver, &estimate);
      row.I_value = row.pair->I_value;
      row.residual_dual = row.pair->residual_dual;
      row.iterations = row.pair->iterations;
      detail::fill_eigen_row_checks(problem, row);
    } catch (const NonconvergenceError& e) {
      row.converged = false;
      row.note = e.what();
      row.residual_dual = e.last_residual();
      row.iterations = e.iterations();
    }
  }
  return row;
}

inline ScanRow classify_lambda(const DiscreteProblem& problem, double lambda, const ClassifyOptions& opts = {}) {
  return classify_lambda(problem, lambda, opts, compute_nu1(problem));
}

/// One classification row per grid point, sorted by lambda. Rows are independent and are
/// spread over `workers` threads; the report order does not depend on completion order.
inline ScanReport scan(const DiscreteProblem& problem, std::vector<double> lambda_grid, const ClassifyOptions& opts = {},
                       int workers = 1, const ThresholdEstimate* precomputed = nullptr) {
  if (lambda_grid.empty()) fail(ErrorKind::invalid_argument, "lambda grid is empty");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  const ThresholdEstimate estimate = precomputed ? *precomputed : compute_nu1(problem);
  ScanReport report;
  report.nu1 = estimate.nu1;
  report.p = problem.p();
  report.eps = problem.eps();
  report.mesh_fingerprint = problem.mesh().fingerprint();
  report.rows.resize(lambda_grid.size());

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(lambda_grid.size());
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < lambda_grid.size();) {
      try {
        report.rows[i] = classify_lambda(problem, lambda_grid[i], opts, estimate);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(workers, 1, static_cast<int>(lambda_grid.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return report;
}

/// True when the report obeys the theorem's ordering: nothing below (1 - margin) nu1 is
/// called an eigenvalue and nothing above (1 + margin) nu1 is called a gap.
inline bool scan_is_consistent(const ScanReport& report, double margin) {
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    if (i > 0 && report.rows[i - 1].lambda > row.lambda) return false;
    Classification expected;
    if (row.lambda < 0.0) expected = Classification::negative_not_eigenvalue;
    else if (row.lambda == 0.0) expected = Classification::zero_eigenvalue;
    else if (std::abs(row.lambda - report.nu1) <= margin * report.nu1) expected = Classification::threshold_not_eigenvalue;
    else if (row.lambda < report.nu1) expected = Classification::gap_not_eigenvalue;
    else expected = Classification::eigenvalue;
    if (row.classification != expected) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Trace inequality

namespace detail {
inline std::shared_ptr<const Operators> unweighted_operators(const Mesh& mesh) {
  return build_operators(mesh, WeightField::constant(1.0), WeightField::constant(1.0, WeightTarget::boundary));
}
}  // namespace detail

/// Smallest c with u'Tu <= eps u'Ku + c u'M1u for every discrete u (T: boundary mass,
/// M1: domain mass): the top eigenvalue of the pencil (T - eps K, M1), clamped at 0.
inline double trace_constant(const Mesh& mesh, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::invalid_argument, "epsilon must be positive");
  const auto ops = detail::unweighted_operators(mesh);
  const DenseMatrix A = DenseMatrix(ops->T) - epsilon * DenseMatrix(ops->K);
  const DenseMatrix B = DenseMatrix(ops->M1);
  const Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> eig(A, B, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) fail(ErrorKind::invalid_discretization, "trace pencil eigensolve failed");
  return std::max(0.0, eig.eigenvalues()[eig.eigenvalues().size() - 1]);
}

struct TraceCheck {
  bool certified = true;
  double worst_ratio = -std::numeric_limits<double>::infinity();  // max of lhs / rhs over samples
};

/// Checks u'Tu <= eps u'Ku + c u'M1u on Gaussian random vectors.
inline TraceCheck certify_trace_constant(const Mesh& mesh, double epsilon, double constant, int samples = 1000,
                                         std::uint64_t seed = kDefaultSeed) {
  const auto ops = detail::unweighted_operators(mesh);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector u(mesh.num_nodes());
  TraceCheck out;
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
    const double lhs = quadratic_form(ops->T, u);
    const double rhs = epsilon * quadratic_form(ops->K, u) + constant * quadratic_form(ops->M1, u);
    out.worst_ratio = std::max(out.worst_ratio, lhs / rhs);
    if (lhs > rhs * (1.0 + 1e-10)) out.certified = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// p-independence below 2

/// Everything except the exponent: the operators K, Ma, Bb (hence nu1) are shared by all p.
struct ProblemFamily {
  Mesh mesh;
  WeightField a;
  WeightField b;
  double eps = 0.0;
};

struct PIndependenceReport {
  double nu1 = 0.0;
  double lambda = 0.0;
  std::vector<std::pair<double, ScanRow>> rows;  // (p, row)
  bool passed = false;                           // every row is a converged eigenvalue
};

inline PIndependenceReport p_independence_check(const ProblemFamily& family, double lambda_factor,
                                                const std::vector<double>& p_list, const ClassifyOptions& opts = {}) {
  if (p_list.empty()) fail(ErrorKind::invalid_argument, "p list is empty");
  for (double p : p_list)
    if (!(p > 1.0 && p < 2.0)) fail(ErrorKind::invalid_argument, "p-independence check needs every p in (1, 2)");
  if (!(lambda_factor > 0.0)) fail(ErrorKind::invalid_argument, "lambda factor must be positive");
  const DiscreteProblem base = assemble(family.mesh, family.a, family.b, p_list.front(), family.eps);
  const ThresholdEstimate estimate = compute_nu1(base);
  PIndependenceReport report;
  report.nu1 = estimate.nu1;
  report.lambda = lambda_factor * estimate.nu1;
  report.passed = true;
  for (double p : p_list) {
    const DiscreteProblem problem = base.with_exponent(p, family.eps);
    ScanRow row = classify_lambda(problem, report.lambda, opts, estimate);
    report.passed = report.passed && row.classification == Classification::eigenvalue && row.converged;
    report.rows.emplace_back(p, std::move(row));
  }
  return report;
}

}  // namespace p2lab
