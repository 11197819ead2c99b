#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "p2lab/assembly.hpp"
#include "p2lab/error.hpp"
#include "p2lab/subspace.hpp"

namespace p2lab {

enum class ThresholdMethod { dense, power_iteration };

/// The spectral threshold nu1 = min over W of u'Ku / u'(Ma + Bb)u and its minimizer.
struct ThresholdEstimate {
  double nu1 = 0.0;
  Vector minimizer;  // c'u = 0, u'(Ma + Bb)u = 1, largest-magnitude entry positive
  double pencil_residual = 0.0;
  int reduced_dim = 0;
  int iterations = 0;  // power iteration only
};

namespace detail {

inline void fix_sign(Vector& u) {
  Eigen::Index arg = 0;
  u.cwiseAbs().maxCoeff(&arg);
  if (u[arg] < 0.0) u = -u;
}

/// Largest eigenpair of a symmetric PSD matrix by power iteration.
inline std::pair<double, Vector> power_iteration(const DenseMatrix& S, double tol, int max_iterations, int& iterations) {
  Vector y = Vector::Ones(S.rows()).normalized();
  double mu = y.dot(S * y);
  for (iterations = 1; iterations <= max_iterations; ++iterations) {
    Vector z = S * y;
    const double norm = z.norm();
    if (!(norm > 0.0)) return {0.0, y};
    y = z / norm;
    const double next = y.dot(S * y);
    if (std::abs(next - mu) <= tol * std::abs(next)) return {next, y};
    mu = next;
  }
  fail(ErrorKind::nonconvergence, "power iteration for the threshold did not converge");
}

}  // namespace detail

/// nu1 as 1/mu_max of the inverted pencil  M~ y = mu K~ y  on the constrained space, where
/// K~ = Z'KZ is positive definite and M~ = Z'(Ma + Bb)Z may be singular.
inline ThresholdEstimate compute_nu1(const DiscreteProblem& problem, ThresholdMethod method = ThresholdMethod::dense) {
  const ConstrainedSubspace subspace(problem.c());
  const DenseMatrix Kt = reduce(subspace, problem.K());
  const DenseMatrix Mt = reduce(subspace, problem.mass());

  const double mass_scale = problem.mass().coeffs().cwiseAbs().maxCoeff();
  if (!(Mt.cwiseAbs().maxCoeff() > 1e-14 * mass_scale))
    fail(ErrorKind::degenerate_problem, "the weighted mass vanishes on the constrained space");

  const Eigen::LLT<DenseMatrix> llt(Kt);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::invalid_discretization, "the reduced Dirichlet form is not positive definite (disconnected mesh?)");
  const auto L = llt.matrixL();
  // S = L^{-1} M~ L^{-T}
  DenseMatrix X = L.solve(Mt);
  DenseMatrix S = L.solve(X.transpose());
  S = 0.5 * (S + S.transpose()).eval();

  ThresholdEstimate est;
  est.reduced_dim = subspace.dim();
  double mu_max = 0.0;
  Vector y;
  if (method == ThresholdMethod::dense) {
    const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(S);
    if (eig.info() != Eigen::Success) fail(ErrorKind::invalid_discretization, "dense eigensolve failed");
    mu_max = eig.eigenvalues()[S.rows() - 1];
    y = eig.eigenvectors().col(S.rows() - 1);
  } else {
    std::tie(mu_max, y) = detail::power_iteration(S, 1e-12, 100000, est.iterations);
  }
  if (!(mu_max > 0.0)) fail(ErrorKind::degenerate_problem, "the inverted pencil has no positive eigenvalue");

  const Vector x = llt.matrixU().solve(y);
  Vector u = subspace.lift(x);
  u /= std::sqrt(quadratic_form(problem.mass(), u));
  detail::fix_sign(u);

  est.nu1 = 1.0 / mu_max;
  est.minimizer = std::move(u);
  const Vector r = problem.K() * est.minimizer - est.nu1 * (problem.mass() * est.minimizer);
  est.pencil_residual = dual_norm(problem, r) / std::max(1.0, h_norm(problem, est.minimizer));
  return est;
}

struct ScalingRow {
  double t = 0.0;
  double value = 0.0;  // rayleigh_full(t u*)
  double gap = 0.0;    // value - nu1
  double ratio = std::numeric_limits<double>::quiet_NaN();  // previous gap / this gap
};

/// Evaluates the full quotient along t * u*. It approaches nu1 as t -> 0 for p > 2 and as
/// t -> infinity for p < 2, with gap (2 t^{p-2} / p) * p*energy_p(u*) / u*'(Ma + Bb)u*.
inline std::vector<ScalingRow> verify_threshold_scaling(const DiscreteProblem& problem, const ThresholdEstimate& estimate,
                                                        const std::vector<double>& t_list) {
  std::vector<ScalingRow> rows;
  rows.reserve(t_list.size());
  for (double t : t_list) {
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::invalid_argument, "scaling factors t must be positive");
    ScalingRow row;
    row.t = t;
    row.value = rayleigh_full(problem, t * estimate.minimizer);
    row.gap = row.value - estimate.nu1;
    if (!rows.empty()) row.ratio = rows.back().gap / row.gap;
    rows.push_back(row);
  }
  return rows;
}

/// Default t sweep toward the regime where the p-term becomes negligible.
inline std::vector<double> default_t_list(double p) {
  return p > 2.0 ? std::vector<double>{1.0, 0.1, 0.01} : std::vector<double>{1.0, 10.0, 100.0};
}

}  // namespace p2lab
