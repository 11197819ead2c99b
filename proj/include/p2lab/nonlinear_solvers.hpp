#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2lab/assembly.hpp"
#include "p2lab/error.hpp"
#include "p2lab/linear_spectrum.hpp"
#include "p2lab/subspace.hpp"

namespace p2lab {

struct SolverOptions {
  double tol = 1e-8;  // on residual_dual_norm
  int max_iterations = 10000;
  double margin = 1e-6;  // relative band around nu1 treated as "not above the threshold"
  double armijo_slope = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 60;
  int memory = 8;  // L-BFGS pairs
};

enum class SolveMethod { direct, nehari };

constexpr std::string_view to_string(SolveMethod m) { return m == SolveMethod::direct ? "direct" : "nehari"; }

struct EigenPair {
  double lambda = 0.0;
  Vector u;
  double residual_dual = 0.0;
  double I_value = 0.0;
  int iterations = 0;
  SolveMethod method = SolveMethod::direct;
  double eps_used = 0.0;
  std::vector<double> energy_history;  // objective per accepted iterate
  std::vector<double> hnorm_history;   // |u|_H per accepted iterate
};

/// sqrt(r' H^{-1} r) / max(1, |u|_H) with r = grad_I(lambda, u) and H = K + M1.
inline double residual_dual_norm(const DiscreteProblem& problem, double lambda, const Vector& u) {
  return dual_norm(problem, grad_I(problem, lambda, u)) / std::max(1.0, h_norm(problem, u));
}

// ---------------------------------------------------------------------------
// Nehari manifold

/// A point t*v on the Nehari manifold, with A = int |grad v|^p, B = v'Kv, C = v'(Ma + Bb)v.
struct NehariPoint {
  Vector v;
  double t = 0.0;
  Vector u;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

/// Solves t^p A + t^2 B = lambda t^2 C for t > 0, i.e. t = ((lambda C - B) / A)^{1/(p-2)}.
inline NehariPoint nehari_point(const DiscreteProblem& problem, double lambda, const Vector& v) {
  const Vector& c = problem.c();
  if (std::abs(c.dot(v)) > 1e-10 * c.norm() * v.norm())
    fail(ErrorKind::invalid_argument, "Nehari direction must satisfy c'v = 0");
  NehariPoint pt;
  pt.A = problem.p() * energy_p(problem, v);
  if (!(pt.A > 0.0)) fail(ErrorKind::constant_direction, "direction has zero gradient energy");
  pt.B = quadratic_form(problem.K(), v);
  pt.C = quadratic_form(problem.mass(), v);
  const double cone = lambda * pt.C - pt.B;
  if (!(cone > 0.0))
    fail(ErrorKind::not_in_cone, "lambda C - B <= 0: the quadratic quotient along v is not below lambda");
  pt.t = std::pow(cone / pt.A, 1.0 / (problem.p() - 2.0));
  pt.v = v;
  pt.u = pt.t * v;
  return pt;
}

inline double nehari_t(const DiscreteProblem& problem, double lambda, const Vector& v) {
  return nehari_point(problem, lambda, v).t;
}

namespace detail {

struct Evaluation {
  bool ok = false;
  double f = 0.0;
  double f_scale = 0.0;  // magnitude of the summed terms, for roundoff-aware acceptance
  Vector g;              // gradient of the objective (ambient coordinates)
  Vector u;              // the candidate eigenfunction
  double residual = 0.0;
  double hnorm = 0.0;
};

/// Constrained Riesz map: the H-gradient of a functional restricted to ker c'.
class ConstrainedPreconditioner {
 public:
  explicit ConstrainedPreconditioner(const DiscreteProblem& problem)
      : problem_(problem), zc_(problem.solve_H(problem.c())), czc_(problem.c().dot(zc_)) {}

  Vector apply(const Vector& g) const {
    Vector z = problem_.solve_H(g);
    z -= (problem_.c().dot(z) / czc_) * zc_;
    return z;
  }

 private:
  const DiscreteProblem& problem_;
  Vector zc_;
  double czc_;
};

/// Limited-memory BFGS on ker c' with the constrained H^{-1} as initial metric and
/// Armijo backtracking. The iterate is re-projected onto ker c' after every step.
inline Evaluation lbfgs_descent(const DiscreteProblem& problem, const Vector& x0,
                                const std::function<Evaluation(const Vector&)>& evaluate, const SolverOptions& opts,
                                EigenPair& out) {
  const ConstrainedSubspace subspace(problem.c());
  const ConstrainedPreconditioner precond(problem);
  constexpr double kRoundoff = 16.0 * std::numeric_limits<double>::epsilon();
  constexpr double kCurvature = 0.9;

  Vector x = subspace.project(x0);
  Evaluation cur = evaluate(x);
  if (!cur.ok) fail(ErrorKind::not_in_cone, "solver initial point is outside the admissible region");
  out.energy_history.assign(1, cur.f);
  out.hnorm_history.assign(1, cur.hnorm);

  struct Pair {
    Vector s, y;
    double rho;
  };
  std::deque<Pair> memory;
  double gamma = 1.0;

  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    if (cur.residual <= opts.tol) return cur;
    if (iter >= opts.max_iterations)
      throw NonconvergenceError("iteration cap of " + std::to_string(opts.max_iterations) + " reached (residual " +
                                    std::to_string(cur.residual) + ")",
                                cur.u, cur.residual, iter);

    // Two-loop recursion.
    Vector q = cur.g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      alpha[i] = memory[i].rho * memory[i].s.dot(q);
      q -= alpha[i] * memory[i].y;
    }
    Vector d = gamma * precond.apply(q);
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double beta = memory[i].rho * memory[i].y.dot(d);
      d += (alpha[i] - beta) * memory[i].s;
    }
    d = -d;
    double slope = cur.g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      gamma = 1.0;
      d = -precond.apply(cur.g);
      slope = cur.g.dot(d);
    }
    if (!(slope < 0.0)) return cur;  // gradient is numerically zero on ker c'

    // Without curvature pairs the direction carries no scale; cap the first trial at 10% of |x|.
    double step = memory.empty() ? std::min(1.0, 0.1 * x.norm() / d.norm()) : 1.0;
    bool accepted = false;
    Vector x_next;
    Evaluation next;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt, step *= opts.backtrack_factor) {
      x_next = subspace.project(x + step * d);
      next = evaluate(x_next);
      if (!next.ok || !std::isfinite(next.f)) continue;
      const double noise = kRoundoff * (cur.f_scale + next.f_scale);
      const double sufficient = opts.armijo_slope * step * slope;
      if (-sufficient > noise && next.f <= cur.f + sufficient) {
        accepted = true;
        break;
      }
      // Approximate Wolfe test: once the decrease is below roundoff, accept on the slope alone.
      const double next_slope = next.g.dot(d);
      if (next.f <= cur.f + noise && next_slope >= kCurvature * slope &&
          next_slope <= (2.0 * opts.armijo_slope - 1.0) * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NonconvergenceError("line search step underflow (residual " + std::to_string(cur.residual) + ")", cur.u,
                                cur.residual, iter);

    Vector s = x_next - x;
    Vector y = next.g - cur.g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
      gamma = sy / y.dot(precond.apply(y));
    }
    x = std::move(x_next);
    cur = std::move(next);
    out.energy_history.push_back(cur.f);
    out.hnorm_history.push_back(cur.hnorm);
  }
}

inline ThresholdEstimate threshold_for(const DiscreteProblem& problem, const ThresholdEstimate* estimate) {
  return estimate ? *estimate : compute_nu1(problem);
}

inline void require_above_threshold(double lambda, double nu1, double margin) {
  if (!(lambda > nu1 * (1.0 + margin)))
    fail(ErrorKind::below_threshold, "lambda = " + std::to_string(lambda) + " is not above the threshold nu1 = " +
                                         std::to_string(nu1) + " (relative margin " + std::to_string(margin) + ")");
}

inline void finish(const DiscreteProblem& problem, double lambda, const Evaluation& last, EigenPair& out) {
  out.lambda = lambda;
  out.u = last.u;
  out.residual_dual = residual_dual_norm(problem, lambda, out.u);
  out.I_value = functional_I(problem, lambda, out.u);
  out.eps_used = problem.eps();
}

}  // namespace detail

/// Global minimization of I_lambda on W (p > 2, where I_lambda is coercive on W).
/// Starts from the Nehari projection of the threshold minimizer, where I_lambda < 0.
inline EigenPair solve_direct_min(const DiscreteProblem& problem, double lambda, const SolverOptions& opts = {},
                                  const ThresholdEstimate* estimate = nullptr) {
  if (!(problem.p() > 2.0)) fail(ErrorKind::invalid_argument, "direct minimization requires p > 2");
  const ThresholdEstimate est = detail::threshold_for(problem, estimate);
  detail::require_above_threshold(lambda, est.nu1, opts.margin);

  const Vector u0 = nehari_point(problem, lambda, est.minimizer).u;
  auto evaluate = [&](const Vector& u) {
    detail::Evaluation ev;
    ev.ok = true;
    ev.u = u;
    const double ep = energy_p(problem, u);
    const double B = quadratic_form(problem.K(), u);
    const double C = quadratic_form(problem.mass(), u);
    ev.f = ep + 0.5 * B - 0.5 * lambda * C;
    ev.f_scale = ep + 0.5 * B + 0.5 * std::abs(lambda) * C;
    ev.g = grad_I(problem, lambda, u);
    ev.hnorm = h_norm(problem, u);
    ev.residual = dual_norm(problem, ev.g) / std::max(1.0, ev.hnorm);
    return ev;
  };
  EigenPair out;
  out.method = SolveMethod::direct;
  const auto last = detail::lbfgs_descent(problem, u0, evaluate, opts, out);
  detail::finish(problem, lambda, last, out);
  return out;
}

/// Minimization of J(v) = I_lambda(t(v) v) over directions v in W, where t(v) retracts v onto
/// the Nehari manifold. grad J(v) = t(v) grad_I(t(v) v), and J equals (1/p - 1/2) int |grad u|^p.
inline EigenPair solve_nehari_min(const DiscreteProblem& problem, double lambda, const SolverOptions& opts = {},
                                  const ThresholdEstimate* estimate = nullptr) {
  const ThresholdEstimate est = detail::threshold_for(problem, estimate);
  detail::require_above_threshold(lambda, est.nu1, opts.margin);

  const double p = problem.p();
  auto evaluate = [&](const Vector& v) {
    detail::Evaluation ev;
    const double A = p * energy_p(problem, v);
    const double B = quadratic_form(problem.K(), v);
    const double C = quadratic_form(problem.mass(), v);
    const double cone = lambda * C - B;
    if (!(A > 0.0) || !(cone > 0.0)) return ev;
    const double t = std::pow(cone / A, 1.0 / (p - 2.0));
    ev.ok = std::isfinite(t) && t > 0.0;
    if (!ev.ok) return ev;
    ev.u = t * v;
    const double Au = std::pow(t, p) * A;
    ev.f = (1.0 / p - 0.5) * Au;
    // t amplifies the relative roundoff in lambda C - B by |p / (p - 2)| (lambda C + B) / (lambda C - B).
    ev.f_scale = std::abs(ev.f) * (1.0 + std::abs(p / (p - 2.0)) * (lambda * C + B + A) / cone);
    const Vector r = grad_I(problem, lambda, ev.u);
    ev.g = t * r;
    ev.hnorm = h_norm(problem, ev.u);
    ev.residual = dual_norm(problem, r) / std::max(1.0, ev.hnorm);
    return ev;
  };
  EigenPair out;
  out.method = SolveMethod::nehari;
  const auto last = detail::lbfgs_descent(problem, est.minimizer, evaluate, opts, out);
  detail::finish(problem, lambda, last, out);
  return out;
}

/// Direct minimization for p > 2, Nehari minimization for p < 2.
inline EigenPair solve_eigenpair(const DiscreteProblem& problem, double lambda, const SolverOptions& opts = {},
                                 const ThresholdEstimate* estimate = nullptr) {
  return problem.p() > 2.0 ? solve_direct_min(problem, lambda, opts, estimate)
                           : solve_nehari_min(problem, lambda, opts, estimate);
}

}  // namespace p2lab
