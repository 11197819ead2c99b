#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "p2lab/assembly.hpp"
#include "p2lab/linear_spectrum.hpp"
#include "p2lab/nonlinear_solvers.hpp"
#include "p2lab/subspace.hpp"
#include "p2lab/verification.hpp"

// Runtime invariant checks behind `p2lab verify`. Each returns the measured quantity next
// to the threshold it is judged against.

namespace p2lab {

struct PropertyResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

namespace detail {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  Vector gaussian(Eigen::Index n) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = normal_(rng_);
    return x;
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

inline double relative(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace detail

inline PropertyResult check_constraint_vector(const DiscreteProblem& problem) {
  const Vector ones = Vector::Ones(problem.size());
  const Vector rebuilt = problem.Ma() * ones + problem.Bb() * ones;
  const double defect = (problem.c() - rebuilt).cwiseAbs().maxCoeff() / problem.c().cwiseAbs().maxCoeff();
  return {"constraint_vector_identity", defect <= 1e-13, defect, 1e-13, "c = Ma 1 + Bb 1"};
}

inline PropertyResult check_stiffness_constants(const DiscreteProblem& problem) {
  const Vector ones = Vector::Ones(problem.size());
  const double defect = (problem.K() * ones).cwiseAbs().maxCoeff() / problem.K().coeffs().cwiseAbs().maxCoeff();
  return {"stiffness_kernel_constants", defect <= 1e-13, defect, 1e-13, "K 1 = 0"};
}

inline PropertyResult check_gradient_constants(const DiscreteProblem& problem, int samples, std::uint64_t seed) {
  detail::Sampler sampler(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector g = grad_energy_p(problem, sampler.gaussian(problem.size()));
    worst = std::max(worst, std::abs(g.sum()) / std::max(g.cwiseAbs().sum(), 1e-300));
  }
  return {"grad_energy_annihilates_constants", worst <= 1e-13, worst, 1e-13, "grad_energy_p(u)'1 = 0"};
}

inline PropertyResult check_energy_homogeneity(const DiscreteProblem& problem, int samples, std::uint64_t seed) {
  detail::Sampler sampler(seed);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vector u = sampler.gaussian(problem.size());
    const double s = sampler.uniform(0.1, 10.0);
    worst = std::max(worst, detail::relative(energy_p(problem, s * u), std::pow(s, problem.p()) * energy_p(problem, u)));
  }
  return {"energy_homogeneity", worst <= 1e-12, worst, 1e-12, "energy_p(s u) = s^p energy_p(u)"};
}

/// One central-difference sample of <grad_I(u), phi>.
struct GradientSample {
  double lambda = 0.0;
  double analytic = 0.0;
  std::vector<double> errors;  // |FD(h) - analytic| per step
};

/// Random inputs: u = 0.05 * N(0, 1) (small enough that the p-term curvature dominates
/// roundoff at h = 1e-5), phi = N(0, 1), lambda uniform in [0, 20].
inline std::vector<GradientSample> gradient_fd_samples(const DiscreteProblem& problem, int samples,
                                                       const std::vector<double>& steps, std::uint64_t seed) {
  detail::Sampler sampler(seed);
  std::vector<GradientSample> out;
  for (int k = 0; k < samples; ++k) {
    GradientSample s;
    s.lambda = sampler.uniform(0.0, 20.0);
    const Vector u = 0.05 * sampler.gaussian(problem.size());
    const Vector phi = sampler.gaussian(problem.size());
    s.analytic = grad_I(problem, s.lambda, u).dot(phi);
    for (double h : steps) {
      const double fd = (functional_I(problem, s.lambda, u + h * phi) - functional_I(problem, s.lambda, u - h * phi)) / (2 * h);
      s.errors.push_back(std::abs(fd - s.analytic));
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Error ratio between h = 1e-4 and h = 1e-5 must sit in [50, 200] (second order).
inline PropertyResult check_gradient_fd(const DiscreteProblem& problem, int samples, std::uint64_t seed) {
  const auto rows = gradient_fd_samples(problem, samples, {1e-4, 1e-5}, seed);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    const double ratio = r.errors[0] / r.errors[1];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const bool ok = lo >= 50.0 && hi <= 200.0;
  return {"gradient_central_difference_order", ok, lo, 50.0,
          "min/max error ratio h=1e-4 vs 1e-5: " + std::to_string(lo) + " / " + std::to_string(hi) + " (band [50, 200])"};
}

inline PropertyResult check_quadratic_domination(const DiscreteProblem& problem, int samples, std::uint64_t seed) {
  const ConstrainedSubspace subspace(problem.c());
  detail::Sampler sampler(seed);
  int failures = 0;
  for (int k = 0; k < samples; ++k)
    if (!quadratic_domination_holds(problem, subspace.lift(sampler.gaussian(subspace.dim())))) ++failures;
  return {"quadratic_domination", failures == 0, double(failures), 0.0,
          "u'(Ma+Bb)u <= (u - mean u)'(Ma+Bb)(u - mean u) for c'u = 0"};
}

inline std::vector<PropertyResult> check_threshold(const DiscreteProblem& problem, const ThresholdEstimate& est) {
  std::vector<PropertyResult> out;
  out.push_back({"nu1_positive", est.nu1 > 0.0, est.nu1, 0.0, "nu1 > 0"});
  const Vector& u = est.minimizer;
  const double cu = std::abs(problem.c().dot(u)) / (problem.c().norm() * u.norm());
  out.push_back({"minimizer_constraint", cu <= 1e-12, cu, 1e-12, "|c'u*| / (|c| |u*|)"});
  const double rq = detail::relative(rayleigh_quadratic(problem, u), est.nu1);
  out.push_back({"minimizer_attains_nu1", rq <= 1e-12, rq, 1e-12, "rayleigh_quadratic(u*) = nu1"});
  return out;
}

/// Gap ratios of verify_threshold_scaling against (t_prev / t)^{p-2}, within 5%.
inline PropertyResult check_threshold_scaling(const DiscreteProblem& problem, const ThresholdEstimate& est,
                                              const std::vector<double>& t_list) {
  const auto rows = verify_threshold_scaling(problem, est, t_list);
  double worst = 0.0;
  bool above = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    above = above && rows[i].value >= est.nu1 - 1e-12 * est.nu1;
    if (i == 0) continue;
    const double expected = std::pow(rows[i - 1].t / rows[i].t, problem.p() - 2.0);
    worst = std::max(worst, std::abs(rows[i].ratio / expected - 1.0));
  }
  return {"threshold_scaling", above && worst <= 0.05, worst, 0.05,
          "relative deviation of gap ratios from (t_prev/t)^(p-2); values never below nu1"};
}

inline PropertyResult check_zero_eigenvalue(const DiscreteProblem& problem) {
  const Vector r = grad_I(problem, 0.0, Vector::Ones(problem.size()));
  bool exact = true;
  for (Eigen::Index i = 0; i < r.size(); ++i) exact = exact && r[i] == 0.0 && !std::signbit(r[i]);
  return {"zero_eigenvalue_residual", exact, r.cwiseAbs().maxCoeff(), 0.0, "grad_I(0, 1) is bitwise zero"};
}

inline PropertyResult check_gap_certificate(const DiscreteProblem& problem, const ThresholdEstimate& est, int samples,
                                            std::uint64_t seed) {
  const bool ok = gap_certificate(problem, 0.5 * est.nu1, samples, seed);
  const double boundary = certificate_margin(problem, est.nu1, est.minimizer) /
                          quadratic_form(problem.K(), est.minimizer);
  const bool tight = std::abs(boundary) <= 1e-12;
  return {"gap_certificate", ok && tight, boundary, 1e-12,
          "lambda = nu1/2 passes on sampled directions; equality along u* at lambda = nu1"};
}

struct NehariIdentityStats {
  double worst_stationarity = 0.0;  // |<I'(u), u>| / (int|grad u|^p + u'Ku + lambda u'Mu)
  double worst_energy = 0.0;        // |I(u) - (1/p - 1/2) int|grad u|^p| / |I(u)|
  double worst_idempotence = 0.0;   // |t(t v) - 1|
  double worst_scale = 0.0;         // max_i |t(s v) s v - t(v) v| / max |t(v) v|
};

/// Random Nehari points t(v) v, v = Z x with x ~ N(0, 1) and lambda = 1.5 * v'Kv / v'Mv.
inline NehariIdentityStats nehari_identity_stats(const DiscreteProblem& problem, int samples, std::uint64_t seed) {
  const ConstrainedSubspace subspace(problem.c());
  detail::Sampler sampler(seed);
  NehariIdentityStats st;
  const double p = problem.p();
  for (int k = 0; k < samples; ++k) {
    const Vector v = subspace.lift(sampler.gaussian(subspace.dim()));
    const double lambda = 1.5 * rayleigh_quadratic(problem, v);
    const NehariPoint pt = nehari_point(problem, lambda, v);
    const Vector& u = pt.u;
    const double Ap = p * energy_p(problem, u);
    const double Bu = quadratic_form(problem.K(), u);
    const double Cu = quadratic_form(problem.mass(), u);
    const double pairing = grad_I(problem, lambda, u).dot(u);
    st.worst_stationarity = std::max(st.worst_stationarity, std::abs(pairing) / (Ap + Bu + lambda * Cu));
    const double I = functional_I(problem, lambda, u);
    st.worst_energy = std::max(st.worst_energy, detail::relative(I, (1.0 / p - 0.5) * Ap));
    st.worst_idempotence = std::max(st.worst_idempotence, std::abs(nehari_t(problem, lambda, u) - 1.0));
    const double s = sampler.uniform(0.1, 10.0);
    const Vector scaled = nehari_t(problem, lambda, s * v) * (s * v);
    st.worst_scale = std::max(st.worst_scale, (scaled - u).cwiseAbs().maxCoeff() / u.cwiseAbs().maxCoeff());
  }
  return st;
}

inline std::vector<PropertyResult> check_nehari_identities(const DiscreteProblem& problem, int samples,
                                                           std::uint64_t seed) {
  const auto st = nehari_identity_stats(problem, samples, seed);
  return {
      {"nehari_stationarity", st.worst_stationarity <= 1e-12, st.worst_stationarity, 1e-12, "<I'(u), u> = 0"},
      {"nehari_energy_identity", st.worst_energy <= 1e-12, st.worst_energy, 1e-12,
       "I(u) = (1/p - 1/2) int |grad u|^p"},
      {"nehari_retraction_idempotence", st.worst_idempotence <= 1e-12, st.worst_idempotence, 1e-12, "t(t v) = 1"},
      {"nehari_scale_invariance", st.worst_scale <= 1e-12, st.worst_scale, 1e-12, "t(s v) s v = t(v) v"},
  };
}

inline std::vector<PropertyResult> check_trace_constant(const Mesh& mesh, const std::vector<double>& epsilons,
                                                        int samples, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  std::vector<double> constants;
  for (double e : epsilons) constants.push_back(trace_constant(mesh, e));
  std::vector<std::size_t> order(epsilons.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return epsilons[i] < epsilons[j]; });
  bool monotone = true, nonneg = true, certified = true;
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double c = constants[order[k]];
    nonneg = nonneg && c >= 0.0;
    if (k > 0) monotone = monotone && c <= constants[order[k - 1]];
    const auto check = certify_trace_constant(mesh, epsilons[order[k]], c, samples, seed + k);
    certified = certified && check.certified;
    worst_ratio = std::max(worst_ratio, check.worst_ratio);
  }
  out.push_back({"trace_constant_nonnegative", nonneg, constants.empty() ? 0.0 : *std::min_element(constants.begin(), constants.end()), 0.0, "c_eps >= 0"});
  out.push_back({"trace_constant_monotone", monotone, 0.0, 0.0, "c_eps non-increasing in eps"});
  out.push_back({"trace_constant_certified", certified, worst_ratio, 1.0,
                 "max over samples of u'Tu / (eps u'Ku + c u'M1 u)"});
  return out;
}

/// Invariants every returned EigenPair must satisfy.
inline std::vector<PropertyResult> check_eigenpair(const DiscreteProblem& problem, const EigenPair& pair,
                                                   const SolverOptions& opts) {
  std::vector<PropertyResult> out;
  const Vector& u = pair.u;
  const double p = problem.p();
  out.push_back({"eigenpair_residual", pair.residual_dual <= opts.tol, pair.residual_dual, opts.tol,
                 "residual_dual_norm <= tol"});
  const double cu = std::abs(problem.c().dot(u)) / (problem.c().norm() * u.norm());
  out.push_back({"eigenpair_in_constrained_space", cu <= 1e-12, cu, 1e-12, "|c'u| / (|c| |u|)"});
  const double Ap = p * energy_p(problem, u);
  const double scale = Ap + quadratic_form(problem.K(), u) + pair.lambda * quadratic_form(problem.mass(), u);
  const double pairing = std::abs(grad_I(problem, pair.lambda, u).dot(u)) / scale;
  out.push_back({"eigenpair_on_nehari_manifold", pairing <= 1e-10, pairing, 1e-10, "<I'(u), u> = 0"});
  const bool sign_ok = (p > 2.0) ? pair.I_value < 0.0 : pair.I_value > 0.0;
  out.push_back({"eigenpair_energy_sign", sign_ok, pair.I_value, 0.0, "sign(I) = sign(1/p - 1/2)"});
  const Vector r = grad_I(problem, pair.lambda, u);
  const double defect = std::abs(r.sum() + pair.lambda * problem.c().dot(u)) /
                        std::max(r.cwiseAbs().sum() + pair.lambda * (problem.mass() * u).cwiseAbs().sum(), 1e-300);
  out.push_back({"eigenpair_constant_test", defect <= 1e-12, defect, 1e-12, "grad_I(u)'1 = -lambda c'u"});
  out.push_back({"eigenpair_quadratic_domination", quadratic_domination_holds(problem, u), 0.0, 0.0,
                 "domination on the returned eigenvector"});
  double rise = 0.0;
  for (std::size_t i = 1; i < pair.energy_history.size(); ++i) {
    const double prev = pair.energy_history[i - 1];
    rise = std::max(rise, (pair.energy_history[i] - prev) / std::max(std::abs(prev), 1e-300));
  }
  out.push_back({"solver_monotone_descent", rise <= 1e-12, rise, 1e-12,
                 "largest relative increase of the objective between accepted iterates"});
  const double h0 = pair.hnorm_history.empty() ? 0.0 : pair.hnorm_history.front();
  const double hmax = pair.hnorm_history.empty() ? 0.0 : *std::max_element(pair.hnorm_history.begin(), pair.hnorm_history.end());
  out.push_back({"solver_bounded_trajectory", hmax <= 1e6 * h0, hmax / std::max(h0, 1e-300), 1e6,
                 "max |u_k|_H / |u_0|_H"});
  return out;
}

}  // namespace p2lab
