// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "p2lab/p2lab.hpp"

using namespace p2lab;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void report(int number, const std::string& title, const std::function<Outcome()>& body) {
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  if (!out.passed) ++failures;
  std::printf("[%s] criterion %2d: %s | %s\n", out.passed ? "PASS" : "FAIL", number, title.c_str(), out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

WeightField a_const(double v) { return WeightField::constant(v, WeightTarget::domain); }
WeightField b_const(double v) { return WeightField::constant(v, WeightTarget::boundary); }

DiscreteProblem reference_interval(double p) { return assemble(build_interval_mesh(64, 1.0), a_const(1.0), b_const(1.0), p); }

Vector gaussian(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x;
}

Outcome neumann_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const DiscreteProblem problem = assemble(build_interval_mesh(256, 1.0), a_const(1.0), b_const(0.0), 3.0);
  const double nu1 = compute_nu1(problem).nu1;
  const double elapsed = seconds_since(start);
  const double rel = std::abs(nu1 / (std::numbers::pi * std::numbers::pi) - 1.0);
  return {rel <= 1e-3 && elapsed < 1.0, fmt("nu1 = %.10f, relative error %.3e (tol 1e-3), %.3f s (limit 1 s)", nu1, rel, elapsed)};
}

Outcome steklov_interval_oracle() {
  double worst = 0.0;
  std::string values;
  for (int n : {1, 8, 64}) {
    const DiscreteProblem problem = assemble(build_interval_mesh(n, 1.0), a_const(0.0), b_const(1.0), 3.0);
    const double nu1 = compute_nu1(problem).nu1;
    worst = std::max(worst, std::abs(nu1 - 2.0));
    values += fmt("n=%d: %.17g ", n, nu1);
  }
  return {worst <= 1e-10, values + fmt("| max |nu1 - 2| = %.3e (tol 1e-10)", worst)};
}

Outcome disk_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const DiscreteProblem problem = assemble(build_disk_mesh(128, 8, 1.0), a_const(0.0), b_const(1.0), 3.0);
  const double nu1 = compute_nu1(problem).nu1;
  const double elapsed = seconds_since(start);
  const double rel = std::abs(nu1 - 1.0);
  return {rel <= 0.02 && elapsed < 30.0,
          fmt("%d nodes, nu1 = %.8f, |nu1 - 1| = %.3e (tol 0.02), %.2f s (limit 30 s)", problem.size(), nu1, rel, elapsed)};
}

Outcome threshold_equality() {
  bool ok = true;
  std::string detail;
  for (const auto& [p, t_list, lo, hi] : {std::tuple{3.0, std::vector<double>{1.0, 0.1, 0.01}, 9.0, 11.0},
                                           std::tuple{1.5, std::vector<double>{1.0, 10.0, 100.0}, 2.9, 3.4}}) {
    const DiscreteProblem problem = reference_interval(p);
    const ThresholdEstimate est = compute_nu1(problem);
    const auto rows = verify_threshold_scaling(problem, est, t_list);
    detail += fmt("p=%.1f ratios:", p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ok = ok && rows[i].gap > 0.0;
      if (i == 0) continue;
      ok = ok && rows[i].gap < rows[i - 1].gap && rows[i].ratio >= lo && rows[i].ratio <= hi;
      detail += fmt(" %.4f", rows[i].ratio);
    }
    detail += fmt(" (band [%.1f, %.1f]) ", lo, hi);
  }
  return {ok, detail};
}

Outcome spectrum_structure() {
  const std::vector<Classification> expected{
      Classification::negative_not_eigenvalue,  Classification::zero_eigenvalue,
      Classification::gap_not_eigenvalue,       Classification::gap_not_eigenvalue,
      Classification::threshold_not_eigenvalue, Classification::eigenvalue,
      Classification::eigenvalue,               Classification::eigenvalue};
  bool ok = true;
  double worst_residual = 0.0;
  std::string detail;
  for (double p : {1.5, 3.0}) {
    const DiscreteProblem problem = reference_interval(p);
    const ThresholdEstimate est = compute_nu1(problem);
    const double nu1 = est.nu1;
    const ScanReport rep =
        scan(problem, {-1.0, 0.0, 0.5 * nu1, 0.9 * nu1, nu1, 1.1 * nu1, 2.0 * nu1, 10.0 * nu1}, {}, 1, &est);
    bool match = rep.rows.size() == expected.size();
    for (std::size_t i = 0; match && i < expected.size(); ++i) {
      match = rep.rows[i].classification == expected[i];
      if (expected[i] == Classification::eigenvalue) {
        match = match && rep.rows[i].converged && rep.rows[i].residual_dual <= 1e-6;
        worst_residual = std::max(worst_residual, rep.rows[i].residual_dual);
      }
    }
    ok = ok && match;
    detail += fmt("p=%.1f %s; ", p, match ? "matches" : "MISMATCH");
  }
  return {ok, detail + fmt("max eigenvalue-row residual %.3e (tol 1e-6)", worst_residual)};
}

Outcome p_independence() {
  const ProblemFamily family{build_interval_mesh(64, 1.0), a_const(1.0), b_const(1.0), 0.0};
  const auto rep = p_independence_check(family, 1.05, {1.3, 1.5, 1.8});
  bool same_nu1 = true;
  std::string detail = fmt("nu1 = %.12f, lambda = %.12f;", rep.nu1, rep.lambda);
  for (const auto& [p, row] : rep.rows) {
    // The threshold is recomputed from an independent assembly at each exponent.
    const double nu1_p = compute_nu1(assemble(family.mesh, family.a, family.b, p)).nu1;
    same_nu1 = same_nu1 && nu1_p == rep.nu1;
    detail += fmt(" p=%.1f: %s res %.2e it %d", p, std::string(to_string(row.classification)).c_str(), row.residual_dual,
                  row.iterations);
  }
  return {rep.passed && same_nu1, detail};
}

Outcome nehari_identities() {
  double worst = 0.0;
  std::string detail;
  for (double p : {1.5, 3.0}) {
    const auto st = nehari_identity_stats(reference_interval(p), 50, kDefaultSeed);
    const double w = std::max({st.worst_stationarity, st.worst_energy, st.worst_idempotence, st.worst_scale});
    worst = std::max(worst, w);
    detail += fmt("p=%.1f: stationarity %.2e energy %.2e idempotence %.2e scale %.2e; ", p, st.worst_stationarity,
                  st.worst_energy, st.worst_idempotence, st.worst_scale);
  }
  return {worst <= 1e-12, detail + "tol 1e-12"};
}

Outcome gradient_correctness() {
  bool ok = true;
  std::string detail;
  for (double p : {1.5, 3.0, 4.0}) {
    for (const DiscreteProblem& problem :
         {reference_interval(p), assemble(build_disk_mesh(16, 2, 1.0), a_const(1.0), b_const(1.0), p)}) {
      std::mt19937_64 rng(kDefaultSeed);
      std::uniform_real_distribution<double> lambda_dist(0.0, 20.0);
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (int k = 0; k < 10; ++k) {
        const double lambda = lambda_dist(rng);
        const Vector u = 0.05 * gaussian(problem.size(), rng);
        const Vector phi = gaussian(problem.size(), rng);
        const double exact = grad_I(problem, lambda, u).dot(phi);
        double err[2];
        const double steps[2] = {1e-4, 1e-5};
        for (int s = 0; s < 2; ++s) {
          const double h = steps[s];
          const double fd =
              (functional_I(problem, lambda, u + h * phi) - functional_I(problem, lambda, u - h * phi)) / (2 * h);
          err[s] = std::abs(fd - exact);
        }
        lo = std::min(lo, err[0] / err[1]);
        hi = std::max(hi, err[0] / err[1]);
      }
      ok = ok && lo >= 50.0 && hi <= 200.0;
      detail += fmt("p=%.1f %dD ratio [%.1f, %.1f]; ", p, problem.mesh().dim(), lo, hi);
    }
  }
  return {ok, detail + "band [50, 200]"};
}

Outcome zero_eigenvalue() {
  bool ok = true;
  for (const DiscreteProblem& problem :
       {reference_interval(1.5), reference_interval(3.0),
        assemble(build_disk_mesh(32, 4, 1.0), WeightField::affine({1.0, 0.5, 0.5}), b_const(2.0), 1.5)}) {
    const Vector r = grad_I(problem, 0.0, Vector::Ones(problem.size()));
    for (Eigen::Index i = 0; i < r.size(); ++i) ok = ok && r[i] == 0.0 && !std::signbit(r[i]);
  }
  return {ok, ok ? "grad_I(0, 1) is the +0 vector on all three problems" : "nonzero entry found"};
}

Outcome gap_certificate_check() {
  bool ok = true;
  std::string detail;
  for (double p : {1.5, 3.0}) {
    const DiscreteProblem problem = reference_interval(p);
    const ThresholdEstimate est = compute_nu1(problem);
    const bool passes = gap_certificate(problem, 0.5 * est.nu1, 100, kDefaultSeed);
    const double equality =
        std::abs(certificate_margin(problem, est.nu1, est.minimizer)) / quadratic_form(problem.K(), est.minimizer);
    ok = ok && passes && equality <= 1e-12;
    detail += fmt("p=%.1f: 0.5 nu1 %s, equality defect %.2e; ", p, passes ? "certified" : "REFUTED", equality);
  }
  return {ok, detail + "tol 1e-12"};
}

Outcome algebraic_invariants() {
  std::vector<DiscreteProblem> problems{
      reference_interval(3.0),
      assemble(build_interval_mesh(256, 1.0), a_const(1.0), b_const(0.0), 1.5),
      assemble(build_interval_mesh(8, 1.0), a_const(0.0), b_const(1.0), 4.0),
      assemble(build_rectangle_mesh(8, 5, 2.0, 1.0), WeightField::affine({1.0, 0.5, -0.25}),
               WeightField::affine({0.5, 0.0, 1.0}, WeightTarget::boundary), 3.0),
      assemble(build_disk_mesh(128, 8, 1.0), a_const(0.0), b_const(1.0), 1.5),
  };
  double worst_c = 0.0, worst_k = 0.0;
  int domination_failures = 0;
  std::mt19937_64 rng(kDefaultSeed);
  for (const auto& problem : problems) {
    const Vector ones = Vector::Ones(problem.size());
    const Vector c = problem.Ma() * ones + problem.Bb() * ones;
    worst_c = std::max(worst_c, (problem.c() - c).norm() / c.norm());
    double k_scale = 0.0;
    for (int k = 0; k < problem.K().outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(problem.K(), k); it; ++it) k_scale = std::max(k_scale, std::abs(it.value()));
    worst_k = std::max(worst_k, (problem.K() * ones).cwiseAbs().maxCoeff() / k_scale);
    const ConstrainedSubspace sub(problem.c());
    for (int s = 0; s < 100; ++s)
      if (!quadratic_domination_holds(problem, sub.lift(gaussian(sub.dim(), rng)))) ++domination_failures;
  }
  const bool ok = worst_c <= 1e-13 && worst_k <= 1e-13 && domination_failures == 0;
  return {ok, fmt("%zu problems: |c - (Ma+Bb)1| rel %.2e, |K1| rel %.2e (tol 1e-13), domination failures %d/%zu",
                  problems.size(), worst_c, worst_k, domination_failures, 100 * problems.size())};
}

Outcome trace_inequality() {
  bool ok = true;
  std::string detail;
  for (const Mesh& mesh : {build_interval_mesh(64, 1.0), build_disk_mesh(32, 4, 1.0)}) {
    double previous = std::numeric_limits<double>::infinity();
    detail += fmt("%dD:", mesh.dim());
    for (double eps : {0.1, 1.0, 10.0}) {
      const double c = trace_constant(mesh, eps);
      const TraceCheck check = certify_trace_constant(mesh, eps, c, 1000, kDefaultSeed);
      ok = ok && c >= 0.0 && c <= previous && check.certified;
      previous = c;
      detail += fmt(" c(%.1f)=%.6g worst %.3f", eps, c, check.worst_ratio);
    }
    detail += "; ";
  }
  return {ok, detail};
}

Outcome reproducibility() {
  const auto dir = std::filesystem::temp_directory_path() / "p2lab_acceptance_repro";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const RunConfig cfg = parse_config(Json{{"mesh", {{"generator", "interval"}, {"n", 64}}},
                                          {"a", {{"kind", "constant"}, {"value", 1.0}}},
                                          {"b", {{"kind", "constant"}, {"value", 1.0}}},
                                          {"p", 1.5},
                                          {"workers", 3},
                                          {"relative_to_nu1", true},
                                          {"grid", {-0.5, 0.0, 0.5, 0.9, 1.0, 1.1, 2.0, 10.0}}});
  std::string bytes[2];
  for (int run = 0; run < 2; ++run) {
    CommandResult r = cmd_scan(cfg);
    const auto path = dir / ("scan_" + std::to_string(run) + ".json");
    write_outputs(r, path);
    std::ifstream in(csv_path_for(path), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    bytes[run] = ss.str();
  }
  std::filesystem::remove_all(dir);
  const bool ok = !bytes[0].empty() && bytes[0] == bytes[1];
  return {ok, fmt("two scans with 3 workers: %zu and %zu bytes, %s", bytes[0].size(), bytes[1].size(),
                  ok ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  report(1, "Neumann-weight oracle", neumann_oracle);
  report(2, "Steklov-weight oracle on the interval", steklov_interval_oracle);
  report(3, "Disk Steklov oracle", disk_oracle);
  report(4, "Threshold equality along t u*", threshold_equality);
  report(5, "Spectrum structure", spectrum_structure);
  report(6, "p-independence below 2", p_independence);
  report(7, "Nehari identities", nehari_identities);
  report(8, "Gradient correctness", gradient_correctness);
  report(9, "Zero eigenvalue", zero_eigenvalue);
  report(10, "Gap certificate", gap_certificate_check);
  report(11, "Algebraic invariants", algebraic_invariants);
  report(12, "Trace inequality", trace_inequality);
  report(13, "Reproducibility", reproducibility);
  std::printf("%d of 13 criteria passed\n", 13 - failures);
  return failures == 0 ? 0 : 1;
}
