#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "p2lab/error.hpp"
#include "p2lab/mesh.hpp"
#include "p2lab/weights.hpp"

namespace p2lab {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

namespace detail {

/// Geometry and assembled operators shared by every exponent on one (mesh, a, b).
struct Operators {
  Mesh mesh;
  WeightField a;
  WeightField b;
  std::vector<double> a_samples;
  std::vector<double> b_samples;
  // Per element: inverse-transposed edge matrix, row-major (only [0] in 1D).
  // grad u = G * (u_k - u_0)_{k=1..dim}
  std::vector<std::array<double, 4>> edge_inverse;
  SparseMatrix K;   // Dirichlet form
  SparseMatrix Ma;  // a-weighted mass
  SparseMatrix Bb;  // b-weighted boundary mass
  SparseMatrix M;   // Ma + Bb
  SparseMatrix M1;  // unweighted mass
  SparseMatrix T;   // unweighted boundary mass
  SparseMatrix H;   // K + M1, discrete W^{1,2} inner product
  Vector c;
  Eigen::SimplicialLDLT<SparseMatrix> H_factor;

  Operators(Mesh m, WeightField wa, WeightField wb) : mesh(std::move(m)), a(std::move(wa)), b(std::move(wb)) {}
};

}  // namespace detail

/// The assembled discrete (p,2)-Laplacian Steklov problem. Cheap to copy; immutable.
class DiscreteProblem {
 public:
  DiscreteProblem(std::shared_ptr<const detail::Operators> ops, double p, double eps)
      : ops_(std::move(ops)), p_(p), eps_(eps) {}

  const Mesh& mesh() const noexcept { return ops_->mesh; }
  const WeightField& weight_a() const noexcept { return ops_->a; }
  const WeightField& weight_b() const noexcept { return ops_->b; }
  double p() const noexcept { return p_; }
  double eps() const noexcept { return eps_; }
  int size() const noexcept { return mesh().num_nodes(); }

  const SparseMatrix& K() const noexcept { return ops_->K; }
  const SparseMatrix& Ma() const noexcept { return ops_->Ma; }
  const SparseMatrix& Bb() const noexcept { return ops_->Bb; }
  /// Ma + Bb.
  const SparseMatrix& mass() const noexcept { return ops_->M; }
  const SparseMatrix& M1() const noexcept { return ops_->M1; }
  const SparseMatrix& T() const noexcept { return ops_->T; }
  const SparseMatrix& H() const noexcept { return ops_->H; }
  const Vector& c() const noexcept { return ops_->c; }

  Vector solve_H(const Vector& r) const { return ops_->H_factor.solve(r); }

  /// Same operators, different exponent/regularization.
  DiscreteProblem with_exponent(double p, double eps) const;

  /// Gradient of u on element e (second component 0 in 1D). Exactly zero for constant u.
  Eigen::Vector2d element_gradient(int e, const Vector& u) const;

  /// r_i += measure(e) * flux . grad(phi_i) over the nodes of element e.
  void scatter_flux(int e, const Eigen::Vector2d& flux, Vector& r) const;

  const detail::Operators& operators() const noexcept { return *ops_; }

 private:
  std::shared_ptr<const detail::Operators> ops_;
  double p_;
  double eps_;
};

namespace detail {

inline void check_exponent(double p, double eps) {
  if (!(p > 1.0) || !std::isfinite(p)) fail(ErrorKind::invalid_argument, "exponent p must satisfy p > 1");
  if (p == 2.0)
    fail(ErrorKind::invalid_argument,
         "p = 2 is excluded: the problem reduces to the linear Steklov problem for the Laplacian");
  if (!(eps >= 0.0) || !std::isfinite(eps)) fail(ErrorKind::invalid_argument, "regularization eps must be >= 0");
  if (p > 2.0 && eps != 0.0) fail(ErrorKind::invalid_argument, "regularization eps is only allowed for p < 2");
}

inline std::shared_ptr<const Operators> build_operators(Mesh mesh, WeightField a, WeightField b) {
  if (a.target() != WeightTarget::domain) fail(ErrorKind::invalid_weight, "weight a must target the domain");
  if (b.target() != WeightTarget::boundary) fail(ErrorKind::invalid_weight, "weight b must target the boundary");
  auto ops = std::make_shared<Operators>(std::move(mesh), std::move(a), std::move(b));
  const Mesh& m = ops->mesh;
  ops->a_samples = ops->a.sample(m);
  ops->b_samples = ops->b.sample(m);

  const int n = m.num_nodes();
  const int dim = m.dim();
  const int npe = dim + 1;
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> tk, tma, tm1, tbb, tt;
  tk.reserve(static_cast<std::size_t>(m.num_elements() * npe * npe));
  tma.reserve(tk.capacity());
  tm1.reserve(tk.capacity());

  ops->edge_inverse.resize(static_cast<std::size_t>(m.num_elements()));
  // P1 mass template: measure / ((d+1)(d+2)) * (1 + delta_jk)
  const double mass_scale = 1.0 / ((dim + 1.0) * (dim + 2.0));
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto el = m.element(e);
    const double measure = m.element_measure(e);
    auto& G = ops->edge_inverse[static_cast<std::size_t>(e)];
    std::array<Eigen::Vector2d, 3> grad_phi;
    if (dim == 1) {
      G = {1.0 / (m.node(el[1])[0] - m.node(el[0])[0]), 0.0, 0.0, 0.0};
      grad_phi[1] = {G[0], 0.0};
      grad_phi[0] = -grad_phi[1];
    } else {
      const auto& x0 = m.node(el[0]);
      const auto& x1 = m.node(el[1]);
      const auto& x2 = m.node(el[2]);
      Eigen::Matrix2d E;
      E << x1[0] - x0[0], x2[0] - x0[0], x1[1] - x0[1], x2[1] - x0[1];
      const Eigen::Matrix2d Ginv = E.inverse().transpose();
      G = {Ginv(0, 0), Ginv(0, 1), Ginv(1, 0), Ginv(1, 1)};
      grad_phi[1] = Ginv.col(0);
      grad_phi[2] = Ginv.col(1);
      grad_phi[0] = -(grad_phi[1] + grad_phi[2]);
    }
    const double a_e = ops->a_samples[static_cast<std::size_t>(e)];
    for (int j = 0; j < npe; ++j)
      for (int k = 0; k < npe; ++k) {
        const int gj = el[static_cast<std::size_t>(j)], gk = el[static_cast<std::size_t>(k)];
        tk.emplace_back(gj, gk, measure * grad_phi[static_cast<std::size_t>(j)].dot(grad_phi[static_cast<std::size_t>(k)]));
        const double mjk = measure * mass_scale * (j == k ? 2.0 : 1.0);
        tm1.emplace_back(gj, gk, mjk);
        tma.emplace_back(gj, gk, a_e * mjk);
      }
  }
  for (int f = 0; f < m.num_facets(); ++f) {
    const auto facet = m.facet(f);
    const double b_f = ops->b_samples[static_cast<std::size_t>(f)];
    const double measure = m.facet_measure(f);
    if (dim == 1) {
      tt.emplace_back(facet[0], facet[0], measure);
      tbb.emplace_back(facet[0], facet[0], b_f * measure);
    } else {
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          const double tjk = measure / 6.0 * (j == k ? 2.0 : 1.0);
          tt.emplace_back(facet[static_cast<std::size_t>(j)], facet[static_cast<std::size_t>(k)], tjk);
          tbb.emplace_back(facet[static_cast<std::size_t>(j)], facet[static_cast<std::size_t>(k)], b_f * tjk);
        }
    }
  }
  auto build = [n](SparseMatrix& A, const std::vector<Triplet>& t) {
    A.resize(n, n);
    A.setFromTriplets(t.begin(), t.end());
  };
  build(ops->K, tk);
  build(ops->Ma, tma);
  build(ops->M1, tm1);
  build(ops->Bb, tbb);
  build(ops->T, tt);
  ops->M = ops->Ma + ops->Bb;
  ops->H = ops->K + ops->M1;

  const Vector ones = Vector::Ones(n);
  ops->c = ops->Ma * ones + ops->Bb * ones;
  if (!(ones.dot(ops->c) > 0.0))
    fail(ErrorKind::weights_condition,
         "the integral of a over the domain plus the integral of b over the boundary must be positive");

  ops->H_factor.compute(ops->H);
  if (ops->H_factor.info() != Eigen::Success)
    fail(ErrorKind::invalid_discretization, "factorization of K + M1 failed");
  return ops;
}

/// Assembly without the exponent restriction; p = 2 is accepted (used by tests only).
inline DiscreteProblem assemble_any_exponent(const Mesh& mesh, const WeightField& a, const WeightField& b, double p,
                                             double eps) {
  if (!(p > 1.0)) fail(ErrorKind::invalid_argument, "exponent p must satisfy p > 1");
  return DiscreteProblem(build_operators(mesh, a, b), p, eps);
}

}  // namespace detail

inline DiscreteProblem DiscreteProblem::with_exponent(double p, double eps) const {
  detail::check_exponent(p, eps);
  return DiscreteProblem(ops_, p, eps);
}

inline Eigen::Vector2d DiscreteProblem::element_gradient(int e, const Vector& u) const {
  const auto el = mesh().element(e);
  const auto& G = ops_->edge_inverse[static_cast<std::size_t>(e)];
  if (mesh().dim() == 1) return {G[0] * (u[el[1]] - u[el[0]]), 0.0};
  const double d1 = u[el[1]] - u[el[0]];
  const double d2 = u[el[2]] - u[el[0]];
  return {G[0] * d1 + G[1] * d2, G[2] * d1 + G[3] * d2};
}

inline void DiscreteProblem::scatter_flux(int e, const Eigen::Vector2d& flux, Vector& r) const {
  const auto el = mesh().element(e);
  const auto& G = ops_->edge_inverse[static_cast<std::size_t>(e)];
  const double measure = mesh().element_measure(e);
  if (mesh().dim() == 1) {
    const double s = measure * flux[0] * G[0];
    r[el[1]] += s;
    r[el[0]] -= s;
    return;
  }
  // grad(phi_1) = column 0 of G, grad(phi_2) = column 1, grad(phi_0) = -(sum)
  const double s1 = measure * (flux[0] * G[0] + flux[1] * G[2]);
  const double s2 = measure * (flux[0] * G[1] + flux[1] * G[3]);
  r[el[1]] += s1;
  r[el[2]] += s2;
  r[el[0]] -= s1 + s2;
}

/// Assembles K, Ma, Bb and the constraint vector c = Ma 1 + Bb 1 for exponent p.
inline DiscreteProblem assemble(const Mesh& mesh, const WeightField& a, const WeightField& b, double p,
                                double eps = 0.0) {
  detail::check_exponent(p, eps);
  return DiscreteProblem(detail::build_operators(mesh, a, b), p, eps);
}

// ---------------------------------------------------------------------------
// Energies and gradients

namespace detail {
inline void check_size(const DiscreteProblem& problem, const Vector& u) {
  if (u.size() != problem.size())
    fail(ErrorKind::invalid_argument, "vector has " + std::to_string(u.size()) + " entries, expected " +
                                          std::to_string(problem.size()));
}
}  // namespace detail

inline double quadratic_form(const SparseMatrix& A, const Vector& u) { return u.dot(A * u); }

/// sqrt(r' H^{-1} r): size of a residual functional in the discrete W^{1,2} dual norm.
inline double dual_norm(const DiscreteProblem& problem, const Vector& r) {
  return std::sqrt(std::max(0.0, r.dot(problem.solve_H(r))));
}

/// sqrt(u' H u).
inline double h_norm(const DiscreteProblem& problem, const Vector& u) {
  return std::sqrt(std::max(0.0, quadratic_form(problem.H(), u)));
}

/// (1/p) * sum_e |grad u|_e^p * measure(e). Never regularized.
inline double energy_p(const DiscreteProblem& problem, const Vector& u) {
  detail::check_size(problem, u);
  const double p = problem.p();
  double sum = 0.0;
  for (int e = 0; e < problem.mesh().num_elements(); ++e) {
    const double g2 = problem.element_gradient(e, u).squaredNorm();
    if (g2 > 0.0) sum += std::pow(g2, 0.5 * p) * problem.mesh().element_measure(e);
  }
  return sum / p;
}

namespace detail {
/// (|g|^2 + eps^2)^((p-2)/2), or 0 where the unregularized integrand vanishes.
inline double p_coefficient(double g2, double p, double eps) {
  const double s = g2 + eps * eps;
  if (s == 0.0) return 0.0;
  return std::pow(s, 0.5 * (p - 2.0));
}

inline Vector stiffness_action(const DiscreteProblem& problem, const Vector& u, double p_weight, double linear_weight) {
  Vector r = Vector::Zero(problem.size());
  const double p = problem.p();
  const double eps = problem.eps();
  for (int e = 0; e < problem.mesh().num_elements(); ++e) {
    const Eigen::Vector2d g = problem.element_gradient(e, u);
    const double coef = p_weight * p_coefficient(g.squaredNorm(), p, eps) + linear_weight;
    problem.scatter_flux(e, coef * g, r);
  }
  return r;
}
}  // namespace detail

/// Gradient of energy_p (with the eps regularization for p < 2).
inline Vector grad_energy_p(const DiscreteProblem& problem, const Vector& u) {
  detail::check_size(problem, u);
  return detail::stiffness_action(problem, u, 1.0, 0.0);
}

/// I(u) = energy_p(u) + u'Ku/2 - (lambda/2) u'(Ma + Bb)u.
inline double functional_I(const DiscreteProblem& problem, double lambda, const Vector& u) {
  return energy_p(problem, u) + 0.5 * quadratic_form(problem.K(), u) - 0.5 * lambda * quadratic_form(problem.mass(), u);
}

/// grad_energy_p(u) + K u - lambda (Ma + Bb) u, with K u applied element by element so that
/// constants map to an exactly zero vector.
inline Vector grad_I(const DiscreteProblem& problem, double lambda, const Vector& u) {
  detail::check_size(problem, u);
  Vector r = detail::stiffness_action(problem, u, 1.0, 1.0);
  r.noalias() -= lambda * (problem.mass() * u);
  return r;
}

/// u'Ku / u'(Ma + Bb)u.
inline double rayleigh_quadratic(const DiscreteProblem& problem, const Vector& u) {
  detail::check_size(problem, u);
  const double den = quadratic_form(problem.mass(), u);
  if (!(den > 0.0)) fail(ErrorKind::degenerate_direction, "u'(Ma + Bb)u vanishes");
  return quadratic_form(problem.K(), u) / den;
}

/// [energy_p(u) + u'Ku/2] / [u'(Ma + Bb)u / 2].
inline double rayleigh_full(const DiscreteProblem& problem, const Vector& u) {
  detail::check_size(problem, u);
  const double den = quadratic_form(problem.mass(), u);
  if (!(den > 0.0)) fail(ErrorKind::degenerate_direction, "u'(Ma + Bb)u vanishes");
  return (energy_p(problem, u) + 0.5 * quadratic_form(problem.K(), u)) / (0.5 * den);
}

}  // namespace p2lab
