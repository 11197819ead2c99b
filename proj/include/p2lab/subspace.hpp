#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Core>

#include "p2lab/assembly.hpp"
#include "p2lab/error.hpp"
#include "p2lab/mesh.hpp"

namespace p2lab {

using DenseMatrix = Eigen::MatrixXd;

/// The constrained space W = {u : c'u = 0} together with the split R^n = W (+) span{1}.
///
/// The orthonormal basis Z of W is the last n-1 columns of the Householder reflector
/// that sends c/|c| onto the first axis. Z is applied implicitly in O(n); dense_basis()
/// materializes it.
class ConstrainedSubspace {
 public:
  explicit ConstrainedSubspace(Vector c) : c_(std::move(c)) {
    const double norm = c_.norm();
    if (c_.size() < 2) fail(ErrorKind::invalid_argument, "constraint vector needs at least 2 entries");
    if (!(norm > 0.0)) fail(ErrorKind::constants_inside_subspace, "constraint vector is zero");
    one_split_ = c_.sum();
    if (!(one_split_ > 0.0))
      fail(ErrorKind::constants_inside_subspace,
           "c'1 must be positive, otherwise constants lie in the constrained space");
    reflector_ = c_ / norm;
    const double alpha = reflector_[0] >= 0.0 ? -1.0 : 1.0;
    reflector_[0] -= alpha;
    beta_ = 2.0 / reflector_.squaredNorm();
  }

  int ambient_dim() const noexcept { return static_cast<int>(c_.size()); }
  int dim() const noexcept { return ambient_dim() - 1; }
  const Vector& c() const noexcept { return c_; }
  /// c'1 > 0.
  double one_split() const noexcept { return one_split_; }

  /// Z x.
  Vector lift(const Vector& x) const {
    Vector y(ambient_dim());
    y[0] = 0.0;
    y.tail(dim()) = x;
    y -= (beta_ * reflector_.dot(y)) * reflector_;
    return y;
  }

  /// Z' u.
  Vector restrict(const Vector& u) const {
    Vector h = u - (beta_ * reflector_.dot(u)) * reflector_;
    return h.tail(dim());
  }

  DenseMatrix dense_basis() const {
    DenseMatrix Z = DenseMatrix::Identity(ambient_dim(), ambient_dim()) -
                    beta_ * reflector_ * reflector_.transpose();
    return Z.rightCols(dim());
  }

  /// Householder vector v and factor beta with reflector I - beta v v'.
  const Vector& reflector() const noexcept { return reflector_; }
  double beta() const noexcept { return beta_; }

  /// Euclidean projection onto ker c'.
  Vector project(const Vector& u) const { return u - (c_.dot(u) / c_.squaredNorm()) * c_; }

 private:
  Vector c_;
  Vector reflector_;
  double beta_ = 0.0;
  double one_split_ = 0.0;
};

inline ConstrainedSubspace build_subspace(const Vector& c) { return ConstrainedSubspace(c); }

struct Decomposition {
  Vector w;  // c'w = 0
  double s;  // multiple of the constant function
};

/// u = w + s*1 with s = c'u / c'1 (the non-orthogonal split, not a projection).
inline Decomposition decompose(const ConstrainedSubspace& subspace, const Vector& u) {
  const double s = subspace.c().dot(u) / subspace.one_split();
  return {u.array() - s, s};
}

/// Z' A Z for symmetric A.
inline DenseMatrix reduce(const ConstrainedSubspace& subspace, const DenseMatrix& A) {
  const int n = subspace.ambient_dim();
  if (A.rows() != n || A.cols() != n) fail(ErrorKind::invalid_argument, "matrix size does not match the subspace");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorKind::asymmetric_matrix, "reduce expects a symmetric matrix");
  // (I - b v v') A (I - b v v') without forming the reflector, then drop the first row/column.
  const Vector& v = subspace.reflector();
  const double b = subspace.beta();
  const Vector Av = A * v;
  const double vAv = v.dot(Av);
  const Vector q = b * Av - (0.5 * b * b * vAv) * v;
  DenseMatrix R = A.bottomRightCorner(n - 1, n - 1);
  R.noalias() -= v.tail(n - 1) * q.tail(n - 1).transpose();
  R.noalias() -= q.tail(n - 1) * v.tail(n - 1).transpose();
  return 0.5 * (R + R.transpose());
}

inline DenseMatrix reduce(const ConstrainedSubspace& subspace, const SparseMatrix& A) {
  return reduce(subspace, DenseMatrix(A));
}

/// u - (1/|Omega|) * integral(u), with the P1 integral computed exactly.
inline Vector mean_zero(const Mesh& mesh, const Vector& u) {
  if (u.size() != mesh.num_nodes()) fail(ErrorKind::invalid_argument, "vector size does not match the mesh");
  double integral = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double s = 0.0;
    for (int v : mesh.element(e)) s += u[v];
    integral += mesh.element_measure(e) * s / mesh.nodes_per_element();
  }
  return u.array() - integral / mesh.domain_measure();
}

}  // namespace p2lab
