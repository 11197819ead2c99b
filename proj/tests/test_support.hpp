#pragma once

#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "p2lab/p2lab.hpp"

namespace p2lab::testing {

/// Runs `body` and reports which ErrorKind it raised, if any.
inline std::string error_kind_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return std::string(to_string(e.kind()));
  }
  return "none";
}

#define EXPECT_P2LAB_ERROR(kind, ...) \
  EXPECT_EQ(::p2lab::testing::error_kind_of([&] { __VA_ARGS__; }), std::string(::p2lab::to_string(kind)))

inline WeightField domain(double v) { return WeightField::constant(v, WeightTarget::domain); }
inline WeightField boundary(double v) { return WeightField::constant(v, WeightTarget::boundary); }

inline Vector gaussian(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x;
}

inline Vector nodal(const Mesh& mesh, const std::function<double(double, double)>& f) {
  Vector u(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) u[i] = f(mesh.node(i)[0], mesh.node(i)[1]);
  return u;
}

}  // namespace p2lab::testing
