#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "p2lab/error.hpp"

namespace p2lab {

using Point = std::array<double, 2>;  // y is unused (0) in 1D

struct BoundaryFacet {
  std::array<int, 2> nodes{};  // 1 used in 1D, 2 in 2D
  int owner = -1;              // owning element index
};

/// Plain mesh description. No invariants are enforced until it is wrapped in a Mesh.
struct MeshData {
  int dim = 1;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> elements;  // dim + 1 entries used
  std::vector<BoundaryFacet> facets;
};

/// Simplicial mesh of an interval (dim 1) or polygon (dim 2). Immutable once built.
class Mesh {
 public:
  /// Validates every invariant; throws ErrorKind::invalid_mesh naming the violated one.
  explicit Mesh(MeshData data);

  int dim() const noexcept { return data_.dim; }
  int num_nodes() const noexcept { return static_cast<int>(data_.nodes.size()); }
  int num_elements() const noexcept { return static_cast<int>(data_.elements.size()); }
  int num_facets() const noexcept { return static_cast<int>(data_.facets.size()); }
  int nodes_per_element() const noexcept { return data_.dim + 1; }
  int nodes_per_facet() const noexcept { return data_.dim; }

  const Point& node(int i) const { return data_.nodes[static_cast<std::size_t>(i)]; }
  std::span<const int> element(int e) const {
    return {data_.elements[static_cast<std::size_t>(e)].data(),
            static_cast<std::size_t>(nodes_per_element())};
  }
  std::span<const int> facet(int f) const {
    return {data_.facets[static_cast<std::size_t>(f)].nodes.data(),
            static_cast<std::size_t>(nodes_per_facet())};
  }
  int facet_owner(int f) const { return data_.facets[static_cast<std::size_t>(f)].owner; }

  /// Length (1D) or area (2D); always positive.
  double element_measure(int e) const { return element_measure_[static_cast<std::size_t>(e)]; }
  /// Edge length in 2D; counting measure (1) on the two endpoints in 1D.
  double facet_measure(int f) const { return facet_measure_[static_cast<std::size_t>(f)]; }
  Point element_barycenter(int e) const;
  Point facet_barycenter(int f) const;

  double domain_measure() const;
  double boundary_measure() const;

  const MeshData& data() const noexcept { return data_; }

  /// FNV-1a hash of coordinates and connectivity, used as a report fingerprint.
  std::uint64_t fingerprint() const;

 private:
  MeshData data_;
  std::vector<double> element_measure_;
  std::vector<double> facet_measure_;
};

namespace detail {

inline double signed_simplex_measure(const MeshData& m, const std::array<int, 3>& el) {
  const auto& a = m.nodes[static_cast<std::size_t>(el[0])];
  const auto& b = m.nodes[static_cast<std::size_t>(el[1])];
  if (m.dim == 1) return b[0] - a[0];
  const auto& c = m.nodes[static_cast<std::size_t>(el[2])];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

[[noreturn]] inline void mesh_invalid(const std::string& what) { fail(ErrorKind::invalid_mesh, what); }

}  // namespace detail

inline Mesh::Mesh(MeshData data) : data_(std::move(data)) {
  const int dim = data_.dim;
  if (dim != 1 && dim != 2) detail::mesh_invalid("dimension must be 1 or 2, got " + std::to_string(dim));
  const int n = static_cast<int>(data_.nodes.size());
  if (n < 2) detail::mesh_invalid("mesh needs at least 2 nodes");
  if (data_.elements.empty()) detail::mesh_invalid("mesh has no elements");
  for (std::size_t i = 0; i < data_.nodes.size(); ++i) {
    const auto& x = data_.nodes[i];
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]))
      detail::mesh_invalid("node " + std::to_string(i) + " has non-finite coordinates");
  }

  const int npe = dim + 1;
  element_measure_.reserve(data_.elements.size());
  for (std::size_t e = 0; e < data_.elements.size(); ++e) {
    const auto& el = data_.elements[e];
    for (int k = 0; k < npe; ++k) {
      if (el[static_cast<std::size_t>(k)] < 0 || el[static_cast<std::size_t>(k)] >= n)
        detail::mesh_invalid("element " + std::to_string(e) + " references missing node " +
                             std::to_string(el[static_cast<std::size_t>(k)]));
      for (int j = 0; j < k; ++j)
        if (el[static_cast<std::size_t>(j)] == el[static_cast<std::size_t>(k)])
          detail::mesh_invalid("element " + std::to_string(e) + " repeats node " +
                               std::to_string(el[static_cast<std::size_t>(k)]));
    }
    const double measure = std::abs(detail::signed_simplex_measure(data_, el));
    if (!(measure > 0.0))
      detail::mesh_invalid("element " + std::to_string(e) + " has non-positive measure");
    element_measure_.push_back(measure);
  }

  if (dim == 1 && data_.facets.size() != 2)
    detail::mesh_invalid("1D mesh must have exactly 2 boundary facets, got " +
                         std::to_string(data_.facets.size()));
  if (dim == 2 && data_.facets.size() < 3) detail::mesh_invalid("2D boundary needs at least 3 facets");

  std::vector<int> incidence(static_cast<std::size_t>(n), 0);
  facet_measure_.reserve(data_.facets.size());
  for (std::size_t f = 0; f < data_.facets.size(); ++f) {
    const auto& facet = data_.facets[f];
    const std::string name = "facet " + std::to_string(f);
    if (facet.owner < 0 || facet.owner >= static_cast<int>(data_.elements.size()))
      detail::mesh_invalid(name + " references missing element " + std::to_string(facet.owner));
    for (int k = 0; k < dim; ++k) {
      const int v = facet.nodes[static_cast<std::size_t>(k)];
      if (v < 0 || v >= n) detail::mesh_invalid(name + " references missing node " + std::to_string(v));
    }
    if (dim == 2 && facet.nodes[0] == facet.nodes[1]) detail::mesh_invalid(name + " repeats a node");
    const auto& owner = data_.elements[static_cast<std::size_t>(facet.owner)];
    for (int k = 0; k < dim; ++k) {
      const int v = facet.nodes[static_cast<std::size_t>(k)];
      bool found = false;
      for (int j = 0; j < npe; ++j) found = found || owner[static_cast<std::size_t>(j)] == v;
      if (!found) detail::mesh_invalid(name + " not on its owning element");
      ++incidence[static_cast<std::size_t>(v)];
    }
    if (dim == 1) {
      facet_measure_.push_back(1.0);
    } else {
      const auto& a = data_.nodes[static_cast<std::size_t>(facet.nodes[0])];
      const auto& b = data_.nodes[static_cast<std::size_t>(facet.nodes[1])];
      facet_measure_.push_back(std::hypot(b[0] - a[0], b[1] - a[1]));
    }
  }
  if (dim == 1 && data_.facets[0].nodes[0] == data_.facets[1].nodes[0])
    detail::mesh_invalid("1D boundary facets coincide");
  if (dim == 2) {
    for (int v = 0; v < n; ++v) {
      const int count = incidence[static_cast<std::size_t>(v)];
      if (count != 0 && count != 2)
        detail::mesh_invalid("boundary node " + std::to_string(v) + " has " + std::to_string(count) +
                             " incident boundary facets (boundary loops must be closed)");
    }
  }
}

inline Point Mesh::element_barycenter(int e) const {
  Point x{0.0, 0.0};
  for (int v : element(e)) {
    x[0] += node(v)[0];
    x[1] += node(v)[1];
  }
  const double k = nodes_per_element();
  return {x[0] / k, x[1] / k};
}

inline Point Mesh::facet_barycenter(int f) const {
  Point x{0.0, 0.0};
  for (int v : facet(f)) {
    x[0] += node(v)[0];
    x[1] += node(v)[1];
  }
  const double k = nodes_per_facet();
  return {x[0] / k, x[1] / k};
}

inline double Mesh::domain_measure() const {
  double s = 0.0;
  for (double m : element_measure_) s += m;
  return s;
}

inline double Mesh::boundary_measure() const {
  double s = 0.0;
  for (double m : facet_measure_) s += m;
  return s;
}

inline std::uint64_t Mesh::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&data_.dim, sizeof data_.dim);
  for (const auto& x : data_.nodes) mix(x.data(), sizeof(double) * static_cast<std::size_t>(dim()));
  for (int e = 0; e < num_elements(); ++e)
    for (int v : element(e)) mix(&v, sizeof v);
  for (int f = 0; f < num_facets(); ++f) {
    for (int v : facet(f)) mix(&v, sizeof v);
    const int owner = facet_owner(f);
    mix(&owner, sizeof owner);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Generators

/// Uniform mesh of (0, length) with n elements.
inline Mesh build_interval_mesh(int n, double length) {
  if (n < 1) fail(ErrorKind::invalid_argument, "interval mesh needs n >= 1");
  if (!(length > 0.0)) fail(ErrorKind::invalid_argument, "interval length must be positive");
  MeshData m;
  m.dim = 1;
  m.nodes.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) m.nodes.push_back({length * i / n, 0.0});
  m.nodes.back()[0] = length;
  for (int e = 0; e < n; ++e) m.elements.push_back({e, e + 1, 0});
  m.facets.push_back({{0, 0}, 0});
  m.facets.push_back({{n, 0}, n - 1});
  return Mesh(std::move(m));
}

/// Structured triangulation of (0,lx) x (0,ly); each cell is cut along its (0,0)-(1,1) diagonal.
inline Mesh build_rectangle_mesh(int nx, int ny, double lx, double ly) {
  if (nx < 1 || ny < 1) fail(ErrorKind::invalid_argument, "rectangle mesh needs nx, ny >= 1");
  if (!(lx > 0.0) || !(ly > 0.0)) fail(ErrorKind::invalid_argument, "rectangle sides must be positive");
  MeshData m;
  m.dim = 2;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.nodes.push_back({i == nx ? lx : lx * i / nx, j == ny ? ly : ly * j / ny});
  // cell (i, j) owns elements 2*(j*nx+i) (lower-right) and 2*(j*nx+i)+1 (upper-left)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  auto lower = [nx](int i, int j) { return 2 * (j * nx + i); };
  for (int i = 0; i < nx; ++i) m.facets.push_back({{id(i, 0), id(i + 1, 0)}, lower(i, 0)});
  for (int j = 0; j < ny; ++j) m.facets.push_back({{id(nx, j), id(nx, j + 1)}, lower(nx - 1, j)});
  for (int i = nx; i > 0; --i) m.facets.push_back({{id(i, ny), id(i - 1, ny)}, lower(i - 1, ny - 1) + 1});
  for (int j = ny; j > 0; --j) m.facets.push_back({{id(0, j), id(0, j - 1)}, lower(0, j - 1) + 1});
  return Mesh(std::move(m));
}

/// Ring triangulation of the regular m-gon inscribed in the circle of the given radius.
/// Ring r (1..rings) carries round(m*r/rings) vertices (at least 3); ring 1 is fanned to the center.
inline Mesh build_disk_mesh(int m, int rings, double radius) {
  if (m < 4) fail(ErrorKind::invalid_argument, "disk mesh needs m >= 4 boundary vertices");
  if (rings < 1) fail(ErrorKind::invalid_argument, "disk mesh needs rings >= 1");
  if (!(radius > 0.0)) fail(ErrorKind::invalid_argument, "disk radius must be positive");
  MeshData mesh;
  mesh.dim = 2;
  mesh.nodes.push_back({0.0, 0.0});

  std::vector<int> first(static_cast<std::size_t>(rings) + 1, 0);
  std::vector<int> count(static_cast<std::size_t>(rings) + 1, 1);
  for (int r = 1; r <= rings; ++r) {
    const int k = r == rings ? m : std::max(3, static_cast<int>(std::lround(double(m) * r / rings)));
    first[static_cast<std::size_t>(r)] = static_cast<int>(mesh.nodes.size());
    count[static_cast<std::size_t>(r)] = k;
    const double rho = radius * r / rings;
    for (int j = 0; j < k; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / k;
      mesh.nodes.push_back({rho * std::cos(theta), rho * std::sin(theta)});
    }
  }

  // Center fan.
  {
    const int k = count[1];
    for (int j = 0; j < k; ++j) mesh.elements.push_back({0, first[1] + j, first[1] + (j + 1) % k});
  }
  // Strips between consecutive rings, merged by angle.
  for (int r = 2; r <= rings; ++r) {
    const int ni = count[static_cast<std::size_t>(r - 1)], no = count[static_cast<std::size_t>(r)];
    const int fi = first[static_cast<std::size_t>(r - 1)], fo = first[static_cast<std::size_t>(r)];
    int i = 0, j = 0;
    while (i < ni || j < no) {
      const double next_inner = double(i + 1) / ni;
      const double next_outer = double(j + 1) / no;
      const bool advance_outer = j < no && (i == ni || next_outer <= next_inner);
      if (advance_outer) {
        mesh.elements.push_back({fi + i % ni, fo + j, fo + (j + 1) % no});
        if (r == rings)
          mesh.facets.push_back({{fo + j, fo + (j + 1) % no}, static_cast<int>(mesh.elements.size()) - 1});
        ++j;
      } else {
        mesh.elements.push_back({fi + i, fo + j % no, fi + (i + 1) % ni});
        ++i;
      }
    }
  }
  if (rings == 1) {
    for (int j = 0; j < m; ++j) mesh.facets.push_back({{first[1] + j, first[1] + (j + 1) % m}, j});
  }
  return Mesh(std::move(mesh));
}

}  // namespace p2lab
