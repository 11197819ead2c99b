#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "p2lab/error.hpp"
#include "p2lab/mesh.hpp"

namespace p2lab {

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace detail {

struct MeshLine {
  int number;
  std::vector<std::string> tokens;
};

inline std::vector<MeshLine> tokenize_mesh(std::istream& in) {
  std::vector<MeshLine> lines;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    MeshLine line{number, {}};
    for (std::string tok; ss >> tok;) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] inline void parse_error(int line, const std::string& what) {
  fail(ErrorKind::parse, "line " + std::to_string(line) + ": " + what);
}

template <class T>
T parse_number(const MeshLine& line, std::size_t k) {
  const std::string& tok = line.tokens[k];
  T value{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    parse_error(line.number, "cannot parse '" + tok + "'");
  return value;
}

}  // namespace detail

/// Reads the whitespace-separated mesh text format; '#' starts a comment.
inline Mesh read_mesh(std::istream& in) {
  const auto lines = detail::tokenize_mesh(in);
  if (lines.empty()) detail::parse_error(1, "empty mesh file");
  const auto& header = lines.front();
  if (header.tokens.size() != 4)
    detail::parse_error(header.number, "header must be 'dim n_nodes n_elements n_bfacets'");
  MeshData m;
  m.dim = detail::parse_number<int>(header, 0);
  const int n_nodes = detail::parse_number<int>(header, 1);
  const int n_elements = detail::parse_number<int>(header, 2);
  const int n_facets = detail::parse_number<int>(header, 3);
  if (m.dim != 1 && m.dim != 2) detail::parse_error(header.number, "dim must be 1 or 2");
  if (n_nodes < 0 || n_elements < 0 || n_facets < 0) detail::parse_error(header.number, "negative count");
  const std::size_t expected = 1 + static_cast<std::size_t>(n_nodes) + static_cast<std::size_t>(n_elements) +
                               static_cast<std::size_t>(n_facets);
  if (lines.size() < expected)
    detail::parse_error(lines.back().number, "file ends early: expected " + std::to_string(expected) +
                                                 " data lines, found " + std::to_string(lines.size()));
  if (lines.size() > expected) detail::parse_error(lines[expected].number, "unexpected trailing data");

  std::size_t k = 1;
  for (int i = 0; i < n_nodes; ++i, ++k) {
    const auto& line = lines[k];
    if (line.tokens.size() != static_cast<std::size_t>(m.dim))
      detail::parse_error(line.number, "node line needs " + std::to_string(m.dim) + " coordinate(s)");
    Point x{0.0, 0.0};
    for (int d = 0; d < m.dim; ++d) x[static_cast<std::size_t>(d)] = detail::parse_number<double>(line, static_cast<std::size_t>(d));
    m.nodes.push_back(x);
  }
  for (int e = 0; e < n_elements; ++e, ++k) {
    const auto& line = lines[k];
    if (line.tokens.size() != static_cast<std::size_t>(m.dim + 1))
      detail::parse_error(line.number, "element line needs " + std::to_string(m.dim + 1) + " node indices");
    std::array<int, 3> el{0, 0, 0};
    for (int d = 0; d <= m.dim; ++d) el[static_cast<std::size_t>(d)] = detail::parse_number<int>(line, static_cast<std::size_t>(d));
    m.elements.push_back(el);
  }
  for (int f = 0; f < n_facets; ++f, ++k) {
    const auto& line = lines[k];
    if (line.tokens.size() != static_cast<std::size_t>(m.dim + 1))
      detail::parse_error(line.number, "facet line needs " + std::to_string(m.dim) +
                                           " node indices and an owning element");
    BoundaryFacet facet;
    for (int d = 0; d < m.dim; ++d) facet.nodes[static_cast<std::size_t>(d)] = detail::parse_number<int>(line, static_cast<std::size_t>(d));
    facet.owner = detail::parse_number<int>(line, static_cast<std::size_t>(m.dim));
    m.facets.push_back(facet);
  }
  return Mesh(std::move(m));
}

inline Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open mesh file " + path.string());
  try {
    return read_mesh(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

inline void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.dim() << ' ' << mesh.num_nodes() << ' ' << mesh.num_elements() << ' ' << mesh.num_facets() << '\n';
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    out << format_double(mesh.node(i)[0]);
    if (mesh.dim() == 2) out << ' ' << format_double(mesh.node(i)[1]);
    out << '\n';
  }
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto el = mesh.element(e);
    for (std::size_t k = 0; k < el.size(); ++k) out << (k ? " " : "") << el[k];
    out << '\n';
  }
  for (int f = 0; f < mesh.num_facets(); ++f) {
    for (int v : mesh.facet(f)) out << v << ' ';
    out << mesh.facet_owner(f) << '\n';
  }
}

inline void save_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write mesh file " + path.string());
  write_mesh(out, mesh);
}

}  // namespace p2lab
