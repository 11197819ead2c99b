#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace p2lab;

namespace {

const std::string kData = P2LAB_TEST_DATA;

double polygon_area(int m, double r) { return 0.5 * m * r * r * std::sin(2.0 * std::numbers::pi / m); }
double polygon_perimeter(int m, double r) { return 2.0 * m * r * std::sin(std::numbers::pi / m); }

}  // namespace

TEST(IntervalMesh, CountsAndMeasures) {
  const Mesh mesh = build_interval_mesh(10, 2.5);
  EXPECT_EQ(mesh.dim(), 1);
  EXPECT_EQ(mesh.num_nodes(), 11);
  EXPECT_EQ(mesh.num_elements(), 10);
  EXPECT_EQ(mesh.num_facets(), 2);
  EXPECT_NEAR(mesh.domain_measure(), 2.5, 1e-14);
  EXPECT_DOUBLE_EQ(mesh.boundary_measure(), 2.0);
  for (int e = 0; e < mesh.num_elements(); ++e) EXPECT_NEAR(mesh.element_measure(e), 0.25, 1e-15);
}

TEST(IntervalMesh, SingleElementIsAllowed) {
  const Mesh mesh = build_interval_mesh(1, 1.0);
  EXPECT_EQ(mesh.num_nodes(), 2);
  EXPECT_EQ(mesh.num_facets(), 2);
}

TEST(RectangleMesh, AreaPerimeterAndBoundaryIncidence) {
  const Mesh mesh = build_rectangle_mesh(4, 3, 2.0, 1.5);
  EXPECT_EQ(mesh.num_nodes(), 20);
  EXPECT_EQ(mesh.num_elements(), 24);
  EXPECT_EQ(mesh.num_facets(), 14);
  EXPECT_NEAR(mesh.domain_measure(), 3.0, 1e-14);
  EXPECT_NEAR(mesh.boundary_measure(), 7.0, 1e-14);
  std::vector<int> incidence(static_cast<std::size_t>(mesh.num_nodes()), 0);
  for (int f = 0; f < mesh.num_facets(); ++f)
    for (int v : mesh.facet(f)) ++incidence[static_cast<std::size_t>(v)];
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto [x, y] = mesh.node(i);
    const bool on_boundary = x == 0.0 || y == 0.0 || std::abs(x - 2.0) < 1e-14 || std::abs(y - 1.5) < 1e-14;
    EXPECT_EQ(incidence[static_cast<std::size_t>(i)], on_boundary ? 2 : 0) << "node " << i;
  }
}

TEST(RectangleMesh, TrianglesArePositivelyOriented) {
  const Mesh mesh = build_rectangle_mesh(3, 5, 1.0, 1.0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto el = mesh.element(e);
    const auto& a = mesh.node(el[0]);
    const auto& b = mesh.node(el[1]);
    const auto& c = mesh.node(el[2]);
    const double cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    EXPECT_GT(cross, 0.0);
    EXPECT_NEAR(0.5 * cross, mesh.element_measure(e), 1e-15);
  }
}

TEST(DiskMesh, MatchesInscribedPolygon) {
  for (const auto [m, rings] : {std::pair{16, 2}, std::pair{64, 4}, std::pair{128, 8}}) {
    const Mesh mesh = build_disk_mesh(m, rings, 1.0);
    EXPECT_NEAR(mesh.domain_measure(), polygon_area(m, 1.0), 1e-12) << m << " " << rings;
    EXPECT_NEAR(mesh.boundary_measure(), polygon_perimeter(m, 1.0), 1e-12);
    EXPECT_EQ(mesh.num_facets(), m);
    for (int f = 0; f < mesh.num_facets(); ++f)
      for (int v : mesh.facet(f)) EXPECT_NEAR(std::hypot(mesh.node(v)[0], mesh.node(v)[1]), 1.0, 1e-14);
  }
}

TEST(DiskMesh, EulerCharacteristicOfADisk) {
  const Mesh mesh = build_disk_mesh(48, 5, 2.0);
  std::set<std::pair<int, int>> edges;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto el = mesh.element(e);
    for (int k = 0; k < 3; ++k) {
      const int a = el[static_cast<std::size_t>(k)], b = el[static_cast<std::size_t>((k + 1) % 3)];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  EXPECT_EQ(mesh.num_nodes() - static_cast<int>(edges.size()) + mesh.num_elements(), 1);
}

TEST(MeshValidation, RejectsBrokenInput) {
  MeshData zero_area{2, {{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}, {}};
  EXPECT_P2LAB_ERROR(ErrorKind::invalid_mesh, Mesh{zero_area});

  MeshData out_of_range{1, {{0, 0}, {1, 0}}, {{0, 5, 0}}, {{{0, 0}, 0}, {{1, 0}, 0}}};
  EXPECT_P2LAB_ERROR(ErrorKind::invalid_mesh, Mesh{out_of_range});

  MeshData three_facets{1, {{0, 0}, {1, 0}}, {{0, 1, 0}}, {{{0, 0}, 0}, {{1, 0}, 0}, {{1, 0}, 0}}};
  EXPECT_P2LAB_ERROR(ErrorKind::invalid_mesh, Mesh{three_facets});

  MeshData bad_dim{3, {{0, 0}}, {}, {}};
  EXPECT_P2LAB_ERROR(ErrorKind::invalid_mesh, Mesh{bad_dim});

  EXPECT_P2LAB_ERROR(ErrorKind::invalid_argument, build_interval_mesh(0, 1.0));
  EXPECT_P2LAB_ERROR(ErrorKind::invalid_argument, build_disk_mesh(2, 1, 1.0));
}

TEST(MeshIo, RoundTripPreservesEverything) {
  const Mesh mesh = build_disk_mesh(20, 3, 0.7);
  std::stringstream text;
  write_mesh(text, mesh);
  const Mesh back = read_mesh(text);
  EXPECT_EQ(back.fingerprint(), mesh.fingerprint());
  EXPECT_EQ(back.num_facets(), mesh.num_facets());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    EXPECT_EQ(back.node(i)[0], mesh.node(i)[0]);
    EXPECT_EQ(back.node(i)[1], mesh.node(i)[1]);
  }
}

TEST(MeshIo, FingerprintSeesSmallChanges) {
  MeshData d = build_interval_mesh(4, 1.0).data();
  const auto before = Mesh(d).fingerprint();
  d.nodes[2][0] += 1e-12;
  EXPECT_NE(Mesh(d).fingerprint(), before);
}

TEST(MeshIo, LoadsFixture) {
  const Mesh mesh = load_mesh(kData + "/two_elements.mesh");
  EXPECT_EQ(mesh.num_nodes(), 3);
  EXPECT_EQ(mesh.num_elements(), 2);
  EXPECT_DOUBLE_EQ(mesh.domain_measure(), 1.0);
}

TEST(MeshIo, MissingNodeIsRejected) {
  EXPECT_P2LAB_ERROR(ErrorKind::invalid_mesh, load_mesh(kData + "/missing_node.mesh"));
}

TEST(MeshIo, FacetOffItsOwnerIsRejectedByName) {
  try {
    load_mesh(kData + "/corrupted.mesh");
    FAIL() << "corrupted mesh accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_mesh);
    EXPECT_NE(std::string(e.what()).find("not on its owning element"), std::string::npos) << e.what();
  }
}

TEST(MeshIo, ParseErrorsCarryLineNumbers) {
  std::stringstream bad("1 2 1 2\n0\nzero\n0 1\n0 0\n1 0\n");
  try {
    read_mesh(bad);
    FAIL() << "bad coordinate accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::stringstream short_file("1 3 2 2\n0\n1\n");
  EXPECT_P2LAB_ERROR(ErrorKind::parse, read_mesh(short_file));
}
