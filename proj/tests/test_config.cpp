#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "test_support.hpp"

using namespace p2lab;

namespace {

const std::filesystem::path kData = P2LAB_TEST_DATA;

Json minimal() {
  return Json::parse(R"({
    "mesh": {"generator": "interval", "n": 8},
    "a": {"kind": "constant", "value": 1.0},
    "b": {"kind": "constant", "value": 1.0},
    "p": 3.0
  })");
}

}  // namespace

TEST(Config, DefaultsAreFilledIn) {
  const RunConfig cfg = parse_config(minimal());
  EXPECT_EQ(cfg.mesh.generator, "interval");
  EXPECT_EQ(cfg.mesh.n, 8);
  EXPECT_EQ(cfg.p, 3.0);
  EXPECT_EQ(cfg.seed, kDefaultSeed);
  EXPECT_EQ(cfg.solver.tol, 1e-8);
  EXPECT_EQ(cfg.workers, 1);
  EXPECT_FALSE(cfg.lambda.has_value());
  EXPECT_EQ(cfg.p_list, (std::vector<double>{1.3, 1.5, 1.8}));
}

TEST(Config, ResolvedConfigRoundTrips) {
  Json j = minimal();
  j["solver"] = {{"tol", 1e-9}, {"seed", 42}, {"memory", 3}};
  j["grid"] = {0.5, 2.0};
  j["relative_to_nu1"] = true;
  const RunConfig cfg = parse_config(j);
  const Json resolved = to_json(cfg);
  EXPECT_EQ(to_json(parse_config(resolved)), resolved);
  EXPECT_EQ(resolved["solver"]["seed"], 42);
  EXPECT_EQ(resolved["format_version"], kFormatVersion);
}

TEST(Config, RejectsBadDocuments) {
  Json j = minimal();
  j["p"] = 2.0;
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
  j = minimal();
  j["extra"] = 1;
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
  j = minimal();
  j.erase("mesh");
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
  j = minimal();
  j["p"] = "three";
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
  j = minimal();
  j["solver"] = {{"eps", 0.1}};
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
  j = minimal();
  j["format_version"] = 99;
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
  j = minimal();
  j["mesh"]["generator"] = "sphere";
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
  j = minimal();
  j["a"] = {{"kind", "per_element"}};
  EXPECT_P2LAB_ERROR(ErrorKind::config, parse_config(j));
}

TEST(Config, P2IsRejectedWithAnExplanation) {
  try {
    load_config(kData / "p_equals_two.json");
    FAIL() << "p = 2 accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("linear Steklov"), std::string::npos) << e.what();
  }
}

TEST(Config, FilePathsResolveAgainstTheConfigDirectory) {
  const RunConfig cfg = load_config(kData / "two_elements.json");
  EXPECT_EQ(cfg.mesh.generator, "file");
  EXPECT_TRUE(std::filesystem::exists(cfg.mesh.path));
  const DiscreteProblem problem = build_problem(cfg);
  EXPECT_EQ(problem.size(), 3);
  // a = 1 on the first element, 2 on the second; b = 1 at both ends.
  EXPECT_NEAR(problem.c().sum(), 0.5 + 1.0 + 2.0, 1e-15);
}

TEST(Config, IoAndParseErrors) {
  EXPECT_P2LAB_ERROR(ErrorKind::io, load_config(kData / "absent.json"));
  const auto bad = std::filesystem::temp_directory_path() / "p2lab_bad_config.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_P2LAB_ERROR(ErrorKind::parse, load_config(bad));
  std::filesystem::remove(bad);
}

TEST(Config, SeedFromTheEnvironment) {
  RunConfig cfg = parse_config(minimal());
  ::setenv("P2LAB_SEED", "12345", 1);
  apply_environment(cfg);
  EXPECT_EQ(cfg.seed, 12345u);
  EXPECT_EQ(classify_options(cfg).seed, 12345u);
  ::setenv("P2LAB_SEED", "12x", 1);
  EXPECT_P2LAB_ERROR(ErrorKind::config, apply_environment(cfg));
  ::unsetenv("P2LAB_SEED");
  RunConfig untouched = parse_config(minimal());
  apply_environment(untouched);
  EXPECT_EQ(untouched.seed, kDefaultSeed);
}

TEST(Config, WeightsFromAFile) {
  const auto dir = std::filesystem::temp_directory_path() / "p2lab_weights_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.txt") << "# one value per element\n1.0\n\n3.0\n";
  Json j = minimal();
  j["mesh"]["n"] = 2;
  j["a"] = {{"kind", "per_element"}, {"path", "a.txt"}};
  const RunConfig cfg = parse_config(j, dir);
  EXPECT_NEAR(build_problem(cfg).c().sum(), 0.5 * 1.0 + 0.5 * 3.0 + 2.0, 1e-15);
  std::filesystem::remove_all(dir);
}
