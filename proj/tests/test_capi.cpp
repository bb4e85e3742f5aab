// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
//
// Exercises the shared library strictly through its C interface.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nwmclust/nwmclust.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nwmc_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string take(char* s) {
  std::string out = s ? s : "";
  nwmc_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and experiment listing") {
  CHECK(std::string(nwmc_version()).rfind("1.0.0", 0) == 0);
  const std::string names = nwmc_experiment_names();
  CHECK(names.find("unsup-vs-seq") != std::string::npos);
  CHECK(names.find("cov-timing") != std::string::npos);
}

TEST_CASE("configuration handles") {
  nwmc_config* cfg = nullptr;
  REQUIRE(nwmc_config_create(&cfg) == NWMC_OK);
  CHECK(nwmc_config_set(cfg, "clustering.K", "4") == NWMC_OK);
  char* v = nullptr;
  REQUIRE(nwmc_config_get(cfg, "clustering.K", &v) == NWMC_OK);
  CHECK(take(v) == "4");
  CHECK(nwmc_config_set(cfg, "clustering.nope", "1") == NWMC_ERR_USAGE);
  CHECK(std::string(nwmc_last_error()).find("clustering.nope") != std::string::npos);
  CHECK(nwmc_config_set(cfg, "clustering.tau", "-1") == NWMC_OK);
  CHECK(nwmc_config_validate(cfg) == NWMC_ERR_USAGE);
  CHECK(nwmc_config_set(cfg, "clustering.tau", "0") == NWMC_OK);
  CHECK(nwmc_config_validate(cfg) == NWMC_OK);
  char* text = nullptr;
  REQUIRE(nwmc_config_dump(cfg, &text) == NWMC_OK);
  CHECK(take(text).find("[clustering]") != std::string::npos);
  nwmc_config* missing = nullptr;
  CHECK(nwmc_config_load("/nonexistent/x.cfg", &missing) == NWMC_ERR_IO);
  CHECK(missing == nullptr);
  CHECK(nwmc_config_create(nullptr) == NWMC_ERR_USAGE);
  nwmc_config_free(cfg);
}

TEST_CASE("dataset handles") {
  const double y[4] = {1, 2, 3, 4};
  const double X[8] = {1, 0, 0, 1, 1, 1, 2, 0};
  nwmc_dataset* d = nullptr;
  REQUIRE(nwmc_dataset_from_arrays(y, X, 4, 2, nullptr, &d) == NWMC_OK);
  size_t n = 0, p = 0;
  REQUIRE(nwmc_dataset_dims(d, &n, &p) == NWMC_OK);
  CHECK(n == 4);
  CHECK(p == 2);
  nwmc_dataset_free(d);

  const double bad[8] = {1, 0, 0, 1, 1, 1, 2, 0.0 / 0.0};
  nwmc_dataset* e = nullptr;
  CHECK(nwmc_dataset_from_arrays(y, bad, 4, 2, nullptr, &e) == NWMC_ERR_USAGE);
  CHECK(nwmc_dataset_load_csv("/nonexistent/data.csv", "y", &e) == NWMC_ERR_IO);

  const fs::path dir = scratch("ds");
  std::ofstream(dir / "d.csv") << "a,b\n1,2\n3,4\n";
  CHECK(nwmc_dataset_load_csv((dir / "d.csv").c_str(), "y", &e) == NWMC_ERR_USAGE);
  CHECK(std::string(nwmc_last_error()).find("'y'") != std::string::npos);
}

TEST_CASE("simulate, analyze and write results for the grouped design") {
  const fs::path dir = scratch("analyze");
  nwmc_config* cfg = nullptr;
  REQUIRE(nwmc_config_create(&cfg) == NWMC_OK);
  nwmc_config_set(cfg, "run.seed", "3");
  nwmc_config_set(cfg, "clustering.splits", "10");
  nwmc_config_set(cfg, "covariance.B", "200");
  const std::string csv = (dir / "grouped.csv").string();
  REQUIRE(nwmc_simulate(cfg, "grouped", 200, 20, 0.0, csv.c_str()) == NWMC_OK);
  CHECK(nwmc_simulate(cfg, "nope", 0, 0, 0.0, csv.c_str()) == NWMC_ERR_USAGE);

  nwmc_dataset* d = nullptr;
  REQUIRE(nwmc_dataset_load_csv(csv.c_str(), "y", &d) == NWMC_OK);
  nwmc_result* r = nullptr;
  REQUIRE(nwmc_analyze(cfg, d, &r) == NWMC_OK);
  size_t k = 0;
  REQUIRE(nwmc_result_num_clusters(r, &k) == NWMC_OK);
  CHECK(k == 3);
  // Cluster ranks follow metric strength: X7-X9, then X1-X3, then X4-X6.
  const long expected[9] = {1, 1, 1, 2, 2, 2, 0, 0, 0};
  for (size_t v = 0; v < 9; ++v) {
    long c = -3;
    REQUIRE(nwmc_result_cluster_of(r, v, &c) == NWMC_OK);
    CHECK(c == expected[v]);
  }
  long noise = 0;
  REQUIRE(nwmc_result_cluster_of(r, 15, &noise) == NWMC_OK);
  CHECK(noise < 0);
  CHECK(nwmc_result_cluster_of(r, 99, &noise) == NWMC_ERR_USAGE);

  char* js = nullptr;
  REQUIRE(nwmc_result_json(r, &js) == NWMC_OK);
  CHECK(take(js).find("clusters") != std::string::npos);
  REQUIRE(nwmc_result_write(r, (dir / "out").c_str()) == NWMC_OK);
  for (const char* f : {"clusters.json", "clusters.csv", "nwm_estimates.csv", "splits.csv"})
    CHECK(fs::exists(dir / "out" / f));
  nwmc_result_free(r);
  nwmc_dataset_free(d);
  nwmc_config_free(cfg);
}

TEST_CASE("reproduce validates its experiment and writes the table") {
  const fs::path dir = scratch("repro");
  nwmc_config* cfg = nullptr;
  REQUIRE(nwmc_config_create(&cfg) == NWMC_OK);
  char* summary = nullptr;
  CHECK(nwmc_reproduce(cfg, "not-an-experiment", 5, dir.c_str(), &summary) == NWMC_ERR_USAGE);
  CHECK(std::string(nwmc_last_error()).find("icc-k") != std::string::npos);
  nwmc_config_set(cfg, "covariance.B", "50");
  REQUIRE(nwmc_reproduce(cfg, "nwm-bias", 10, dir.c_str(), &summary) == NWMC_OK);
  CHECK(!take(summary).empty());
  CHECK(slurp(dir / "nwm-bias.csv").rfind("n,nwm,", 0) == 0);
  CHECK(fs::exists(dir / "nwm-bias_report.json"));
  nwmc_config_free(cfg);
}

TEST_CASE("manifest and self test") {
  const fs::path dir = scratch("manifest");
  nwmc_config* cfg = nullptr;
  REQUIRE(nwmc_config_create(&cfg) == NWMC_OK);
  REQUIRE(nwmc_write_manifest(cfg, "analyze", 2, "failed on purpose", dir.c_str()) == NWMC_OK);
  const std::string m = slurp(dir / "manifest.json");
  CHECK(m.find("\"config_hash\"") != std::string::npos);
  CHECK(m.find("failed on purpose") != std::string::npos);
  CHECK(m.find("\"seed\"") != std::string::npos);
  char* report = nullptr;
  int failures = -1;
  REQUIRE(nwmc_selftest(cfg, &report, &failures) == NWMC_OK);
  CHECK(failures == 0);
  CHECK(!take(report).empty());
  nwmc_config_free(cfg);
}
