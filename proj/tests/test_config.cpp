// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nwmclust/config.hpp"
#include "nwmclust/selftest.hpp"

#include <filesystem>
#include <fstream>

using namespace nwmc;

namespace {

template <typename F>
std::string usage_message(F&& f) {
  try {
    f();
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults are valid and map onto the pipeline") {
  const RunConfig c = RunConfig::defaults();
  CHECK_NOTHROW(c.validate());
  const PipelineConfig p = c.pipeline();
  CHECK(p.selection.penalty.family == Penalty::SCAD);
  CHECK(p.selection.penalty.a == doctest::Approx(3.7));
  CHECK(p.selection.alpha_n == doctest::Approx(0.05));
  CHECK(p.seq.K == 3);
  CHECK(p.seq.tau == 0.0);
  CHECK(p.bootstrap_B == 500);
  CHECK(p.cov == CovSource::BOOTSTRAP);
  CHECK(c.seed() == 7);
  CHECK(c.splits() == 20);
  CHECK(c.vote_threshold() == doctest::Approx(0.6));
  CHECK(c.threads() >= 1);
  CHECK(c.response() == "y");
  CHECK(c.experiment().replicates == 500);
}

TEST_CASE("parse reads sections and overrides defaults") {
  const RunConfig c = RunConfig::parse(
      "# comment\n[selection]\npenalty = mcp\n\n[clustering]\nK = 4\ntau = 0.25\n[run]\nseed = 99\n");
  CHECK(c.get("selection.penalty") == "mcp");
  CHECK(c.pipeline().selection.penalty.a == doctest::Approx(3.0));
  CHECK(c.pipeline().seq.K == 4);
  CHECK(c.pipeline().seq.tau == doctest::Approx(0.25));
  CHECK(c.seed() == 99);
}

TEST_CASE("parse errors cite the line number") {
  const std::string m1 = usage_message([] { RunConfig::parse("[run]\nseed = 1\nbogus line\n", "f.cfg"); });
  CHECK(m1.find("f.cfg:3") != std::string::npos);
  const std::string m2 = usage_message([] { RunConfig::parse("[run]\nnot_a_key = 1\n"); });
  CHECK(m2.find("run.not_a_key") != std::string::npos);
}

TEST_CASE("set rejects unknown keys and validate catches bad values") {
  RunConfig c = RunConfig::defaults();
  const std::string m = usage_message([&] { c.set("clustering.taw", "1"); });
  CHECK(m.find("clustering.tau") != std::string::npos);  // lists known keys

  c.set("clustering.tau", "-0.5");
  CHECK(usage_message([&] { c.validate(); }).find("clustering.tau") != std::string::npos);

  RunConfig d = RunConfig::defaults();
  d.set("covariance.B", "1");
  CHECK_THROWS_AS(d.validate(), UsageError);
  RunConfig e = RunConfig::defaults();
  e.set("clustering.alpha", "1.5");
  CHECK_THROWS_AS(e.validate(), UsageError);
  RunConfig f = RunConfig::defaults();
  f.set("network.family", "beta");
  f.set("network.f", "f1");
  CHECK_THROWS_AS(f.validate(), UsageError);
  RunConfig g = RunConfig::defaults();
  g.set("simulate.replicates", "0");
  CHECK_THROWS_AS(g.validate(), UsageError);
  RunConfig h = RunConfig::defaults();
  h.set("run.seed", "abc");
  CHECK_THROWS_AS(h.validate(), UsageError);
}

TEST_CASE("to_text round trips and the hash tracks content") {
  RunConfig c = RunConfig::defaults();
  c.set("nwm.kind", "clustering");
  const RunConfig r = RunConfig::parse(c.to_text());
  CHECK(r.entries() == c.entries());
  CHECK(r.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  CHECK(c.hash() != RunConfig::defaults().hash());
}

TEST_CASE("load reports missing files as I/O errors") {
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), IoError);
  const auto path = (std::filesystem::temp_directory_path() / "nwmc_test_run.cfg").string();
  std::ofstream(path) << "[covariance]\nmethod = plugin\n";
  CHECK(RunConfig::load(path).pipeline().cov == CovSource::PLUGIN);
}

TEST_CASE("built-in self test passes") {
  const auto cases = run_selftest(7);
  CHECK(cases.size() >= 10);
  for (const auto& c : cases) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.ok);
  }
}
