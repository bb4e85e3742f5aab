// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nwmclust/clustering.hpp"
#include "nwmclust/simulation.hpp"

#include <set>

using namespace nwmc;

namespace {

NwmVector metric(const Vec& v) {
  NwmVector m;
  m.values = v;
  for (Eigen::Index i = 0; i < v.size(); ++i) m.vertices.push_back(static_cast<std::size_t>(i));
  return m;
}

CovarianceEstimate cov_of(const Mat& S) {
  CovarianceEstimate c;
  c.sigma = S;
  c.n_eff = 100;
  return c;
}

Mat random_psd(Eigen::Index q, RngStream& rng) {
  Mat A(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j) A(i, j) = rng.normal();
  return A * A.transpose() / static_cast<double>(q) + 0.1 * Mat::Identity(q, q);
}

// Columns in three groups whose cross-group sample correlations are exactly zero.
Dataset block_dataset(std::size_t n, RngStream& rng) {
  Mat R(n, 7);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < 7; ++j) R(i, j) = rng.normal();
  R.col(0).setOnes();
  const Mat Q = Eigen::HouseholderQR<Mat>(R).householderQ() * Mat::Identity(n, 7);
  Mat X(n, 9);
  for (int g = 0; g < 3; ++g)
    for (int k = 0; k < 3; ++k) X.col(3 * g + k) = Q.col(1 + 2 * g) + (0.3 + 0.2 * k) * Q.col(2 + 2 * g);
  Vec y = 3.0 * X.col(0) + 2.0 * X.col(3) + X.col(6);
  return make_dataset(y, X);
}

void check_partition(const ClusterResult& r, std::size_t q) {
  CHECK_NOTHROW(r.validate());
  std::set<std::size_t> all;
  for (const auto& c : r.clusters) all.insert(c.begin(), c.end());
  all.insert(r.unassigned.begin(), r.unassigned.end());
  CHECK(all.size() <= q);
  for (auto v : all) CHECK(v < q);
}

}  // namespace

TEST_CASE("folded normal critical value") {
  CHECK(folded_normal_critical(0.0, 0.05) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(folded_normal_critical(0.0, 0.01) == doctest::Approx(2.5758293035489).epsilon(1e-9));
  // Large delta: essentially a one-sided test shifted by delta.
  CHECK(folded_normal_critical(10.0, 0.05) - 10.0 == doctest::Approx(1.6448536269514722).epsilon(1e-6));
  CHECK_THROWS_AS(folded_normal_critical(0.0, 1.5), UsageError);
}

TEST_CASE("sequential clustering: hand trace with two tight groups") {
  Vec v(4);
  v << 10, 10, 5, 5;
  SeqTestConfig cfg;
  cfg.K = 2;
  const ClusterResult r = sequential_cluster(metric(v), cov_of(1e-6 * Mat::Identity(4, 4)), cfg, 100);
  REQUIRE(r.clusters.size() == 2);
  CHECK(r.clusters[0] == IndexSet{0, 1});
  CHECK(r.clusters[1] == IndexSet{2, 3});
  CHECK(r.unassigned.empty());
  CHECK(r.anchors == std::vector<std::size_t>{0, 2});
  CHECK(r.decisions.size() == 4);
}

TEST_CASE("sequential clustering: equal metrics form one cluster") {
  SeqTestConfig cfg;
  cfg.K = 3;
  const ClusterResult r = sequential_cluster(metric(Vec::Constant(5, 2.0)), cov_of(Mat::Identity(5, 5)), cfg, 50);
  REQUIRE(r.clusters.size() == 3);
  CHECK(r.clusters[0] == IndexSet{0, 1, 2, 3, 4});
  CHECK(r.clusters[1].empty());
  CHECK(r.clusters[2].empty());
}

TEST_CASE("sequential clustering: K beyond the vertex count and leftovers") {
  Vec v(3);
  v << 9, 5, 1;
  SeqTestConfig cfg;
  cfg.K = 5;
  const ClusterResult r = sequential_cluster(metric(v), cov_of(1e-8 * Mat::Identity(3, 3)), cfg, 10);
  CHECK(r.clusters.size() == 5);
  CHECK(r.clusters[3].empty());
  cfg.K = 1;
  const ClusterResult one = sequential_cluster(metric(v), cov_of(1e-8 * Mat::Identity(3, 3)), cfg, 10);
  CHECK(one.clusters[0] == IndexSet{0});
  CHECK(one.unassigned == IndexSet{1, 2});
}

TEST_CASE("sequential clustering: argmax ties go to the lowest position") {
  Vec v(3);
  v << 4, 7, 7;
  SeqTestConfig cfg;
  cfg.K = 2;
  const ClusterResult r = sequential_cluster(metric(v), cov_of(1e-8 * Mat::Identity(3, 3)), cfg, 10);
  CHECK(r.anchors[0] == 1);
}

TEST_CASE("sequential clustering rejects bad inputs") {
  SeqTestConfig cfg;
  Mat bad = Mat::Identity(3, 3);
  bad(0, 0) = -1;
  CHECK_THROWS_AS(sequential_cluster(metric(Vec::Ones(3)), cov_of(bad), cfg, 10), NumericalError);
  cfg.tau = -0.1;
  CHECK_THROWS_AS(sequential_cluster(metric(Vec::Ones(3)), cov_of(Mat::Identity(3, 3)), cfg, 10), UsageError);
  SeqTestConfig c2;
  CHECK_THROWS_AS(sequential_cluster(metric(Vec::Ones(3)), cov_of(Mat::Identity(2, 2)), c2, 10), UsageError);
}

TEST_CASE("sequential clustering properties on random inputs") {
  RngStream rng(1, 1);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index q = 3 + static_cast<Eigen::Index>(rng.index(8));
    Vec v(q);
    for (Eigen::Index i = 0; i < q; ++i) v(i) = 3.0 * rng.normal();
    const Mat S = random_psd(q, rng);
    SeqTestConfig cfg;
    cfg.K = 1 + rng.index(4);
    cfg.tau = t % 3 == 0 ? 0.2 : 0.0;
    const std::size_t n = 20 + rng.index(100);
    const ClusterResult r = sequential_cluster(metric(v), cov_of(S), cfg, n);
    check_partition(r, static_cast<std::size_t>(q));

    // Anchor dominance: each anchor is the largest among vertices still unassigned when it was chosen.
    std::set<std::size_t> taken;
    for (std::size_t k = 0; k < r.anchors.size(); ++k) {
      for (Eigen::Index i = 0; i < q; ++i)
        if (!taken.count(static_cast<std::size_t>(i))) CHECK(v(i) <= v(static_cast<Eigen::Index>(r.anchors[k])));
      taken.insert(r.clusters[k].begin(), r.clusters[k].end());
    }

    // Scale invariance at tau = 0.
    if (cfg.tau == 0.0) {
      const double c = 0.1 + 5.0 * rng.uniform();
      const ClusterResult s = sequential_cluster(metric(c * v), cov_of(c * c * S), cfg, n);
      CHECK(s.clusters == r.clusters);
      CHECK(s.unassigned == r.unassigned);
    }
  }
}

TEST_CASE("ICC estimator") {
  Vec v(6);
  v << 1, 1, 1, 5, 5, 5;
  CHECK(icc(v, {0, 0, 0, 1, 1, 1}) == doctest::Approx(1.0));
  CHECK(icc(v, {0, 0, 0, 0, 0, 0}) == -std::numeric_limits<double>::infinity());
  CHECK(icc(v, {0, 1, 2, 3, 4, 5}) == -std::numeric_limits<double>::infinity());
  Vec w(4);
  w << 1, 2, 3, 4;
  // Groups {1,2} and {3,4}: SSB = 4 on 1 df, SSW = 1 on 2 df, so MSB = 4, MSW = 0.5, m = 2.
  CHECK(icc(w, {0, 0, 1, 1}) == doctest::Approx((4.0 - 0.5) / (4.0 + 0.5)));
}

TEST_CASE("ICC selection picks the true K for well-separated groups") {
  // Within-group spread 0.1 is far below the test scale sqrt(2/100); gaps of 4 are far above it.
  Vec v(9);
  v << 9.1, 9, 8.9, 5.1, 5, 4.9, 1.1, 1, 0.9;
  SeqTestConfig cfg;
  const IccChoice ch = choose_k_icc(metric(v), cov_of(Mat::Identity(9, 9)), cfg, 8, 100);
  CHECK(ch.K == 3);
  CHECK(ch.icc_by_k.size() == 7);
  // K = 2 leaves {1.1, 1, 0.9} as singletons: MSB = 96.02/4, MSW = 0.04/4, m = 9/5.
  CHECK(ch.icc_by_k[0] == doctest::Approx((24.005 - 0.01) / (24.005 + 0.8 * 0.01)));
  // K = 3: MSB = 96/2, MSW = 0.06/6, m = 3.
  CHECK(ch.icc_by_k[1] == doctest::Approx((48.0 - 0.01) / (48.0 + 2.0 * 0.01)));
  // Larger K cannot form further clusters, so the ICC ties and the smaller K is kept.
  for (std::size_t k = 2; k < ch.icc_by_k.size(); ++k) CHECK(ch.icc_by_k[k] == doctest::Approx(ch.icc_by_k[1]));
  CHECK_THROWS_AS(choose_k_icc(metric(v), cov_of(Mat::Identity(9, 9)), cfg, 9, 100), UsageError);
  // Equal values: one cluster at every K, so ICC is undefined everywhere.
  CHECK_THROWS_AS(choose_k_icc(metric(Vec::Ones(4)), cov_of(Mat::Identity(4, 4)), cfg, 3, 100), NumericalError);
}

TEST_CASE("vote aggregation follows the threshold rule") {
  VoteTable votes;
  votes.counts = {{14, 4, 0, 2}, {0, 11, 9, 0}, {0, 0, 0, 0}, {20, 0, 0, 0}};
  votes.selected = {20, 20, 0, 20};
  const ClusterResult r = assign_by_votes(votes, 20, 0.6);
  REQUIRE(r.clusters.size() == 3);
  CHECK(r.clusters[0] == IndexSet{0, 3});
  CHECK(r.unassigned == IndexSet{1});
  CHECK(r.anchors == std::vector<std::size_t>{3});
  // Exactly at the cut (12 of 20) is not enough.
  votes.counts[0] = {12, 8, 0, 0};
  CHECK(assign_by_votes(votes, 20, 0.6).clusters[0] == IndexSet{3});
  CHECK_THROWS_AS(assign_by_votes(votes, 20, 0.0), UsageError);
}

TEST_CASE("multiple splitting with M = 1 equals the single-split pipeline") {
  const SimDesign des = smallp_design(20, 200);
  RngStream g(3, 3);
  const Dataset d = generate(des, g);
  ExperimentOptions eo;
  PipelineConfig cfg = simulation_pipeline(NwmKind::DEGREE, 0.05, 3, eo);
  cfg.bootstrap_B = 100;
  const RngStream root(11, 0);
  const MultiSplitResult m = multiple_split_cluster(d, 1, 0.6, cfg, root);
  RngStream r0 = root.derive(0);
  const SplitOutcome s = run_split(standardize(d), cfg, r0);
  REQUIRE(s.failure.empty());
  CHECK(m.result.clusters == s.clusters.clusters);
  CHECK(m.result.unassigned == s.clusters.unassigned);
  CHECK(m.failed_splits == 0);
}

TEST_CASE("multiple splitting recovers the grouped clusters and is thread-count invariant") {
  const SimDesign des = smallp_design(20, 200);
  RngStream g(4, 4);
  const Dataset d = generate(des, g);
  ExperimentOptions eo;
  PipelineConfig cfg = simulation_pipeline(NwmKind::DEGREE, 0.05, 3, eo);
  cfg.bootstrap_B = 100;
  const MultiSplitResult a = multiple_split_cluster(d, 8, 0.6, cfg, RngStream(12, 0), 1);
  const MultiSplitResult b = multiple_split_cluster(d, 8, 0.6, cfg, RngStream(12, 0), 2);
  CHECK(a.result.clusters == b.result.clusters);
  CHECK(a.votes.counts == b.votes.counts);
  check_partition(a.result, d.p());
  const std::string js = cluster_result_json(a.result, d.names);
  CHECK(js.find("clusters") != std::string::npos);
  const std::string csv = cluster_result_csv(a, d.names);
  CHECK(csv.find("X1") != std::string::npos);
}

TEST_CASE("pipeline stages report failures without aborting other splits") {
  // Pure-noise response: many splits select nothing; those are reported, not fatal.
  RngStream g(5, 5);
  Mat X(60, 5);
  Vec y(60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 5; ++j) X(i, j) = g.normal();
    y(i) = g.normal();
  }
  ExperimentOptions eo;
  PipelineConfig cfg = simulation_pipeline(NwmKind::DEGREE, 0.05, 2, eo);
  cfg.bootstrap_B = 50;
  const MultiSplitResult m = multiple_split_cluster(make_dataset(y, X), 4, 0.6, cfg, RngStream(1, 0));
  CHECK(m.splits.size() == 4);
  std::size_t failed = 0;
  for (const auto& s : m.splits) failed += !s.failure.empty();
  CHECK(failed == m.failed_splits);
  CHECK_NOTHROW(m.result.validate());
}

TEST_CASE("k-means recovers exactly duplicated column groups") {
  RngStream rng(6, 6);
  const std::size_t n = 40;
  Vec a(n), b(n), y(n);
  for (std::size_t i = 0; i < n; ++i) a(i) = rng.normal(), b(i) = rng.normal(), y(i) = rng.normal();
  Mat X(n, 5);
  X << a, b, a, b, a;
  for (const auto& opt : {KMeansOptions{}, hartigan_single_start()}) {
    RngStream r(7, 0);
    const ClusterResult res = modified_kmeans(make_dataset(y + 2.0 * a, X), 2, r, opt);
    std::set<IndexSet> got(res.clusters.begin(), res.clusters.end());
    CHECK(got == std::set<IndexSet>{{0, 2, 4}, {1, 3}});
    CHECK(res.clusters[0] == IndexSet{0, 2, 4});  // ordered by |corr with y|
  }
  RngStream r(7, 1);
  CHECK_THROWS_AS(modified_kmeans(make_dataset(y, X), 6, r), UsageError);
}

TEST_CASE("k-means on points: inertia never increases with more restarts") {
  RngStream rng(8, 8);
  Mat P(60, 2);
  for (int i = 0; i < 60; ++i) P.row(i) << rng.normal() + (i % 3) * 4.0, rng.normal();
  KMeansOptions one{1, 300, KMeansInit::PLUS_PLUS, KMeansAlgorithm::LLOYD};
  RngStream r1(9, 0), r2(9, 0);
  const KMeansResult a = kmeans(P, 3, r1, one);
  const KMeansResult b = kmeans(P, 3, r2);
  CHECK(b.inertia <= a.inertia + 1e-12);
  CHECK(b.label.size() == 60);
}

TEST_CASE("spectral clustering recovers a perfect block structure") {
  RngStream rng(10, 10);
  const Dataset d = block_dataset(50, rng);
  RngStream r(11, 0);
  const ClusterResult res = modified_spectral(d, 3, r);
  std::set<IndexSet> got(res.clusters.begin(), res.clusters.end());
  CHECK(got == std::set<IndexSet>{{0, 1, 2}, {3, 4, 5}, {6, 7, 8}});
  RngStream r2(11, 1);
  CHECK_THROWS_AS(modified_spectral(d, 10, r2), UsageError);
}
