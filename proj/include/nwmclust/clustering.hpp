// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Supervised clustering of predictors by their network-wide metrics:
 * sequential anchor-and-test clustering, ICC-based choice of the number
 * of clusters, the multiple-split voting pipeline, and the modified
 * K-means / spectral baselines that cluster the predictor columns
 * without using the response.
 */
#pragma once

#include "nwmclust/bootstrap.hpp"
#include "nwmclust/penalized.hpp"

#include <limits>
#include <optional>

namespace nwmc {

struct TestRecord {
  std::size_t cluster = 0;  // 0-based cluster rank being formed
  std::size_t anchor = 0;   // dataset column of the anchor
  std::size_t vertex = 0;   // dataset column tested against the anchor
  double statistic = 0.0;   // (|D_anchor - D_vertex| - tau) / se
  double threshold = 0.0;   // reject when statistic > threshold
  double level = 0.0;       // per-test level after any Bonferroni division
  bool reject = false;
};

struct ClusterResult {
  std::vector<IndexSet> clusters;  // rank order; entries are dataset columns
  IndexSet unassigned;
  std::vector<std::size_t> anchors;  // one per nonempty cluster, same order
  std::vector<TestRecord> decisions;

  // Throws UsageError if clusters overlap or anchors are not members.
  void validate() const;
};

struct SeqTestConfig {
  std::size_t K = 3;
  double tau = 0.0;
  double alpha = 0.05;
  bool bonferroni = true;
  void validate() const;
};

/**
 * Smallest c >= 0 with P(|N(delta, 1)| <= c) = 1 - alpha: the exact
 * level-alpha critical value for |estimate| when the true absolute
 * difference sits on the boundary delta = tau / se. delta = 0 gives the
 * two-sided normal quantile.
 */
double folded_normal_critical(double delta, double alpha);

/**
 * Sequential testing clustering. Repeatedly picks the remaining vertex
 * with the largest metric (ties: lowest position) as anchor and tests
 * H: |D_anchor - D_j| <= tau against every other remaining vertex with
 * se = sqrt((S_aa + S_jj - 2 S_aj) / n_eff); vertices not rejected join
 * the anchor's cluster. Under Bonferroni the level is alpha divided by
 * the number of comparisons made for that cluster. Clusters beyond
 * exhaustion are returned empty; leftovers are unassigned.
 */
ClusterResult sequential_cluster(const NwmVector& nwm, const CovarianceEstimate& cov, const SeqTestConfig& cfg,
                                 std::size_t n_eff);

/**
 * One-way random-effects ICC, (MSB - MSW) / (MSB + (m - 1) MSW) with m
 * the average group size. Returns -infinity when it is undefined (a single
 * group, or only singletons).
 */
double icc(const Vec& values, const std::vector<std::size_t>& group);

struct IccChoice {
  std::size_t K = 0;
  std::vector<double> icc_by_k;  // entry K-2 for K = 2..k_max
};

/**
 * Runs sequential_cluster for K = 2..k_max, groups the metric values by
 * the resulting clusters (each unassigned vertex forms its own group) and
 * returns the K with the largest ICC, ties to the smaller K.
 */
IccChoice choose_k_icc(const NwmVector& nwm, const CovarianceEstimate& cov, const SeqTestConfig& cfg,
                       std::size_t k_max, std::size_t n_eff);

enum class CovSource { PLUGIN, BOOTSTRAP };

// Everything needed to run split -> select -> metric -> covariance -> clusters.
struct PipelineConfig {
  SelectionConfig selection;
  MetricSpec metric;
  CovSource cov = CovSource::BOOTSTRAP;
  std::size_t bootstrap_B = 500;
  PluginOptions plugin;
  SeqTestConfig seq;
  bool auto_k = false;      // choose K per split by ICC
  std::size_t k_max = 0;    // 0: q_hat - 1
  bool standardize = true;  // standardize the dataset before splitting
  void validate() const;
};

struct SplitOutcome {
  SplitPair split;
  ActiveSet active;
  NwmVector nwm;
  Vec se;              // per-vertex standard errors of the metric
  CovarianceEstimate cov;
  ClusterResult clusters;
  std::size_t K = 0;   // cluster count used (chosen by ICC when auto_k)
  std::string failure; // nonempty when the split was skipped
  bool empty_selection = false;
};

// Rows of (y, X_cols) restricted to `rows`: the matrix Z fed to metric estimation.
Mat inference_matrix(const Dataset& d, const IndexSet& rows, const IndexSet& cols);

// Pipeline on one split of d (d must already be standardized when cfg.standardize).
SplitOutcome run_split(const Dataset& d, const PipelineConfig& cfg, RngStream& rng);

/**
 * The post-selection half of run_split: metric, covariance and clusters on
 * the inference rows for a given split and active set. boot_rng seeds the
 * bootstrap replicates.
 */
SplitOutcome run_inference(const Dataset& d, const PipelineConfig& cfg, const SplitPair& split,
                           const ActiveSet& active, const RngStream& boot_rng);

// Re-runs only the clustering step of a finished split with new test settings.
ClusterResult recluster(const SplitOutcome& s, const SeqTestConfig& seq, bool auto_k = false, std::size_t k_max = 0);

struct VoteTable {
  std::vector<std::vector<std::size_t>> counts;  // [column][rank], rank K = unassigned while selected
  std::vector<std::size_t> selected;             // times each column was selected
};

/**
 * Vote aggregation: a selected variable joins rank k when its count for k
 * exceeds vote_threshold * M; otherwise it is unassigned. Variables never
 * selected are omitted.
 */
ClusterResult assign_by_votes(const VoteTable& votes, std::size_t M, double vote_threshold);

struct MultiSplitResult {
  ClusterResult result;
  VoteTable votes;
  std::vector<SplitOutcome> splits;
  std::size_t failed_splits = 0;
  std::size_t K = 0;
};

/**
 * Runs the pipeline on M independent splits (split s uses rng.derive(s)),
 * counts how often each variable lands in cluster rank k, and assigns a
 * variable to rank k when its count exceeds vote_threshold * M. Failed
 * splits are recorded and skipped.
 */
MultiSplitResult multiple_split_cluster(const Dataset& d, std::size_t M, double vote_threshold,
                                        const PipelineConfig& cfg, const RngStream& rng, std::size_t threads = 1);

struct KMeansResult {
  std::vector<std::size_t> label;
  Mat centers;
  double inertia = 0.0;
};

enum class KMeansInit { PLUS_PLUS, FORGY };
enum class KMeansAlgorithm { LLOYD, HARTIGAN };

struct KMeansOptions {
  std::size_t restarts = 25;  // keep the best start by within-cluster sum of squares
  std::size_t max_iter = 300;
  KMeansInit init = KMeansInit::PLUS_PLUS;
  KMeansAlgorithm algorithm = KMeansAlgorithm::LLOYD;
};

/**
 * K-means on the rows of P. Lloyd alternates assignment and center
 * updates; Hartigan moves single points whenever the move lowers the
 * within-cluster sum of squares. Seeding is k-means++ or Forgy (k
 * distinct random points).
 */
KMeansResult kmeans(const Mat& P, std::size_t k, RngStream& rng, const KMeansOptions& opt = {});

// Single Forgy start refined by Hartigan transfers (the common statistical-software default).
inline KMeansOptions hartigan_single_start() { return {1, 300, KMeansInit::FORGY, KMeansAlgorithm::HARTIGAN}; }

// K-means on the predictor columns; clusters ordered by mean |corr(X_j, y)|.
ClusterResult modified_kmeans(const Dataset& d, std::size_t k, RngStream& rng, const KMeansOptions& opt = {});
/**
 * Spectral clustering of the predictor columns: similarity |corr(X_i, X_j)|,
 * Laplacian G - M, K-means on the k eigenvectors of smallest eigenvalue.
 */
ClusterResult modified_spectral(const Dataset& d, std::size_t k, RngStream& rng, const KMeansOptions& opt = {});

std::string cluster_result_json(const ClusterResult& r, const std::vector<std::string>& names);
std::string cluster_result_csv(const MultiSplitResult& r, const std::vector<std::string>& names);

}  // namespace nwmc
