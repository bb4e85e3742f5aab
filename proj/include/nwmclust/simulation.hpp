// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Simulation designs, population quantities and the Monte Carlo harness
 * that regenerates the published simulation tables. Replicates run in
 * parallel on per-replicate random streams and are aggregated in index
 * order, so every table is identical for any thread count.
 */
#pragma once

#include "nwmclust/clustering.hpp"

#include <map>
#include <optional>

namespace nwmc {

/**
 * Gaussian design: X ~ N(0, Sigma) with unit variances, correlation r_w
 * within a group of corr_groups, r_b between members of different groups
 * and 0 for ungrouped columns; y = X beta + N(0, sigma2).
 */
struct SimDesign {
  std::size_t n = 100;
  std::size_t p = 9;
  Vec beta;
  double sigma2 = 1.0;
  double r_w = 0.0;
  double r_b = 0.0;
  std::vector<IndexSet> corr_groups;
  std::uint64_t seed = 0;

  Mat covariance() const;
  // Throws UsageError on inconsistent sizes or a non-positive-definite covariance.
  void validate() const;
  IndexSet support() const;  // columns with nonzero beta
};

Dataset generate(const SimDesign& design, RngStream& rng);

// Population covariance of (y, X_support).
Mat population_joint_covariance(const SimDesign& design, const IndexSet& support);
// Population metric vector on the given support.
Vec population_metric(const SimDesign& design, const IndexSet& support, const MetricSpec& spec);

// Wilson score interval at 95% for k successes out of n.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

/**
 * One-sample Kolmogorov-Smirnov test of x against N(0,1): returns the
 * statistic and its asymptotic p-value (Stephens' small-sample correction).
 */
std::pair<double, double> ks_test_normal(std::vector<double> x);

enum class Experiment { UNSUP_VS_SEQ, ICC_K, SMALLP_SEQ, NWM_BIAS, WRONG_K, COV_TIMING };

std::string to_string(Experiment e);
// Accepts the enum spelling or the CLI spelling (e.g. "unsup-vs-seq").
std::optional<Experiment> parse_experiment(const std::string& s);
std::vector<std::string> experiment_names();

struct RateCell {
  std::string label;
  std::size_t successes = 0;
  std::size_t trials = 0;
  double rate = 0.0, lo = 0.0, hi = 0.0;
  std::optional<double> published;  // published reference value, when one exists
};

struct McReport {
  Experiment id = Experiment::UNSUP_VS_SEQ;
  std::size_t replicates = 0;
  std::vector<RateCell> cells;
  std::map<std::string, double> values;         // non-rate summaries (means, biases, p-values)
  std::map<std::string, std::size_t> failures;  // per-stage failure counts
  std::map<std::string, double> timing;         // wall-clock figures (never written to tables)
  std::string table_csv;                        // deterministic table mirroring the published layout
  double wall_seconds = 0.0;

  const RateCell& cell(const std::string& label) const;
  double value(const std::string& key) const;
};

struct ExperimentOptions {
  std::size_t replicates = 500;
  std::uint64_t seed = 7;
  std::size_t threads = 1;
  std::size_t bootstrap_B = 500;
  CovSource cov = CovSource::BOOTSTRAP;
  // Empty vectors select the published grid for the experiment.
  std::vector<double> rb_values;
  std::vector<std::size_t> n_values;
  std::vector<std::size_t> p_values;
  std::vector<double> alphas;
  std::vector<NwmKind> kinds;
  std::vector<std::size_t> k_values;
  std::vector<std::string> designs;  // ICC_K: "strong", "weak"
  void validate() const;
};

McReport run_table(Experiment id, const ExperimentOptions& opt);

/**
 * Pipeline configuration used by the sequential-testing experiments:
 * SCAD (a = 3.7) with 5-fold CV, t-test screening at 0.05 with Bonferroni,
 * transformed partial-correlation weights through f2, the given metric,
 * bootstrap covariance, tau = 0 and Bonferroni-adjusted sequential tests.
 */
PipelineConfig simulation_pipeline(NwmKind kind, double alpha, std::size_t K, const ExperimentOptions& opt);

// Published designs.
SimDesign unsup_design(double r_b, std::size_t n = 100);
std::vector<IndexSet> unsup_truth();
SimDesign icc_design(bool weak, std::size_t n = 100);
SimDesign smallp_design(std::size_t p, std::size_t n = 200);
std::vector<IndexSet> grouped_truth();  // {X1..X3}, {X4..X6}, {X7..X9}
SimDesign nwm_bias_design(std::size_t n);

// Metric used by the network-metric bias study: f2 on raw partial correlations.
MetricSpec nwm_bias_metric(NwmKind kind);

struct CovAgreement {
  Mat plugin, bootstrap, oracle;
  double plugin_vs_oracle = 0.0, bootstrap_vs_oracle = 0.0, plugin_vs_bootstrap = 0.0;  // relative Frobenius
};

/**
 * Cross-method covariance check on a design with known support: plug-in
 * and MEPSRS estimates from one dataset of n rows against the Monte Carlo
 * covariance of sqrt(n) * metric over mc_reps fresh datasets.
 */
CovAgreement covariance_agreement(const SimDesign& design, const MetricSpec& spec, std::size_t B,
                                  std::size_t mc_reps, std::uint64_t seed, std::size_t threads = 1);

}  // namespace nwmc
