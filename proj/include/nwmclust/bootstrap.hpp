// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Metric estimation on the inference half and its covariance: the
 * model-estimated post-selection resampling (MEPSRS) bootstrap, which
 * resamples whole rows of (y, X_S) with the selected support held fixed,
 * and the plug-in alternative from the asymptotics module.
 */
#pragma once

#include "nwmclust/asymptotics.hpp"
#include "nwmclust/data.hpp"

namespace nwmc {

// How vertex values, network weights and the metric are derived from data.
struct MetricSpec {
  WeightFamily family = WeightFamily::F_ON_RHO;
  WeightFunction f = WeightFunction::f2();
  bool raw_rho = false;  // F_ON_RHO: use untransformed partial correlations as vertex values
  NwmSpec nwm;
};

struct MetricEstimate {
  Vec values;     // vertex values (transformed/raw partial correlations or OLS coefficients)
  Vec metric;     // NWM vector
  Mat W;          // network weights
};

/**
 * Vertex values, network and NWM from the rows Z = (y, X_S): partial
 * correlations for F_ON_RHO, least-squares coefficients for F_ON_BETA.
 */
MetricEstimate estimate_metric(const Mat& Z, const MetricSpec& spec);

// Delta-method covariance of the NWM vector on Z (beta or rho weights).
CovarianceEstimate plugin_covariance(const Mat& Z, const MetricSpec& spec, const PluginOptions& opt = {});

struct BootstrapConfig {
  std::size_t B = 500;
  std::uint64_t seed = 0;
  std::uint64_t base_stream = 0;  // replicate j uses stream base_stream + j
  std::size_t max_retries = 50;   // redraws of a singular resample per replicate
  std::size_t threads = 1;
  void validate() const;
};

/**
 * MEPSRS covariance: for j = 1..B resample the rows of Z with replacement,
 * recompute the NWM vector, and return n * (1/B) sum (D*_j - mean)(D*_j - mean)'
 * with n = rows of Z (the sqrt(n_eff) convention). A resample whose
 * covariance is singular is redrawn up to max_retries times.
 */
CovarianceEstimate mepsrs_covariance(const Mat& Z, const MetricSpec& spec, const BootstrapConfig& cfg);

}  // namespace nwmc
