// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/bootstrap.hpp"

#include "nwmclust/parallel.hpp"

#include <sstream>

namespace nwmc {

namespace {

Vec vertex_values(const Mat& Z, const MetricSpec& spec) {
  const Eigen::Index m = Z.cols();
  require(m >= 2, "metric estimation needs a response and at least one predictor");
  if (spec.family == WeightFamily::F_ON_RHO) {
    const PartialCorrelations pc = partial_correlations(Z.col(0), Z.rightCols(m - 1));
    return spec.raw_rho ? pc.rho_raw : pc.rho;
  }
  require(spec.family == WeightFamily::F_ON_BETA, "ANOVA networks have no regression-based metric estimate");
  return ols(Z.rightCols(m - 1), Z.col(0)).beta_hat;
}

}  // namespace

MetricEstimate estimate_metric(const Mat& Z, const MetricSpec& spec) {
  MetricEstimate est;
  est.values = vertex_values(Z, spec);
  const ImplicitNetwork net = build_network(est.values, spec.f, spec.family);
  est.W = net.W;
  est.metric = nwm_from_weights(net.W, spec.nwm);
  return est;
}

CovarianceEstimate plugin_covariance(const Mat& Z, const MetricSpec& spec, const PluginOptions& opt) {
  if (spec.family == WeightFamily::F_ON_RHO) return plugin_nwm_cov_rho(Z, spec.f, spec.nwm, spec.raw_rho, opt);
  require(spec.family == WeightFamily::F_ON_BETA, "ANOVA networks have no plug-in covariance");
  const Eigen::Index m = Z.cols();
  const PostSelectionFit fit = ols(Z.rightCols(m - 1), Z.col(0));
  return cov_nwm_beta(fit, grad_nwm(fit.beta_hat, spec.f, spec.nwm), spec.nwm.kind);
}

void BootstrapConfig::validate() const {
  require(B >= 2, "bootstrap needs B >= 2");
  require(threads >= 1, "bootstrap needs at least one thread");
}

CovarianceEstimate mepsrs_covariance(const Mat& Z, const MetricSpec& spec, const BootstrapConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = Z.rows(), m = Z.cols();
  require(n >= m + 1, "bootstrap needs at least q+2 rows");
  CovarianceEstimate est;
  est.target = spec.nwm.kind == NwmKind::DEGREE ? CovTarget::DEGREE : CovTarget::CLUSTERING;
  est.method = CovMethod::BOOTSTRAP;
  est.n_eff = static_cast<std::size_t>(n);

  // Identical rows: every resample reproduces the data, so the resampling
  // variance is exactly zero even though no metric is estimable.
  if ((Z.rowwise() - Z.row(0)).cwiseAbs().maxCoeff() == 0.0) {
    est.sigma = Mat::Zero(m - 1, m - 1);
    return est;
  }

  std::vector<Vec> reps(cfg.B);
  parallel_for(cfg.B, cfg.threads, [&](std::size_t j) {
    RngStream rng(cfg.seed, cfg.base_stream + j);
    Mat Zb(n, m);
    for (std::size_t attempt = 0;; ++attempt) {
      for (Eigen::Index r = 0; r < n; ++r) Zb.row(r) = Z.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
      try {
        reps[j] = estimate_metric(Zb, spec).metric;
        return;
      } catch (const NumericalError& e) {
        if (attempt + 1 >= cfg.max_retries) {
          std::ostringstream msg;
          msg << "bootstrap replicate " << j << " was singular on " << cfg.max_retries
              << " consecutive resamples (last: " << e.what() << ")";
          throw NumericalError(msg.str());
        }
      }
    }
  });

  const Eigen::Index q = reps[0].size();
  Vec mean = Vec::Zero(q);
  for (const auto& r : reps) mean += r;
  mean /= static_cast<double>(cfg.B);
  Mat S = Mat::Zero(q, q);
  for (const auto& r : reps) S.noalias() += (r - mean) * (r - mean).transpose();
  est.sigma = S * (static_cast<double>(n) / static_cast<double>(cfg.B));
  return est;
}

}  // namespace nwmc
