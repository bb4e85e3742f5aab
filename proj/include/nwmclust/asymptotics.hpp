// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Closed-form limiting covariances of post-selection estimates: the
 * elimination matrix, gradient and Hessian maps of the network-wide
 * metrics, the gradient of the precision-to-partial-correlation map, the
 * fourth-moment matrix Delta_S and the delta-method (sandwich) plug-in
 * estimators built from them.
 *
 * Conventions. Gradients are Jacobians with one row per output:
 * J(i, k) = d metric_i / d v_k. Every covariance describes
 * sqrt(n_eff) * (estimate - target) with n_eff the number of rows of the
 * inference half, and propagates as J * Sigma * J'.
 */
#pragma once

#include "nwmclust/nwm.hpp"
#include "nwmclust/penalized.hpp"

#include <functional>

namespace nwmc {

enum class CovTarget { BETA, RHO, DEGREE, CLUSTERING };
enum class CovMethod { PLUGIN, BOOTSTRAP, MONTE_CARLO_ORACLE };

struct CovarianceEstimate {
  CovTarget target = CovTarget::DEGREE;
  Mat sigma;
  CovMethod method = CovMethod::PLUGIN;
  std::size_t n_eff = 0;

  static constexpr const char* kScale = "covariance of sqrt(n_eff)*(estimate - target); n_eff = inference-half rows";
  std::string to_json() const;
};

std::string to_string(CovTarget t);
std::string to_string(CovMethod m);

// Throws NumericalError unless M is symmetric with min eigenvalue >= -tol (relative to its scale).
void check_psd(const Mat& M, const std::string& what, double tol = 1e-8);

// Position of (i, j), i >= j, in the column-stacked lower-triangle half-vector of an m x m matrix.
inline std::size_t half_vec_index(std::size_t i, std::size_t j, std::size_t m) {
  return j * m - j * (j - 1) / 2 + (i - j);
}

/**
 * Elimination matrix K of shape (m(m+1)/2) x m^2 with K vec(M) = v(M),
 * the column-stacked lower triangle of M (vec is column-major).
 */
Mat elimination_matrix(std::size_t m);
Vec vec(const Mat& M);
Vec half_vec(const Mat& M);

// Jacobian of the metric map v -> NWM(v) for the network with weights f(v_i, v_j).
Mat grad_nwm(const Vec& v, const WeightFunction& f, const NwmSpec& spec);
// Degree Jacobian: diagonal sum_r d1 f(v_j, v_r), off-diagonal d2 f(v_j, v_k).
Mat grad_L_D(const Vec& v, const WeightFunction& f);
// Clustering-coefficient Jacobian: zero diagonal; see grad_nwm for the pair convention.
Mat grad_L_C(const Vec& v, const WeightFunction& f, PairCounting pairs = PairCounting::ORDERED);

// One q x q Hessian per metric component: H[i](j, k) = d^2 metric_i / dv_j dv_k.
std::vector<Mat> hessian_nwm(const Vec& v, const WeightFunction& f, const NwmSpec& spec);

/**
 * Gradient of Gamma -> partial correlations with respect to the
 * half-vectorized (lower triangle) precision matrix. Row i has exactly
 * three nonzeros: gamma_00, gamma_{i+1,0} and gamma_{i+1,i+1}. With
 * transformed = true the rows describe (1 + rho_raw)/2 and carry the
 * factor 1/2 from that map.
 */
Mat grad_h(const Mat& gamma, bool transformed = true);

/**
 * Empirical Delta_S = mean_r vec(z_r z_r') vec(z_r z_r')' - vec(S) vec(S)'
 * over centered rows z_r of samples, with S their 1/n covariance.
 */
Mat delta_S(const Mat& samples);

struct PluginOptions {
  std::size_t max_q = 25;  // (q+1)^2 x (q+1)^2 matrices above this are refused
};

/**
 * Plug-in covariance of the partial correlations:
 * grad_h K (Gamma x Gamma) Delta_S (Gamma x Gamma) K' grad_h'.
 */
CovarianceEstimate cov_rho(const PartialCorrelations& pc, const Mat& dS, const Mat& K, std::size_t n_eff,
                           bool transformed = true, const PluginOptions& opt = {});

// sigma2_hat * J (n_eff * xtx_inv) J'.
CovarianceEstimate cov_nwm_beta(const PostSelectionFit& fit, const Mat& J, NwmKind kind);
// J covRho J'.
CovarianceEstimate cov_nwm_rho(const CovarianceEstimate& cov_rho_est, const Mat& J, NwmKind kind);

/**
 * End-to-end plug-in covariance of an NWM vector on the inference rows Z =
 * (y, X_S): partial correlations, Delta_S, cov_rho and the metric gradient.
 * use_raw selects untransformed partial correlations as vertex values.
 */
CovarianceEstimate plugin_nwm_cov_rho(const Mat& Z, const WeightFunction& f, const NwmSpec& spec, bool use_raw,
                                      const PluginOptions& opt = {});

struct BiasDiagnostics {
  Vec b;      // p'(|beta_j|) sgn(beta_j)
  Vec c;      // (V + diag p'')^{-1} b
  Vec bias;   // approximate shift E[estimate] - target = -G c, the shrinkage shift propagated through G
  Mat cov;    // sigma2 G (V+S)^{-1} V (V+S)^{-1} G', G = J + [H_i c]_i
  bool approximate = true;  // evaluated at beta_hat instead of an intermediate point
};

/**
 * Penalized-estimate bias and covariance diagnostics. V is the Gram matrix
 * X'X/m of the fitting rows. Throws UsageError if some |beta_hat_j| sits
 * exactly on a kink of the penalty.
 */
BiasDiagnostics prop12_bias_diagnostics(const Vec& beta_hat, const PenaltyConfig& cfg, double lambda, const Mat& J,
                                        const std::vector<Mat>& H, const Mat& V, double sigma2);

// Central finite-difference Jacobian with step max(1e-6, 1e-6|x_k|).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& x);

}  // namespace nwmc
