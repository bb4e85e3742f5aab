// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * The implicit weighted, fully connected network over the selected
 * predictors: partial-correlation estimates from the precision matrix of
 * (y, X_S), the f1/f2 weight functions (plus user-registered ones) and the
 * two-way ANOVA weights used for categorical predictors.
 */
#pragma once

#include "nwmclust/common.hpp"

#include <functional>
#include <memory>
#include <string>

namespace nwmc {

enum class WeightFamily { F_ON_BETA, F_ON_RHO, ANOVA_SS };
enum class WeightFn { F1, F2, CUSTOM };

/**
 * A symmetric edge-weight function f(x, y) >= 0 with its partial
 * derivatives. d1 is df/dx; d11, d12, d22 the second derivatives. f1 and
 * f2 have closed forms; CUSTOM functions get central finite differences.
 */
class WeightFunction {
 public:
  using Fn = std::function<double(double, double)>;

  static WeightFunction f1();
  static WeightFunction f2();
  /**
   * Registers a custom weight. Probes symmetry, nonnegativity and
   * smoothness (finite second differences that agree between step sizes)
   * on a grid over [lo, hi]^2 and throws UsageError on violation.
   */
  static WeightFunction custom(Fn f, double lo = 0.0, double hi = 1.0);
  static WeightFunction from_id(WeightFn id);

  WeightFn id() const noexcept { return id_; }
  double operator()(double x, double y) const;
  double d1(double x, double y) const;
  double d11(double x, double y) const;
  double d12(double x, double y) const;
  double d22(double x, double y) const { return d11(y, x); }
  // Validates that both arguments lie in the function's domain.
  void check_domain(double x, double y) const;

 private:
  WeightFunction(WeightFn id, Fn f) : id_(id), f_(std::move(f)) {}
  WeightFn id_;
  Fn f_;
};

// sqrt(2(1-x^2)) + sqrt(2(1-y^2)) on [0,1]^2.
double f1(double x, double y);
// sqrt(x^2 + y^2).
double f2(double x, double y);

/**
 * Residual of the algebraic link between the two weight functions,
 * f1(x,y)^2 - [4 - 2 f2(x,y)^2 + 4 sqrt(1 - f2(x,y)^2 - (f2(x^2,y^2)^2 - f2(x,y)^4)/2)],
 * which vanishes for every x, y in [0,1].
 */
double f1_f2_identity_residual(double x, double y);

// Inputs of f1 closer to 1 than this are clamped before differentiation.
inline constexpr double kRhoClamp = 1.0 - 1e-9;

struct PartialCorrelations {
  Vec rho_raw;  // partial correlation of y and X_i given the other selected X's
  Vec rho;      // (1 + rho_raw)/2
  Mat gamma;    // precision matrix of (y, X_S), (q+1) x (q+1)
  Mat sigma;    // sample covariance of (y, X_S) with 1/n scaling
};

/**
 * Sample covariance (1/n) of (y, Xs), its inverse Gamma and
 * rho_raw_i = -gamma_{0,i+1} / sqrt(gamma_00 gamma_{i+1,i+1}).
 * Throws NumericalError (with the condition number) if the covariance is
 * singular or numerically so.
 */
PartialCorrelations partial_correlations(const Vec& y, const Mat& Xs);

// Same map from a given covariance matrix of (y, X_S).
PartialCorrelations partial_correlations_from_cov(const Mat& sigma);

struct ImplicitNetwork {
  IndexSet vertices;  // columns of the originating Dataset
  Mat W;              // symmetric, zero diagonal
  Vec values;         // vertex values the weights were built from (empty for ANOVA)
  WeightFamily family = WeightFamily::F_ON_RHO;
  WeightFn f_id = WeightFn::F2;

  std::size_t size() const { return static_cast<std::size_t>(W.rows()); }
};

// W_ij = f(values_i, values_j) for i != j, zero diagonal.
ImplicitNetwork build_network(const Vec& values, const WeightFunction& f, WeightFamily family,
                              IndexSet vertices = {});

/**
 * Two-way interaction weights for categorical predictors: W_ij =
 * SS_ij / TSS, SS_ij = r * sum_cells (ybar_ab - ybar_a - ybar_b + ybar)^2
 * with r replicates per cell. factors holds integer-coded levels.
 */
ImplicitNetwork anova_weights(const Vec& y, const Eigen::MatrixXi& factors);

// Edge-list CSV (i,j,weight for i<j) and dense JSON exports.
std::string network_edge_list_csv(const ImplicitNetwork& net, const std::vector<std::string>& names);
std::string network_json(const ImplicitNetwork& net, const std::vector<std::string>& names);

std::string to_string(WeightFamily f);
std::string to_string(WeightFn f);

}  // namespace nwmc
