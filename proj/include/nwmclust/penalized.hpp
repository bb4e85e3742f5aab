// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Sparse model estimation: SCAD/MCP penalized least squares by cyclic
 * coordinate descent with exact univariate thresholding, K-fold
 * cross-validated tuning, two-step (penalized fit + t-test) selection on
 * the selection half, and the OLS refit on the inference half.
 *
 * The fitted objective is (1/2m)||y - X b||^2 + sum_j p_lambda(|b_j|) over
 * the m rows supplied; no intercept is fitted (the pipeline standardizes
 * the data first).
 */
#pragma once

#include "nwmclust/common.hpp"
#include "nwmclust/data.hpp"

#include <optional>

namespace nwmc {

enum class Penalty { SCAD, MCP };

struct PenaltyConfig {
  Penalty family = Penalty::SCAD;
  double a = 3.7;                 // SCAD default 3.7, MCP default 3.0
  std::vector<double> lambda_grid;  // empty: 50 log-spaced values (see default_lambda_grid)
  std::size_t grid_size = 50;
  double grid_ratio = 1e-3;       // smallest / largest lambda in the default grid
  std::size_t cv_folds = 5;
  double tol = 1e-8;              // max coordinate change at convergence
  std::size_t max_sweeps = 10000;

  static PenaltyConfig defaults(Penalty family);
  void validate() const;
};

// p'_lambda(theta) for theta >= 0.
double penalty_derivative(Penalty family, double theta, double lambda, double a);
// p_lambda(theta) for theta >= 0.
double penalty_value(Penalty family, double theta, double lambda, double a);
// p''_lambda(theta) for theta >= 0 away from the kinks theta = lambda, a*lambda.
double penalty_second_derivative(Penalty family, double theta, double lambda, double a);

/**
 * Exact minimizer of (v/2) b^2 - z b + p_lambda(|b|), the coordinate-wise
 * problem with column scale v = x_j'x_j/m. Requires v > 1/(a-1) for SCAD
 * and v > 1/a for MCP so that the univariate problem is convex.
 */
double threshold(Penalty family, double z, double v, double lambda, double a);

// lambda_max = max|X'y|/m on the given rows, then num values down to ratio*lambda_max.
std::vector<double> default_lambda_grid(const Mat& X, const Vec& y, std::size_t num, double ratio);

struct PathFit {
  Mat beta;            // p x L coefficients along the grid
  std::vector<std::size_t> sweeps;  // sweeps used per grid point
};

/**
 * Coordinate descent along a descending grid with warm starts. Throws
 * NumericalError if a grid point fails to converge in max_sweeps, or if
 * the objective increases across a sweep (beyond roundoff).
 */
PathFit coordinate_descent_path(const Mat& X, const Vec& y, const std::vector<double>& grid,
                                const PenaltyConfig& cfg);

// Objective (1/2m)||y - Xb||^2 + sum p_lambda(|b_j|).
double penalized_objective(const Mat& X, const Vec& y, const Vec& beta, Penalty family, double lambda,
                           double a);

struct PenalizedFit {
  Vec beta;             // length p, on the scale of the supplied data
  double lambda_star = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_error;  // mean held-out squared error per grid point
};

/**
 * Penalized fit on d's given rows with lambda chosen by cv_folds-fold
 * cross-validation (fold assignment from rng; ties go to the larger
 * lambda), followed by a refit on all the rows at lambda*.
 */
PenalizedFit fit_penalized(const Dataset& d, const IndexSet& rows, const PenaltyConfig& cfg, RngStream& rng);

struct ActiveSet {
  IndexSet indices;  // sorted, 0-based columns of the Dataset
  std::size_t q_hat() const { return indices.size(); }
  SplitPair source_split;
  IndexSet stage1;  // support of the penalized fit before t-testing
  double lambda_star = 0.0;
};

struct SelectionConfig {
  PenaltyConfig penalty;
  double alpha_n = 0.05;
  bool bonferroni = true;  // divide alpha_n by |stage1|
  void validate() const;
};

/**
 * Two-step selection on the D1 half: support of the penalized fit, then
 * OLS t-tests of those columns on D1 at level alpha_n. An empty support
 * is a valid outcome (empty ActiveSet); a stage-one support with at least
 * as many columns as D1 rows raises NumericalError.
 */
ActiveSet two_step_select(const Dataset& d, const SplitPair& split, const SelectionConfig& cfg, RngStream& rng);

// Entry j is truth[active.indices[j]].
Vec dimension_match(const Vec& truth, const ActiveSet& active);

struct PostSelectionFit {
  Vec beta_hat;
  double sigma2_hat = 0.0;
  Vec se;
  Mat xtx_inv;
  std::size_t rows = 0;  // |D2|
};

/**
 * Least squares of y on the active columns over the given rows, with
 * sigma2_hat = RSS/(|rows| - q). Rank deficiency raises NumericalError
 * reporting the smallest singular value.
 */
PostSelectionFit refit_ols(const Dataset& d, const IndexSet& rows, const IndexSet& active);

// OLS helper on explicit matrices (no intercept); used by refits and bootstrap.
PostSelectionFit ols(const Mat& X, const Vec& y);

}  // namespace nwmc
