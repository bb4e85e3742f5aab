// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/penalized.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace nwmc {

PenaltyConfig PenaltyConfig::defaults(Penalty family) {
  PenaltyConfig c;
  c.family = family;
  c.a = family == Penalty::SCAD ? 3.7 : 3.0;
  return c;
}

void PenaltyConfig::validate() const {
  if (family == Penalty::SCAD)
    require(a > 2.0, "SCAD requires a > 2, got " + std::to_string(a));
  else
    require(a > 1.0, "MCP requires a > 1, got " + std::to_string(a));
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    require(lambda_grid[i] > 0.0, "lambda grid must be strictly positive");
    if (i > 0) require(lambda_grid[i] < lambda_grid[i - 1], "lambda grid must be strictly decreasing");
  }
  require(grid_size >= 1, "grid_size must be >= 1");
  require(grid_ratio > 0.0 && grid_ratio < 1.0, "grid_ratio must lie in (0,1)");
  require(cv_folds >= 2, "cv_folds must be >= 2");
  require(tol > 0.0 && max_sweeps >= 1, "invalid convergence settings");
}

namespace {

void check_penalty_args(Penalty family, double theta, double lambda, double a) {
  require(theta >= 0.0, "penalty argument theta must be nonnegative");
  require(lambda > 0.0, "lambda must be positive");
  require(family == Penalty::SCAD ? a > 2.0 : a > 1.0, "invalid penalty parameter a");
}

}  // namespace

double penalty_derivative(Penalty family, double theta, double lambda, double a) {
  check_penalty_args(family, theta, lambda, a);
  if (family == Penalty::SCAD) {
    if (theta <= lambda) return lambda;
    return std::max(a * lambda - theta, 0.0) / (a - 1.0);
  }
  return std::max(a * lambda - theta, 0.0) / a;
}

double penalty_value(Penalty family, double theta, double lambda, double a) {
  check_penalty_args(family, theta, lambda, a);
  if (family == Penalty::SCAD) {
    if (theta <= lambda) return lambda * theta;
    if (theta <= a * lambda)
      return (2.0 * a * lambda * theta - theta * theta - lambda * lambda) / (2.0 * (a - 1.0));
    return lambda * lambda * (a + 1.0) / 2.0;
  }
  if (theta <= a * lambda) return lambda * theta - theta * theta / (2.0 * a);
  return a * lambda * lambda / 2.0;
}

double penalty_second_derivative(Penalty family, double theta, double lambda, double a) {
  check_penalty_args(family, theta, lambda, a);
  if (family == Penalty::SCAD) {
    if (theta < lambda || theta > a * lambda) return 0.0;
    return -1.0 / (a - 1.0);
  }
  return theta < a * lambda ? -1.0 / a : 0.0;
}

namespace {

// Minimum of (v/2)b^2 - z b + p(|b|) by enumerating the stationary point of
// every smooth piece; used when the univariate problem is not convex.
double threshold_by_enumeration(Penalty family, double z, double v, double lambda, double a) {
  const double s = z >= 0 ? 1.0 : -1.0, az = std::abs(z);
  auto obj = [&](double b) { return 0.5 * v * b * b - az * b + penalty_value(family, b, lambda, a); };
  std::array<double, 6> cand{0.0, std::max(az - lambda, 0.0) / v, az / v, lambda, a * lambda, 0.0};
  if (family == Penalty::SCAD) {
    const double den = v - 1.0 / (a - 1.0);
    if (std::abs(den) > 1e-300) cand[5] = std::clamp((az - a * lambda / (a - 1.0)) / den, lambda, a * lambda);
  } else {
    const double den = v - 1.0 / a;
    if (std::abs(den) > 1e-300) cand[5] = std::clamp((az - lambda) / den, 0.0, a * lambda);
  }
  double best = 0.0, best_obj = obj(0.0);
  for (double b : cand) {
    b = std::max(b, 0.0);
    const double o = obj(b);
    if (o < best_obj) best_obj = o, best = b;
  }
  return s * best;
}

}  // namespace

double threshold(Penalty family, double z, double v, double lambda, double a) {
  const double s = z >= 0 ? 1.0 : -1.0, az = std::abs(z);
  if (family == Penalty::SCAD) {
    if (v <= 1.0 / (a - 1.0)) return threshold_by_enumeration(family, z, v, lambda, a);
    if (az <= lambda) return 0.0;
    if (az <= lambda * (1.0 + v)) return s * (az - lambda) / v;
    if (az <= v * a * lambda) return s * (az - a * lambda / (a - 1.0)) / (v - 1.0 / (a - 1.0));
    return z / v;
  }
  if (v <= 1.0 / a) return threshold_by_enumeration(family, z, v, lambda, a);
  if (az <= lambda) return 0.0;
  if (az <= v * a * lambda) return s * (az - lambda) / (v - 1.0 / a);
  return z / v;
}

std::vector<double> default_lambda_grid(const Mat& X, const Vec& y, std::size_t num, double ratio) {
  const double m = static_cast<double>(X.rows());
  const double lmax = (X.transpose() * y).cwiseAbs().maxCoeff() / m;
  require(lmax > 0.0, "lambda_max is zero (response orthogonal to every predictor)");
  std::vector<double> grid(num);
  if (num == 1) return {lmax};
  for (std::size_t i = 0; i < num; ++i)
    grid[i] = lmax * std::pow(ratio, static_cast<double>(i) / static_cast<double>(num - 1));
  return grid;
}

double penalized_objective(const Mat& X, const Vec& y, const Vec& beta, Penalty family, double lambda,
                           double a) {
  const double m = static_cast<double>(X.rows());
  double pen = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) pen += penalty_value(family, std::abs(beta(j)), lambda, a);
  return (y - X * beta).squaredNorm() / (2.0 * m) + pen;
}

PathFit coordinate_descent_path(const Mat& X, const Vec& y, const std::vector<double>& grid,
                                const PenaltyConfig& cfg) {
  const Eigen::Index m = X.rows(), p = X.cols();
  const double md = static_cast<double>(m);
  Vec colscale(p);
  for (Eigen::Index j = 0; j < p; ++j) colscale(j) = X.col(j).squaredNorm() / md;

  PathFit out;
  out.beta = Mat::Zero(p, static_cast<Eigen::Index>(grid.size()));
  Vec beta = Vec::Zero(p);
  Vec resid = y;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double lambda = grid[g];
    double prev_obj = penalized_objective(X, y, beta, cfg.family, lambda, cfg.a);
    std::size_t sweep = 0;
    double max_delta = 0.0;
    for (; sweep < cfg.max_sweeps; ++sweep) {
      max_delta = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (colscale(j) <= 0.0) continue;
        const double old = beta(j);
        const double z = X.col(j).dot(resid) / md + colscale(j) * old;
        const double nb = threshold(cfg.family, z, colscale(j), lambda, cfg.a);
        if (nb != old) {
          resid.noalias() -= (nb - old) * X.col(j);
          beta(j) = nb;
          max_delta = std::max(max_delta, std::abs(nb - old));
        }
      }
      const double obj = penalized_objective(X, y, beta, cfg.family, lambda, cfg.a);
      if (obj > prev_obj + 1e-10 * (1.0 + std::abs(prev_obj))) {
        std::ostringstream msg;
        msg << "coordinate descent objective increased at lambda=" << lambda << " (" << prev_obj << " -> "
            << obj << ")";
        throw NumericalError(msg.str());
      }
      prev_obj = obj;
      if (max_delta < cfg.tol) break;
    }
    if (sweep == cfg.max_sweeps) {
      std::ostringstream msg;
      msg << "coordinate descent did not converge at lambda=" << lambda << " after " << cfg.max_sweeps
          << " sweeps (last max coordinate change " << max_delta << ")";
      throw NumericalError(msg.str());
    }
    out.beta.col(static_cast<Eigen::Index>(g)) = beta;
    out.sweeps.push_back(sweep + 1);
  }
  return out;
}

namespace {

void gather(const Dataset& d, const IndexSet& rows, Mat& X, Vec& y) {
  X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    X.row(static_cast<Eigen::Index>(r)) = d.X.row(static_cast<Eigen::Index>(rows[r]));
    y(static_cast<Eigen::Index>(r)) = d.y(static_cast<Eigen::Index>(rows[r]));
  }
}

}  // namespace

PenalizedFit fit_penalized(const Dataset& d, const IndexSet& rows, const PenaltyConfig& cfg, RngStream& rng) {
  cfg.validate();
  require(!rows.empty(), "fit_penalized needs a nonempty row set");
  require(rows.size() >= cfg.cv_folds, "fewer rows (" + std::to_string(rows.size()) + ") than CV folds (" +
                                           std::to_string(cfg.cv_folds) + ")");
  Mat X;
  Vec y;
  gather(d, rows, X, y);

  PenalizedFit fit;
  fit.grid = cfg.lambda_grid.empty() ? default_lambda_grid(X, y, cfg.grid_size, cfg.grid_ratio) : cfg.lambda_grid;
  const std::size_t L = fit.grid.size();
  fit.cv_error.assign(L, 0.0);

  // Fold f holds the rows at permuted positions congruent to f mod K.
  const auto perm = rng.permutation(rows.size());
  std::vector<std::size_t> fold(rows.size());
  for (std::size_t i = 0; i < perm.size(); ++i) fold[perm[i]] = i % cfg.cv_folds;
  for (std::size_t f = 0; f < cfg.cv_folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < rows.size(); ++i)
      (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Mat Xtr = X(train, Eigen::all), Xte = X(test, Eigen::all);
    const Vec ytr = y(train), yte = y(test);
    const PathFit path = coordinate_descent_path(Xtr, ytr, fit.grid, cfg);
    for (std::size_t g = 0; g < L; ++g)
      fit.cv_error[g] += (yte - Xte * path.beta.col(static_cast<Eigen::Index>(g))).squaredNorm();
  }
  std::size_t best = 0;
  for (std::size_t g = 0; g < L; ++g) {
    fit.cv_error[g] /= static_cast<double>(rows.size());
    if (fit.cv_error[g] < fit.cv_error[best]) best = g;  // strict: ties keep the larger lambda
  }
  fit.lambda_star = fit.grid[best];
  const std::vector<double> prefix(fit.grid.begin(), fit.grid.begin() + static_cast<std::ptrdiff_t>(best + 1));
  fit.beta = coordinate_descent_path(X, y, prefix, cfg).beta.col(static_cast<Eigen::Index>(best));
  return fit;
}

void SelectionConfig::validate() const {
  penalty.validate();
  require(alpha_n > 0.0 && alpha_n <= 1.0, "alpha_n must lie in (0,1]");
}

PostSelectionFit ols(const Mat& X, const Vec& y) {
  const Eigen::Index m = X.rows(), q = X.cols();
  require(m > q, "OLS needs more rows (" + std::to_string(m) + ") than columns (" + std::to_string(q) + ")");
  Eigen::JacobiSVD<Mat> svd(X);
  const double smin = svd.singularValues().minCoeff(), smax = svd.singularValues().maxCoeff();
  if (!(smin > 1e-10 * std::max(1.0, smax))) {
    std::ostringstream msg;
    msg << "design is rank deficient (smallest singular value " << smin << ")";
    throw NumericalError(msg.str());
  }
  PostSelectionFit fit;
  fit.xtx_inv = (X.transpose() * X).ldlt().solve(Mat::Identity(q, q));
  fit.xtx_inv = 0.5 * (fit.xtx_inv + fit.xtx_inv.transpose()).eval();
  fit.beta_hat = fit.xtx_inv * (X.transpose() * y);
  const double rss = (y - X * fit.beta_hat).squaredNorm();
  fit.sigma2_hat = rss / static_cast<double>(m - q);
  fit.se = (fit.sigma2_hat * fit.xtx_inv.diagonal().array()).sqrt();
  fit.rows = static_cast<std::size_t>(m);
  return fit;
}

namespace {

void restricted_design(const Dataset& d, const IndexSet& rows, const IndexSet& cols, Mat& X, Vec& y) {
  X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    y(static_cast<Eigen::Index>(r)) = d.y(static_cast<Eigen::Index>(rows[r]));
    for (std::size_t c = 0; c < cols.size(); ++c)
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          d.X(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
  }
}

}  // namespace

PostSelectionFit refit_ols(const Dataset& d, const IndexSet& rows, const IndexSet& active) {
  require(!active.empty(), "refit_ols needs a nonempty active set");
  require(rows.size() > active.size() + 1, "refit_ols needs more than q+1 rows");
  Mat X;
  Vec y;
  restricted_design(d, rows, active, X, y);
  return ols(X, y);
}

ActiveSet two_step_select(const Dataset& d, const SplitPair& split, const SelectionConfig& cfg, RngStream& rng) {
  cfg.validate();
  ActiveSet out;
  out.source_split = split;
  const PenalizedFit pf = fit_penalized(d, split.d1, cfg.penalty, rng);
  out.lambda_star = pf.lambda_star;
  for (Eigen::Index j = 0; j < pf.beta.size(); ++j)
    if (pf.beta(j) != 0.0) out.stage1.push_back(static_cast<std::size_t>(j));
  if (out.stage1.empty()) return out;
  if (out.stage1.size() >= split.d1.size())
    throw NumericalError("stage-one support (" + std::to_string(out.stage1.size()) +
                         " columns) is not smaller than the selection half (" + std::to_string(split.d1.size()) +
                         " rows); t-test refit impossible");
  Mat X1;
  Vec y1;
  restricted_design(d, split.d1, out.stage1, X1, y1);
  const PostSelectionFit f = ols(X1, y1);
  const double df = static_cast<double>(split.d1.size() - out.stage1.size());
  const double level = cfg.bonferroni ? cfg.alpha_n / static_cast<double>(out.stage1.size()) : cfg.alpha_n;
  const double crit = boost::math::quantile(boost::math::students_t(df), 1.0 - level / 2.0);
  for (std::size_t j = 0; j < out.stage1.size(); ++j) {
    const double t = f.beta_hat(static_cast<Eigen::Index>(j)) / f.se(static_cast<Eigen::Index>(j));
    if (std::abs(t) > crit) out.indices.push_back(out.stage1[j]);
  }
  return out;
}

Vec dimension_match(const Vec& truth, const ActiveSet& active) {
  Vec out(static_cast<Eigen::Index>(active.indices.size()));
  for (std::size_t j = 0; j < active.indices.size(); ++j) {
    require(active.indices[j] < static_cast<std::size_t>(truth.size()), "active index out of range");
    out(static_cast<Eigen::Index>(j)) = truth(static_cast<Eigen::Index>(active.indices[j]));
  }
  return out;
}

}  // namespace nwmc
