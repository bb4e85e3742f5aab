// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nwmclust/penalized.hpp"
#include "nwmclust/simulation.hpp"

#include <numeric>

using namespace nwmc;

namespace {

IndexSet all_rows(std::size_t n) {
  IndexSet r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

Dataset gaussian_data(std::size_t n, const Vec& beta, double sigma, RngStream& rng) {
  const std::size_t p = static_cast<std::size_t>(beta.size());
  Mat X(n, p);
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) X(i, j) = rng.normal();
    y(i) = X.row(i).dot(beta) + sigma * rng.normal();
  }
  return make_dataset(y, X);
}

// Brute-force minimizer of (v/2) b^2 - z b + p(|b|) on a fine grid.
double grid_minimizer(Penalty fam, double z, double v, double lambda, double a) {
  double best = 0.0, best_obj = penalty_value(fam, 0.0, lambda, a);
  for (int k = -200000; k <= 200000; ++k) {
    const double b = k * 5e-5;
    const double obj = 0.5 * v * b * b - z * b + penalty_value(fam, std::abs(b), lambda, a);
    if (obj < best_obj) best_obj = obj, best = b;
  }
  return best;
}

}  // namespace

TEST_CASE("penalty_derivative: worked values") {
  CHECK(penalty_derivative(Penalty::SCAD, 0.5, 1.0, 3.7) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(penalty_derivative(Penalty::SCAD, 2.0, 1.0, 3.7) == doctest::Approx(1.7 / 2.7).epsilon(1e-12));
  CHECK(penalty_derivative(Penalty::SCAD, 2.0, 1.0, 3.7) == doctest::Approx(0.62963).epsilon(1e-5));
  CHECK(penalty_derivative(Penalty::MCP, 3.5, 1.0, 3.0) == 0.0);
  CHECK(penalty_derivative(Penalty::MCP, 1.0, 1.0, 3.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("penalty_derivative: nonnegative, nonincreasing, continuous, zero beyond a*lambda") {
  for (Penalty fam : {Penalty::SCAD, Penalty::MCP}) {
    const double a = fam == Penalty::SCAD ? 3.7 : 3.0, lambda = 0.8;
    double prev = penalty_derivative(fam, 1e-9, lambda, a);
    CHECK(prev == doctest::Approx(lambda).epsilon(1e-6));
    for (double t = 1e-3; t < 5.0; t += 1e-3) {
      const double d = penalty_derivative(fam, t, lambda, a);
      CHECK(d >= 0.0);
      CHECK(d <= prev + 1e-15);
      CHECK(prev - d <= lambda * 2e-3);  // no jumps on a 1e-3 grid
      prev = d;
      if (t >= a * lambda) CHECK(d == 0.0);
    }
  }
}

TEST_CASE("penalty_derivative rejects invalid arguments") {
  CHECK_THROWS_AS(penalty_derivative(Penalty::SCAD, -0.1, 1.0, 3.7), UsageError);
  CHECK_THROWS_AS(penalty_derivative(Penalty::SCAD, 1.0, 1.0, 2.0), UsageError);
  CHECK_THROWS_AS(penalty_derivative(Penalty::MCP, 1.0, 1.0, 1.0), UsageError);
}

TEST_CASE("penalty_value is the integral of the derivative") {
  for (Penalty fam : {Penalty::SCAD, Penalty::MCP}) {
    const double a = fam == Penalty::SCAD ? 3.7 : 3.0, lambda = 0.6;
    double integral = 0.0;
    const double h = 1e-4;
    for (double t = 0.0; t < 3.0 - 1e-12; t += h)
      integral += h * penalty_derivative(fam, t + 0.5 * h, lambda, a);
    CHECK(penalty_value(fam, 3.0, lambda, a) == doctest::Approx(integral).epsilon(1e-6));
  }
}

TEST_CASE("threshold equals the brute-force univariate minimizer") {
  RngStream rng(12, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const Penalty fam = trial % 2 ? Penalty::SCAD : Penalty::MCP;
    const double a = fam == Penalty::SCAD ? 3.7 : 3.0;
    const double z = 6.0 * (rng.uniform() - 0.5), v = 0.8 + 0.6 * rng.uniform(), lambda = 0.2 + rng.uniform();
    CHECK(threshold(fam, z, v, lambda, a) == doctest::Approx(grid_minimizer(fam, z, v, lambda, a)).epsilon(2e-4).scale(1.0));
  }
}

TEST_CASE("fit: a lambda above lambda_max gives exactly zero") {
  RngStream rng(1, 1);
  Vec beta(4);
  beta << 1, 0, -1, 0.5;
  const Dataset d = gaussian_data(80, beta, 1.0, rng);
  const auto grid = default_lambda_grid(d.X, d.y, 10, 1e-3);
  const PenaltyConfig cfg = PenaltyConfig::defaults(Penalty::SCAD);
  const PathFit path = coordinate_descent_path(d.X, d.y, {grid.front() * 1.01}, cfg);
  CHECK(path.beta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit: a vanishing lambda on an orthonormal design reproduces OLS") {
  const std::size_t n = 8;
  Mat Q = Eigen::HouseholderQR<Mat>(Mat::Random(n, 3)).householderQ() * Mat::Identity(n, 3);
  Q *= std::sqrt(static_cast<double>(n));  // X'X/n = I
  Vec y(n);
  y << 1, -2, 0.5, 3, 0, 1, -1, 2;
  for (Penalty fam : {Penalty::SCAD, Penalty::MCP}) {
    const PathFit path = coordinate_descent_path(Q, y, {1e-9}, PenaltyConfig::defaults(fam));
    const Vec ref = ols(Q, y).beta_hat;
    CHECK((path.beta.col(0) - ref).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("coordinate descent objective is nonincreasing along sweeps") {
  RngStream rng(8, 2);
  Vec beta = Vec::Zero(10);
  beta.head(3) << 2, -1, 1;
  const Dataset d = gaussian_data(60, beta, 1.0, rng);
  const auto grid = default_lambda_grid(d.X, d.y, 20, 1e-2);
  PenaltyConfig cfg = PenaltyConfig::defaults(Penalty::SCAD);
  // Every grid point converges and the descent check inside the solver
  // raises NumericalError on any objective increase across a sweep.
  const PathFit path = coordinate_descent_path(d.X, d.y, grid, cfg);
  for (std::size_t l = 1; l < grid.size(); ++l) {
    const double at_warm = penalized_objective(d.X, d.y, path.beta.col(l - 1), cfg.family, grid[l], cfg.a);
    const double at_fit = penalized_objective(d.X, d.y, path.beta.col(l), cfg.family, grid[l], cfg.a);
    CHECK(at_fit <= at_warm + 1e-12);
  }
}

TEST_CASE("fit_penalized keeps every true predictor on the grouped design") {
  std::size_t hits = 0;
  const std::size_t reps = 200;
  const SimDesign des = smallp_design(20, 200);
  const PenaltyConfig cfg = PenaltyConfig::defaults(Penalty::SCAD);
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream rng(2024, r);
    RngStream data_rng = rng.derive(10), cv_rng = rng.derive(1);
    const Dataset d = standardize(generate(des, data_rng));
    const PenalizedFit fit = fit_penalized(d, all_rows(d.n()), cfg, cv_rng);
    bool all = true;
    for (std::size_t j = 0; j < 9; ++j) all = all && fit.beta(static_cast<Eigen::Index>(j)) != 0.0;
    hits += all;
  }
  CHECK(static_cast<double>(hits) / reps >= 0.95);
}

TEST_CASE("two_step_select recovers a single strong predictor") {
  std::size_t exact = 0;
  const std::size_t reps = 200;
  SelectionConfig cfg;
  cfg.penalty = PenaltyConfig::defaults(Penalty::SCAD);
  Vec beta(2);
  beta << 2, 0;
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream rng(77, r);
    RngStream data_rng = rng.derive(10), split_rng = rng.derive(0), cv_rng = rng.derive(1);
    const Dataset d = gaussian_data(400, beta, 1.0, data_rng);
    const SplitPair sp = split_half(d.n(), split_rng);
    const ActiveSet a = two_step_select(d, sp, cfg, cv_rng);
    exact += a.indices == IndexSet{0};
  }
  CHECK(static_cast<double>(exact) / reps >= 0.95);
}

TEST_CASE("two_step_select: alpha_n = 1 keeps the whole stage-one support") {
  RngStream rng(4, 4);
  Vec beta(5);
  beta << 1, 0.3, 0, 0, 0.1;
  const Dataset d = gaussian_data(100, beta, 1.0, rng);
  RngStream sr = rng.derive(0);
  const SplitPair sp = split_half(d.n(), sr);
  SelectionConfig cfg;
  cfg.alpha_n = 1.0 - 1e-12;  // (0,1) open interval; limit of the boundary case
  cfg.bonferroni = false;
  RngStream cv1 = rng.derive(1), cv2 = rng.derive(1);
  const ActiveSet a = two_step_select(d, sp, cfg, cv1);
  CHECK(a.indices == a.stage1);
  CHECK_THROWS_AS([&] {
    SelectionConfig bad = cfg;
    bad.alpha_n = 1.5;
    two_step_select(d, sp, bad, cv2);
  }(), UsageError);
}

TEST_CASE("two_step_select: the null model yields an empty selection without error") {
  RngStream rng(5, 5);
  const Dataset d = gaussian_data(100, Vec::Zero(6), 1.0, rng);
  RngStream sr = rng.derive(0), cv = rng.derive(1);
  const SplitPair sp = split_half(d.n(), sr);
  SelectionConfig cfg;
  cfg.penalty.lambda_grid = {1e6};
  const ActiveSet a = two_step_select(d, sp, cfg, cv);
  CHECK(a.indices.empty());
  CHECK(a.q_hat() == 0);
}

TEST_CASE("dimension_match") {
  Vec truth(3);
  truth << 1, 0, 3;
  ActiveSet a;
  a.indices = {0, 2};
  CHECK(dimension_match(truth, a) == (Vec(2) << 1, 3).finished());
  a.indices = {0, 1};
  CHECK(dimension_match(truth, a) == (Vec(2) << 1, 0).finished());
  a.indices = {0, 1, 2};
  CHECK(dimension_match(truth, a) == truth);
}

TEST_CASE("refit_ols: a noiseless fit is exact") {
  Mat X(5, 2);
  X << 1, 0.3, 2, -1, 3, 0.5, -1, 2, 0.5, 0.1;
  const Vec y = 2.0 * X.col(0);
  const Dataset d = make_dataset(y, X);
  const PostSelectionFit fit = refit_ols(d, all_rows(5), {0});
  CHECK(fit.beta_hat(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.sigma2_hat == doctest::Approx(0.0).scale(1.0).epsilon(1e-20));
}

TEST_CASE("refit_ols: orthonormal design gives X'y and I/|rows|") {
  const std::size_t n = 6;
  Mat Q = Eigen::HouseholderQR<Mat>(Mat::Random(n, 2)).householderQ() * Mat::Identity(n, 2);
  Q *= std::sqrt(static_cast<double>(n));
  Vec y(n);
  y << 1, 2, 3, -1, 0, 4;
  const PostSelectionFit fit = refit_ols(make_dataset(y, Q), all_rows(n), {0, 1});
  CHECK((fit.beta_hat - Q.transpose() * y / n).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((fit.xtx_inv - Mat::Identity(2, 2) / n).cwiseAbs().maxCoeff() <= 1e-12);
  for (int j = 0; j < 2; ++j) CHECK(fit.se(j) == doctest::Approx(std::sqrt(fit.sigma2_hat * fit.xtx_inv(j, j))));
}

TEST_CASE("refit_ols: rank deficiency reports the smallest singular value") {
  Mat X(6, 2);
  X.col(0) << 1, 2, 3, 4, 5, 6;
  X.col(1) = 2.0 * X.col(0);
  Vec y = Vec::LinSpaced(6, 0, 1);
  try {
    refit_ols(make_dataset(y, X), all_rows(6), {0, 1});
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("singular value") != std::string::npos);
  }
}

TEST_CASE("refit_ols covers the truth within three standard errors") {
  Vec beta(3);
  beta << 1, -0.5, 0.25;
  std::size_t covered = 0, total = 0;
  for (std::size_t r = 0; r < 200; ++r) {
    RngStream rng(300, r);
    const Dataset d = gaussian_data(300, beta, 1.0, rng);
    const PostSelectionFit fit = refit_ols(d, all_rows(300), {0, 1, 2});
    for (int j = 0; j < 3; ++j, ++total) covered += std::abs(fit.beta_hat(j) - beta(j)) <= 3.0 * fit.se(j);
  }
  CHECK(static_cast<double>(covered) / total >= 0.98);
}

TEST_CASE("standardized inference-half coefficients are normal (KS at level 0.01)") {
  Vec beta(3);
  beta << 1, -0.5, 0.25;
  std::vector<double> z;
  for (std::size_t r = 0; r < 500; ++r) {
    RngStream rng(400, r);
    RngStream dr = rng.derive(10), sr = rng.derive(0);
    const Dataset d = gaussian_data(400, beta, 1.0, dr);
    const SplitPair sp = split_half(d.n(), sr);
    const PostSelectionFit fit = refit_ols(d, sp.d2, {0, 1, 2});
    for (int j = 0; j < 3; ++j) z.push_back((fit.beta_hat(j) - beta(j)) / fit.se(j));
  }
  const auto [D, p] = ks_test_normal(z);
  CHECK(D > 0.0);
  CHECK(p > 0.01);
}

TEST_CASE("selection is bitwise reproducible under identical streams") {
  const SimDesign des = smallp_design(20, 200);
  RngStream g(1, 1);
  const Dataset d = standardize(generate(des, g));
  SelectionConfig cfg;
  RngStream s1(5, 0), s2(5, 0);
  const SplitPair sp1 = split_half(d.n(), s1), sp2 = split_half(d.n(), s2);
  RngStream c1(5, 1), c2(5, 1);
  const ActiveSet a1 = two_step_select(d, sp1, cfg, c1), a2 = two_step_select(d, sp2, cfg, c2);
  CHECK(a1.indices == a2.indices);
  CHECK(a1.lambda_star == a2.lambda_star);
}
