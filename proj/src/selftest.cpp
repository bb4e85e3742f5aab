// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/selftest.hpp"

#include "nwmclust/simulation.hpp"

#include <sstream>

namespace nwmc {

namespace {

std::string num(double x) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << x;
  return s.str();
}

Mat random_symmetric(std::size_t m, RngStream& rng) {
  Mat A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) A(i, j) = A(j, i) = rng.normal();
  return A;
}

Vec interior_point(std::size_t q, RngStream& rng) {
  Vec v(static_cast<Eigen::Index>(q));
  for (auto& x : v) x = 0.1 + 0.8 * rng.uniform();
  return v;
}

double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

// Transformed partial correlations as a function of the half-vectorized precision matrix.
Vec rho_from_half(const Vec& h, std::size_t m) {
  Vec rho(static_cast<Eigen::Index>(m - 1));
  auto g = [&](std::size_t i, std::size_t j) { return h(static_cast<Eigen::Index>(half_vec_index(i, j, m))); };
  for (std::size_t i = 1; i < m; ++i)
    rho(static_cast<Eigen::Index>(i - 1)) = 0.5 * (1.0 - g(i, 0) / std::sqrt(g(0, 0) * g(i, i)));
  return rho;
}

}  // namespace

std::vector<SelftestCase> run_selftest(std::uint64_t seed) {
  std::vector<SelftestCase> out;
  RngStream rng(seed, 0);
  auto add = [&](std::string name, bool ok, std::string detail) { out.push_back({std::move(name), ok, std::move(detail)}); };

  {
    double worst = 0.0;
    for (std::size_t m = 1; m <= 6; ++m) {
      const Mat M = random_symmetric(m, rng);
      worst = std::max(worst, (elimination_matrix(m) * vec(M) - half_vec(M)).cwiseAbs().maxCoeff());
    }
    add("elimination matrix maps vec to half-vec", worst == 0.0, "max deviation " + num(worst));
  }
  {
    double worst = 0.0;
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
      const Vec v = interior_point(3 + static_cast<std::size_t>(t % 6), rng);
      const IdentityCheck c = centrality_identity_check(build_network(v, WeightFunction::f2(), WeightFamily::F_ON_RHO));
      ok = ok && c.ok;
      worst = std::max(worst, c.max_deviation);
    }
    add("degree / clustering coefficient identity", ok && worst <= 1e-10, "max deviation " + num(worst));
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) worst = std::max(worst, std::abs(f1_f2_identity_residual(rng.uniform(), rng.uniform())));
    add("f1 / f2 identity", worst <= 1e-10, "max residual " + num(worst));
  }
  {
    // Pure interaction and pure main effects on a replicated 2x2 layout.
    Eigen::MatrixXi F(8, 2);
    F << 0, 0, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1;
    Vec inter(8), main(8);
    inter << 1, 1, 0, 0, 0, 0, 1, 1;
    main << 1, 1, 1, 1, 0, 0, 0, 0;
    const double wi = anova_weights(inter, F).W(0, 1), wm = anova_weights(main, F).W(0, 1);
    add("ANOVA weights on hand-computed 2x2 cases", wi == 1.0 && wm == 0.0, "interaction " + num(wi) + ", main " + num(wm));
  }
  {
    double worst = 0.0;
    const WeightFunction fs[2] = {WeightFunction::f1(), WeightFunction::f2()};
    for (int t = 0; t < 20; ++t) {
      const Vec v = interior_point(4 + static_cast<std::size_t>(t % 3), rng);
      for (const auto& f : fs)
        for (NwmKind k : {NwmKind::DEGREE, NwmKind::CLUSTERING}) {
          NwmSpec spec;
          spec.kind = k;
          const Mat fd = fd_jacobian([&](const Vec& x) { return nwm_from_values(x, f, spec); }, v);
          worst = std::max(worst, rel_err(grad_nwm(v, f, spec), fd));
        }
    }
    add("metric Jacobians match finite differences", worst <= 1e-5, "max relative error " + num(worst));
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const std::size_t m = 3 + static_cast<std::size_t>(t % 4);
      Mat A = random_symmetric(m, rng);
      const Mat G = A * A.transpose() + Mat::Identity(A.rows(), A.cols()) * static_cast<double>(m);
      const Vec h = half_vec(G);
      const Mat fd = fd_jacobian([&](const Vec& x) { return rho_from_half(x, m); }, h);
      worst = std::max(worst, rel_err(grad_h(G, true), fd));
    }
    add("partial-correlation gradient matches finite differences", worst <= 1e-5, "max relative error " + num(worst));
  }
  {
    double worst = 0.0;
    for (Penalty fam : {Penalty::SCAD, Penalty::MCP}) {
      const double a = fam == Penalty::SCAD ? 3.7 : 3.0;
      for (int t = 0; t < 200; ++t) {
        const double z = 4.0 * rng.normal(), v = 0.2 + 2.0 * rng.uniform(), lam = 0.1 + rng.uniform();
        const double b = threshold(fam, z, v, lam, a);
        // Objective v/2 (b - z/v)^2 + p(|b|) must not be beaten on a fine grid.
        auto obj = [&](double x) { return 0.5 * v * x * x - z * x + penalty_value(fam, std::abs(x), lam, a); };
        double best = obj(b);
        for (int g = -4000; g <= 4000; ++g) best = std::min(best, obj(g * 0.005));
        worst = std::max(worst, obj(b) - best);
      }
    }
    add("SCAD / MCP thresholding minimizes the univariate objective", worst <= 1e-9, "max excess " + num(worst));
  }
  {
    const double c0 = folded_normal_critical(0.0, 0.05);
    add("folded-normal critical value at delta = 0", std::abs(c0 - 1.959963984540054) <= 1e-8, "c = " + num(c0));
  }
  {
    const SimDesign d = nwm_bias_design(100);
    const double D = population_metric(d, d.support(), nwm_bias_metric(NwmKind::DEGREE)).mean();
    add("population mean degree of the ten-variable design", std::abs(D - 9.7477) <= 5e-4, "mean degree " + num(D));
  }
  {
    SimDesign d = smallp_design(9, 120);
    RngStream g(seed, 1);
    const Dataset ds = generate(d, g);
    IndexSet rows(ds.n());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const Mat Z = inference_matrix(ds, rows, d.support());
    MetricSpec spec;
    BootstrapConfig bc;
    bc.B = 50;
    bc.seed = seed;
    const Mat a = mepsrs_covariance(Z, spec, bc).sigma;
    bc.threads = 4;
    const Mat b = mepsrs_covariance(Z, spec, bc).sigma;
    add("bootstrap covariance is identical across thread counts", a == b, "max difference " + num((a - b).cwiseAbs().maxCoeff()));
  }
  {
    const auto [lo, hi] = wilson_interval(450, 500);
    add("Wilson half-width at 500 replicates near 0.9", (hi - lo) / 2 <= 0.046, "half-width " + num((hi - lo) / 2));
  }
  return out;
}

}  // namespace nwmc
