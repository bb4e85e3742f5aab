// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
//
// Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned
// below. Exits nonzero when any criterion fails.
#include "nwmclust/asymptotics.hpp"
#include "nwmclust/network.hpp"
#include "nwmclust/nwm.hpp"
#include "nwmclust/simulation.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

using namespace nwmc;

namespace {

// Pinned tolerances and targets.
constexpr std::size_t kReplicates = 500;
constexpr std::uint64_t kSeed = 7;

constexpr double kSeqRb0 = 0.9104, kSeqRb5 = 0.8574, kSeqTol = 0.05;
constexpr double kKmRb0 = 0.8624, kKmTol = 0.06, kKmRb5Max = 0.02;
constexpr double kSpecRb0Min = 0.99, kSpecRb5Max = 0.02;

constexpr double kIccStrongMin = 0.90, kIccWeakMin = 0.75;

constexpr double kCombDegP20 = 0.90, kCombDegP50 = 0.89, kCombClu = 0.90;

constexpr double kDTarget = 9.748, kDTol = 0.06, kCTarget = 0.545, kCTol = 0.01, kKsLevel = 0.01;

constexpr double kCovRelFrob = 0.20;
constexpr std::size_t kCovN = 2000, kCovB = 500, kCovMc = 2000;

constexpr double kFdRelTol = 1e-5;
constexpr int kFdPoints = 100;

constexpr double kIdentityTol = 1e-10;

constexpr double kTrendSlack = 0.03;

std::size_t threads() {
  if (const char* t = std::getenv("NWMC_THREADS")) return std::max<long>(1, std::atol(t));
  return std::max(1u, std::thread::hardware_concurrency());
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %d [%s] %s: %s\n", id, ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double x, int prec = 4) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", prec, x);
  return b;
}

ExperimentOptions base_options() {
  ExperimentOptions o;
  o.replicates = kReplicates;
  o.seed = kSeed;
  o.threads = threads();
  return o;
}

// ----------------------------------------------------------------- 1
void table_unsup() {
  ExperimentOptions o = base_options();
  o.rb_values = {0.0, 0.5};
  const McReport r = run_table(Experiment::UNSUP_VS_SEQ, o);
  const double s0 = r.cell("sequential@rb=0.0").rate, s5 = r.cell("sequential@rb=0.5").rate;
  const double k0 = r.cell("kmeans@rb=0.0").rate, k5 = r.cell("kmeans@rb=0.5").rate;
  const double p0 = r.cell("spectral@rb=0.0").rate, p5 = r.cell("spectral@rb=0.5").rate;
  const bool ok = std::abs(s0 - kSeqRb0) <= kSeqTol && std::abs(s5 - kSeqRb5) <= kSeqTol &&
                  std::abs(k0 - kKmRb0) <= kKmTol && k5 <= kKmRb5Max && p0 >= kSpecRb0Min && p5 <= kSpecRb5Max;
  report(1, "unsupervised vs sequential table", ok,
         "sequential " + num(s0) + "/" + num(s5) + " (targets " + num(kSeqRb0) + "/" + num(kSeqRb5) + " +-" +
             num(kSeqTol, 2) + "), k-means " + num(k0) + "/" + num(k5) + ", spectral " + num(p0) + "/" + num(p5) +
             ", " + num(r.wall_seconds, 1) + " s");
}

// ----------------------------------------------------------------- 2
void icc_choice() {
  const McReport r = run_table(Experiment::ICC_K, base_options());
  const double s = r.cell("strong@K=3").rate, w = r.cell("weak@K=3").rate;
  report(2, "ICC chooses K = 3", s >= kIccStrongMin && w >= kIccWeakMin,
         "strong " + num(s) + " (>= " + num(kIccStrongMin, 2) + "), weak " + num(w) + " (>= " + num(kIccWeakMin, 2) +
             ")");
}

// ----------------------------------------------------------------- 3
void smallp_recovery() {
  ExperimentOptions o = base_options();
  o.p_values = {20, 50};
  o.n_values = {200};
  o.alphas = {0.05};
  const McReport r = run_table(Experiment::SMALLP_SEQ, o);
  auto comb = [&](const char* kind, int p) {
    return r.cell(std::string(kind) + "@p=" + std::to_string(p) + ",n=200,alpha=0.05/combined").rate;
  };
  const double d20 = comb("degree", 20), d50 = comb("degree", 50), c20 = comb("clustering", 20),
               c50 = comb("clustering", 50);
  const bool ok = d20 >= kCombDegP20 && d50 >= kCombDegP50 && c20 >= kCombClu && c50 >= kCombClu;
  report(3, "p = 20/50 combined recovery", ok,
         "degree " + num(d20) + "/" + num(d50) + " (>= " + num(kCombDegP20, 2) + "/" + num(kCombDegP50, 2) +
             "), clustering " + num(c20) + "/" + num(c50) + " (>= " + num(kCombClu, 2) + ")");
}

// ----------------------------------------------------------------- 4
void nwm_targets() {
  ExperimentOptions o = base_options();
  o.n_values = {300};
  const McReport r = run_table(Experiment::NWM_BIAS, o);
  const double D = r.value("D@n=300/mean"), C = r.value("C@n=300/mean");
  const double kd = r.value("D@n=300/ks_p"), kc = r.value("C@n=300/ks_p");
  const bool ok = std::abs(D - kDTarget) <= kDTol && std::abs(C - kCTarget) <= kCTol && kd > kKsLevel && kc > kKsLevel;
  report(4, "network-metric targets at n = 300", ok,
         "mean D " + num(D) + " (target " + num(kDTarget, 3) + " +-" + num(kDTol, 2) + "), mean C " + num(C) +
             " (target " + num(kCTarget, 3) + " +-" + num(kCTol, 2) + "), KS p " + num(kd, 3) + "/" + num(kc, 3));
}

// ----------------------------------------------------------------- 5
void covariance_cross_check() {
  SimDesign des;
  des.p = 3;
  des.n = kCovN;
  des.beta = (Vec(3) << 1.0, 0.5, 2.0).finished();
  double worst = 0.0;
  std::ostringstream detail;
  std::uint64_t seed = kSeed;
  for (WeightFamily fam : {WeightFamily::F_ON_RHO, WeightFamily::F_ON_BETA})
    for (NwmKind kind : {NwmKind::DEGREE, NwmKind::CLUSTERING}) {
      MetricSpec spec;
      spec.family = fam;
      spec.nwm.kind = kind;
      const CovAgreement a = covariance_agreement(des, spec, kCovB, kCovMc, seed++, threads());
      const double m = std::max({a.plugin_vs_oracle, a.bootstrap_vs_oracle, a.plugin_vs_bootstrap});
      worst = std::max(worst, m);
      detail << to_string(fam) << '/' << to_string(kind) << ' ' << num(a.plugin_vs_oracle, 3) << ','
             << num(a.bootstrap_vs_oracle, 3) << ',' << num(a.plugin_vs_bootstrap, 3) << "; ";
    }
  report(5, "covariance cross-validation", worst <= kCovRelFrob,
         "worst relative Frobenius " + num(worst, 3) + " (<= " + num(kCovRelFrob, 2) + "); " + detail.str());
}

// ----------------------------------------------------------------- 6
Mat central_fd(const std::function<Vec(const Vec&)>& g, const Vec& x) {
  Mat J(g(x).size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x(k)));
    Vec a = x, b = x;
    a(k) += h;
    b(k) -= h;
    J.col(k) = (g(a) - g(b)) / (2 * h);
  }
  return J;
}

double rel_err(const Mat& A, const Mat& B) {
  return (A - B).cwiseAbs().maxCoeff() / std::max(1.0, B.cwiseAbs().maxCoeff());
}

Vec rho_from_half(const Vec& h, Eigen::Index m) {
  Mat G(m, m);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = j; i < m; ++i) G(i, j) = G(j, i) = h(k++);
  Vec r(m - 1);
  for (Eigen::Index i = 1; i < m; ++i) r(i - 1) = 0.5 * (1.0 - G(0, i) / std::sqrt(G(0, 0) * G(i, i)));
  return r;
}

void differentiation() {
  RngStream rng(kSeed, 9001);
  double wd = 0, wc = 0, wh = 0, wgh = 0;
  for (int t = 0; t < kFdPoints; ++t) {
    const std::size_t q = 3 + rng.index(5);
    Vec v(q);
    for (std::size_t i = 0; i < q; ++i) v(i) = 0.1 + 0.8 * rng.uniform();
    for (const auto& f : {WeightFunction::f1(), WeightFunction::f2()})
      for (NwmKind kind : {NwmKind::DEGREE, NwmKind::CLUSTERING}) {
        NwmSpec spec;
        spec.kind = kind;
        const Mat fd = central_fd([&](const Vec& x) { return nwm_from_values(x, f, spec); }, v);
        const Mat J = kind == NwmKind::DEGREE ? grad_L_D(v, f) : grad_L_C(v, f);
        (kind == NwmKind::DEGREE ? wd : wc) = std::max(kind == NwmKind::DEGREE ? wd : wc, rel_err(J, fd));
        const auto H = hessian_nwm(v, f, spec);
        for (std::size_t i = 0; i < q; ++i) {
          const Mat fdH = central_fd(
              [&](const Vec& x) { return Vec(grad_nwm(x, f, spec).row(static_cast<Eigen::Index>(i)).transpose()); }, v);
          wh = std::max(wh, rel_err(H[i], fdH));
        }
      }
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.index(5));
    Mat A(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) A(i, j) = rng.normal();
    const Mat S = A * A.transpose() + static_cast<double>(m) * Mat::Identity(m, m);
    wgh = std::max(wgh, rel_err(grad_h(S), central_fd([&](const Vec& h) { return rho_from_half(h, m); }, half_vec(S))));
  }
  const double worst = std::max({wd, wc, wh, wgh});
  report(6, "derivatives vs central differences", worst <= kFdRelTol,
         "max relative error L_D " + num(wd * 1e6, 3) + "e-6, L_C " + num(wc * 1e6, 3) + "e-6, Hessians " +
             num(wh * 1e6, 3) + "e-6, grad h " + num(wgh * 1e6, 3) + "e-6 (<= 1e-5, " + std::to_string(kFdPoints) +
             " points)");
}

// ----------------------------------------------------------------- 7
void identities() {
  RngStream rng(kSeed, 9002);
  bool elim_exact = true;
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 1 + rng.index(7);
    Mat A(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) A(i, j) = rng.normal();
    const Mat M = A + A.transpose();
    elim_exact = elim_exact && (elimination_matrix(m) * vec(M) - half_vec(M)).cwiseAbs().maxCoeff() == 0.0;
  }
  double id_dev = 0.0;
  bool id_ok = true;
  for (int t = 0; t < 100; ++t) {
    const std::size_t q = 3 + rng.index(9);
    ImplicitNetwork net;
    net.W = Mat::Zero(q, q);
    for (std::size_t i = 0; i < q; ++i) {
      net.vertices.push_back(i);
      for (std::size_t j = i + 1; j < q; ++j) net.W(i, j) = net.W(j, i) = 3.0 * rng.uniform();
    }
    const IdentityCheck c = centrality_identity_check(net);
    id_ok = id_ok && c.ok;
    id_dev = std::max(id_dev, c.max_deviation);
  }
  double f_dev = 0.0;
  for (int t = 0; t < 5000; ++t) f_dev = std::max(f_dev, std::abs(f1_f2_identity_residual(rng.uniform(), rng.uniform())));
  for (double x : {0.0, 0.5, 1.0})
    for (double y : {0.0, 0.5, 1.0}) f_dev = std::max(f_dev, std::abs(f1_f2_identity_residual(x, y)));

  // ANOVA: hand 2x2 cases exact, random balanced designs within [0,1].
  Eigen::MatrixXi F(4, 2);
  F << 0, 0, 0, 1, 1, 0, 1, 1;
  Vec inter(4), addit(4);
  inter << 1, -1, -1, 1;
  addit << 0, 1, 2, 3;
  const double w_inter = anova_weights(inter, F).W(0, 1), w_add = anova_weights(addit, F).W(0, 1);
  bool in_range = true;
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXi G(24, 3);
    Vec y(24);
    for (int i = 0; i < 24; ++i) {
      G(i, 0) = i % 2;
      G(i, 1) = (i / 2) % 3;
      G(i, 2) = (i / 6) % 2;
      y(i) = rng.normal() + G(i, 0) * G(i, 1);
    }
    const Mat W = anova_weights(y, G).W;
    in_range = in_range && W.minCoeff() >= 0.0 && W.maxCoeff() <= 1.0;
  }
  const bool anova_ok = w_inter == 1.0 && w_add == 0.0 && in_range;
  const bool ok = elim_exact && id_ok && id_dev <= kIdentityTol && f_dev <= kIdentityTol && anova_ok;
  report(7, "algebraic identities", ok,
         std::string("K vec(M) = v(M) ") + (elim_exact ? "exact" : "inexact") + ", degree/clustering identity " +
             num(id_dev * 1e12, 3) + "e-12, f1/f2 identity " + num(f_dev * 1e12, 3) + "e-12, ANOVA 2x2 " +
             num(w_inter, 1) + "/" + num(w_add, 1) + (in_range ? ", within [0,1]" : ", out of [0,1]"));
}

// ----------------------------------------------------------------- 8
void trends() {
  ExperimentOptions o = base_options();
  o.p_values = {20};
  o.n_values = {100, 200, 400};
  o.alphas = {0.05};
  o.kinds = {NwmKind::DEGREE};
  const McReport r = run_table(Experiment::SMALLP_SEQ, o);
  std::vector<double> sel, comb;
  for (auto n : o.n_values) {
    sel.push_back(r.cell("selection@p=20,n=" + std::to_string(n)).rate);
    comb.push_back(r.cell("degree@p=20,n=" + std::to_string(n) + ",alpha=0.05/combined").rate);
  }
  bool ok = true;
  for (std::size_t i = 1; i < sel.size(); ++i) ok = ok && sel[i] >= sel[i - 1] - kTrendSlack && comb[i] >= comb[i - 1] - kTrendSlack;
  report(8, "consistency trends in n", ok,
         "selection " + num(sel[0], 3) + " -> " + num(sel[1], 3) + " -> " + num(sel[2], 3) + ", combined " +
             num(comb[0], 3) + " -> " + num(comb[1], 3) + " -> " + num(comb[2], 3) + " (n = 100, 200, 400; slack " +
             num(kTrendSlack, 2) + ")");
}

// ----------------------------------------------------------------- 9
void determinism() {
  bool ok = true;
  std::string detail;
  for (const auto& name : experiment_names()) {
    ExperimentOptions o;
    o.replicates = 8;
    o.bootstrap_B = 50;
    o.seed = kSeed;
    o.threads = 1;
    const Experiment e = *parse_experiment(name);
    const std::string a = run_table(e, o).table_csv;
    o.threads = 3;
    const std::string b = run_table(e, o).table_csv;
    const bool same = a == b && !a.empty();
    ok = ok && same;
    detail += name + (same ? " identical; " : " DIFFERS; ");
  }
  report(9, "thread-count determinism", ok, detail + "threads 1 vs 3");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  std::printf("acceptance: %zu replicates, seed %llu, %zu thread(s)\n", kReplicates,
              static_cast<unsigned long long>(kSeed), threads());
  const std::function<void()> steps[] = {table_unsup, icc_choice, smallp_recovery, nwm_targets, covariance_cross_check,
                                         differentiation, identities, trends, determinism};
  int id = 1;
  for (const auto& s : steps) {
    try {
      s();
    } catch (const std::exception& e) {
      report(id, "error", false, e.what());
    }
    ++id;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("acceptance: %d of 9 criteria failed, %.1f s\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
