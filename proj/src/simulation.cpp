// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/simulation.hpp"

#include "nwmclust/parallel.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace nwmc {

// ---------------------------------------------------------------- designs

Mat SimDesign::covariance() const {
  std::vector<int> group(p, -1);
  for (std::size_t g = 0; g < corr_groups.size(); ++g)
    for (auto j : corr_groups[g])
      if (j < p) group[j] = static_cast<int>(g);
  Mat S = Mat::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      if (i == j || group[i] < 0 || group[j] < 0) continue;
      S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = group[i] == group[j] ? r_w : r_b;
    }
  return S;
}

void SimDesign::validate() const {
  require(p >= 1, "design needs at least one predictor");
  require(n >= 4, "design needs n >= 4");
  require(static_cast<std::size_t>(beta.size()) == p, "beta length must equal p");
  require(std::isfinite(sigma2) && sigma2 >= 0.0, "sigma2 must be finite and >= 0");
  std::set<std::size_t> seen;
  for (const auto& g : corr_groups)
    for (auto j : g) {
      require(j < p, "correlation group member out of range");
      require(seen.insert(j).second, "correlation groups must be disjoint");
    }
  Eigen::SelfAdjointEigenSolver<Mat> es(covariance(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-12) {
    std::ostringstream msg;
    msg << "design covariance (r_w=" << r_w << ", r_b=" << r_b
        << ") is not positive definite; smallest eigenvalue " << es.eigenvalues().minCoeff();
    throw UsageError(msg.str());
  }
}

IndexSet SimDesign::support() const {
  IndexSet s;
  for (std::size_t j = 0; j < p; ++j)
    if (beta(static_cast<Eigen::Index>(j)) != 0.0) s.push_back(j);
  return s;
}

Dataset generate(const SimDesign& design, RngStream& rng) {
  design.validate();
  const auto n = static_cast<Eigen::Index>(design.n), p = static_cast<Eigen::Index>(design.p);
  const Mat L = design.covariance().llt().matrixL();
  Mat E(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) E(i, j) = rng.normal();
  Mat X = E * L.transpose();
  Vec y = X * design.beta;
  if (design.sigma2 > 0.0) {
    const double s = std::sqrt(design.sigma2);
    for (Eigen::Index i = 0; i < n; ++i) y(i) += s * rng.normal();
  }
  return make_dataset(std::move(y), std::move(X));
}

Mat population_joint_covariance(const SimDesign& design, const IndexSet& support) {
  design.validate();
  const Mat S = design.covariance();
  const Vec sb = S * design.beta;
  const auto q = static_cast<Eigen::Index>(support.size());
  Mat J(q + 1, q + 1);
  J(0, 0) = design.beta.dot(sb) + design.sigma2;
  for (Eigen::Index a = 0; a < q; ++a) {
    const auto ia = static_cast<Eigen::Index>(support[static_cast<std::size_t>(a)]);
    J(0, a + 1) = J(a + 1, 0) = sb(ia);
    for (Eigen::Index b = 0; b < q; ++b) J(a + 1, b + 1) = S(ia, static_cast<Eigen::Index>(support[static_cast<std::size_t>(b)]));
  }
  return J;
}

Vec population_metric(const SimDesign& design, const IndexSet& support, const MetricSpec& spec) {
  require(!support.empty(), "population metric needs a nonempty support");
  const Mat J = population_joint_covariance(design, support);
  Vec values;
  if (spec.family == WeightFamily::F_ON_BETA) {
    const auto q = J.rows() - 1;
    values = J.bottomRightCorner(q, q).ldlt().solve(J.col(0).tail(q));
  } else {
    require(spec.family == WeightFamily::F_ON_RHO, "population metric supports beta or rho weights");
    const PartialCorrelations pc = partial_correlations_from_cov(J);
    values = spec.raw_rho ? pc.rho_raw : pc.rho;
  }
  return nwm_from_values(values, spec.f, spec.nwm);
}

// ------------------------------------------------------------- statistics

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n), ph = static_cast<double>(k) / nn, z2 = z * z;
  const double centre = (ph + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, std::min(ph, centre - half)), std::min(1.0, std::max(ph, centre + half))};
}

std::pair<double, double> ks_test_normal(std::vector<double> x) {
  require(x.size() >= 2, "KS test needs at least two observations");
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> N01;
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = boost::math::cdf(N01, x[i]);
    D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  // Kolmogorov limiting distribution with Stephens' finite-n correction.
  const double sn = std::sqrt(n), lam = (sn + 0.12 + 0.11 / sn) * D;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return {D, std::clamp(p, 0.0, 1.0)};
}

// ------------------------------------------------------------ experiments

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::UNSUP_VS_SEQ: return "unsup-vs-seq";
    case Experiment::ICC_K: return "icc-k";
    case Experiment::SMALLP_SEQ: return "smallp-seq";
    case Experiment::NWM_BIAS: return "nwm-bias";
    case Experiment::WRONG_K: return "wrong-k";
    case Experiment::COV_TIMING: return "cov-timing";
  }
  return "unknown";
}

std::vector<std::string> experiment_names() {
  return {"unsup-vs-seq", "icc-k", "smallp-seq", "nwm-bias", "wrong-k", "cov-timing"};
}

std::optional<Experiment> parse_experiment(const std::string& s) {
  std::string k = s;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return c == '_' ? '-' : std::tolower(c); });
  for (auto e : {Experiment::UNSUP_VS_SEQ, Experiment::ICC_K, Experiment::SMALLP_SEQ, Experiment::NWM_BIAS,
                 Experiment::WRONG_K, Experiment::COV_TIMING})
    if (to_string(e) == k) return e;
  return std::nullopt;
}

const RateCell& McReport::cell(const std::string& label) const {
  for (const auto& c : cells)
    if (c.label == label) return c;
  throw UsageError("no table cell named '" + label + "'");
}

double McReport::value(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw UsageError("no report value named '" + key + "'");
  return it->second;
}

void ExperimentOptions::validate() const {
  require(replicates >= 1, "replicates must be >= 1");
  require(bootstrap_B >= 2, "bootstrap B must be >= 2");
  for (double a : alphas) require(a > 0.0 && a < 1.0, "alpha must lie in (0,1)");
  for (double r : rb_values) require(r > -1.0 && r < 1.0, "r_b must lie in (-1,1)");
  for (auto n : n_values) require(n >= 8, "n must be >= 8");
  for (auto k : k_values) require(k >= 1, "K must be >= 1");
  for (const auto& d : designs) require(d == "strong" || d == "weak", "ICC design must be 'strong' or 'weak'");
}

PipelineConfig simulation_pipeline(NwmKind kind, double alpha, std::size_t K, const ExperimentOptions& opt) {
  PipelineConfig cfg;
  cfg.selection.penalty = PenaltyConfig::defaults(Penalty::SCAD);
  cfg.selection.alpha_n = 0.05;
  cfg.selection.bonferroni = true;
  cfg.metric.family = WeightFamily::F_ON_RHO;
  cfg.metric.f = WeightFunction::f2();
  cfg.metric.raw_rho = false;
  cfg.metric.nwm.kind = kind;
  cfg.metric.nwm.pairs = PairCounting::ORDERED;
  cfg.cov = opt.cov;
  cfg.bootstrap_B = opt.bootstrap_B;
  cfg.seq.K = K;
  cfg.seq.tau = 0.0;
  cfg.seq.alpha = alpha;
  cfg.seq.bonferroni = true;
  return cfg;
}

SimDesign unsup_design(double r_b, std::size_t n) {
  SimDesign d;
  d.n = n;
  d.p = 9;
  d.beta = Vec(9);
  d.beta << 1, -1, 3, 1, 1, 2, -1, 2, -1;
  d.r_w = 0.5;
  d.r_b = r_b;
  d.corr_groups = unsup_truth();
  return d;
}

std::vector<IndexSet> unsup_truth() { return {{0, 3, 4}, {1, 6, 8}, {2, 5, 7}}; }

SimDesign icc_design(bool weak, std::size_t n) {
  SimDesign d;
  d.n = n;
  d.p = 9;
  d.beta = Vec(9);
  if (weak)
    d.beta << 0.4, 0.4, 0.4, -0.2, -0.2, -0.2, 0.8, 0.8, 0.8;
  else
    d.beta << 1, 1, 1, -1, -1, -1, 2, 2, 2;
  return d;
}

SimDesign smallp_design(std::size_t p, std::size_t n) {
  require(p >= 9, "the grouped design needs p >= 9");
  SimDesign d;
  d.n = n;
  d.p = p;
  d.beta = Vec::Zero(static_cast<Eigen::Index>(p));
  d.beta.head(9) << 1, 1, 1, -1, -1, -1, 2, 2, 2;
  return d;
}

std::vector<IndexSet> grouped_truth() { return {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}}; }

SimDesign nwm_bias_design(std::size_t n) {
  SimDesign d;
  d.n = n;
  d.p = 10;
  d.beta = Vec(10);
  d.beta << 1, 1, 1, 1, 1, 1, 1, 2, 2, 2;
  return d;
}

MetricSpec nwm_bias_metric(NwmKind kind) {
  MetricSpec m;
  m.family = WeightFamily::F_ON_RHO;
  m.f = WeightFunction::f2();
  m.raw_rho = true;
  m.nwm.kind = kind;
  m.nwm.pairs = PairCounting::UNORDERED;
  return m;
}

namespace {

constexpr std::uint64_t kCellStride = 1000000;

std::string fmt(double x, const char* f = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void finish_cell(RateCell& c) {
  c.rate = c.trials ? static_cast<double>(c.successes) / static_cast<double>(c.trials) : 0.0;
  std::tie(c.lo, c.hi) = wilson_interval(c.successes, c.trials);
}

RateCell make_cell(std::string label, const std::vector<char>& hits, std::optional<double> published = std::nullopt) {
  RateCell c;
  c.label = std::move(label);
  c.trials = hits.size();
  c.successes = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), 1));
  c.published = published;
  finish_cell(c);
  return c;
}

std::vector<IndexSet> nonempty_sorted(const std::vector<IndexSet>& cl) {
  std::vector<IndexSet> out;
  for (auto c : cl)
    if (!c.empty()) {
      std::sort(c.begin(), c.end());
      out.push_back(c);
    }
  std::sort(out.begin(), out.end());
  return out;
}

// True when the nonempty clusters are exactly the truth groups (any order) and nothing is left over.
bool same_partition(const ClusterResult& r, const std::vector<IndexSet>& truth) {
  return r.unassigned.empty() && nonempty_sorted(r.clusters) == nonempty_sorted(truth);
}

// Truth groups ordered by decreasing mean population metric (the rank the sequential test forms them in).
std::vector<IndexSet> rank_truth(const SimDesign& design, const std::vector<IndexSet>& truth, const MetricSpec& spec) {
  const IndexSet S = design.support();
  const Vec m = population_metric(design, S, spec);
  auto pos = [&](std::size_t col) {
    return static_cast<Eigen::Index>(std::lower_bound(S.begin(), S.end(), col) - S.begin());
  };
  std::vector<std::pair<double, std::size_t>> score;
  for (std::size_t g = 0; g < truth.size(); ++g) {
    double s = 0.0;
    for (auto j : truth[g]) s += m(pos(j));
    score.emplace_back(-s / static_cast<double>(truth[g].size()), g);
  }
  std::stable_sort(score.begin(), score.end());
  std::vector<IndexSet> out;
  for (const auto& [s, g] : score) out.push_back(truth[g]);
  return out;
}

IndexSet sorted(IndexSet s) {
  std::sort(s.begin(), s.end());
  return s;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Inference on every row (no selection half).
SplitPair full_sample(const Dataset& d) {
  SplitPair s;
  s.d2.resize(d.n());
  std::iota(s.d2.begin(), s.d2.end(), std::size_t{0});
  return s;
}

ActiveSet known_support(const SimDesign& design) {
  ActiveSet a;
  a.indices = design.support();
  return a;
}

void tally_failures(McReport& rep, const std::vector<std::string>& stages) {
  for (const auto& s : stages)
    if (!s.empty()) ++rep.failures[s];
}

std::vector<double> or_default(const std::vector<double>& v, std::vector<double> d) { return v.empty() ? d : v; }
std::vector<std::size_t> or_default(const std::vector<std::size_t>& v, std::vector<std::size_t> d) {
  return v.empty() ? d : v;
}

// ------------------------------------------------- unsupervised vs sequential

struct UnsupRep {
  char kmeans = 0, spectral = 0, seq = 0;
  std::string failure;
};

UnsupRep unsup_replicate(const SimDesign& design, std::size_t K, const std::vector<IndexSet>& target_seq,
                         const ExperimentOptions& opt, RngStream rng) {
  UnsupRep out;
  RngStream data_rng = rng.derive(10), km_rng = rng.derive(11), sp_rng = rng.derive(12);
  const Dataset d = standardize(generate(design, data_rng));
  const auto truth = unsup_truth();
  const bool too_many = K > truth.size();
  try {
    const ClusterResult km = modified_kmeans(d, K, km_rng, hartigan_single_start());
    out.kmeans = !too_many && K == truth.size() && same_partition(km, truth);
  } catch (const Error&) {
    out.failure = "kmeans";
  }
  try {
    const ClusterResult sp = modified_spectral(d, K, sp_rng);
    out.spectral = !too_many && K == truth.size() && same_partition(sp, truth);
  } catch (const Error&) {
    out.failure = "spectral";
  }
  try {
    // All nine predictors are active: cluster on the full sample with the
    // known support, as the unsupervised baselines use every row too.
    const PipelineConfig cfg = simulation_pipeline(NwmKind::DEGREE, 0.05, K, opt);
    const SplitOutcome s = run_inference(d, cfg, full_sample(d), known_support(design), rng.derive(2));
    const auto& cl = s.clusters.clusters;
    if (K >= truth.size()) {
      // All true groups formed (any order), every later cluster empty, nothing left over.
      std::vector<IndexSet> first(cl.begin(), cl.begin() + static_cast<std::ptrdiff_t>(std::min(cl.size(), truth.size())));
      bool ok = s.clusters.unassigned.empty() && nonempty_sorted(first) == nonempty_sorted(truth);
      for (std::size_t k = truth.size(); k < cl.size(); ++k) ok = ok && cl[k].empty();
      out.seq = ok;
    } else {
      // Fewer clusters than groups: the formed clusters are the top-K groups by association.
      std::vector<IndexSet> want(target_seq.begin(), target_seq.begin() + static_cast<std::ptrdiff_t>(K));
      out.seq = cl.size() == K && nonempty_sorted(cl) == nonempty_sorted(want) &&
                std::all_of(cl.begin(), cl.end(), [](const IndexSet& c) { return !c.empty(); });
    }
  } catch (const Error&) {
    out.failure = "sequential";
  }
  return out;
}

McReport run_unsup(const ExperimentOptions& opt, bool wrong_k) {
  McReport rep;
  rep.id = wrong_k ? Experiment::WRONG_K : Experiment::UNSUP_VS_SEQ;
  rep.replicates = opt.replicates;
  const auto rbs = or_default(opt.rb_values, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5});
  const auto ks = wrong_k ? or_default(opt.k_values, {2, 4}) : or_default(opt.k_values, {3});
  const std::size_t n = opt.n_values.empty() ? 100 : opt.n_values.front();

  // Published values: rows r_b = 0, .1, ..., .5.
  const std::map<double, std::array<double, 3>> ref3 = {
      {0.0, {.8624, 1, .9104}}, {0.1, {.8734, .9984, .9148}}, {0.2, {.9036, .9908, .9082}},
      {0.3, {.869, .9086, .897}}, {0.4, {.4, .4176, .8932}}, {0.5, {.0012, .0004, .8574}}};
  const std::map<double, double> ref2 = {{0.0, .901}, {0.1, .894}, {0.2, .894}, {0.3, .872}, {0.4, .875}, {0.5, .867}};
  const std::map<double, double> ref4 = {{0.0, .91}, {0.1, .9}, {0.2, .9}, {0.3, .878}, {0.4, .887}, {0.5, .858}};
  auto lookup = [](const auto& m, double rb) -> const auto* {
    for (const auto& [k, v] : m)
      if (std::abs(k - rb) < 1e-9) return &v;
    return static_cast<decltype(&m.begin()->second)>(nullptr);
  };

  std::ostringstream csv;
  csv << (wrong_k ? "r_b,clusters,modified_kmeans,modified_spectral,sequential\n"
                  : "r_b,modified_kmeans,modified_spectral,sequential\n");
  std::size_t cell_index = 0;
  for (auto K : ks) {
    for (double rb : rbs) {
      const SimDesign design = unsup_design(rb, n);
      MetricSpec ms = simulation_pipeline(NwmKind::DEGREE, 0.05, K, opt).metric;
      const auto target = rank_truth(design, unsup_truth(), ms);
      std::vector<UnsupRep> reps(opt.replicates);
      const std::uint64_t base = (wrong_k ? 500 : 0) + cell_index++;
      parallel_for(opt.replicates, opt.threads, [&](std::size_t r) {
        reps[r] = unsup_replicate(design, K, target, opt, RngStream(opt.seed, base * kCellStride + r));
      });
      std::vector<char> hk, hs, hq;
      std::vector<std::string> fails;
      for (const auto& r : reps) {
        hk.push_back(r.kmeans);
        hs.push_back(r.spectral);
        hq.push_back(r.seq);
        fails.push_back(r.failure);
      }
      tally_failures(rep, fails);
      const std::string suffix = wrong_k ? "@K=" + std::to_string(K) + ",rb=" + fmt(rb, "%.1f") : "@rb=" + fmt(rb, "%.1f");
      std::optional<double> pk, ps, pq;
      if (!wrong_k) {
        if (const auto* v = lookup(ref3, rb)) pk = (*v)[0], ps = (*v)[1], pq = (*v)[2];
      } else {
        pk = ps = 0.0;
        if (const auto* v = lookup(K == 2 ? ref2 : ref4, rb); v && (K == 2 || K == 4)) pq = *v;
      }
      rep.cells.push_back(make_cell("kmeans" + suffix, hk, pk));
      rep.cells.push_back(make_cell("spectral" + suffix, hs, ps));
      rep.cells.push_back(make_cell("sequential" + suffix, hq, pq));
      const auto& c = rep.cells;
      csv << fmt(rb, "%.1f") << ',';
      if (wrong_k) csv << K << ',';
      csv << fmt(c[c.size() - 3].rate) << ',' << fmt(c[c.size() - 2].rate) << ',' << fmt(c.back().rate) << '\n';
    }
  }
  rep.table_csv = csv.str();
  return rep;
}

// ------------------------------------------------------------ ICC choice of K

McReport run_icc(const ExperimentOptions& opt) {
  McReport rep;
  rep.id = Experiment::ICC_K;
  rep.replicates = opt.replicates;
  const std::vector<std::string> designs = opt.designs.empty() ? std::vector<std::string>{"strong", "weak"} : opt.designs;
  const std::size_t n = opt.n_values.empty() ? 100 : opt.n_values.front();
  const std::map<std::string, std::array<double, 8>> ref = {
      {"strong", {.035, .965, 0, 0, 0, 0, 0, 0}}, {"weak", {.0658, .8416, .0912, .0014, 0, 0, 0, 0}}};
  std::ostringstream csv;
  csv << "design,statistic";
  for (int k = 2; k <= 9; ++k) csv << ",K=" << k;
  csv << '\n';
  for (std::size_t di = 0; di < designs.size(); ++di) {
    const bool weak = designs[di] == "weak";
    const SimDesign design = icc_design(weak, n);
    PipelineConfig cfg = simulation_pipeline(NwmKind::DEGREE, 0.05, 3, opt);
    cfg.auto_k = true;
    cfg.k_max = 0;  // q_hat - 1
    std::vector<std::size_t> chosen(opt.replicates, 0);
    std::vector<std::string> fails(opt.replicates);
    const std::uint64_t base = 100 + (weak ? 1 : 0);
    parallel_for(opt.replicates, opt.threads, [&](std::size_t r) {
      RngStream rng(opt.seed, base * kCellStride + r);
      RngStream data_rng = rng.derive(10);
      try {
        // Every predictor is active in this design: cluster on the full
        // sample with the known support (no split, no selection stage).
        const Dataset d = standardize(generate(design, data_rng));
        chosen[r] = run_inference(d, cfg, full_sample(d), known_support(design), rng.derive(2)).K;
      } catch (const Error&) {
        fails[r] = "pipeline";
      }
    });
    tally_failures(rep, fails);
    std::array<std::size_t, 8> count{};
    for (auto k : chosen)
      if (k >= 2 && k <= 9) ++count[k - 2];
    csv << designs[di] << ",count";
    for (auto c : count) csv << ',' << c;
    csv << '\n' << designs[di] << ",proportion";
    for (std::size_t k = 0; k < 8; ++k) {
      RateCell c;
      c.label = designs[di] + "@K=" + std::to_string(k + 2);
      c.successes = count[k];
      c.trials = opt.replicates;
      c.published = ref.at(designs[di])[k];
      finish_cell(c);
      rep.cells.push_back(c);
      csv << ',' << fmt(c.rate);
    }
    csv << '\n';
  }
  rep.table_csv = csv.str();
  return rep;
}

// --------------------------------------------------- grouped small-p recovery

struct SmallpRep {
  char selection = 0;
  // [kind][alpha][cluster 0..2, combined]
  std::vector<std::vector<std::array<char, 4>>> hit;
  std::string failure;
};

McReport run_smallp(const ExperimentOptions& opt) {
  McReport rep;
  rep.id = Experiment::SMALLP_SEQ;
  rep.replicates = opt.replicates;
  const auto ps = or_default(opt.p_values, {20, 50});
  const auto ns = or_default(opt.n_values, {200});
  const auto alphas = or_default(opt.alphas, {0.05, 0.1});
  const std::vector<NwmKind> kinds = opt.kinds.empty() ? std::vector<NwmKind>{NwmKind::DEGREE, NwmKind::CLUSTERING} : opt.kinds;
  const bool show_n = !(ns.size() == 1 && ns[0] == 200);

  // Published table: [kind][p][alpha] -> cluster 1, 2, 3, combined.
  using Row = std::array<double, 4>;
  auto published_row = [](NwmKind k, std::size_t p, double a, std::size_t n) -> std::optional<Row> {
    if (n != 200) return std::nullopt;
    const bool lo = std::abs(a - 0.05) < 1e-12, hi = std::abs(a - 0.1) < 1e-12;
    if (!lo && !hi) return std::nullopt;
    if (k == NwmKind::DEGREE) {
      if (p == 20) return lo ? Row{.958, .946, .957, .938} : Row{.959, .937, .939, .929};
      if (p == 50) return lo ? Row{.951, .939, .950, .932} : Row{.954, .935, .938, .927};
    } else {
      if (p == 20) return lo ? Row{.944, .958, .983, .944} : Row{.931, .953, .982, .931};
      if (p == 50) return lo ? Row{.938, .953, .976, .938} : Row{.954, .935, .938, .931};
    }
    return std::nullopt;
  };

  // Named clusters: Cluster 1 = {X7..X9}, Cluster 2 = {X1..X3}, Cluster 3 = {X4..X6}.
  const auto g = grouped_truth();
  const std::vector<IndexSet> named = {g[2], g[0], g[1]};

  std::ostringstream csv;
  csv << "nwm,p," << (show_n ? "n," : "") << "alpha,cluster1,cluster2,cluster3,combined\n";
  struct Block {
    std::size_t p, n;
    std::vector<SmallpRep> reps;
    std::vector<std::vector<std::size_t>> rank_of;  // [kind][named cluster] -> formed rank
  };
  std::vector<Block> blocks;
  std::uint64_t group_index = 200;
  for (auto p : ps)
    for (auto n : ns) {
      Block b{p, n, std::vector<SmallpRep>(opt.replicates), {}};
      const SimDesign design = smallp_design(p, n);
      std::vector<PipelineConfig> cfgs;
      for (auto k : kinds) {
        cfgs.push_back(simulation_pipeline(k, alphas.front(), 3, opt));
        const auto ranked = rank_truth(design, grouped_truth(), cfgs.back().metric);
        std::vector<std::size_t> ro;
        for (const auto& c : named) ro.push_back(static_cast<std::size_t>(std::find(ranked.begin(), ranked.end(), c) - ranked.begin()));
        b.rank_of.push_back(ro);
      }
      const IndexSet truth_support = design.support();
      const std::uint64_t base = group_index++;
      parallel_for(opt.replicates, opt.threads, [&](std::size_t r) {
        SmallpRep& out = b.reps[r];
        out.hit.assign(kinds.size(), std::vector<std::array<char, 4>>(alphas.size(), std::array<char, 4>{}));
        RngStream rng(opt.seed, base * kCellStride + r);
        RngStream data_rng = rng.derive(10), split_rng = rng.derive(0), cv_rng = rng.derive(1);
        SplitPair split;
        ActiveSet active;
        Dataset d;
        try {
          d = standardize(generate(design, data_rng));
          split = split_half(d.n(), split_rng);
          active = two_step_select(d, split, cfgs.front().selection, cv_rng);
        } catch (const Error&) {
          out.failure = "selection";
          return;
        }
        out.selection = active.indices == truth_support;
        for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
          try {
            const SplitOutcome s = run_inference(d, cfgs[ki], split, active, rng.derive(2 + ki));
            for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
              SeqTestConfig seq = cfgs[ki].seq;
              seq.alpha = alphas[ai];
              const ClusterResult cr = ai == 0 ? s.clusters : recluster(s, seq);
              auto& h = out.hit[ki][ai];
              bool all = true;
              for (std::size_t c = 0; c < 3; ++c) {
                const std::size_t rank = b.rank_of[ki][c];
                h[c] = rank < cr.clusters.size() && sorted(cr.clusters[rank]) == named[c];
                all = all && h[c];
              }
              h[3] = all;
            }
          } catch (const Error&) {
            out.failure = "inference";
          }
        }
      });
      blocks.push_back(std::move(b));
    }

  for (auto& b : blocks) {
    std::vector<std::string> fails;
    std::vector<char> sel;
    for (const auto& r : b.reps) {
      fails.push_back(r.failure);
      sel.push_back(r.selection);
    }
    tally_failures(rep, fails);
    rep.cells.push_back(make_cell("selection@p=" + std::to_string(b.p) + ",n=" + std::to_string(b.n), sel));
  }
  const char* names[] = {"cluster1", "cluster2", "cluster3", "combined"};
  for (std::size_t ki = 0; ki < kinds.size(); ++ki)
    for (const auto& b : blocks)
      for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        const auto ref = published_row(kinds[ki], b.p, alphas[ai], b.n);
        csv << to_string(kinds[ki]) << ',' << b.p << ',';
        if (show_n) csv << b.n << ',';
        csv << fmt(alphas[ai], "%.2f");
        for (std::size_t c = 0; c < 4; ++c) {
          std::vector<char> hits;
          for (const auto& r : b.reps) hits.push_back(r.hit.empty() ? 0 : r.hit[ki][ai][c]);
          const std::string label = to_string(kinds[ki]) + "@p=" + std::to_string(b.p) + ",n=" + std::to_string(b.n) +
                                    ",alpha=" + fmt(alphas[ai], "%.2f") + "/" + names[c];
          rep.cells.push_back(make_cell(label, hits, ref ? std::optional<double>((*ref)[c]) : std::nullopt));
          csv << ',' << fmt(rep.cells.back().rate);
        }
        csv << '\n';
      }
  rep.table_csv = csv.str();
  return rep;
}

// ------------------------------------------------------ metric bias study

McReport run_nwm_bias(const ExperimentOptions& opt) {
  McReport rep;
  rep.id = Experiment::NWM_BIAS;
  rep.replicates = opt.replicates;
  const auto ns = or_default(opt.n_values, {100, 300});
  std::ostringstream csv;
  csv << "n,nwm,population,mean,bias,sd,x1_population,x1_mean,ks_statistic,ks_p\n";
  std::uint64_t base = 300;
  for (auto n : ns) {
    const SimDesign design = nwm_bias_design(n);
    const IndexSet S = design.support();
    const MetricSpec specs[2] = {nwm_bias_metric(NwmKind::DEGREE), nwm_bias_metric(NwmKind::CLUSTERING)};
    std::vector<std::array<Vec, 2>> est(opt.replicates);
    std::vector<std::string> fails(opt.replicates);
    const std::uint64_t b = base++;
    parallel_for(opt.replicates, opt.threads, [&](std::size_t r) {
      RngStream rng(opt.seed, b * kCellStride + r);
      try {
        const Dataset d = generate(design, rng);
        IndexSet rows(d.n());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        const Mat Z = inference_matrix(d, rows, S);
        for (int k = 0; k < 2; ++k) est[r][k] = estimate_metric(Z, specs[k]).metric;
      } catch (const Error&) {
        fails[r] = "estimation";
      }
    });
    tally_failures(rep, fails);
    for (int k = 0; k < 2; ++k) {
      const Vec pop = population_metric(design, S, specs[k]);
      std::vector<double> vmean, x1;
      for (std::size_t r = 0; r < opt.replicates; ++r) {
        if (!fails[r].empty()) continue;
        vmean.push_back(est[r][k].mean());
        x1.push_back(est[r][k](0));
      }
      const double m = vmean.empty() ? NAN : std::accumulate(vmean.begin(), vmean.end(), 0.0) / static_cast<double>(vmean.size());
      double ss = 0.0;
      for (double v : vmean) ss += (v - m) * (v - m);
      const double sd = vmean.size() > 1 ? std::sqrt(ss / static_cast<double>(vmean.size() - 1)) : NAN;
      const double x1m = x1.empty() ? NAN : std::accumulate(x1.begin(), x1.end(), 0.0) / static_cast<double>(x1.size());
      double s1 = 0.0;
      for (double v : x1) s1 += (v - x1m) * (v - x1m);
      const double x1sd = x1.size() > 1 ? std::sqrt(s1 / static_cast<double>(x1.size() - 1)) : NAN;
      std::vector<double> z;
      for (double v : x1) z.push_back(x1sd > 0 ? (v - x1m) / x1sd : 0.0);
      const auto [ks, kp] = z.size() >= 2 ? ks_test_normal(z) : std::pair<double, double>{NAN, NAN};
      const std::string tag = std::string(k == 0 ? "D" : "C") + "@n=" + std::to_string(n);
      rep.values[tag + "/population"] = pop.mean();
      rep.values[tag + "/mean"] = m;
      rep.values[tag + "/bias"] = m - pop.mean();
      rep.values[tag + "/sd"] = sd;
      rep.values[tag + "/x1_population"] = pop(0);
      rep.values[tag + "/x1_mean"] = x1m;
      rep.values[tag + "/ks_statistic"] = ks;
      rep.values[tag + "/ks_p"] = kp;
      csv << n << ',' << (k == 0 ? "degree" : "clustering") << ',' << fmt(pop.mean()) << ',' << fmt(m) << ','
          << fmt(m - pop.mean()) << ',' << fmt(sd) << ',' << fmt(pop(0)) << ',' << fmt(x1m) << ',' << fmt(ks) << ','
          << fmt(kp) << '\n';
    }
  }
  rep.table_csv = csv.str();
  return rep;
}

// --------------------------------------------------- covariance timing study

double rel_frobenius(const Mat& a, const Mat& ref) {
  const double den = ref.norm();
  return den > 0 ? (a - ref).norm() / den : (a - ref).norm();
}

McReport run_cov_timing(const ExperimentOptions& opt) {
  McReport rep;
  rep.id = Experiment::COV_TIMING;
  rep.replicates = opt.replicates;
  const std::size_t n = opt.n_values.empty() ? 100 : opt.n_values.front();
  const SimDesign design = nwm_bias_design(n);  // q = 10, identity covariance
  const IndexSet S = design.support();
  MetricSpec spec;
  spec.nwm.kind = NwmKind::DEGREE;
  std::vector<double> t_plug(opt.replicates, 0.0), t_boot(opt.replicates, 0.0), dist(opt.replicates, NAN);
  std::vector<std::string> fails(opt.replicates);
  parallel_for(opt.replicates, opt.threads, [&](std::size_t r) {
    RngStream rng(opt.seed, 400 * kCellStride + r);
    try {
      const Dataset d = generate(design, rng);
      IndexSet rows(d.n());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      const Mat Z = inference_matrix(d, rows, S);
      auto t0 = std::chrono::steady_clock::now();
      PluginOptions po;
      const CovarianceEstimate pl = plugin_covariance(Z, spec, po);
      t_plug[r] = elapsed(t0);
      BootstrapConfig bc;
      bc.B = opt.bootstrap_B;
      bc.seed = rng.derive(1).seed();
      t0 = std::chrono::steady_clock::now();
      const CovarianceEstimate bs = mepsrs_covariance(Z, spec, bc);
      t_boot[r] = elapsed(t0);
      dist[r] = rel_frobenius(bs.sigma, pl.sigma);
    } catch (const Error&) {
      fails[r] = "covariance";
    }
  });
  tally_failures(rep, fails);
  double tp = 0, tb = 0, dm = 0;
  std::size_t ok = 0;
  for (std::size_t r = 0; r < opt.replicates; ++r)
    if (fails[r].empty()) {
      tp += t_plug[r];
      tb += t_boot[r];
      dm += dist[r];
      ++ok;
    }
  const double k = ok ? static_cast<double>(ok) : NAN;
  rep.timing["plugin_seconds_mean"] = tp / k;
  rep.timing["bootstrap_seconds_mean"] = tb / k;
  rep.timing["plugin_over_bootstrap"] = tb > 0 ? tp / tb : NAN;
  rep.values["rel_frobenius_bootstrap_vs_plugin"] = dm / k;
  std::ostringstream csv;
  csv << "q,n,B,replicates,mean_rel_frobenius_bootstrap_vs_plugin\n"
      << S.size() << ',' << n << ',' << opt.bootstrap_B << ',' << ok << ',' << fmt(dm / k) << '\n';
  rep.table_csv = csv.str();
  return rep;
}

}  // namespace

McReport run_table(Experiment id, const ExperimentOptions& opt) {
  opt.validate();
  const auto t0 = std::chrono::steady_clock::now();
  McReport rep;
  switch (id) {
    case Experiment::UNSUP_VS_SEQ: rep = run_unsup(opt, false); break;
    case Experiment::WRONG_K: rep = run_unsup(opt, true); break;
    case Experiment::ICC_K: rep = run_icc(opt); break;
    case Experiment::SMALLP_SEQ: rep = run_smallp(opt); break;
    case Experiment::NWM_BIAS: rep = run_nwm_bias(opt); break;
    case Experiment::COV_TIMING: rep = run_cov_timing(opt); break;
    default: throw UsageError("unknown experiment id");
  }
  rep.wall_seconds = elapsed(t0);
  return rep;
}

CovAgreement covariance_agreement(const SimDesign& design, const MetricSpec& spec, std::size_t B,
                                  std::size_t mc_reps, std::uint64_t seed, std::size_t threads) {
  design.validate();
  require(mc_reps >= 2, "Monte Carlo oracle needs at least two replicates");
  const IndexSet S = design.support();
  IndexSet rows(design.n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  CovAgreement out;
  {
    RngStream rng(seed, 0);
    const Mat Z = inference_matrix(generate(design, rng), rows, S);
    out.plugin = plugin_covariance(Z, spec).sigma;
    BootstrapConfig bc;
    bc.B = B;
    bc.seed = rng.derive(1).seed();
    bc.threads = threads;
    out.bootstrap = mepsrs_covariance(Z, spec, bc).sigma;
  }
  std::vector<Vec> m(mc_reps);
  parallel_for(mc_reps, threads, [&](std::size_t r) {
    RngStream rng(seed, 1 + r);
    m[r] = estimate_metric(inference_matrix(generate(design, rng), rows, S), spec).metric;
  });
  Vec mean = Vec::Zero(m.front().size());
  for (const auto& v : m) mean += v;
  mean /= static_cast<double>(mc_reps);
  Mat C = Mat::Zero(mean.size(), mean.size());
  for (const auto& v : m) C += (v - mean) * (v - mean).transpose();
  out.oracle = C * (static_cast<double>(design.n) / static_cast<double>(mc_reps - 1));
  out.plugin_vs_oracle = rel_frobenius(out.plugin, out.oracle);
  out.bootstrap_vs_oracle = rel_frobenius(out.bootstrap, out.oracle);
  out.plugin_vs_bootstrap = rel_frobenius(out.plugin, out.bootstrap);
  return out;
}

}  // namespace nwmc
