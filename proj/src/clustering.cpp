// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/clustering.hpp"

#include "nwmclust/parallel.hpp"

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <set>
#include <sstream>

namespace nwmc {

void ClusterResult::validate() const {
  std::set<std::size_t> seen;
  for (const auto& c : clusters)
    for (auto v : c) require(seen.insert(v).second, "clusters overlap at column " + std::to_string(v));
  for (auto v : unassigned) require(seen.insert(v).second, "unassigned vertex also belongs to a cluster");
  std::size_t a = 0;
  for (const auto& c : clusters) {
    if (c.empty()) continue;
    require(a < anchors.size(), "missing anchor for a nonempty cluster");
    require(std::find(c.begin(), c.end(), anchors[a]) != c.end(), "anchor is not a member of its cluster");
    ++a;
  }
}

void SeqTestConfig::validate() const {
  require(K >= 1, "K must be >= 1");
  require(tau >= 0.0, "tau must be nonnegative, got " + std::to_string(tau));
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1), got " + std::to_string(alpha));
}

double folded_normal_critical(double delta, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  require(delta >= 0.0, "delta must be nonnegative");
  const boost::math::normal nd;
  if (delta == 0.0) return boost::math::quantile(nd, 1.0 - alpha / 2.0);
  // P(|N(delta,1)| <= c) = Phi(c - delta) - Phi(-c - delta), increasing in c.
  auto coverage = [&](double c) { return boost::math::cdf(nd, c - delta) - boost::math::cdf(nd, -c - delta); };
  double lo = 0.0, hi = delta + boost::math::quantile(nd, 1.0 - alpha / 2.0) + 1.0;
  while (coverage(hi) < 1.0 - alpha) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (coverage(mid) < 1.0 - alpha ? lo : hi) = mid;
  }
  return hi;
}

ClusterResult sequential_cluster(const NwmVector& nwm, const CovarianceEstimate& cov, const SeqTestConfig& cfg,
                                 std::size_t n_eff) {
  cfg.validate();
  const Eigen::Index q = nwm.values.size();
  require(cov.sigma.rows() == q && cov.sigma.cols() == q, "covariance does not match the metric dimension");
  require(n_eff >= 1, "n_eff must be positive");
  require(nwm.vertices.empty() || nwm.vertices.size() == static_cast<std::size_t>(q),
          "metric vertex list does not match its values");
  check_psd(cov.sigma, "metric covariance");
  auto col = [&](std::size_t pos) { return nwm.vertices.empty() ? pos : nwm.vertices[pos]; };

  ClusterResult res;
  std::vector<std::size_t> remaining(static_cast<std::size_t>(q));
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  for (std::size_t k = 0; k < cfg.K; ++k) {
    if (remaining.empty()) {
      res.clusters.emplace_back();
      continue;
    }
    std::size_t anchor = remaining[0];
    for (auto v : remaining)
      if (nwm.values(static_cast<Eigen::Index>(v)) > nwm.values(static_cast<Eigen::Index>(anchor))) anchor = v;
    const auto a = static_cast<Eigen::Index>(anchor);
    const std::size_t comparisons = remaining.size() - 1;
    const double level = cfg.bonferroni && comparisons > 0 ? cfg.alpha / static_cast<double>(comparisons) : cfg.alpha;
    IndexSet members{anchor};
    std::vector<std::size_t> rest;
    for (auto v : remaining) {
      if (v == anchor) continue;
      const auto j = static_cast<Eigen::Index>(v);
      const double var = std::max(cov.sigma(a, a) + cov.sigma(j, j) - 2.0 * cov.sigma(a, j), 0.0);
      const double se = std::sqrt(var / static_cast<double>(n_eff));
      const double diff = std::abs(nwm.values(a) - nwm.values(j));
      TestRecord rec;
      rec.cluster = k;
      rec.anchor = col(anchor);
      rec.vertex = col(v);
      rec.level = level;
      if (se > 0.0) {
        const double delta = cfg.tau / se;
        rec.statistic = (diff - cfg.tau) / se;
        rec.threshold = folded_normal_critical(delta, level) - delta;
        rec.reject = rec.statistic > rec.threshold;
      } else {
        // Degenerate (zero-variance) comparison: decide on the point estimates.
        rec.statistic = diff > cfg.tau ? std::numeric_limits<double>::infinity() : 0.0;
        rec.threshold = 0.0;
        rec.reject = diff > cfg.tau;
      }
      res.decisions.push_back(rec);
      (rec.reject ? rest : members).push_back(v);
    }
    IndexSet cluster;
    for (auto v : members) cluster.push_back(col(v));
    std::sort(cluster.begin(), cluster.end());
    res.clusters.push_back(cluster);
    res.anchors.push_back(col(anchor));
    remaining = rest;
  }
  for (auto v : remaining) res.unassigned.push_back(col(v));
  std::sort(res.unassigned.begin(), res.unassigned.end());
  return res;
}

double icc(const Vec& values, const std::vector<std::size_t>& group) {
  require(static_cast<std::size_t>(values.size()) == group.size(), "one group label per value required");
  const double N = static_cast<double>(values.size());
  std::map<std::size_t, std::pair<double, double>> acc;  // sum, count
  for (std::size_t i = 0; i < group.size(); ++i) {
    auto& a = acc[group[i]];
    a.first += values(static_cast<Eigen::Index>(i));
    a.second += 1.0;
  }
  const double G = static_cast<double>(acc.size());
  if (G < 2.0 || G >= N) return -std::numeric_limits<double>::infinity();
  const double grand = values.mean();
  double ssb = 0.0, ssw = 0.0;
  for (const auto& [g, a] : acc) ssb += a.second * std::pow(a.first / a.second - grand, 2);
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& a = acc[group[i]];
    ssw += std::pow(values(static_cast<Eigen::Index>(i)) - a.first / a.second, 2);
  }
  const double msb = ssb / (G - 1.0), msw = ssw / (N - G), mbar = N / G;
  const double den = msb + (mbar - 1.0) * msw;
  if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
  return (msb - msw) / den;
}

IccChoice choose_k_icc(const NwmVector& nwm, const CovarianceEstimate& cov, const SeqTestConfig& cfg,
                       std::size_t k_max, std::size_t n_eff) {
  const std::size_t q = static_cast<std::size_t>(nwm.values.size());
  require(q >= 3, "ICC selection needs at least 3 vertices");
  require(k_max >= 2 && k_max <= q - 1, "k_max must lie in [2, q-1]");
  IccChoice out;
  double best = -std::numeric_limits<double>::infinity();
  std::map<std::size_t, std::size_t> pos;  // dataset column -> metric position
  for (std::size_t i = 0; i < q; ++i) pos[nwm.vertices.empty() ? i : nwm.vertices[i]] = i;
  for (std::size_t K = 2; K <= k_max; ++K) {
    SeqTestConfig c = cfg;
    c.K = K;
    const ClusterResult r = sequential_cluster(nwm, cov, c, n_eff);
    std::vector<std::size_t> group(q);
    std::size_t label = 0;
    for (const auto& cl : r.clusters) {
      if (cl.empty()) continue;
      for (auto v : cl) group[pos.at(v)] = label;
      ++label;
    }
    for (auto v : r.unassigned) group[pos.at(v)] = label++;
    const double s = icc(nwm.values, group);
    out.icc_by_k.push_back(s);
    if (s > best) best = s, out.K = K;  // strict: ties keep the smaller K
  }
  if (out.K == 0) throw NumericalError("no grouping structure: ICC undefined for every K in 2.." + std::to_string(k_max));
  return out;
}

void PipelineConfig::validate() const {
  selection.validate();
  seq.validate();
  require(bootstrap_B >= 2, "bootstrap B must be >= 2");
  require(metric.family != WeightFamily::ANOVA_SS, "the split pipeline builds regression-based networks only");
}

Mat inference_matrix(const Dataset& d, const IndexSet& rows, const IndexSet& cols) {
  Mat Z(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size() + 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto rr = static_cast<Eigen::Index>(rows[r]);
    Z(static_cast<Eigen::Index>(r), 0) = d.y(rr);
    for (std::size_t c = 0; c < cols.size(); ++c)
      Z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c + 1)) = d.X(rr, static_cast<Eigen::Index>(cols[c]));
  }
  return Z;
}

SplitOutcome run_split(const Dataset& d, const PipelineConfig& cfg, RngStream& rng) {
  RngStream split_rng = rng.derive(0), cv_rng = rng.derive(1);
  SplitPair split = split_half(d.n(), split_rng);
  ActiveSet active = two_step_select(d, split, cfg.selection, cv_rng);
  return run_inference(d, cfg, split, active, rng.derive(2));
}

SplitOutcome run_inference(const Dataset& d, const PipelineConfig& cfg, const SplitPair& split,
                           const ActiveSet& active, const RngStream& boot_rng) {
  SplitOutcome out;
  out.split = split;
  out.active = active;
  out.K = cfg.seq.K;
  const std::size_t q = out.active.q_hat();
  if (q == 0) {
    out.empty_selection = true;
    out.clusters.clusters.assign(cfg.seq.K, IndexSet{});
    return out;
  }
  if (q == 1) {
    // A single selected predictor forms the first cluster on its own.
    out.nwm.spec = cfg.metric.nwm;
    out.nwm.vertices = out.active.indices;
    out.clusters.clusters.assign(cfg.seq.K, IndexSet{});
    out.clusters.clusters[0] = out.active.indices;
    out.clusters.anchors = out.active.indices;
    return out;
  }
  const Mat Z = inference_matrix(d, out.split.d2, out.active.indices);
  const MetricEstimate est = estimate_metric(Z, cfg.metric);
  out.nwm.spec = cfg.metric.nwm;
  out.nwm.values = est.metric;
  out.nwm.vertices = out.active.indices;
  if (cfg.cov == CovSource::BOOTSTRAP) {
    BootstrapConfig bc;
    bc.B = cfg.bootstrap_B;
    bc.seed = boot_rng.seed();  // derived streams carry unique seeds
    bc.base_stream = 0;
    out.cov = mepsrs_covariance(Z, cfg.metric, bc);
  } else {
    out.cov = plugin_covariance(Z, cfg.metric, cfg.plugin);
  }
  const double n_eff = static_cast<double>(out.split.d2.size());
  out.se = (out.cov.sigma.diagonal().array().max(0.0) / n_eff).sqrt();
  out.clusters = recluster(out, cfg.seq, cfg.auto_k, cfg.k_max);
  out.K = cfg.auto_k ? out.clusters.clusters.size() : cfg.seq.K;
  return out;
}

ClusterResult recluster(const SplitOutcome& s, const SeqTestConfig& seq_cfg, bool auto_k, std::size_t k_max) {
  const std::size_t q = s.active.q_hat();
  SeqTestConfig seq = seq_cfg;
  if (q < 2) {
    ClusterResult r;
    r.clusters.assign(seq.K, IndexSet{});
    if (q == 1) {
      r.clusters[0] = s.active.indices;
      r.anchors = s.active.indices;
    }
    return r;
  }
  if (auto_k && q >= 3) {
    const std::size_t km = k_max == 0 ? q - 1 : std::min(k_max, q - 1);
    if (km >= 2) seq.K = choose_k_icc(s.nwm, s.cov, seq_cfg, km, s.split.d2.size()).K;
  }
  return sequential_cluster(s.nwm, s.cov, seq, s.split.d2.size());
}

ClusterResult assign_by_votes(const VoteTable& votes, std::size_t M, double vote_threshold) {
  require(M >= 1, "number of splits must be >= 1");
  require(vote_threshold > 0.0 && vote_threshold <= 1.0, "vote threshold must lie in (0,1]");
  require(votes.counts.size() == votes.selected.size(), "vote table is inconsistent");
  const std::size_t p = votes.counts.size();
  const std::size_t K = p == 0 ? 0 : votes.counts[0].size() - 1;
  ClusterResult res;
  res.clusters.assign(K, IndexSet{});
  const double cut = vote_threshold * static_cast<double>(M);
  for (std::size_t v = 0; v < p; ++v) {
    if (votes.selected[v] == 0) continue;
    bool placed = false;
    for (std::size_t k = 0; k < K && !placed; ++k)
      if (static_cast<double>(votes.counts[v][k]) > cut) {
        res.clusters[k].push_back(v);
        placed = true;
      }
    if (!placed) res.unassigned.push_back(v);
  }
  // Anchor of an aggregated cluster: the member voted into that rank most often.
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = res.clusters[k];
    if (c.empty()) continue;
    std::size_t best = c[0];
    for (auto v : c)
      if (votes.counts[v][k] > votes.counts[best][k]) best = v;
    res.anchors.push_back(best);
  }
  return res;
}

MultiSplitResult multiple_split_cluster(const Dataset& d, std::size_t M, double vote_threshold,
                                        const PipelineConfig& cfg, const RngStream& rng, std::size_t threads) {
  require(M >= 1, "number of splits must be >= 1");
  require(vote_threshold > 0.0 && vote_threshold <= 1.0, "vote threshold must lie in (0,1]");
  cfg.validate();
  const Dataset work = cfg.standardize && !d.standardized ? standardize(d) : d;
  MultiSplitResult out;
  out.splits.resize(M);
  parallel_for(M, threads, [&](std::size_t s) {
    RngStream r = rng.derive(s);
    try {
      out.splits[s] = run_split(work, cfg, r);
    } catch (const Error& e) {
      out.splits[s] = SplitOutcome{};
      out.splits[s].failure = e.what();
    }
  });
  std::size_t K = 0;
  for (const auto& s : out.splits) {
    if (!s.failure.empty()) {
      ++out.failed_splits;
      continue;
    }
    K = std::max({K, s.K, s.clusters.clusters.size()});
  }
  out.K = K;
  const std::size_t p = work.p();
  out.votes.counts.assign(p, std::vector<std::size_t>(K + 1, 0));
  out.votes.selected.assign(p, 0);
  for (const auto& s : out.splits) {
    if (!s.failure.empty()) continue;
    for (auto v : s.active.indices) ++out.votes.selected[v];
    for (std::size_t k = 0; k < s.clusters.clusters.size(); ++k)
      for (auto v : s.clusters.clusters[k]) ++out.votes.counts[v][k];
    for (auto v : s.clusters.unassigned) ++out.votes.counts[v][K];
  }
  out.result = assign_by_votes(out.votes, M, vote_threshold);
  return out;
}

KMeansResult kmeans(const Mat& P, std::size_t k, RngStream& rng, const KMeansOptions& opt) {
  const Eigen::Index n = P.rows();
  require(k >= 1 && static_cast<Eigen::Index>(k) <= n, "k-means needs 1 <= k <= number of points");
  require(opt.restarts >= 1, "k-means needs at least one start");
  const auto kk = static_cast<Eigen::Index>(k);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  auto sqdist = [&](Eigen::Index i, const Mat& C, Eigen::Index c) { return (P.row(i) - C.row(c)).squaredNorm(); };
  for (std::size_t rs = 0; rs < opt.restarts; ++rs) {
    Mat C(kk, P.cols());
    if (opt.init == KMeansInit::FORGY) {
      // Forgy seeding: k distinct points chosen uniformly at random.
      const auto perm = rng.permutation(static_cast<std::size_t>(n));
      for (Eigen::Index c = 0; c < kk; ++c) C.row(c) = P.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(c)]));
    } else {
      // k-means++ seeding: each new center drawn with probability proportional
      // to the squared distance from the nearest chosen center.
      C.row(0) = P.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
      Vec d2(n);
      for (Eigen::Index i = 0; i < n; ++i) d2(i) = sqdist(i, C, 0);
      for (Eigen::Index c = 1; c < kk; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
          double u = rng.uniform() * total;
          for (pick = 0; pick < n - 1; ++pick) {
            u -= d2(pick);
            if (u < 0.0) break;
          }
        } else {
          pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        }
        C.row(c) = P.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), sqdist(i, C, c));
      }
    }
    std::vector<std::size_t> label(static_cast<std::size_t>(n), k);
    std::vector<std::size_t> cnt(k, 0);
    auto nearest = [&](Eigen::Index i) {
      Eigen::Index arg = 0;
      double bd = sqdist(i, C, 0);
      for (Eigen::Index c = 1; c < kk; ++c) {
        const double dd = sqdist(i, C, c);
        if (dd < bd) bd = dd, arg = c;
      }
      return static_cast<std::size_t>(arg);
    };
    // Recomputes centers from labels; an empty cluster is re-seeded at the
    // point farthest from its current center.
    auto update_centers = [&] {
      Mat sum = Mat::Zero(kk, P.cols());
      std::fill(cnt.begin(), cnt.end(), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        sum.row(static_cast<Eigen::Index>(label[static_cast<std::size_t>(i)])) += P.row(i);
        ++cnt[label[static_cast<std::size_t>(i)]];
      }
      for (Eigen::Index c = 0; c < kk; ++c) {
        if (cnt[static_cast<std::size_t>(c)] > 0) {
          C.row(c) = sum.row(c) / static_cast<double>(cnt[static_cast<std::size_t>(c)]);
        } else {
          Eigen::Index far = 0;
          double fd = -1.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double dd = sqdist(i, C, static_cast<Eigen::Index>(label[static_cast<std::size_t>(i)]));
            if (dd > fd) fd = dd, far = i;
          }
          C.row(c) = P.row(far);
        }
      }
    };
    if (opt.algorithm == KMeansAlgorithm::LLOYD) {
      for (std::size_t it = 0; it < opt.max_iter; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
          const std::size_t arg = nearest(i);
          if (label[static_cast<std::size_t>(i)] != arg) {
            label[static_cast<std::size_t>(i)] = arg;
            changed = true;
          }
        }
        if (!changed) break;
        update_centers();
      }
    } else {
      // Hartigan's method: after the initial assignment, move single points
      // whenever the move lowers the within-cluster sum of squares, i.e.
      // n_b/(n_b+1) |x - c_b|^2 < n_a/(n_a-1) |x - c_a|^2, updating centers
      // after every transfer, until a full pass makes no move.
      for (Eigen::Index i = 0; i < n; ++i) label[static_cast<std::size_t>(i)] = nearest(i);
      update_centers();
      for (std::size_t it = 0; it < opt.max_iter; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
          const std::size_t a = label[static_cast<std::size_t>(i)];
          if (cnt[a] <= 1) continue;
          const double na = static_cast<double>(cnt[a]);
          double best_cost = na / (na - 1.0) * sqdist(i, C, static_cast<Eigen::Index>(a));
          std::size_t to = a;
          for (std::size_t c = 0; c < k; ++c) {
            if (c == a) continue;
            const double nc = static_cast<double>(cnt[c]);
            const double cost = nc / (nc + 1.0) * sqdist(i, C, static_cast<Eigen::Index>(c));
            if (cost < best_cost) best_cost = cost, to = c;
          }
          if (to != a) {
            label[static_cast<std::size_t>(i)] = to;
            update_centers();
            changed = true;
          }
        }
        if (!changed) break;
      }
    }
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) inertia += sqdist(i, C, static_cast<Eigen::Index>(label[static_cast<std::size_t>(i)]));
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.label = label;
      best.centers = C;
    }
  }
  return best;
}

namespace {

Vec abs_corr_with_y(const Dataset& d) {
  const Vec yc = d.y.array() - d.y.mean();
  Vec r(d.X.cols());
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
    const Vec xc = d.X.col(j).array() - d.X.col(j).mean();
    const double den = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
    r(j) = den > 0 ? std::abs(xc.dot(yc)) / den : 0.0;
  }
  return r;
}

// Groups columns by label and orders the groups by mean |corr(X_j, y)|.
ClusterResult labels_to_result(const Dataset& d, const std::vector<std::size_t>& label, std::size_t k) {
  const Vec r = abs_corr_with_y(d);
  std::vector<IndexSet> groups(k);
  for (std::size_t j = 0; j < label.size(); ++j) groups[label[j]].push_back(j);
  std::vector<double> score(k, -1.0);
  for (std::size_t g = 0; g < k; ++g) {
    if (groups[g].empty()) continue;
    double s = 0.0;
    for (auto j : groups[g]) s += r(static_cast<Eigen::Index>(j));
    score[g] = s / static_cast<double>(groups[g].size());
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  ClusterResult res;
  for (auto g : order) {
    res.clusters.push_back(groups[g]);
    if (groups[g].empty()) continue;
    std::size_t anchor = groups[g][0];
    for (auto j : groups[g])
      if (r(static_cast<Eigen::Index>(j)) > r(static_cast<Eigen::Index>(anchor))) anchor = j;
    res.anchors.push_back(anchor);
  }
  return res;
}

}  // namespace

ClusterResult modified_kmeans(const Dataset& d, std::size_t k, RngStream& rng, const KMeansOptions& opt) {
  require(k >= 1 && k <= d.p(), "k must lie in [1, p]");
  const KMeansResult km = kmeans(d.X.transpose(), k, rng, opt);
  return labels_to_result(d, km.label, k);
}

ClusterResult modified_spectral(const Dataset& d, std::size_t k, RngStream& rng, const KMeansOptions& opt) {
  require(k >= 1 && k <= d.p(), "k must lie in [1, p]");
  const Eigen::Index p = d.X.cols();
  Mat Xc = d.X.rowwise() - d.X.colwise().mean();
  const Vec sd = Xc.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    require(sd(j) > 0.0, "spectral clustering needs non-constant columns");
    Xc.col(j) /= sd(j);
  }
  const Mat M = (Xc.transpose() * Xc).cwiseAbs();
  const Mat L = Mat(M.rowwise().sum().asDiagonal()) - M;
  Eigen::SelfAdjointEigenSolver<Mat> es(L);
  if (es.info() != Eigen::Success) throw NumericalError("Laplacian eigendecomposition failed");
  const Mat V = es.eigenvectors().leftCols(static_cast<Eigen::Index>(k));
  const KMeansResult km = kmeans(V, k, rng, opt);
  return labels_to_result(d, km.label, k);
}

namespace {

std::string col_name(const std::vector<std::string>& names, std::size_t c) {
  return c < names.size() ? names[c] : "X" + std::to_string(c + 1);
}

}  // namespace

std::string cluster_result_json(const ClusterResult& r, const std::vector<std::string>& names) {
  nlohmann::json j;
  j["clusters"] = nlohmann::json::array();
  std::size_t a = 0;
  for (std::size_t k = 0; k < r.clusters.size(); ++k) {
    nlohmann::json c;
    c["rank"] = k + 1;
    std::vector<std::string> members;
    for (auto v : r.clusters[k]) members.push_back(col_name(names, v));
    c["members"] = members;
    if (!r.clusters[k].empty() && a < r.anchors.size()) c["anchor"] = col_name(names, r.anchors[a++]);
    j["clusters"].push_back(c);
  }
  std::vector<std::string> un;
  for (auto v : r.unassigned) un.push_back(col_name(names, v));
  j["unassigned"] = un;
  j["tests"] = nlohmann::json::array();
  for (const auto& t : r.decisions)
    j["tests"].push_back({{"cluster", t.cluster + 1},
                          {"anchor", col_name(names, t.anchor)},
                          {"vertex", col_name(names, t.vertex)},
                          {"statistic", std::isfinite(t.statistic) ? nlohmann::json(t.statistic) : nlohmann::json("inf")},
                          {"threshold", t.threshold},
                          {"level", t.level},
                          {"reject", t.reject}});
  return j.dump(2);
}

std::string cluster_result_csv(const MultiSplitResult& r, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "variable,cluster,votes,selected\n";
  auto row = [&](std::size_t v, const std::string& cl, std::size_t votes) {
    out << col_name(names, v) << ',' << cl << ',' << votes << ',' << r.votes.selected[v] << '\n';
  };
  for (std::size_t k = 0; k < r.result.clusters.size(); ++k)
    for (auto v : r.result.clusters[k]) row(v, std::to_string(k + 1), r.votes.counts[v][k]);
  for (auto v : r.result.unassigned) {
    const auto& c = r.votes.counts[v];
    row(v, "unassigned", c.empty() ? 0 : *std::max_element(c.begin(), c.end()));
  }
  return out.str();
}

}  // namespace nwmc
