// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
#include "nwmclust/nwm.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace nwmc {

Vec nwm_from_weights(const Mat& W, const NwmSpec& spec) {
  const Eigen::Index q = W.rows();
  require(W.cols() == q, "weight matrix must be square");
  // Diagonal entries never contribute.
  Mat off = W;
  off.diagonal().setZero();
  const Vec deg = off.rowwise().sum();
  if (spec.kind == NwmKind::DEGREE) {
    require(q >= 2, "degree centrality needs at least 2 vertices");
    return spec.standardized_degree ? Vec(deg / static_cast<double>(q - 1)) : deg;
  }
  require(q >= 3, "clustering coefficient needs at least 3 vertices, got " + std::to_string(q));
  const double denom = static_cast<double>((q - 1) * (q - 2));
  const double scale = spec.pairs == PairCounting::ORDERED ? 1.0 : 0.5;
  // Sum over ordered pairs (j,k) avoiding i: total of all off-diagonal weights
  // minus the row and column of i.
  const double total = off.sum();
  const Vec col = off.colwise().sum().transpose();
  Vec c(q);
  for (Eigen::Index i = 0; i < q; ++i) c(i) = scale * (total - deg(i) - col(i)) / denom;
  return c;
}

Vec nwm_from_values(const Vec& v, const WeightFunction& f, const NwmSpec& spec) {
  const Eigen::Index q = v.size();
  Mat W = Mat::Zero(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = i + 1; j < q; ++j) W(i, j) = W(j, i) = f(v(i), v(j));
  return nwm_from_weights(W, spec);
}

NwmVector compute_nwm(const ImplicitNetwork& net, const NwmSpec& spec) {
  NwmVector out;
  out.spec = spec;
  out.values = nwm_from_weights(net.W, spec);
  out.vertices = net.vertices;
  return out;
}

NwmVector degree_centrality(const ImplicitNetwork& net, bool standardized) {
  NwmSpec s;
  s.kind = NwmKind::DEGREE;
  s.standardized_degree = standardized;
  return compute_nwm(net, s);
}

NwmVector clustering_coefficient(const ImplicitNetwork& net, PairCounting pairs) {
  NwmSpec s;
  s.kind = NwmKind::CLUSTERING;
  s.pairs = pairs;
  return compute_nwm(net, s);
}

IdentityCheck centrality_identity_check(const ImplicitNetwork& net) {
  const Eigen::Index q = net.W.rows();
  require(q >= 3, "identity check needs at least 3 vertices");
  IdentityCheck res;
  const Mat& W = net.W;
  // Direct evaluation of the ordered-pair sum, independent of nwm_from_weights.
  double total = 0.0;
  for (Eigen::Index u = 0; u < q; ++u)
    for (Eigen::Index k = 0; k < q; ++k)
      if (u != k) total += W(u, k);
  const double denom = static_cast<double>((q - 1) * (q - 2));
  for (Eigen::Index i = 0; i < q; ++i) {
    double c = 0.0, d = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      if (j == i) continue;
      d += W(i, j);
      for (Eigen::Index k = 0; k < q; ++k)
        if (k != i && k != j) c += W(j, k);
    }
    const double dev = std::abs(c / denom - (total - 2.0 * d) / denom);
    res.max_deviation = std::max(res.max_deviation, dev);
  }
  res.ok = res.max_deviation <= 1e-10;
  return res;
}

std::string to_string(NwmKind k) { return k == NwmKind::DEGREE ? "degree" : "clustering"; }

std::string nwm_csv(const NwmVector& v, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "vertex,metric,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < v.vertices.size(); ++i) {
    const std::size_t col = v.vertices[i];
    out << (col < names.size() ? names[col] : "X" + std::to_string(col + 1)) << ',' << to_string(v.spec.kind)
        << ',' << v.values(static_cast<Eigen::Index>(i)) << '\n';
  }
  return out.str();
}

}  // namespace nwmc
