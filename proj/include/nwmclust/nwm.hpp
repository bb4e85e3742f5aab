// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Network-wide metrics on an implicit network: weighted degree centrality
 * D_i = sum_{j != i} W_ij and the clustering coefficient
 * C_i = sum over pairs (j, k) of other vertices of W_jk / ((q-1)(q-2)).
 *
 * The clustering coefficient counts ordered pairs by default, so each
 * undirected edge contributes twice and a uniform unit-weight graph has
 * C_i = 1. The unordered convention (each edge once, i.e. half the
 * ordered value) is available as an option.
 */
#pragma once

#include "nwmclust/network.hpp"

namespace nwmc {

enum class NwmKind { DEGREE, CLUSTERING };
enum class PairCounting { ORDERED, UNORDERED };

struct NwmSpec {
  NwmKind kind = NwmKind::DEGREE;
  PairCounting pairs = PairCounting::ORDERED;  // clustering coefficient only
  bool standardized_degree = false;            // divide degrees by q-1
};

struct NwmVector {
  NwmSpec spec;
  Vec values;
  IndexSet vertices;
};

NwmVector degree_centrality(const ImplicitNetwork& net, bool standardized = false);
NwmVector clustering_coefficient(const ImplicitNetwork& net, PairCounting pairs = PairCounting::ORDERED);
NwmVector compute_nwm(const ImplicitNetwork& net, const NwmSpec& spec);

// Metric values directly from the weight W (no vertex bookkeeping).
Vec nwm_from_weights(const Mat& W, const NwmSpec& spec);
// Metric values of the network built from vertex values v with weight f.
Vec nwm_from_values(const Vec& v, const WeightFunction& f, const NwmSpec& spec);

struct IdentityCheck {
  bool ok = false;
  double max_deviation = 0.0;
};

/**
 * Verifies C_i = (sum_{u != k} W_uk - 2 D_i) / ((q-1)(q-2)) (ordered
 * pairs) for every vertex within 1e-10. Asymmetric input fails the check.
 */
IdentityCheck centrality_identity_check(const ImplicitNetwork& net);

std::string nwm_csv(const NwmVector& v, const std::vector<std::string>& names);
std::string to_string(NwmKind k);

}  // namespace nwmc
