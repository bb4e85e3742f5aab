// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Data containers and plumbing shared by every stage: reproducible random
 * streams, the Dataset type, standardization with back-mapping, half
 * splits and CSV ingestion.
 */
#pragma once

#include "nwmclust/common.hpp"

#include <random>
#include <string>
#include <vector>

namespace nwmc {

/**
 * A reproducible random stream identified by (seed, stream_id).
 *
 * The engine is a 64-bit Mersenne Twister whose state is filled from a
 * SplitMix64 expansion of the pair, so the sequence is a pure function of
 * (seed, stream_id) and distinct ids give unrelated states. Child streams
 * are derived deterministically with derive(tag).
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Independent child stream; same (parent, tag) always gives the same child.
  RngStream derive(std::uint64_t tag) const;

  double uniform();                        // U[0,1)
  double normal();                         // N(0,1)
  std::size_t index(std::size_t n);        // uniform on {0..n-1}
  std::vector<std::size_t> permutation(std::size_t n);
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t& state);

// Per-column affine transform applied by standardize(), kept for back-mapping.
struct StandardizeInfo {
  Vec x_mean;
  Vec x_sd;  // sample standard deviation (n-1 divisor)
  double y_mean = 0.0;
};

struct Dataset {
  Vec y;                           // response, length n
  Mat X;                           // n x p predictors
  std::vector<std::string> names;  // p column names
  bool standardized = false;
  StandardizeInfo transform;       // populated when standardized

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }

  // Throws UsageError if the Dataset invariants fail.
  void validate() const;
};

// Builds and validates a Dataset; names default to X1..Xp.
Dataset make_dataset(Vec y, Mat X, std::vector<std::string> names = {});

// Rows of d restricted to the given index set (same columns and names).
Dataset subset_rows(const Dataset& d, const IndexSet& rows);

/**
 * Centers every predictor column and scales it to unit sample standard
 * deviation; centers y. A constant column raises UsageError naming it.
 */
Dataset standardize(const Dataset& d);

/**
 * Maps coefficients estimated on the standardized scale back to the raw
 * scale. Returns the slopes; the implied intercept is written to
 * *intercept when non-null.
 */
Vec unstandardize_coefficients(const StandardizeInfo& info, const Vec& beta_std,
                               double* intercept = nullptr);

struct SplitPair {
  IndexSet d1;  // selection half
  IndexSet d2;  // inference half
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/**
 * Uniformly random half split: draws a permutation of {0..n-1} and cuts it
 * at floor(n/2). Both halves are returned sorted.
 */
SplitPair split_half(std::size_t n, RngStream& rng);

/**
 * Reads a header-first CSV with numeric cells. y is the column named
 * `response_column`; X is every other column in header order.
 */
Dataset load_csv(const std::string& path, const std::string& response_column);

// Writes y and X with a header (response column first).
void write_csv(const std::string& path, const Dataset& d, const std::string& response_name = "y");

// Parses RFC-4180 text (quoted fields, doubled quotes, CRLF) into records.
std::vector<std::vector<std::string>> parse_csv_text(const std::string& text);

}  // namespace nwmc
