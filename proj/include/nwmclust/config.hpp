// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Run configuration: a flat key/value document with one [section] per
 * module, e.g.
 *
 *   [selection]
 *   penalty = scad
 *   alpha_n = 0.05
 *
 * Keys are addressed as "section.key". Every key has a default; unknown
 * keys and malformed values are rejected, and validate() checks every
 * field against the owning module's invariants before any compute runs.
 */
#pragma once

#include "nwmclust/simulation.hpp"

#include <map>

namespace nwmc {

class RunConfig {
 public:
  // Every key at its default value.
  static RunConfig defaults();
  // Parses a config document over the defaults; errors cite the line number.
  static RunConfig parse(const std::string& text, const std::string& source = "<config>");
  static RunConfig load(const std::string& path);

  // Sets "section.key"; UsageError for unknown keys. Values are checked by validate().
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  // Throws UsageError naming the first invalid key.
  void validate() const;

  PipelineConfig pipeline() const;
  ExperimentOptions experiment() const;
  std::uint64_t seed() const;
  std::size_t threads() const;  // 0 in the file resolves to the available parallelism
  std::size_t splits() const;
  double vote_threshold() const;
  std::string response() const;
  std::string out_dir() const;

  // Canonical document (sorted sections and keys); parse(to_text()) round-trips.
  std::string to_text() const;
  // FNV-1a hash of to_text(), as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace nwmc
