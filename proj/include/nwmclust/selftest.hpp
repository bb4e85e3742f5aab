// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Built-in oracle and invariant suite behind the `selftest` command: fast
 * checks of the algebraic identities, derivative maps, thresholding,
 * critical values and reproducibility, each reported pass/fail with the
 * observed discrepancy.
 */
#pragma once

#include "nwmclust/common.hpp"

#include <string>
#include <vector>

namespace nwmc {

struct SelftestCase {
  std::string name;
  bool ok = false;
  std::string detail;  // observed value or deviation
};

std::vector<SelftestCase> run_selftest(std::uint64_t seed = 7);

}  // namespace nwmc
