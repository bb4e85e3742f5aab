// nwmclust: supervised variable clustering via network-wide metrics
// SPDX-License-Identifier: MIT
/**
 * Shared vocabulary for the C++ core: Eigen aliases, index sets and the
 * exception hierarchy. Every failure raised by the core derives from
 * nwmc::Error and carries a category that the C API maps onto its status
 * codes (usage/validation, numerical, I/O).
 */
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nwmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IndexSet = std::vector<std::size_t>;  // sorted, 0-based

enum class ErrorKind { Usage, Numerical, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Invalid arguments, violated preconditions, malformed configuration.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

// Singular systems, non-convergence, non-PSD covariance and the like.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

// Missing files, unreadable or malformed input files, unwritable outputs.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

// Throws UsageError(msg) unless cond holds.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw UsageError(msg);
}

}  // namespace nwmc
