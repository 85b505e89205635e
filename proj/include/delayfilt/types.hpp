#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace delayfilt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Every stochastic routine takes one of these explicitly; nothing draws from
/// a hidden global stream.
using Rng = std::mt19937_64;

/// Raised when a filter's numerics can no longer continue (failed Cholesky
/// after jitter, singular innovation covariance, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed scenario documents and invalid parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Derives an independent stream for (seed, run, purpose). Streams with
/// different keys are statistically independent; identical keys reproduce
/// the same sequence bit for bit.
inline Rng make_stream(std::uint64_t seed, std::uint64_t run, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return Rng(seq);
}

}  // namespace delayfilt
