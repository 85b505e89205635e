#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "delayfilt/channel.hpp"
#include "delayfilt/scenario.hpp"

namespace delayfilt {

/// Two-sided 99% level used by every channel check.
inline constexpr double kChannelTestAlpha = 0.01;
/// Whiteness lags pass when every entry is within this many standard errors.
inline constexpr double kWhitenessSigmas = 3.0;

/// Goodness of fit of delivered delays against the renormalized channel law.
struct DelayHistogramTest {
  std::vector<long> counts;          // delivered steps per delay 0..N
  std::vector<double> expected;      // expected counts given the delivered total
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
  bool pass = false;
};

/// Dropout frequency against its expected value with a normal approximation
/// to the sum of per-step Bernoulli variables.
struct DropoutTest {
  long trials = 0;
  long dropped = 0;
  double rate = 0.0;
  double expected_rate = 0.0;
  double z_score = 0.0;
  bool pass = false;
};

struct WhitenessLag {
  LagStatistic statistic;
  double max_abs_z = 0.0;  // largest |value - target| / std_error over entries
  bool pass = false;
};

struct ChannelReport {
  long samples = 0;
  DelayHistogramTest histogram;
  DropoutTest dropout;
  std::vector<WhitenessLag> whiteness;  // lags 0..N

  bool pass() const;
};

/// Drives the channel alone for `samples` steps with pure noise measurements
/// v_k ~ N(0, R), R taken from the scenario model, and tests the delay law,
/// the dropout rate and the whiteness of the received noise.
ChannelReport channel_diagnostics(const ScenarioConfig& config, long samples, std::uint64_t seed);

nlohmann::json to_json(const ChannelReport& report);

}  // namespace delayfilt
