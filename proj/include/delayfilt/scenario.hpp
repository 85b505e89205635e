#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "delayfilt/channel.hpp"
#include "delayfilt/gauss_filter.hpp"
#include "delayfilt/models.hpp"
#include "delayfilt/particle_set.hpp"

namespace delayfilt {

enum class FilterKind { kGaf, kGafSkip, kSmc, kStandardPf, kPfRd };

std::string to_string(FilterKind kind);
FilterKind filter_kind_from_string(const std::string& name);

/// Which benchmark system the scenario runs, with its parameters.
struct ModelSpec {
  std::variant<GrowthModelParams, CTModelParams> params;

  std::string name() const;
  SystemModel build() const;
};

/// Dropout handling for the Gaussian filter; kBoth runs the two variants side by side.
enum class DropoutSetting { kPredicted, kSkip, kBoth };

struct ScenarioConfig {
  ModelSpec model;
  DelayProfile channel;
  int steps = 50;
  int mc_runs = 100;
  int particle_count = 500;
  std::vector<FilterKind> roster;  // in the order given; kGafSkip appears via dropout_policy
  DropoutSetting dropout_policy = DropoutSetting::kPredicted;
  SpreadTerm spread = SpreadTerm::kPerLag;
  ResampleOptions resampling;
  std::uint64_t seed = 1;
  int threads = 1;
  bool check_invariants = true;
  std::string output_dir;

  /// Roster with the dropout setting applied (gaf may expand to gaf + gaf_skip).
  std::vector<FilterKind> effective_roster() const;
  void validate() const;
};

/// Parses a scenario document. Unknown keys anywhere are rejected with ConfigError.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& config);

/// Growth model, lambda = 0.8, N = 3, 500 particles, 50 steps, 100 runs.
ScenarioConfig problem1_preset();
/// Coordinated turn, lambda = 0.9, N = 3, 5000 particles.
ScenarioConfig problem2_preset();

}  // namespace delayfilt
