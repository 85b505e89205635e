#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "delayfilt/channel.hpp"
#include "delayfilt/invariants.hpp"
#include "delayfilt/models.hpp"
#include "delayfilt/scenario.hpp"
#include "delayfilt/smc_filter.hpp"

namespace delayfilt {

/// One filter's output over a single Monte Carlo run.
struct FilterTrace {
  FilterKind kind = FilterKind::kGaf;
  std::vector<Vector> estimates;
  std::vector<Vector> variances;  // diagonal of the reported covariance
  bool diverged = false;          // numerical failure or non-finite estimate
  std::string failure;
  long collapses = 0;
  long exclusion_fallbacks = 0;
  InvariantCounts invariants;
  double seconds = 0.0;
  std::vector<SmcStepDiagnostics> smc;  // smc only
};

/// Truth, channel and (optionally) every roster filter for one run.
struct RunTrace {
  int run = 0;
  Trajectory truth;
  std::vector<ChannelEvent> events;
  bool channel_sound = true;  // no repetition / delay bound violations
  std::vector<FilterTrace> filters;
};

/// Replays run `run` of the campaign. Streams are derived from (seed, run), so
/// the result equals the corresponding run inside run_campaign.
RunTrace simulate_run(const ScenarioConfig& config, int run, bool run_filters = true);

struct ComponentRmse {
  std::string name;
  std::vector<double> per_step;
  double time_average = 0.0;
  double final_third = 0.0;

  bool operator==(const ComponentRmse&) const = default;
};

struct FilterSummary {
  FilterKind kind = FilterKind::kGaf;
  std::vector<ComponentRmse> rmse;  // empty when every run diverged
  int valid_runs = 0;
  int divergent_runs = 0;
  long collapses = 0;
  long exclusion_fallbacks = 0;
  InvariantCounts invariants;
  double seconds = 0.0;                  // summed wall clock over runs
  std::optional<double> relative_time;  // seconds / standard PF seconds

  const ComponentRmse& component(const std::string& name) const;
  bool operator==(const FilterSummary&) const = default;
};

/// SMC delay-estimate error. Steps with no delivery carry no estimate and are
/// left out; a step with no delivery in any run is empty.
struct DelayErrorSummary {
  std::vector<std::optional<double>> map_per_step;
  std::vector<std::optional<double>> mean_per_step;
  std::optional<double> map_average;
  std::optional<double> mean_average;

  bool operator==(const DelayErrorSummary&) const = default;
};

struct ChannelSummary {
  long steps = 0;
  long delivered = 0;
  std::vector<long> delay_histogram;  // delivered counts per delay 0..N
  long unsound_runs = 0;

  double dropout_rate() const { return steps ? 1.0 - static_cast<double>(delivered) / steps : 0.0; }
  bool operator==(const ChannelSummary&) const = default;
};

struct CampaignResult {
  ScenarioConfig config;
  std::vector<FilterSummary> filters;  // effective roster order
  std::optional<DelayErrorSummary> delay;
  ChannelSummary channel;
  InvariantCounts invariants;  // all filters plus the channel

  const FilterSummary& filter(FilterKind kind) const;
  bool has_filter(FilterKind kind) const;
  /// True when some filter failed numerically in every run.
  bool campaign_failed() const;
};

/// Runs every Monte Carlo replicate and aggregates in run order, so the
/// result does not depend on config.threads except for wall-clock fields.
CampaignResult run_campaign(const ScenarioConfig& config);

/// Deterministic part of the result: no wall-clock fields, no thread count or output dir.
nlohmann::json summary_json(const CampaignResult& result);
/// Wall-clock totals and ratios.
nlohmann::json timing_json(const CampaignResult& result);
/// Inverse of summary_json (+ timing_json when given).
CampaignResult campaign_from_json(const nlohmann::json& summary, const nlohmann::json* timing = nullptr);

}  // namespace delayfilt
