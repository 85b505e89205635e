#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "delayfilt/campaign.hpp"
#include "delayfilt/channel.hpp"
#include "delayfilt/smc_filter.hpp"

namespace delayfilt {

/// `k,delivered,true_delay,y_0..y_{m-1}`; dropout rows leave delay and y empty.
void write_channel_csv(std::ostream& out, const std::vector<ChannelEvent>& events, int meas_dim);

/// `k,xhat_0..,diagP_0..`.
void write_estimate_csv(std::ostream& out, const std::vector<Vector>& estimates, const std::vector<Vector>& variances);

/// `k,ess,collapse_flag,group_count_0..N,jhat_map,dhat_mean` followed by the
/// delay pmf and the post-resampling group counts. Dropout rows leave the
/// delay columns empty.
void write_smc_diagnostics_csv(std::ostream& out, const std::vector<SmcStepDiagnostics>& diagnostics, int max_delay);

/// `k,rmse_<component>...` for one filter.
void write_rmse_csv(std::ostream& out, const FilterSummary& summary);

/// Benchmark artifacts: rmse_<filter>.csv, summary.json, timing.json and
/// channel.csv (the channel trace of run 0).
void write_benchmark(const std::filesystem::path& dir, const CampaignResult& result, const RunTrace& first_run);

/// Per-run trace export: truth.csv, channel.csv, estimates_<filter>.csv and smc_diagnostics.csv.
void write_trace(const std::filesystem::path& dir, const RunTrace& trace, int max_delay);

}  // namespace delayfilt
