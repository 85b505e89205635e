#include "delayfilt/csv_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace delayfilt {

namespace {

void set_precision(std::ostream& out) { out << std::setprecision(std::numeric_limits<double>::max_digits10); }

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  set_precision(out);
  return out;
}

void indexed_header(std::ostream& out, const char* prefix, long count) {
  for (long i = 0; i < count; ++i) out << ',' << prefix << i;
}

}  // namespace

void write_channel_csv(std::ostream& out, const std::vector<ChannelEvent>& events, int meas_dim) {
  set_precision(out);
  out << "k,delivered,true_delay";
  indexed_header(out, "y_", meas_dim);
  out << '\n';
  for (const auto& e : events) {
    out << e.step << ',' << (e.delivered() ? 1 : 0) << ',';
    if (e.delivered()) {
      out << e.delivery->true_delay;
      for (Eigen::Index i = 0; i < e.delivery->value.size(); ++i) out << ',' << e.delivery->value(i);
    } else {
      for (int i = 0; i < meas_dim; ++i) out << ',';
    }
    out << '\n';
  }
}

void write_estimate_csv(std::ostream& out, const std::vector<Vector>& estimates, const std::vector<Vector>& variances) {
  if (estimates.size() != variances.size()) throw std::invalid_argument("estimate/variance length mismatch");
  set_precision(out);
  const long dim = estimates.empty() ? 0 : estimates.front().size();
  out << 'k';
  indexed_header(out, "xhat_", dim);
  indexed_header(out, "diagP_", dim);
  out << '\n';
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    out << k + 1;
    for (long i = 0; i < dim; ++i) out << ',' << estimates[k](i);
    for (long i = 0; i < dim; ++i) out << ',' << variances[k](i);
    out << '\n';
  }
}

void write_smc_diagnostics_csv(std::ostream& out, const std::vector<SmcStepDiagnostics>& diagnostics, int max_delay) {
  set_precision(out);
  const long groups = max_delay + 1;
  out << "k,ess,collapse_flag";
  indexed_header(out, "group_count_", groups);
  out << ",jhat_map,dhat_mean";
  indexed_header(out, "pmf_", groups);
  indexed_header(out, "resampled_count_", groups);
  out << '\n';
  for (const auto& d : diagnostics) {
    out << d.step << ',' << d.ess << ',' << (d.collapsed ? 1 : 0);
    for (long j = 0; j < groups; ++j) {
      out << ',';
      if (j < static_cast<long>(d.group_counts.size())) out << d.group_counts[j];
    }
    out << ',';
    if (d.delay) out << d.delay->map_estimate;
    out << ',';
    if (d.delay) out << d.delay->mean_estimate;
    for (long j = 0; j < groups; ++j) {
      out << ',';
      if (d.delay) out << (j < static_cast<long>(d.delay->pmf.size()) ? d.delay->pmf[j] : 0.0);
    }
    for (long j = 0; j < groups; ++j) {
      out << ',';
      if (j < static_cast<long>(d.resampled_counts.size())) out << d.resampled_counts[j];
    }
    out << '\n';
  }
}

void write_rmse_csv(std::ostream& out, const FilterSummary& summary) {
  set_precision(out);
  out << 'k';
  for (const auto& c : summary.rmse) out << ",rmse_" << c.name;
  out << '\n';
  const std::size_t steps = summary.rmse.empty() ? 0 : summary.rmse.front().per_step.size();
  for (std::size_t k = 0; k < steps; ++k) {
    out << k + 1;
    for (const auto& c : summary.rmse) out << ',' << c.per_step[k];
    out << '\n';
  }
}

void write_benchmark(const std::filesystem::path& dir, const CampaignResult& result, const RunTrace& first_run) {
  std::filesystem::create_directories(dir);
  for (const auto& f : result.filters) {
    auto out = open(dir / ("rmse_" + to_string(f.kind) + ".csv"));
    write_rmse_csv(out, f);
  }
  open(dir / "summary.json") << summary_json(result).dump(2) << '\n';
  open(dir / "timing.json") << timing_json(result).dump(2) << '\n';
  const int meas_dim = first_run.truth.measurements.empty() ? 0 : static_cast<int>(first_run.truth.measurements.front().size());
  auto channel = open(dir / "channel.csv");
  write_channel_csv(channel, first_run.events, meas_dim);
}

void write_trace(const std::filesystem::path& dir, const RunTrace& trace, int max_delay) {
  std::filesystem::create_directories(dir);
  const auto& truth = trace.truth;
  {
    auto out = open(dir / "truth.csv");
    const long dim = truth.states.empty() ? 0 : truth.states.front().size();
    const long mdim = truth.measurements.empty() ? 0 : truth.measurements.front().size();
    out << 'k';
    indexed_header(out, "x_", dim);
    indexed_header(out, "z_", mdim);
    out << '\n';
    for (std::size_t k = 0; k < truth.states.size(); ++k) {
      out << k + 1;
      for (long i = 0; i < dim; ++i) out << ',' << truth.states[k](i);
      for (long i = 0; i < mdim; ++i) out << ',' << truth.measurements[k](i);
      out << '\n';
    }
  }
  {
    auto out = open(dir / "channel.csv");
    const int mdim = truth.measurements.empty() ? 0 : static_cast<int>(truth.measurements.front().size());
    write_channel_csv(out, trace.events, mdim);
  }
  for (const auto& f : trace.filters) {
    if (f.diverged) continue;
    auto out = open(dir / ("estimates_" + to_string(f.kind) + ".csv"));
    write_estimate_csv(out, f.estimates, f.variances);
    if (f.kind == FilterKind::kSmc) {
      auto diag = open(dir / "smc_diagnostics.csv");
      write_smc_diagnostics_csv(diag, f.smc, max_delay);
    }
  }
}

}  // namespace delayfilt
