// Command line front end: benchmark campaigns, channel statistics and per-run traces.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "delayfilt/campaign.hpp"
#include "delayfilt/csv_io.hpp"
#include "delayfilt/diagnostics.hpp"
#include "delayfilt/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void print_summary(const delayfilt::CampaignResult& result) {
  std::printf("%-12s %8s %8s %10s", "filter", "valid", "diverged", "rel_time");
  for (const auto& c : result.filters.front().rmse) std::printf(" %14s", c.name.c_str());
  std::printf("\n");
  for (const auto& f : result.filters) {
    std::printf("%-12s %8d %8d", delayfilt::to_string(f.kind).c_str(), f.valid_runs, f.divergent_runs);
    if (f.relative_time) {
      std::printf(" %10.3f", *f.relative_time);
    } else {
      std::printf(" %10s", "-");
    }
    for (const auto& c : f.rmse) std::printf(" %14.4f", c.time_average);
    std::printf("\n");
  }
  if (result.delay && result.delay->map_average) {
    std::printf("smc delay rmse: map %.4f mean %.4f\n", *result.delay->map_average, *result.delay->mean_average);
  }
  std::printf("invariant violations: %ld\n", result.invariants.total());
}

int run_benchmark(const std::string& config_path, const std::string& out_dir, int threads) {
  auto config = delayfilt::load_scenario(config_path);
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (config.output_dir.empty()) throw delayfilt::ConfigError("no output directory: pass --out or set output.dir");
  if (threads > 0) config.threads = threads;

  const auto result = delayfilt::run_campaign(config);
  const auto first_run = delayfilt::simulate_run(config, 0, false);
  delayfilt::write_benchmark(config.output_dir, result, first_run);
  print_summary(result);
  if (result.campaign_failed()) {
    std::cerr << "error: a filter failed numerically in every run\n";
    return kExitNumerical;
  }
  return 0;
}

int run_channel_stats(const std::string& config_path, long samples) {
  const auto config = delayfilt::load_scenario(config_path);
  const auto report = delayfilt::channel_diagnostics(config, samples, config.seed);
  std::cout << delayfilt::to_json(report).dump(2) << '\n';
  return 0;
}

int run_simulate(const std::string& config_path, int runs, bool trace, const std::string& out_dir) {
  auto config = delayfilt::load_scenario(config_path);
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (trace && config.output_dir.empty()) throw delayfilt::ConfigError("--trace needs --out or output.dir");
  if (runs < 1) throw delayfilt::ConfigError("--runs must be >= 1");

  bool all_failed = false;
  for (int r = 0; r < runs; ++r) {
    const auto run = delayfilt::simulate_run(config, r);
    std::printf("run %d\n", r);
    for (const auto& f : run.filters) {
      if (f.diverged) {
        std::printf("  %-12s diverged: %s\n", delayfilt::to_string(f.kind).c_str(), f.failure.c_str());
        continue;
      }
      double sq = 0.0;
      for (std::size_t k = 0; k < f.estimates.size(); ++k) sq += (f.estimates[k] - run.truth.states[k]).squaredNorm();
      std::printf("  %-12s mean squared error %.6g\n", delayfilt::to_string(f.kind).c_str(),
                  sq / static_cast<double>(f.estimates.size()));
    }
    if (trace) {
      delayfilt::write_trace(std::filesystem::path(config.output_dir) / ("run_" + std::to_string(r)), run,
                             config.channel.max_delay);
    }
    for (const auto& f : run.filters) all_failed = all_failed || f.diverged;
  }
  return all_failed && runs == 1 ? kExitNumerical : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed-measurement filtering benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  auto* bench = app.add_subcommand("benchmark", "Run a Monte Carlo campaign and write RMSE/summary files");
  bench->add_option("--config", config_path, "Scenario JSON")->required();
  bench->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  bench->add_option("--threads", threads, "Worker threads (overrides the config)");

  long samples = 1000000;
  auto* stats = app.add_subcommand("channel-stats", "Test the channel law and noise whiteness");
  stats->add_option("--config", config_path, "Scenario JSON")->required();
  stats->add_option("--samples", samples, "Channel steps to simulate");

  int runs = 1;
  bool trace = false;
  auto* sim = app.add_subcommand("simulate", "Run single replicates and optionally export per-step traces");
  sim->add_option("--config", config_path, "Scenario JSON")->required();
  sim->add_option("--runs", runs, "Number of replicates");
  sim->add_flag("--trace", trace, "Write per-step CSV traces");
  sim->add_option("--out", out_dir, "Trace directory (overrides output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*bench) return run_benchmark(config_path, out_dir, threads);
    if (*stats) return run_channel_stats(config_path, samples);
    return run_simulate(config_path, runs, trace, out_dir);
  } catch (const delayfilt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const delayfilt::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
