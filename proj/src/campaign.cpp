#include "delayfilt/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "delayfilt/baselines.hpp"
#include "delayfilt/gauss_filter.hpp"
#include "delayfilt/metrics.hpp"

namespace delayfilt {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTruthStream = 0;
constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kFilterStream = 2;  // shared by every particle filter

bool finite(const Vector& v) { return v.allFinite(); }

Vector diagonal(const Matrix& m) { return m.diagonal(); }

FilterTrace run_gaf(const ScenarioConfig& cfg, const SystemModel& model, const std::vector<ChannelEvent>& events,
                    DropoutPolicy policy) {
  FilterTrace out;
  GaussianDelayFilter filter(model, cfg.channel, GafOptions{policy, cfg.spread});
  for (const auto& e : events) {
    const auto belief = filter.step(e);
    out.estimates.push_back(belief.mean);
    out.variances.push_back(diagonal(belief.cov));
  }
  out.invariants.covariance = filter.covariance_violations();
  return out;
}

FilterTrace run_smc(const ScenarioConfig& cfg, const SystemModel& model, const std::vector<ChannelEvent>& events,
                    Rng rng) {
  FilterTrace out;
  SmcFilter filter(model, cfg.channel, SmcOptions{cfg.particle_count, cfg.resampling, cfg.check_invariants},
                   std::move(rng));
  for (const auto& e : events) {
    out.estimates.push_back(filter.step(e));
    out.variances.push_back(filter.last_variance());
    const auto& d = filter.last_diagnostics();
    out.collapses += d.collapsed ? 1 : 0;
    out.exclusion_fallbacks += d.exclusion_fallbacks;
    out.smc.push_back(d);
  }
  out.invariants = filter.invariants();
  return out;
}

FilterTrace run_baseline(const ScenarioConfig& cfg, const SystemModel& model, const std::vector<ChannelEvent>& events,
                         BaselineKind kind, Rng rng) {
  FilterTrace out;
  BaselineParticleFilter filter(kind, model, cfg.channel,
                                BaselineOptions{cfg.particle_count, cfg.resampling, cfg.check_invariants},
                                std::move(rng));
  for (const auto& e : events) {
    out.estimates.push_back(filter.step(e));
    out.variances.push_back(filter.last_variance());
    out.collapses += filter.particles().collapsed ? 1 : 0;
  }
  out.invariants = filter.invariants();
  return out;
}

FilterTrace run_filter(FilterKind kind, const ScenarioConfig& cfg, const SystemModel& model,
                       const std::vector<ChannelEvent>& events, int run) {
  const auto started = std::chrono::steady_clock::now();
  FilterTrace out;
  try {
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(run), kFilterStream);
    switch (kind) {
      case FilterKind::kGaf:
        out = run_gaf(cfg, model, events, DropoutPolicy::kPredicted);
        break;
      case FilterKind::kGafSkip:
        out = run_gaf(cfg, model, events, DropoutPolicy::kSkip);
        break;
      case FilterKind::kSmc:
        out = run_smc(cfg, model, events, std::move(rng));
        break;
      case FilterKind::kStandardPf:
        out = run_baseline(cfg, model, events, BaselineKind::kStandardPf, std::move(rng));
        break;
      case FilterKind::kPfRd:
        out = run_baseline(cfg, model, events, BaselineKind::kPfRd, std::move(rng));
        break;
    }
    if (!std::all_of(out.estimates.begin(), out.estimates.end(), finite)) {
      out.diverged = true;
      out.failure = "non-finite estimate";
    }
  } catch (const NumericalError& e) {
    out.diverged = true;
    out.failure = e.what();
  }
  out.kind = kind;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

std::optional<double> optional_average(const std::vector<std::optional<double>>& values) {
  double acc = 0.0;
  long n = 0;
  for (const auto& v : values) {
    if (v) {
      acc += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json invariants_to_json(const InvariantCounts& c) {
  return {{"weight_normalization", c.weight_normalization},
          {"group_closure", c.group_closure},
          {"exclusion", c.exclusion},
          {"channel_repetition", c.channel_repetition},
          {"covariance", c.covariance},
          {"mixture_bound", c.mixture_bound}};
}

InvariantCounts invariants_from_json(const json& j) {
  InvariantCounts c;
  c.weight_normalization = j.at("weight_normalization").get<long>();
  c.group_closure = j.at("group_closure").get<long>();
  c.exclusion = j.at("exclusion").get<long>();
  c.channel_repetition = j.at("channel_repetition").get<long>();
  c.covariance = j.at("covariance").get<long>();
  c.mixture_bound = j.at("mixture_bound").get<long>();
  return c;
}

FilterKind kind_from_name(const std::string& name) {
  if (name == "gaf_skip") return FilterKind::kGafSkip;
  return filter_kind_from_string(name);
}

}  // namespace

RunTrace simulate_run(const ScenarioConfig& config, int run, bool run_filters) {
  const SystemModel model = config.model.build();
  RunTrace trace;
  trace.run = run;
  Rng truth_rng = make_stream(config.seed, static_cast<std::uint64_t>(run), kTruthStream);
  trace.truth = simulate_truth(model, config.steps, truth_rng);
  Rng channel_rng = make_stream(config.seed, static_cast<std::uint64_t>(run), kChannelStream);
  trace.events = simulate_channel(config.channel, trace.truth.measurements, channel_rng);
  trace.channel_sound = no_repetition(trace.events, config.channel);
  if (run_filters) {
    for (FilterKind kind : config.effective_roster()) {
      trace.filters.push_back(run_filter(kind, config, model, trace.events, run));
    }
  }
  return trace;
}

const ComponentRmse& FilterSummary::component(const std::string& name) const {
  for (const auto& c : rmse) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no RMSE component '" + name + "'");
}

const FilterSummary& CampaignResult::filter(FilterKind kind) const {
  for (const auto& f : filters) {
    if (f.kind == kind) return f;
  }
  throw std::out_of_range("filter '" + to_string(kind) + "' not in campaign");
}

bool CampaignResult::has_filter(FilterKind kind) const {
  return std::any_of(filters.begin(), filters.end(), [kind](const FilterSummary& f) { return f.kind == kind; });
}

bool CampaignResult::campaign_failed() const {
  return std::any_of(filters.begin(), filters.end(), [](const FilterSummary& f) { return f.valid_runs == 0; });
}

CampaignResult run_campaign(const ScenarioConfig& config) {
  config.validate();
  std::vector<RunTrace> runs(static_cast<std::size_t>(config.mc_runs));

  const int workers = std::min(config.threads, config.mc_runs);
  if (workers <= 1) {
    for (int r = 0; r < config.mc_runs; ++r) runs[r] = simulate_run(config, r);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int r = w; r < config.mc_runs; r += workers) runs[r] = simulate_run(config, r);
      });
    }
    for (auto& t : pool) t.join();
  }

  CampaignResult result;
  result.config = config;
  const auto roster = config.effective_roster();
  const auto groups = component_groups(config.model.name());
  const int max_delay = config.channel.max_delay;

  result.channel.delay_histogram.assign(max_delay + 1, 0);
  for (const auto& run : runs) {
    result.channel.steps += static_cast<long>(run.events.size());
    for (const auto& e : run.events) {
      if (!e.delivered()) continue;
      ++result.channel.delivered;
      ++result.channel.delay_histogram[e.delivery->true_delay];
    }
    if (!run.channel_sound) ++result.channel.unsound_runs;
  }
  result.invariants.channel_repetition = result.channel.unsound_runs;

  for (std::size_t f = 0; f < roster.size(); ++f) {
    FilterSummary summary;
    summary.kind = roster[f];
    std::vector<std::vector<Vector>> truth;
    std::vector<std::vector<Vector>> estimates;
    for (const auto& run : runs) {
      const auto& trace = run.filters[f];
      summary.seconds += trace.seconds;
      summary.collapses += trace.collapses;
      summary.exclusion_fallbacks += trace.exclusion_fallbacks;
      summary.invariants += trace.invariants;
      if (trace.diverged) {
        ++summary.divergent_runs;
        continue;
      }
      ++summary.valid_runs;
      truth.push_back(run.truth.states);
      estimates.push_back(trace.estimates);
    }
    if (summary.valid_runs > 0) {
      for (const auto& g : groups) {
        ComponentRmse c;
        c.name = g.name;
        c.per_step = rmse_per_step(truth, estimates, g.indices);
        c.time_average = time_average(c.per_step);
        c.final_third = final_third_average(c.per_step);
        summary.rmse.push_back(std::move(c));
      }
    }
    result.invariants += summary.invariants;
    result.filters.push_back(std::move(summary));

    if (roster[f] == FilterKind::kSmc) {
      DelayErrorSummary delay;
      for (int k = 0; k < config.steps; ++k) {
        double map_acc = 0.0;
        double mean_acc = 0.0;
        long n = 0;
        for (const auto& run : runs) {
          const auto& trace = run.filters[f];
          if (trace.diverged) continue;
          const auto& e = run.events[k];
          const auto& post = trace.smc[k].delay;
          if (!e.delivered() || !post) continue;
          const double truth_delay = e.delivery->true_delay;
          map_acc += std::pow(post->map_estimate - truth_delay, 2);
          mean_acc += std::pow(post->mean_estimate - truth_delay, 2);
          ++n;
        }
        delay.map_per_step.push_back(n ? std::optional<double>(std::sqrt(map_acc / n)) : std::nullopt);
        delay.mean_per_step.push_back(n ? std::optional<double>(std::sqrt(mean_acc / n)) : std::nullopt);
      }
      delay.map_average = optional_average(delay.map_per_step);
      delay.mean_average = optional_average(delay.mean_per_step);
      result.delay = std::move(delay);
    }
  }

  double reference = 0.0;
  for (const auto& f : result.filters) {
    if (f.kind == FilterKind::kStandardPf) reference = f.seconds;
  }
  if (reference > 0.0) {
    for (auto& f : result.filters) f.relative_time = f.seconds / reference;
  }
  return result;
}

json summary_json(const CampaignResult& r) {
  json doc;
  // Execution settings do not affect results and are left out so that
  // summaries compare byte for byte across thread counts and output dirs.
  json config = to_json(r.config);
  config.erase("threads");
  config.erase("output");
  doc["config"] = config;
  json filters = json::array();
  for (const auto& f : r.filters) {
    json entry;
    entry["name"] = to_string(f.kind);
    entry["valid_runs"] = f.valid_runs;
    entry["divergent_runs"] = f.divergent_runs;
    entry["collapses"] = f.collapses;
    entry["exclusion_fallbacks"] = f.exclusion_fallbacks;
    entry["invariant_violations"] = invariants_to_json(f.invariants);
    json rmse = json::array();
    for (const auto& c : f.rmse) {
      rmse.push_back({{"component", c.name},
                      {"time_average", c.time_average},
                      {"final_third", c.final_third},
                      {"per_step", c.per_step}});
    }
    entry["rmse"] = rmse;
    filters.push_back(entry);
  }
  doc["filters"] = filters;
  if (r.delay) {
    json per_map = json::array();
    json per_mean = json::array();
    for (const auto& v : r.delay->map_per_step) per_map.push_back(optional_to_json(v));
    for (const auto& v : r.delay->mean_per_step) per_mean.push_back(optional_to_json(v));
    doc["delay_rmse"] = {{"excludes_dropout_steps", true},
                         {"map_time_average", optional_to_json(r.delay->map_average)},
                         {"mean_time_average", optional_to_json(r.delay->mean_average)},
                         {"map_per_step", per_map},
                         {"mean_per_step", per_mean}};
  } else {
    doc["delay_rmse"] = nullptr;
  }
  doc["channel"] = {{"steps", r.channel.steps},
                    {"delivered", r.channel.delivered},
                    {"dropout_rate", r.channel.dropout_rate()},
                    {"delay_histogram", r.channel.delay_histogram},
                    {"unsound_runs", r.channel.unsound_runs}};
  doc["invariant_violations"] = invariants_to_json(r.invariants);
  return doc;
}

json timing_json(const CampaignResult& r) {
  json filters = json::array();
  for (const auto& f : r.filters) {
    filters.push_back({{"name", to_string(f.kind)},
                       {"seconds", f.seconds},
                       {"relative_to_standard_pf", optional_to_json(f.relative_time)}});
  }
  return {{"filters", filters}};
}

CampaignResult campaign_from_json(const json& summary, const json* timing) {
  CampaignResult r;
  r.config = parse_scenario(summary.at("config"));
  for (const auto& entry : summary.at("filters")) {
    FilterSummary f;
    f.kind = kind_from_name(entry.at("name").get<std::string>());
    f.valid_runs = entry.at("valid_runs").get<int>();
    f.divergent_runs = entry.at("divergent_runs").get<int>();
    f.collapses = entry.at("collapses").get<long>();
    f.exclusion_fallbacks = entry.at("exclusion_fallbacks").get<long>();
    f.invariants = invariants_from_json(entry.at("invariant_violations"));
    for (const auto& c : entry.at("rmse")) {
      ComponentRmse comp;
      comp.name = c.at("component").get<std::string>();
      comp.time_average = c.at("time_average").get<double>();
      comp.final_third = c.at("final_third").get<double>();
      comp.per_step = c.at("per_step").get<std::vector<double>>();
      f.rmse.push_back(std::move(comp));
    }
    r.filters.push_back(std::move(f));
  }
  const json& delay = summary.at("delay_rmse");
  if (!delay.is_null()) {
    DelayErrorSummary d;
    for (const auto& v : delay.at("map_per_step")) d.map_per_step.push_back(optional_from_json(v));
    for (const auto& v : delay.at("mean_per_step")) d.mean_per_step.push_back(optional_from_json(v));
    d.map_average = optional_from_json(delay.at("map_time_average"));
    d.mean_average = optional_from_json(delay.at("mean_time_average"));
    r.delay = std::move(d);
  }
  const json& ch = summary.at("channel");
  r.channel.steps = ch.at("steps").get<long>();
  r.channel.delivered = ch.at("delivered").get<long>();
  r.channel.delay_histogram = ch.at("delay_histogram").get<std::vector<long>>();
  r.channel.unsound_runs = ch.at("unsound_runs").get<long>();
  r.invariants = invariants_from_json(summary.at("invariant_violations"));

  if (timing) {
    const json& tf = timing->at("filters");
    if (tf.size() != r.filters.size()) throw std::invalid_argument("timing does not match summary filters");
    for (std::size_t i = 0; i < r.filters.size(); ++i) {
      r.filters[i].seconds = tf[i].at("seconds").get<double>();
      r.filters[i].relative_time = optional_from_json(tf[i].at("relative_to_standard_pf"));
    }
  }
  return r;
}

}  // namespace delayfilt
