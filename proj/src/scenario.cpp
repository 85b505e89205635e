#include "delayfilt/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace delayfilt {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

GrowthModelParams parse_growth(const json& p) {
  reject_unknown(p, {"process_var", "meas_var"}, "growth params");
  GrowthModelParams g;
  g.process_var = get_or(p, "process_var", g.process_var);
  g.meas_var = get_or(p, "meas_var", g.meas_var);
  if (!(g.process_var > 0.0) || !(g.meas_var > 0.0)) throw ConfigError("growth variances must be > 0");
  return g;
}

CTModelParams parse_ct(const json& p) {
  reject_unknown(p, {"sample_time", "turn_rate_deg", "q1", "q2", "sigma_r", "sigma_theta"}, "coordinated_turn params");
  CTModelParams c;
  c.sample_time = get_or(p, "sample_time", c.sample_time);
  c.turn_rate_deg = get_or(p, "turn_rate_deg", c.turn_rate_deg);
  c.q1 = get_or(p, "q1", c.q1);
  c.q2 = get_or(p, "q2", c.q2);
  c.sigma_r = get_or(p, "sigma_r", c.sigma_r);
  c.sigma_theta = get_or(p, "sigma_theta", c.sigma_theta);
  c.validate();
  return c;
}

}  // namespace

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kGaf:
      return "gaf";
    case FilterKind::kGafSkip:
      return "gaf_skip";
    case FilterKind::kSmc:
      return "smc";
    case FilterKind::kStandardPf:
      return "standard_pf";
    case FilterKind::kPfRd:
      return "pf_rd";
  }
  return "unknown";
}

FilterKind filter_kind_from_string(const std::string& name) {
  if (name == "gaf") return FilterKind::kGaf;
  if (name == "smc") return FilterKind::kSmc;
  if (name == "standard_pf") return FilterKind::kStandardPf;
  if (name == "pf_rd") return FilterKind::kPfRd;
  throw ConfigError("unknown filter '" + name + "'");
}

std::string ModelSpec::name() const {
  return std::holds_alternative<GrowthModelParams>(params) ? "growth" : "coordinated_turn";
}

SystemModel ModelSpec::build() const {
  if (const auto* g = std::get_if<GrowthModelParams>(&params)) return growth_model(*g);
  return coordinated_turn_model(std::get<CTModelParams>(params));
}

std::vector<FilterKind> ScenarioConfig::effective_roster() const {
  std::vector<FilterKind> out;
  for (FilterKind f : roster) {
    if (f != FilterKind::kGaf) {
      out.push_back(f);
      continue;
    }
    if (dropout_policy != DropoutSetting::kSkip) out.push_back(FilterKind::kGaf);
    if (dropout_policy != DropoutSetting::kPredicted) out.push_back(FilterKind::kGafSkip);
  }
  return out;
}

void ScenarioConfig::validate() const {
  channel.validate();
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (mc_runs < 1) throw ConfigError("mc_runs must be >= 1");
  if (particle_count < 1) throw ConfigError("particles must be >= 1");
  if (roster.empty()) throw ConfigError("filter roster must not be empty");
  std::set<FilterKind> unique(roster.begin(), roster.end());
  if (unique.size() != roster.size()) throw ConfigError("filter roster has duplicates");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(resampling.ess_threshold > 0.0) || resampling.ess_threshold > 1.0) {
    throw ConfigError("ess_threshold must be in (0, 1]");
  }
}

ScenarioConfig parse_scenario(const json& doc) {
  reject_unknown(doc,
                 {"model", "channel", "steps", "mc_runs", "particles", "filters", "dropout_policy",
                  "measurement_spread", "resampling", "seed", "threads", "check_invariants", "output"},
                 "scenario");
  ScenarioConfig cfg;

  if (!doc.contains("model")) throw ConfigError("scenario needs a 'model'");
  const json& model = doc.at("model");
  reject_unknown(model, {"name", "params"}, "model");
  const auto name = get_or<std::string>(model, "name", "");
  const json params = model.contains("params") ? model.at("params") : json::object();
  if (name == "growth") {
    cfg.model.params = parse_growth(params);
  } else if (name == "coordinated_turn") {
    cfg.model.params = parse_ct(params);
  } else {
    throw ConfigError("unknown model '" + name + "'");
  }

  if (!doc.contains("channel")) throw ConfigError("scenario needs a 'channel'");
  const json& ch = doc.at("channel");
  reject_unknown(ch, {"lambda", "max_delay"}, "channel");
  if (!ch.contains("lambda") || !ch.contains("max_delay")) throw ConfigError("channel needs lambda and max_delay");
  const json& lam = ch.at("lambda");
  if (lam.is_number()) {
    cfg.channel.lambda_schedule = {lam.get<double>()};
  } else if (lam.is_array() && !lam.empty()) {
    cfg.channel.lambda_schedule.clear();
    for (const auto& v : lam) {
      if (!v.is_number()) throw ConfigError("lambda schedule entries must be numbers");
      cfg.channel.lambda_schedule.push_back(v.get<double>());
    }
  } else {
    throw ConfigError("lambda must be a number or a non-empty array");
  }
  cfg.channel.max_delay = get_or(ch, "max_delay", 0);

  cfg.steps = get_or(doc, "steps", cfg.steps);
  cfg.mc_runs = get_or(doc, "mc_runs", cfg.mc_runs);
  cfg.particle_count = get_or(doc, "particles", cfg.particle_count);
  cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.threads = get_or(doc, "threads", cfg.threads);
  cfg.check_invariants = get_or(doc, "check_invariants", cfg.check_invariants);

  const auto filters = get_or<std::vector<std::string>>(doc, "filters", {"gaf", "smc", "standard_pf", "pf_rd"});
  for (const auto& f : filters) cfg.roster.push_back(filter_kind_from_string(f));

  const auto policy = get_or<std::string>(doc, "dropout_policy", "predicted");
  if (policy == "predicted") {
    cfg.dropout_policy = DropoutSetting::kPredicted;
  } else if (policy == "skip") {
    cfg.dropout_policy = DropoutSetting::kSkip;
  } else if (policy == "both") {
    cfg.dropout_policy = DropoutSetting::kBoth;
  } else {
    throw ConfigError("dropout_policy must be predicted, skip or both");
  }

  const auto spread = get_or<std::string>(doc, "measurement_spread", "per_lag");
  if (spread == "per_lag") {
    cfg.spread = SpreadTerm::kPerLag;
  } else if (spread == "full_mixture") {
    cfg.spread = SpreadTerm::kFullMixture;
  } else {
    throw ConfigError("measurement_spread must be per_lag or full_mixture");
  }

  if (doc.contains("resampling")) {
    const json& rs = doc.at("resampling");
    reject_unknown(rs, {"policy", "ess_threshold"}, "resampling");
    const auto rp = get_or<std::string>(rs, "policy", "always");
    if (rp == "always") {
      cfg.resampling.policy = ResamplePolicy::kAlways;
    } else if (rp == "ess") {
      cfg.resampling.policy = ResamplePolicy::kEssGated;
    } else {
      throw ConfigError("resampling policy must be always or ess");
    }
    cfg.resampling.ess_threshold = get_or(rs, "ess_threshold", cfg.resampling.ess_threshold);
  }

  if (doc.contains("output")) {
    const json& out = doc.at("output");
    reject_unknown(out, {"dir"}, "output");
    cfg.output_dir = get_or<std::string>(out, "dir", "");
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scenario(doc);
}

json to_json(const ScenarioConfig& c) {
  json doc;
  json params;
  if (const auto* g = std::get_if<GrowthModelParams>(&c.model.params)) {
    params = {{"process_var", g->process_var}, {"meas_var", g->meas_var}};
  } else {
    const auto& p = std::get<CTModelParams>(c.model.params);
    params = {{"sample_time", p.sample_time}, {"turn_rate_deg", p.turn_rate_deg}, {"q1", p.q1},
              {"q2", p.q2},                   {"sigma_r", p.sigma_r},             {"sigma_theta", p.sigma_theta}};
  }
  doc["model"] = {{"name", c.model.name()}, {"params", params}};
  json lam = c.channel.lambda_schedule.size() == 1 ? json(c.channel.lambda_schedule.front())
                                                   : json(c.channel.lambda_schedule);
  doc["channel"] = {{"lambda", lam}, {"max_delay", c.channel.max_delay}};
  doc["steps"] = c.steps;
  doc["mc_runs"] = c.mc_runs;
  doc["particles"] = c.particle_count;
  json filters = json::array();
  for (FilterKind f : c.roster) filters.push_back(to_string(f));
  doc["filters"] = filters;
  doc["dropout_policy"] = c.dropout_policy == DropoutSetting::kPredicted ? "predicted"
                          : c.dropout_policy == DropoutSetting::kSkip    ? "skip"
                                                                         : "both";
  doc["measurement_spread"] = c.spread == SpreadTerm::kPerLag ? "per_lag" : "full_mixture";
  doc["resampling"] = {{"policy", c.resampling.policy == ResamplePolicy::kAlways ? "always" : "ess"},
                       {"ess_threshold", c.resampling.ess_threshold}};
  doc["seed"] = c.seed;
  doc["threads"] = c.threads;
  doc["check_invariants"] = c.check_invariants;
  if (!c.output_dir.empty()) doc["output"] = {{"dir", c.output_dir}};
  return doc;
}

ScenarioConfig problem1_preset() {
  ScenarioConfig c;
  c.model.params = GrowthModelParams{};
  c.channel = DelayProfile::constant(0.8, 3);
  c.steps = 50;
  c.mc_runs = 100;
  c.particle_count = 500;
  c.roster = {FilterKind::kGaf, FilterKind::kSmc, FilterKind::kStandardPf, FilterKind::kPfRd};
  return c;
}

ScenarioConfig problem2_preset() {
  ScenarioConfig c;
  c.model.params = CTModelParams{};
  c.channel = DelayProfile::constant(0.9, 3);
  c.steps = 200;
  c.mc_runs = 100;
  c.particle_count = 5000;
  c.roster = {FilterKind::kGaf, FilterKind::kSmc, FilterKind::kStandardPf, FilterKind::kPfRd};
  return c;
}

}  // namespace delayfilt
