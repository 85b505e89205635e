#include "delayfilt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "delayfilt/gaussian.hpp"

namespace delayfilt {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDiagnosticStream = 3;

double two_sided_critical(double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha / 2.0));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

bool ChannelReport::pass() const {
  return histogram.pass && dropout.pass &&
         std::all_of(whiteness.begin(), whiteness.end(), [](const WhitenessLag& w) { return w.pass; });
}

ChannelReport channel_diagnostics(const ScenarioConfig& config, long samples, std::uint64_t seed) {
  if (samples < 10000) throw ConfigError("channel diagnostics need at least 10^4 samples");
  const DelayProfile& profile = config.channel;
  profile.validate();
  const Matrix meas_cov = config.model.build().meas_cov;
  const int max_delay = profile.max_delay;

  Rng rng = make_stream(seed, 0, kDiagnosticStream);
  GaussianSampler sampler(meas_cov);
  std::vector<Vector> noise(samples);
  for (auto& v : noise) v = sampler.draw(rng);
  const auto events = simulate_channel(profile, noise, rng);

  ChannelReport report;
  report.samples = samples;

  // Expected outcome mass accumulated over steps, so start-up and scheduled
  // rates are handled exactly.
  std::vector<double> delay_mass(max_delay + 1, 0.0);
  double dropout_mass = 0.0;
  double dropout_var = 0.0;
  auto& hist = report.histogram;
  hist.counts.assign(max_delay + 1, 0);
  for (const auto& e : events) {
    const auto probs = delay_probabilities(profile, e.step);
    for (std::size_t j = 0; j < probs.gamma.size(); ++j) delay_mass[j] += probs.gamma[j];
    dropout_mass += probs.dropout;
    dropout_var += probs.dropout * (1.0 - probs.dropout);
    if (e.delivered()) ++hist.counts[e.delivery->true_delay];
  }

  long delivered = 0;
  for (long c : hist.counts) delivered += c;
  double total_mass = 0.0;
  for (double m : delay_mass) total_mass += m;
  hist.expected.resize(max_delay + 1);
  int categories = 0;
  for (int j = 0; j <= max_delay; ++j) {
    hist.expected[j] = delivered * delay_mass[j] / total_mass;
    if (hist.expected[j] <= 0.0) {
      if (hist.counts[j] > 0) hist.chi_square = std::numeric_limits<double>::infinity();
      continue;
    }
    ++categories;
    const double d = hist.counts[j] - hist.expected[j];
    hist.chi_square += d * d / hist.expected[j];
  }
  hist.dof = std::max(0, categories - 1);
  if (hist.dof == 0) {
    hist.p_value = std::isfinite(hist.chi_square) ? 1.0 : 0.0;
  } else if (!std::isfinite(hist.chi_square)) {
    hist.p_value = 0.0;
  } else {
    hist.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(hist.dof), hist.chi_square));
  }
  hist.pass = hist.p_value > kChannelTestAlpha;

  auto& drop = report.dropout;
  drop.trials = samples;
  drop.dropped = samples - delivered;
  drop.rate = static_cast<double>(drop.dropped) / samples;
  drop.expected_rate = dropout_mass / samples;
  const double spread = std::sqrt(dropout_var);
  drop.z_score = spread > 0.0 ? (drop.dropped - dropout_mass) / spread : (drop.dropped == 0 ? 0.0 : INFINITY);
  drop.pass = std::abs(drop.z_score) < two_sided_critical(kChannelTestAlpha);

  const int max_lag = std::max(1, max_delay);
  for (auto& stat : modified_noise_autocorrelation(events, noise, profile, meas_cov, max_lag)) {
    WhitenessLag lag;
    const Matrix dev = (stat.value - stat.target).cwiseAbs();
    for (Eigen::Index i = 0; i < dev.size(); ++i) {
      const double se = stat.std_error(i);
      const double z = se > 0.0 ? dev(i) / se : (dev(i) == 0.0 ? 0.0 : INFINITY);
      lag.max_abs_z = std::max(lag.max_abs_z, z);
    }
    lag.pass = lag.max_abs_z <= kWhitenessSigmas;
    lag.statistic = std::move(stat);
    report.whiteness.push_back(std::move(lag));
  }
  return report;
}

json to_json(const ChannelReport& r) {
  json whiteness = json::array();
  for (const auto& w : r.whiteness) {
    whiteness.push_back({{"lag", w.statistic.lag},
                         {"value", matrix_to_json(w.statistic.value)},
                         {"std_error", matrix_to_json(w.statistic.std_error)},
                         {"target", matrix_to_json(w.statistic.target)},
                         {"max_abs_z", w.max_abs_z},
                         {"pass", w.pass}});
  }
  return {{"samples", r.samples},
          {"delay_histogram",
           {{"counts", r.histogram.counts},
            {"expected", r.histogram.expected},
            {"chi_square", r.histogram.chi_square},
            {"dof", r.histogram.dof},
            {"p_value", r.histogram.p_value},
            {"pass", r.histogram.pass}}},
          {"dropout",
           {{"trials", r.dropout.trials},
            {"dropped", r.dropout.dropped},
            {"rate", r.dropout.rate},
            {"expected_rate", r.dropout.expected_rate},
            {"z_score", r.dropout.z_score},
            {"pass", r.dropout.pass}}},
          {"whiteness", whiteness},
          {"pass", r.pass()}};
}

}  // namespace delayfilt
