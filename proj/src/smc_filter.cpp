#include "delayfilt/smc_filter.hpp"

#include <algorithm>
#include <cmath>

#include "delayfilt/gaussian.hpp"

namespace delayfilt {

long assign_delays(ParticleSet& set, const DelayProbabilities& probs, Rng& rng) {
  const int n_bar = probs.max_delay();
  if (n_bar > set.lags()) throw std::invalid_argument("assign_delays: delay support exceeds stored history");
  const int n = set.size();
  std::vector<double> cdf(n_bar + 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  long fallbacks = 0;

  for (int i = 0; i < n; ++i) {
    double mass = 0.0;
    for (int j = 0; j <= n_bar; ++j) {
      bool excluded = false;
      for (int tau = 1; tau <= n_bar && !excluded; ++tau) {
        const int past = set.delays[tau][i];
        excluded = past != kNoMeasurement && past + tau == j;
      }
      mass += excluded ? 0.0 : probs.gamma_bar[j];
      cdf[j] = mass;
    }
    if (!(mass > 0.0)) {
      ++fallbacks;
      set.exclusion_fallback[i] = 1;
      mass = 0.0;
      for (int j = 0; j <= n_bar; ++j) cdf[j] = (mass += probs.gamma_bar[j]);
    }

    int chosen = 0;
    if (n_bar > 0) {
      const double u = uniform(rng) * mass;
      while (chosen < n_bar && u >= cdf[chosen]) ++chosen;
    }
    set.delays[0][i] = chosen;
    set.assigned_gamma[i] = (cdf[chosen] - (chosen > 0 ? cdf[chosen - 1] : 0.0)) / mass;
  }
  return fallbacks;
}

void weight_update(ParticleSet& set, const SystemModel& model, const Vector& y) {
  const GaussianLikelihood likelihood(model.meas_cov);
  const int n = set.size();
  std::vector<double> loglik(n);
  for (int i = 0; i < n; ++i) {
    const int j = set.delays[0][i];
    if (j < 0 || j > set.lags()) throw std::logic_error("weight_update: particle has no valid delay assignment");
    const Vector z = model.measurement(set.states[j].col(i), set.step - j);
    loglik[i] = likelihood.log_density(model.residual(y, z));
  }
  reweight(set, loglik);
}

void handle_dropout(ParticleSet& set) {
  std::fill(set.delays[0].begin(), set.delays[0].end(), kNoMeasurement);
  std::fill(set.assigned_gamma.begin(), set.assigned_gamma.end(), 0.0);
}

DelayPosterior estimate_delay(const ParticleSet& set) {
  int n_bar = 0;
  for (int d : set.delays[0]) n_bar = std::max(n_bar, d);
  DelayPosterior post;
  post.pmf.assign(std::min(set.max_delay, std::max(0, set.step - 1)) + 1, 0.0);
  if (static_cast<int>(post.pmf.size()) <= n_bar) post.pmf.resize(n_bar + 1, 0.0);
  for (int i = 0; i < set.size(); ++i) {
    const int d = set.delays[0][i];
    if (d < 0) continue;
    post.pmf[d] += set.weights[i] * set.assigned_gamma[i];
    post.mean_estimate += set.weights[i] * d;
  }
  double total = 0.0;
  for (double p : post.pmf) total += p;
  if (total > 0.0) {
    for (auto& p : post.pmf) p /= total;
  }
  post.map_estimate = static_cast<int>(std::max_element(post.pmf.begin(), post.pmf.end()) - post.pmf.begin());
  return post;
}

SmcFilter::SmcFilter(SystemModel model, DelayProfile profile, SmcOptions options, Rng rng)
    : model_(std::move(model)), profile_(std::move(profile)), options_(options), rng_(std::move(rng)) {
  model_.validate();
  profile_.validate();
  set_ = initialize_particles(model_, options_.particle_count, profile_.max_delay, rng_);
}

Vector SmcFilter::step(const ChannelEvent& event) {
  propagate(set_, model_, rng_);
  const int k = set_.step;
  if (event.step != k) throw std::invalid_argument("SmcFilter: events must arrive in step order");

  diag_ = SmcStepDiagnostics{};
  diag_.step = k;
  if (!event.delivered()) {
    handle_dropout(set_);
    diag_.ess = set_.ess();
    variance_ = set_.weighted_variance();
    return set_.weighted_mean();
  }

  const auto probs = delay_probabilities(profile_, k);
  diag_.exclusion_fallbacks = assign_delays(set_, probs, rng_);
  weight_update(set_, model_, event.delivery->value);
  diag_.collapsed = set_.collapsed;
  diag_.ess = set_.ess();
  diag_.group_counts = set_.group_counts();
  diag_.delay = estimate_delay(set_);
  if (options_.check_invariants) check_invariants();
  const Vector estimate = set_.weighted_mean();
  variance_ = set_.weighted_variance();
  maybe_resample(set_, options_.resampling, rng_);
  diag_.resampled_counts = set_.group_counts();
  return estimate;
}

void SmcFilter::check_invariants() {
  double total = 0.0;
  for (double w : set_.weights) total += w;
  if (std::abs(total - 1.0) >= 1e-10) ++invariants_.weight_normalization;

  long grouped = 0;
  for (int c : diag_.group_counts) grouped += c;
  if (grouped != set_.size()) ++invariants_.group_closure;

  const int n_bar = profile_.effective_max_delay(set_.step);
  for (int i = 0; i < set_.size(); ++i) {
    if (set_.exclusion_fallback[i]) continue;
    const int j = set_.delays[0][i];
    for (int tau = 1; tau <= n_bar; ++tau) {
      const int past = set_.delays[tau][i];
      if (past >= 0 && past + tau == j) {
        ++invariants_.exclusion;
        break;
      }
    }
  }
}

SmcRunResult smc_run(const SystemModel& model, const DelayProfile& profile, const std::vector<ChannelEvent>& events,
                     const SmcOptions& options, Rng rng) {
  SmcFilter filter(model, profile, options, std::move(rng));
  SmcRunResult out;
  for (const auto& e : events) {
    out.estimates.push_back(filter.step(e));
    out.diagnostics.push_back(filter.last_diagnostics());
    out.variances.push_back(filter.last_variance());
  }
  out.invariants = filter.invariants();
  return out;
}

}  // namespace delayfilt
