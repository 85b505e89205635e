#include "delayfilt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "delayfilt/gaussian.hpp"

namespace delayfilt {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kStandardPf:
      return "standard_pf";
    case BaselineKind::kPfRd:
      return "pf_rd";
  }
  return "unknown";
}

BaselineParticleFilter::BaselineParticleFilter(BaselineKind kind, SystemModel model, DelayProfile profile,
                                               BaselineOptions options, Rng rng)
    : kind_(kind),
      model_(std::move(model)),
      profile_(std::move(profile)),
      options_(options),
      rng_(std::move(rng)) {
  model_.validate();
  profile_.validate();
  // The standard PF never looks back, so it keeps no history.
  const int history = kind_ == BaselineKind::kPfRd ? profile_.max_delay : 0;
  set_ = initialize_particles(model_, options_.particle_count, history, rng_);
}

Vector BaselineParticleFilter::step(const ChannelEvent& event) {
  propagate(set_, model_, rng_);
  const int k = set_.step;
  if (event.step != k) throw std::invalid_argument("BaselineParticleFilter: events must arrive in step order");
  if (!event.delivered()) {
    ess_ = set_.ess();
    variance_ = set_.weighted_variance();
    return set_.weighted_mean();
  }

  const GaussianLikelihood likelihood(model_.meas_cov);
  const Vector& y = event.delivery->value;
  const int n = set_.size();
  std::vector<double> loglik(n);
  if (kind_ == BaselineKind::kStandardPf) {
    for (int i = 0; i < n; ++i) {
      loglik[i] = likelihood.log_density(model_.residual(y, model_.measurement(set_.states[0].col(i), k)));
    }
  } else {
    const auto probs = delay_probabilities(profile_, k);
    const int n_bar = probs.max_delay();
    std::vector<double> log_gamma(n_bar + 1);
    for (int j = 0; j <= n_bar; ++j) log_gamma[j] = std::log(probs.gamma_bar[j]);
    std::vector<double> terms(n_bar + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= n_bar; ++j) {
        const Vector z = model_.measurement(set_.states[j].col(i), k - j);
        terms[j] = log_gamma[j] + likelihood.log_density(model_.residual(y, z));
      }
      loglik[i] = log_sum_exp(terms.data(), terms.size());
      if (options_.check_invariants && std::isfinite(loglik[i]) &&
          loglik[i] < *std::max_element(terms.begin(), terms.end())) {
        ++invariants_.mixture_bound;
      }
    }
  }
  reweight(set_, loglik);
  if (options_.check_invariants) {
    double total = 0.0;
    for (double w : set_.weights) total += w;
    if (std::abs(total - 1.0) >= 1e-10) ++invariants_.weight_normalization;
  }
  const Vector estimate = set_.weighted_mean();
  variance_ = set_.weighted_variance();
  ess_ = set_.ess();
  maybe_resample(set_, options_.resampling, rng_);
  return estimate;
}

namespace {

BaselineRunResult run(BaselineKind kind, const SystemModel& model, const DelayProfile& profile,
                      const std::vector<ChannelEvent>& events, const BaselineOptions& options, Rng rng) {
  BaselineParticleFilter filter(kind, model, profile, options, std::move(rng));
  BaselineRunResult out;
  for (const auto& e : events) {
    out.estimates.push_back(filter.step(e));
    out.variances.push_back(filter.last_variance());
    out.ess.push_back(filter.last_ess());
    out.collapsed.push_back(filter.particles().collapsed ? 1 : 0);
  }
  out.invariants = filter.invariants();
  return out;
}

}  // namespace

BaselineRunResult standard_pf_run(const SystemModel& model, const std::vector<ChannelEvent>& events,
                                  const BaselineOptions& options, Rng rng) {
  return run(BaselineKind::kStandardPf, model, DelayProfile::constant(0.0, 0), events, options, std::move(rng));
}

BaselineRunResult pf_rd_run(const SystemModel& model, const DelayProfile& profile,
                            const std::vector<ChannelEvent>& events, const BaselineOptions& options, Rng rng) {
  return run(BaselineKind::kPfRd, model, profile, events, options, std::move(rng));
}

}  // namespace delayfilt
