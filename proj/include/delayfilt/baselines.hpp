#pragma once

#include <string_view>
#include <vector>

#include "delayfilt/channel.hpp"
#include "delayfilt/invariants.hpp"
#include "delayfilt/models.hpp"
#include "delayfilt/particle_set.hpp"

namespace delayfilt {

enum class BaselineKind { kStandardPf, kPfRd };

std::string_view to_string(BaselineKind kind);

struct BaselineOptions {
  int particle_count = 500;
  ResampleOptions resampling;
  bool check_invariants = true;
};

struct BaselineRunResult {
  std::vector<Vector> estimates;
  std::vector<Vector> variances;
  std::vector<double> ess;
  std::vector<unsigned char> collapsed;
  InvariantCounts invariants;
};

/// Bootstrap particle filter that either ignores delays (standard PF) or
/// weights each particle by the delay mixture over its own state history (PF-RD):
///   w <- w * sum_j gbar_j N(y; h_{k-j}(x_{k-j}), R).
/// Dropouts carry the weights forward without resampling.
class BaselineParticleFilter {
 public:
  BaselineParticleFilter(BaselineKind kind, SystemModel model, DelayProfile profile, BaselineOptions options, Rng rng);

  Vector step(const ChannelEvent& event);

  const ParticleSet& particles() const { return set_; }
  const InvariantCounts& invariants() const { return invariants_; }
  const Vector& last_variance() const { return variance_; }
  /// Effective sample size before any resampling at the last step.
  double last_ess() const { return ess_; }

 private:
  BaselineKind kind_;
  SystemModel model_;
  DelayProfile profile_;
  BaselineOptions options_;
  Rng rng_;
  ParticleSet set_;
  Vector variance_;
  double ess_ = 0.0;
  InvariantCounts invariants_;
};

/// Delay-ignorant bootstrap PF: every delivered y_k is treated as z_k.
BaselineRunResult standard_pf_run(const SystemModel& model, const std::vector<ChannelEvent>& events,
                                  const BaselineOptions& options, Rng rng);

/// Sum-of-likelihoods delayed PF reformulated with the Poisson delay prior.
BaselineRunResult pf_rd_run(const SystemModel& model, const DelayProfile& profile,
                            const std::vector<ChannelEvent>& events, const BaselineOptions& options, Rng rng);

}  // namespace delayfilt
