#pragma once

#include <optional>
#include <vector>

#include "delayfilt/channel.hpp"
#include "delayfilt/invariants.hpp"
#include "delayfilt/models.hpp"
#include "delayfilt/particle_set.hpp"

namespace delayfilt {

/// Posterior over the delay of the measurement received at one step.
struct DelayPosterior {
  std::vector<double> pmf;  // j = 0..effective max delay, normalized
  int map_estimate = 0;
  double mean_estimate = 0.0;
};

/// Per-particle delay draw. Particle i may not take delay j when it already
/// explained z_{k-j} at an earlier step, i.e. when j = j_{k-tau} + tau for some
/// 1 <= tau <= effective max delay. The remaining prior mass is renormalized and
/// one uniform draw picks the delay by inverse CDF. No uniform is consumed when
/// the support is the single delay 0.
///
/// Returns the number of particles whose admissible mass was zero; those fall
/// back to the unrestricted prior and are flagged in set.exclusion_fallback.
long assign_delays(ParticleSet& set, const DelayProbabilities& probs, Rng& rng);

/// Multiplies each weight by N(y; h_{k-j}(x_{k-j}), R) for the particle's own
/// assigned delay j and lagged state, then renormalizes.
void weight_update(ParticleSet& set, const SystemModel& model, const Vector& y);

/// Nothing arrived: weights carry over and the step is marked kNoMeasurement.
void handle_dropout(ParticleSet& set);

/// Grouped delay posterior from the current (pre-resampling) weights.
DelayPosterior estimate_delay(const ParticleSet& set);

struct SmcOptions {
  int particle_count = 500;
  ResampleOptions resampling;
  bool check_invariants = true;
};

struct SmcStepDiagnostics {
  int step = 0;
  double ess = 0.0;
  bool collapsed = false;
  std::vector<int> group_counts;      // realized groups before resampling
  std::vector<int> resampled_counts;  // groups after resampling
  long exclusion_fallbacks = 0;
  std::optional<DelayPosterior> delay;  // empty on dropout steps
};

struct SmcRunResult {
  std::vector<Vector> estimates;  // weighted particle mean per step
  std::vector<Vector> variances;  // diagonal of the weighted particle covariance
  std::vector<SmcStepDiagnostics> diagnostics;
  InvariantCounts invariants;
};

/// Delay-grouped sequential Monte Carlo filter with a bootstrap proposal.
class SmcFilter {
 public:
  SmcFilter(SystemModel model, DelayProfile profile, SmcOptions options, Rng rng);

  /// Advances one step; returns the weighted mean of the current state.
  Vector step(const ChannelEvent& event);

  const ParticleSet& particles() const { return set_; }
  const SmcStepDiagnostics& last_diagnostics() const { return diag_; }
  const InvariantCounts& invariants() const { return invariants_; }
  /// Diagonal of the weighted particle covariance behind the last estimate.
  const Vector& last_variance() const { return variance_; }

 private:
  void check_invariants();

  SystemModel model_;
  DelayProfile profile_;
  SmcOptions options_;
  Rng rng_;
  ParticleSet set_;
  SmcStepDiagnostics diag_;
  Vector variance_;
  InvariantCounts invariants_;
};

SmcRunResult smc_run(const SystemModel& model, const DelayProfile& profile, const std::vector<ChannelEvent>& events,
                     const SmcOptions& options, Rng rng);

}  // namespace delayfilt
