#pragma once

#include <vector>

#include "delayfilt/models.hpp"
#include "delayfilt/types.hpp"

namespace delayfilt {

/// Marker in a particle's delay history for steps that delivered nothing.
inline constexpr int kNoMeasurement = -1;

/// One particle, unpacked. Mostly for inspection and tests; the set itself is
/// stored column-wise.
struct Particle {
  std::vector<Vector> state_history;  // [x_k, x_{k-1}, ...]
  double weight = 0.0;
  std::vector<int> delay_history;  // delays assigned at k-1, k-2, ...
};

/// Weighted particles with bounded state and delay histories.
///
/// states[s] holds x_{k-s} for every particle (one column each) and
/// delays[a][i] is the delay particle i was assigned at step k-a. At most
/// max_delay + 1 lags of either are kept.
struct ParticleSet {
  int step = 0;
  int max_delay = 0;
  std::vector<Matrix> states;
  std::vector<std::vector<int>> delays;
  std::vector<double> assigned_gamma;         // normalized gamma of the current assignment
  std::vector<unsigned char> exclusion_fallback;  // assignment ignored the exclusion rule
  std::vector<double> weights;                // normalized
  bool collapsed = false;                     // last weighting underflowed and was reset

  int size() const { return static_cast<int>(weights.size()); }
  int state_dim() const { return static_cast<int>(states.front().rows()); }
  int lags() const { return static_cast<int>(states.size()) - 1; }

  Particle particle(int i) const;
  Vector weighted_mean() const;
  Vector weighted_variance() const;
  double ess() const;
  /// Particles per assigned delay 0..max_delay at the current step.
  std::vector<int> group_counts() const;
};

/// N_s draws from the model prior at step 0, uniform weights.
ParticleSet initialize_particles(const SystemModel& model, int count, int max_delay, Rng& rng);

/// Bootstrap proposal: x_k^i ~ p(x_k | x_{k-1}^i); histories shift by one.
/// The new step starts with kNoMeasurement in every particle's delay slot.
void propagate(ParticleSet& set, const SystemModel& model, Rng& rng);

/// Adds per-particle log-likelihoods to the log weights and renormalizes with
/// max subtraction. When every weight underflows the set is reset to uniform
/// and set.collapsed is raised.
void reweight(ParticleSet& set, const std::vector<double>& log_likelihood);

/// Systematic resampling; offspring inherit both histories. Returns ancestor indices.
std::vector<int> resample(ParticleSet& set, Rng& rng);

enum class ResamplePolicy { kAlways, kEssGated };

struct ResampleOptions {
  ResamplePolicy policy = ResamplePolicy::kAlways;
  double ess_threshold = 0.5;  // fraction of N_s, used when gated
};

/// Resamples if the policy asks for it; returns whether it did.
bool maybe_resample(ParticleSet& set, const ResampleOptions& options, Rng& rng);

}  // namespace delayfilt
