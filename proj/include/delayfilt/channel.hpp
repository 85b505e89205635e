#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "delayfilt/types.hpp"

namespace delayfilt {

/// Poisson delay channel parameters. Steps are 1-indexed.
struct DelayProfile {
  /// Per-step Poisson mean; a single entry is broadcast to every step and the
  /// last entry is held for steps beyond the schedule.
  std::vector<double> lambda_schedule{0.0};
  int max_delay = 0;

  static DelayProfile constant(double lambda, int max_delay);

  double lambda(int k) const;
  /// min(N, k - 1): no measurement predates step 1.
  int effective_max_delay(int k) const;
  bool stationary() const;
  void validate() const;
};

struct DelayProbabilities {
  std::vector<double> gamma;      // indexed by delay j = 0..effective max
  std::vector<double> gamma_bar;  // gamma renormalized over delivered outcomes
  double dropout = 0.0;

  int max_delay() const { return static_cast<int>(gamma.size()) - 1; }
};

/// e^{-lambda} lambda^j / j!, evaluated in log space.
double poisson_pmf(double lambda, int j);

/// Prior delay/dropout probabilities for the reception at step k.
DelayProbabilities delay_probabilities(const DelayProfile& profile, int k);

struct Delivery {
  Vector value;
  int true_delay = 0;
};

struct ChannelEvent {
  int step = 0;
  std::optional<Delivery> delivery;  // empty on dropout

  bool delivered() const { return delivery.has_value(); }
  /// Index of the source measurement consumed by this event, or -1.
  int source_index() const { return delivered() ? step - delivery->true_delay : -1; }
};

/// Last N+1 raw measurements and whether each has already been consumed.
class ChannelState {
 public:
  explicit ChannelState(int max_delay);

  int max_delay() const { return max_delay_; }
  std::size_t buffered() const { return slots_.size(); }

  /// Pushes z_k, then tries to deliver the measurement from step k - draw.
  ChannelEvent step_with_draw(const DelayProfile& profile, int k, const Vector& z_k, int draw);

 private:
  struct Slot {
    int index;
    Vector z;
    bool delivered;
  };

  int max_delay_;
  std::deque<Slot> slots_;
};

/// Draws d ~ Poisson(lambda_k) and applies the delivery rule.
ChannelEvent channel_step(ChannelState& state, const DelayProfile& profile, int k,
                          const Vector& z_k, Rng& rng);

/// Runs a full trajectory; raw[k-1] is z_k.
std::vector<ChannelEvent> simulate_channel(const DelayProfile& profile,
                                           const std::vector<Vector>& raw, Rng& rng);

/// True when no source index is delivered twice and every delay respects
/// min(N, k-1).
bool no_repetition(const std::vector<ChannelEvent>& events, const DelayProfile& profile);

struct LagStatistic {
  int lag = 0;
  Matrix value;      // sample autocovariance E[nu_k nu_{k+lag}^T]
  Matrix std_error;  // elementwise standard error of value
  Matrix target;     // expected value under the channel law
};

/// Rebuilds the effective noise nu_k = v_{k - j_k} on delivery steps (zero on
/// dropouts) from the injected raw noise and returns lags 0..max_lag.
/// noise[k-1] is v_k; meas_cov is R (constant in time).
std::vector<LagStatistic> modified_noise_autocorrelation(const std::vector<ChannelEvent>& events,
                                                         const std::vector<Vector>& noise,
                                                         const DelayProfile& profile,
                                                         const Matrix& meas_cov, int max_lag);

}  // namespace delayfilt
