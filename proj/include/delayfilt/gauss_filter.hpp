#pragma once

#include <vector>

#include "delayfilt/channel.hpp"
#include "delayfilt/models.hpp"
#include "delayfilt/types.hpp"

namespace delayfilt {

/// What the Gaussian filter does on a step where nothing arrived.
enum class DropoutPolicy {
  kPredicted,  // update with y = y_hat: zero innovation, covariance still contracted
  kSkip,       // time update only
};

/// Form of the spread term in the received-measurement covariance.
enum class SpreadTerm {
  kPerLag,       // sum_s g_s (1 - g_s) z_s z_s^T
  kFullMixture,  // sum_s g_s z_s z_s^T - y_hat y_hat^T (exact mixture covariance)
};

struct GafOptions {
  DropoutPolicy dropout_policy = DropoutPolicy::kPredicted;
  SpreadTerm spread = SpreadTerm::kPerLag;
};

struct GaussianBelief {
  Vector mean;
  Matrix cov;
  int step = 0;
};

/// Joint Gaussian over [x_k; x_{k-1}; ...; x_{k-L}], L = number of lags held.
struct WindowBelief {
  Vector mean;
  Matrix cov;
  int step = 0;
  int state_dim = 0;

  static WindowBelief from_prior(const Vector& mean, const Matrix& cov);

  int lags() const { return static_cast<int>(mean.size()) / state_dim - 1; }
  Vector block_mean(int lag) const { return mean.segment(lag * state_dim, state_dim); }
  Matrix block_cov(int lag_a, int lag_b) const {
    return cov.block(lag_a * state_dim, lag_b * state_dim, state_dim, state_dim);
  }
  GaussianBelief current() const { return {block_mean(0), block_cov(0, 0), step}; }
};

struct LagPrediction {
  Vector z_hat;  // predicted measurement of x_{k-s}
  Matrix Pzz;    // its covariance, including R
  Matrix Pxz;    // cross-covariance of the current state x_k with it
};

struct MeasurementPrediction {
  int step = 0;
  Vector y_hat;
  Matrix S;  // received-measurement covariance
  Matrix C;  // current state / received measurement cross-covariance
  std::vector<LagPrediction> per_lag;
  std::vector<double> gamma_bar;
  Matrix window_cross;  // whole window / received measurement cross-covariance
};

/// Time update to step window.step + 1 holding min(max_delay, k - 1) lags.
WindowBelief predict(const WindowBelief& window, const SystemModel& model, int max_delay);

MeasurementPrediction predict_measurement(const WindowBelief& window, const SystemModel& model,
                                          const DelayProbabilities& probs, SpreadTerm spread = SpreadTerm::kPerLag);

/// Measurement update of the whole window. On a dropout the policy decides.
WindowBelief update(const WindowBelief& window, const MeasurementPrediction& pred, const ChannelEvent& event,
                    const SystemModel& model, DropoutPolicy policy = DropoutPolicy::kPredicted);

/// Symmetric and Cholesky-factorable (with the jitter policy).
bool covariance_healthy(const Matrix& cov);

class GaussianDelayFilter {
 public:
  GaussianDelayFilter(SystemModel model, DelayProfile profile, GafOptions options = {});

  /// Advances one step with the event observed at that step.
  GaussianBelief step(const ChannelEvent& event);

  const WindowBelief& window() const { return window_; }
  const MeasurementPrediction& last_prediction() const { return last_pred_; }
  /// Covariance symmetry/PSD failures seen so far.
  long covariance_violations() const { return cov_violations_; }

 private:
  SystemModel model_;
  DelayProfile profile_;
  GafOptions options_;
  WindowBelief window_;
  MeasurementPrediction last_pred_;
  long cov_violations_ = 0;
};

/// Full filtering pass; returns the current-state marginal per step.
std::vector<GaussianBelief> gaf_run(const SystemModel& model, const DelayProfile& profile,
                                    const std::vector<ChannelEvent>& events, GafOptions options = {});

}  // namespace delayfilt
