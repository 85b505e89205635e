#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "delayfilt/types.hpp"

namespace delayfilt {

/// Noise-free propagation: given x_{k-1}, returns f_{k-1}(x_{k-1}). The int
/// argument is the step k being predicted.
using TransitionFn = std::function<Vector(const Vector&, int)>;
/// Noise-free measurement h_k(x_k).
using MeasurementFn = std::function<Vector(const Vector&, int)>;

/// x_k = f_{k-1}(x_{k-1}) + process_noise,  z_k = h_k(x_k) + v_k.
/// Noise covariances are constant in time for every model shipped here.
struct SystemModel {
  std::string name;
  int state_dim = 0;
  int meas_dim = 0;
  TransitionFn transition;
  MeasurementFn measurement;
  Matrix process_cov;
  Matrix meas_cov;
  Vector initial_mean;
  Matrix initial_cov;
  /// Measurement components holding angles; residuals there are wrapped.
  std::vector<int> angular_components;
  /// Truth x_0; drawn from N(initial_mean, initial_cov) when unset.
  std::optional<Vector> truth_initial_state;

  /// y - y_hat with angular components wrapped into (-pi, pi].
  Vector residual(const Vector& y, const Vector& y_hat) const;
  void validate() const;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

struct GrowthModelParams {
  double process_var = 10.0;
  double meas_var = 1.0;
};

/// Univariate non-stationary growth model with N(0, 1) prior.
SystemModel growth_model(const GrowthModelParams& params = {});

struct CTModelParams {
  double sample_time = 0.125;           // s
  double turn_rate_deg = -3.0;          // deg/s, truth and prior mean
  double q1 = 0.1;                      // m^2/s^3
  double q2 = 1.75e-4;                  // s^-3
  double sigma_r = 10.0;                // m
  double sigma_theta = 3.16227766016838e-3;  // rad (sqrt(10) mrad)

  void validate() const;
};

/// Coordinated-turn transition matrix for state [px, vx, py, vy, omega].
/// omega == 0 falls back to the constant-velocity limit.
Matrix ct_transition_matrix(double omega, double sample_time);

/// 5-state coordinated turn with unknown turn rate, range/bearing radar at the origin.
SystemModel coordinated_turn_model(const CTModelParams& params = {});

/// x_k = F x_{k-1} + q,  z_k = H x_k + v.
SystemModel linear_gaussian_model(const Matrix& F, const Matrix& H, const Matrix& Q, const Matrix& R,
                                  const Vector& initial_mean, const Matrix& initial_cov);

struct Trajectory {
  Vector initial_state;
  std::vector<Vector> states;         // x_1..x_K
  std::vector<Vector> measurements;   // z_1..z_K
  std::vector<Vector> meas_noise;     // v_1..v_K
  std::vector<Vector> process_noise;  // noise entering x_1..x_K
};

Trajectory simulate_truth(const SystemModel& model, int steps, Rng& rng);

}  // namespace delayfilt
