#include "delayfilt/models.hpp"

#include <cmath>
#include <numbers>

#include "delayfilt/gaussian.hpp"

namespace delayfilt {

namespace {

void require_psd(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw ConfigError(std::string(what) + " must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw ConfigError(std::string(what) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw ConfigError(std::string(what) + " must be positive semidefinite");
  }
}

}  // namespace

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

Vector SystemModel::residual(const Vector& y, const Vector& y_hat) const {
  Vector r = y - y_hat;
  for (int c : angular_components) r[c] = wrap_angle(r[c]);
  return r;
}

void SystemModel::validate() const {
  if (state_dim <= 0 || meas_dim <= 0) throw ConfigError("model dimensions must be positive");
  if (!transition || !measurement) throw ConfigError("model functions must be set");
  if (process_cov.rows() != state_dim || meas_cov.rows() != meas_dim || initial_cov.rows() != state_dim ||
      initial_mean.size() != state_dim) {
    throw ConfigError("model dimensions are inconsistent");
  }
  require_psd(process_cov, "process covariance");
  require_psd(meas_cov, "measurement covariance");
  require_psd(initial_cov, "initial covariance");
  for (int c : angular_components) {
    if (c < 0 || c >= meas_dim) throw ConfigError("angular component out of range");
  }
}

SystemModel growth_model(const GrowthModelParams& params) {
  if (!(params.process_var > 0.0) || !(params.meas_var > 0.0)) throw ConfigError("growth model variances must be > 0");
  SystemModel m;
  m.name = "growth";
  m.state_dim = 1;
  m.meas_dim = 1;
  m.transition = [](const Vector& x, int k) {
    const double v = x[0];
    Vector out(1);
    out[0] = 0.5 * v + 25.0 * v / (1.0 + v * v) + 8.0 * std::cos(1.2 * k);
    return out;
  };
  m.measurement = [](const Vector& x, int) {
    Vector out(1);
    out[0] = x[0] * x[0] / 20.0;
    return out;
  };
  m.process_cov = Matrix::Constant(1, 1, params.process_var);
  m.meas_cov = Matrix::Constant(1, 1, params.meas_var);
  m.initial_mean = Vector::Zero(1);
  m.initial_cov = Matrix::Identity(1, 1);
  return m;
}

void CTModelParams::validate() const {
  if (!(sample_time > 0.0)) throw ConfigError("sample_time must be > 0");
  if (!(sigma_r > 0.0) || !(sigma_theta > 0.0)) throw ConfigError("sensor noise must be > 0");
  if (q1 < 0.0 || q2 < 0.0) throw ConfigError("process noise intensities must be >= 0");
}

Matrix ct_transition_matrix(double omega, double sample_time) {
  const double T = sample_time;
  const double wt = omega * T;
  double s_over_w = T;    // sin(wT)/w
  double c_over_w = 0.0;  // (1 - cos(wT))/w
  if (omega != 0.0) {
    s_over_w = std::sin(wt) / omega;
    c_over_w = (1.0 - std::cos(wt)) / omega;
  }
  const double c = std::cos(wt);
  const double s = std::sin(wt);
  Matrix F(5, 5);
  // clang-format off
  F << 1, s_over_w, 0, -c_over_w, 0,
       0, c,        0, -s,        0,
       0, c_over_w, 1, s_over_w,  0,
       0, s,        0, c,         0,
       0, 0,        0, 0,         1;
  // clang-format on
  return F;
}

SystemModel coordinated_turn_model(const CTModelParams& params) {
  params.validate();
  const double T = params.sample_time;
  SystemModel m;
  m.name = "coordinated_turn";
  m.state_dim = 5;
  m.meas_dim = 2;
  m.transition = [T](const Vector& x, int) -> Vector { return ct_transition_matrix(x[4], T) * x; };
  m.measurement = [](const Vector& x, int) {
    Vector z(2);
    z[0] = std::hypot(x[0], x[2]);
    z[1] = std::atan2(x[2], x[0]);
    return z;
  };
  Matrix M(2, 2);
  M << T * T * T / 3.0, T * T / 2.0, T * T / 2.0, T;
  m.process_cov = Matrix::Zero(5, 5);
  m.process_cov.block(0, 0, 2, 2) = params.q1 * M;
  m.process_cov.block(2, 2, 2, 2) = params.q1 * M;
  m.process_cov(4, 4) = params.q2 * T;
  m.meas_cov = Matrix::Zero(2, 2);
  m.meas_cov(0, 0) = params.sigma_r * params.sigma_r;
  m.meas_cov(1, 1) = params.sigma_theta * params.sigma_theta;
  const double deg = std::numbers::pi / 180.0;
  m.initial_mean.resize(5);
  m.initial_mean << 1000.0, 300.0, 1000.0, 0.0, params.turn_rate_deg * deg;
  m.initial_cov = Matrix::Zero(5, 5);
  m.initial_cov.diagonal() << 100.0, 10.0, 100.0, 10.0, 100e-6;
  m.angular_components = {1};
  return m;
}

SystemModel linear_gaussian_model(const Matrix& F, const Matrix& H, const Matrix& Q, const Matrix& R,
                                  const Vector& initial_mean, const Matrix& initial_cov) {
  SystemModel m;
  m.name = "linear";
  m.state_dim = static_cast<int>(F.rows());
  m.meas_dim = static_cast<int>(H.rows());
  m.transition = [F](const Vector& x, int) -> Vector { return F * x; };
  m.measurement = [H](const Vector& x, int) -> Vector { return H * x; };
  m.process_cov = Q;
  m.meas_cov = R;
  m.initial_mean = initial_mean;
  m.initial_cov = initial_cov;
  m.validate();
  return m;
}

Trajectory simulate_truth(const SystemModel& model, int steps, Rng& rng) {
  if (steps < 1) throw std::invalid_argument("simulate_truth: steps must be >= 1");
  GaussianSampler init(model.initial_cov);
  GaussianSampler process(model.process_cov);
  GaussianSampler sensor(model.meas_cov);

  Trajectory t;
  t.initial_state = model.truth_initial_state ? *model.truth_initial_state : Vector(model.initial_mean + init.draw(rng));
  Vector x = t.initial_state;
  for (int k = 1; k <= steps; ++k) {
    Vector q = process.draw(rng);
    x = model.transition(x, k) + q;
    Vector v = sensor.draw(rng);
    t.measurements.push_back(model.measurement(x, k) + v);
    t.states.push_back(x);
    t.meas_noise.push_back(std::move(v));
    t.process_noise.push_back(std::move(q));
  }
  return t;
}

}  // namespace delayfilt
