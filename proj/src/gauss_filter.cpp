#include "delayfilt/gauss_filter.hpp"

#include <algorithm>

#include "delayfilt/cubature.hpp"

namespace delayfilt {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// For (w, x) jointly Gaussian, Cov(w, g(x)) = Cov(w, x) Pxx^-1 Cov(x, g(x)).
// The LDLT solve zeroes directions where Pxx is singular.
Matrix projected_cross(const Matrix& cov_wx, const Matrix& cov_xx, const Matrix& cov_xg) {
  return cov_wx * cov_xx.ldlt().solve(cov_xg);
}

}  // namespace

WindowBelief WindowBelief::from_prior(const Vector& mean, const Matrix& cov) {
  WindowBelief w;
  w.mean = mean;
  w.cov = cov;
  w.step = 0;
  w.state_dim = static_cast<int>(mean.size());
  return w;
}

WindowBelief predict(const WindowBelief& window, const SystemModel& model, int max_delay) {
  const int n = window.state_dim;
  const int k = window.step + 1;
  const int lags = std::min(max_delay, k - 1);
  if (lags > window.lags() + 1) throw std::logic_error("predict: window too short for requested lags");

  // [x_k; x_{k-1}; ...] = [f(x_{k-1}); shifted old window]. Only x_{k-1} goes
  // through the rule; the rest of the window enters through its Gaussian
  // regression on x_{k-1}.
  const auto moments = cubature_transform(window.block_mean(0), window.block_cov(0, 0),
                                          [&](const Vector& x) { return model.transition(x, k); });
  const int kept = n * lags;
  const Matrix old_cross = window.cov.leftCols(n);  // Cov(old window, x_{k-1})
  const Matrix cross = projected_cross(old_cross.topRows(kept), window.block_cov(0, 0), moments.cross);

  WindowBelief next;
  next.state_dim = n;
  next.step = k;
  next.mean.resize(n + kept);
  next.mean.head(n) = moments.mean;
  next.mean.tail(kept) = window.mean.head(kept);
  next.cov.resize(n + kept, n + kept);
  next.cov.topLeftCorner(n, n) = moments.cov + model.process_cov;
  next.cov.bottomLeftCorner(kept, n) = cross;
  next.cov.topRightCorner(n, kept) = cross.transpose();
  next.cov.bottomRightCorner(kept, kept) = window.cov.topLeftCorner(kept, kept);
  next.cov = symmetrized(next.cov);
  return next;
}

MeasurementPrediction predict_measurement(const WindowBelief& window, const SystemModel& model,
                                          const DelayProbabilities& probs, SpreadTerm spread) {
  const int n = window.state_dim;
  const int nz = model.meas_dim;
  const int lags = window.lags();
  if (probs.max_delay() != lags) throw std::invalid_argument("predict_measurement: delay support does not match window");
  const int k = window.step;

  MeasurementPrediction pred;
  pred.step = k;
  pred.gamma_bar = probs.gamma_bar;
  pred.y_hat = Vector::Zero(nz);
  pred.S = Matrix::Zero(nz, nz);
  pred.C = Matrix::Zero(n, nz);
  pred.window_cross = Matrix::Zero(window.mean.size(), nz);
  for (int s = 0; s <= lags; ++s) {
    const auto moments = cubature_transform(window.block_mean(s), window.block_cov(s, s),
                                            [&](const Vector& x) { return model.measurement(x, k - s); });
    // Cov(window, z_{k-s}) by regression of the window on x_{k-s}.
    const Matrix window_cross =
        projected_cross(window.cov.middleCols(s * n, n), window.block_cov(s, s), moments.cross);
    LagPrediction lag;
    lag.z_hat = moments.mean;
    lag.Pzz = moments.cov + model.meas_cov;
    lag.Pxz = window_cross.topRows(n);
    const double g = probs.gamma_bar[s];
    pred.y_hat += g * lag.z_hat;
    pred.S += g * lag.Pzz;
    pred.C += g * lag.Pxz;
    pred.window_cross += g * window_cross;
    pred.per_lag.push_back(std::move(lag));
  }
  for (int s = 0; s <= lags; ++s) {
    const double g = probs.gamma_bar[s];
    const Vector& z = pred.per_lag[s].z_hat;
    if (spread == SpreadTerm::kPerLag) {
      pred.S += g * (1.0 - g) * z * z.transpose();
    } else {
      pred.S += g * z * z.transpose();
    }
  }
  if (spread == SpreadTerm::kFullMixture) pred.S -= pred.y_hat * pred.y_hat.transpose();
  pred.S = symmetrized(pred.S);
  return pred;
}

WindowBelief update(const WindowBelief& window, const MeasurementPrediction& pred, const ChannelEvent& event,
                    const SystemModel& model, DropoutPolicy policy) {
  if (pred.step != window.step || event.step != window.step) throw std::invalid_argument("update: step mismatch");
  if (!event.delivered() && policy == DropoutPolicy::kSkip) return window;

  Eigen::LLT<Matrix> llt(pred.S);
  if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is not positive definite");
  const Matrix gain = llt.solve(pred.window_cross.transpose()).transpose();

  WindowBelief next = window;
  if (event.delivered()) next.mean += gain * model.residual(event.delivery->value, pred.y_hat);
  next.cov = symmetrized(window.cov - gain * pred.S * gain.transpose());
  return next;
}

bool covariance_healthy(const Matrix& cov) {
  const double scale = cov.cwiseAbs().rowwise().sum().maxCoeff();
  const double asym = (cov - cov.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
  if (!std::isfinite(scale) || asym > 1e-9 * scale) return false;
  try {
    (void)jittered_cholesky(cov);
  } catch (const NumericalError&) {
    return false;
  }
  return true;
}

GaussianDelayFilter::GaussianDelayFilter(SystemModel model, DelayProfile profile, GafOptions options)
    : model_(std::move(model)), profile_(std::move(profile)), options_(options) {
  model_.validate();
  profile_.validate();
  window_ = WindowBelief::from_prior(model_.initial_mean, model_.initial_cov);
}

GaussianBelief GaussianDelayFilter::step(const ChannelEvent& event) {
  const int k = window_.step + 1;
  if (event.step != k) throw std::invalid_argument("GaussianDelayFilter: events must arrive in step order");
  window_ = predict(window_, model_, profile_.max_delay);
  if (!covariance_healthy(window_.cov)) ++cov_violations_;
  last_pred_ = predict_measurement(window_, model_, delay_probabilities(profile_, k), options_.spread);
  window_ = update(window_, last_pred_, event, model_, options_.dropout_policy);
  if (!covariance_healthy(window_.cov)) ++cov_violations_;
  return window_.current();
}

std::vector<GaussianBelief> gaf_run(const SystemModel& model, const DelayProfile& profile,
                                    const std::vector<ChannelEvent>& events, GafOptions options) {
  GaussianDelayFilter filter(model, profile, options);
  std::vector<GaussianBelief> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(filter.step(e));
  return out;
}

}  // namespace delayfilt
