#include "delayfilt/channel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace delayfilt {

DelayProfile DelayProfile::constant(double lambda, int max_delay) {
  DelayProfile p;
  p.lambda_schedule = {lambda};
  p.max_delay = max_delay;
  p.validate();
  return p;
}

double DelayProfile::lambda(int k) const {
  if (lambda_schedule.empty()) throw ConfigError("empty lambda schedule");
  if (k < 1) throw std::invalid_argument("steps are 1-indexed");
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k - 1), lambda_schedule.size() - 1);
  return lambda_schedule[idx];
}

int DelayProfile::effective_max_delay(int k) const { return std::max(0, std::min(max_delay, k - 1)); }

bool DelayProfile::stationary() const {
  return std::adjacent_find(lambda_schedule.begin(), lambda_schedule.end(), std::not_equal_to<>()) ==
         lambda_schedule.end();
}

void DelayProfile::validate() const {
  if (lambda_schedule.empty()) throw ConfigError("lambda schedule must not be empty");
  for (double l : lambda_schedule) {
    if (!std::isfinite(l) || l < 0.0) throw ConfigError("lambda must be finite and nonnegative");
  }
  if (max_delay < 0) throw ConfigError("max_delay must be nonnegative");
}

double poisson_pmf(double lambda, int j) {
  if (!std::isfinite(lambda) || lambda < 0.0) throw std::invalid_argument("poisson_pmf: lambda must be finite and >= 0");
  if (j < 0) throw std::invalid_argument("poisson_pmf: j must be >= 0");
  if (lambda == 0.0) return j == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + j * std::log(lambda) - std::lgamma(j + 1.0));
}

DelayProbabilities delay_probabilities(const DelayProfile& profile, int k) {
  if (k < 1) throw std::invalid_argument("delay_probabilities: k must be >= 1");
  const int n_bar = profile.effective_max_delay(k);
  DelayProbabilities out;
  out.gamma.resize(n_bar + 1);
  const double lambda_k = profile.lambda(k);
  for (int j = 0; j <= n_bar; ++j) {
    double g = poisson_pmf(lambda_k, j);
    // The source z_{k-j} must have escaped every earlier reception slot.
    for (int i = 1; i <= j; ++i) g *= 1.0 - poisson_pmf(profile.lambda(k - i), j - i);
    out.gamma[j] = g;
  }
  double total = 0.0;
  for (double g : out.gamma) total += g;
  out.dropout = 1.0 - total;
  out.gamma_bar.resize(out.gamma.size());
  for (std::size_t j = 0; j < out.gamma.size(); ++j) out.gamma_bar[j] = out.gamma[j] / total;
  return out;
}

ChannelState::ChannelState(int max_delay) : max_delay_(max_delay) {
  if (max_delay < 0) throw std::invalid_argument("ChannelState: max_delay must be >= 0");
}

ChannelEvent ChannelState::step_with_draw(const DelayProfile& profile, int k, const Vector& z_k, int draw) {
  slots_.push_back(Slot{k, z_k, false});
  while (slots_.size() > static_cast<std::size_t>(max_delay_) + 1) slots_.pop_front();

  ChannelEvent event;
  event.step = k;
  if (draw < 0 || draw > profile.effective_max_delay(k)) return event;
  const int source = k - draw;
  auto it = std::find_if(slots_.begin(), slots_.end(), [source](const Slot& s) { return s.index == source; });
  if (it == slots_.end() || it->delivered) return event;
  it->delivered = true;
  event.delivery = Delivery{it->z, draw};
  return event;
}

ChannelEvent channel_step(ChannelState& state, const DelayProfile& profile, int k, const Vector& z_k, Rng& rng) {
  const double lambda = profile.lambda(k);
  int draw = 0;
  if (lambda > 0.0) draw = std::poisson_distribution<int>(lambda)(rng);
  return state.step_with_draw(profile, k, z_k, draw);
}

std::vector<ChannelEvent> simulate_channel(const DelayProfile& profile, const std::vector<Vector>& raw, Rng& rng) {
  ChannelState state(profile.max_delay);
  std::vector<ChannelEvent> events;
  events.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    events.push_back(channel_step(state, profile, static_cast<int>(i) + 1, raw[i], rng));
  }
  return events;
}

bool no_repetition(const std::vector<ChannelEvent>& events, const DelayProfile& profile) {
  std::set<int> seen;
  for (const auto& e : events) {
    if (!e.delivered()) continue;
    if (e.delivery->true_delay < 0 || e.delivery->true_delay > profile.effective_max_delay(e.step)) return false;
    if (!seen.insert(e.source_index()).second) return false;
  }
  return true;
}

std::vector<LagStatistic> modified_noise_autocorrelation(const std::vector<ChannelEvent>& events,
                                                         const std::vector<Vector>& noise,
                                                         const DelayProfile& profile, const Matrix& meas_cov,
                                                         int max_lag) {
  const auto n = static_cast<long>(events.size());
  if (static_cast<long>(noise.size()) < n) throw std::invalid_argument("noise sequence shorter than event sequence");
  if (max_lag < 0 || max_lag >= n) throw std::invalid_argument("max_lag out of range");
  const auto dim = meas_cov.rows();

  std::vector<Vector> nu(n, Vector::Zero(dim));
  for (long t = 0; t < n; ++t) {
    const auto& e = events[t];
    if (e.step != t + 1) throw std::invalid_argument("events must be consecutive from step 1");
    if (e.delivered()) {
      const int src = e.source_index();
      if (src < 1) throw std::invalid_argument("delivered source index precedes step 1");
      nu[t] = noise[src - 1];
    }
  }

  // Expected lag-0 value averaged over the (possibly time-varying) steps.
  double mean_delivery = 0.0;
  for (long t = 0; t < n; ++t) {
    const auto probs = delay_probabilities(profile, static_cast<int>(t) + 1);
    mean_delivery += 1.0 - probs.dropout;
  }
  mean_delivery /= static_cast<double>(n);

  std::vector<LagStatistic> out;
  for (int lag = 0; lag <= max_lag; ++lag) {
    const long m = n - lag;
    Matrix sum = Matrix::Zero(dim, dim);
    Matrix sum_sq = Matrix::Zero(dim, dim);
    for (long t = 0; t < m; ++t) {
      const Matrix prod = nu[t] * nu[t + lag].transpose();
      sum += prod;
      sum_sq += prod.cwiseProduct(prod);
    }
    LagStatistic s;
    s.lag = lag;
    s.value = sum / static_cast<double>(m);
    const Matrix var = (sum_sq / static_cast<double>(m) - s.value.cwiseProduct(s.value)) * (static_cast<double>(m) / (m - 1));
    s.std_error = (var.cwiseMax(0.0) / static_cast<double>(m)).cwiseSqrt();
    s.target = lag == 0 ? Matrix(mean_delivery * meas_cov) : Matrix(Matrix::Zero(dim, dim));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace delayfilt
