#include "delayfilt/particle_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "delayfilt/gaussian.hpp"

namespace delayfilt {

namespace {

Eigen::Map<const Vector> weight_view(const ParticleSet& set) {
  return Eigen::Map<const Vector>(set.weights.data(), static_cast<Eigen::Index>(set.weights.size()));
}

}  // namespace

Particle ParticleSet::particle(int i) const {
  Particle p;
  for (const auto& lag : states) p.state_history.push_back(lag.col(i));
  p.weight = weights[i];
  for (std::size_t a = 1; a < delays.size(); ++a) p.delay_history.push_back(delays[a][i]);
  return p;
}

Vector ParticleSet::weighted_mean() const { return states.front() * weight_view(*this); }

Vector ParticleSet::weighted_variance() const {
  const Vector m = weighted_mean();
  const Matrix dev = states.front().colwise() - m;
  return dev.cwiseProduct(dev) * weight_view(*this);
}

double ParticleSet::ess() const { return 1.0 / weight_view(*this).squaredNorm(); }

std::vector<int> ParticleSet::group_counts() const {
  std::vector<int> counts(max_delay + 1, 0);
  for (int d : delays.front()) {
    if (d >= 0 && d <= max_delay) ++counts[d];
  }
  return counts;
}

ParticleSet initialize_particles(const SystemModel& model, int count, int max_delay, Rng& rng) {
  if (count < 1) throw std::invalid_argument("particle count must be >= 1");
  if (max_delay < 0) throw std::invalid_argument("max_delay must be >= 0");
  GaussianSampler prior(model.initial_cov);
  ParticleSet set;
  set.max_delay = max_delay;
  Matrix x0(model.state_dim, count);
  for (int i = 0; i < count; ++i) x0.col(i) = model.initial_mean + prior.draw(rng);
  set.states.push_back(std::move(x0));
  set.delays.emplace_back(count, kNoMeasurement);
  set.assigned_gamma.assign(count, 0.0);
  set.exclusion_fallback.assign(count, 0);
  set.weights.assign(count, 1.0 / count);
  return set;
}

void propagate(ParticleSet& set, const SystemModel& model, Rng& rng) {
  const int k = set.step + 1;
  GaussianSampler noise(model.process_cov);
  const Matrix& prev = set.states.front();
  Matrix next(prev.rows(), prev.cols());
  for (Eigen::Index i = 0; i < prev.cols(); ++i) next.col(i) = model.transition(prev.col(i), k) + noise.draw(rng);

  const auto cap = static_cast<std::size_t>(set.max_delay) + 1;
  if (set.states.size() < cap) {
    set.states.emplace_back();
    set.delays.emplace_back();
  }
  // The oldest slot is recycled as the new front.
  std::rotate(set.states.rbegin(), set.states.rbegin() + 1, set.states.rend());
  std::rotate(set.delays.rbegin(), set.delays.rbegin() + 1, set.delays.rend());
  set.states.front() = std::move(next);

  set.delays[0].assign(set.weights.size(), kNoMeasurement);
  std::fill(set.assigned_gamma.begin(), set.assigned_gamma.end(), 0.0);
  std::fill(set.exclusion_fallback.begin(), set.exclusion_fallback.end(), 0);
  set.collapsed = false;
  set.step = k;
}

void reweight(ParticleSet& set, const std::vector<double>& log_likelihood) {
  const auto n = set.weights.size();
  if (log_likelihood.size() != n) throw std::invalid_argument("reweight: size mismatch");
  std::vector<double> logw(n);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = std::log(set.weights[i]) + log_likelihood[i];
    if (std::isnan(logw[i])) logw[i] = -std::numeric_limits<double>::infinity();
    hi = std::max(hi, logw[i]);
  }
  if (!std::isfinite(hi)) {
    set.weights.assign(n, 1.0 / static_cast<double>(n));
    set.collapsed = true;
    return;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    set.weights[i] = std::exp(logw[i] - hi);
    total += set.weights[i];
  }
  for (auto& w : set.weights) w /= total;
}

std::vector<int> resample(ParticleSet& set, Rng& rng) {
  const int n = set.size();
  std::vector<int> ancestors(n);
  const double start = std::uniform_real_distribution<double>(0.0, 1.0)(rng) / n;
  double cumulative = set.weights[0];
  int j = 0;
  for (int i = 0; i < n; ++i) {
    const double u = start + static_cast<double>(i) / n;
    while (u > cumulative && j < n - 1) cumulative += set.weights[++j];
    ancestors[i] = j;
  }

  for (auto& lag : set.states) {
    Matrix gathered(lag.rows(), n);
    for (int i = 0; i < n; ++i) gathered.col(i) = lag.col(ancestors[i]);
    lag = std::move(gathered);
  }
  const auto gather = [&](auto& v) {
    auto copy = v;
    for (int i = 0; i < n; ++i) v[i] = copy[ancestors[i]];
  };
  for (auto& d : set.delays) gather(d);
  gather(set.assigned_gamma);
  gather(set.exclusion_fallback);
  set.weights.assign(n, 1.0 / n);
  return ancestors;
}

bool maybe_resample(ParticleSet& set, const ResampleOptions& options, Rng& rng) {
  if (options.policy == ResamplePolicy::kEssGated && set.ess() >= options.ess_threshold * set.size()) return false;
  resample(set, rng);
  return true;
}

}  // namespace delayfilt
