#include <cmath>
#include <set>

#include "doctest.h"

#include "delayfilt/channel.hpp"
#include "oracles.hpp"

using namespace delayfilt;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

std::vector<ChannelEvent> forced(const DelayProfile& profile, const std::vector<int>& draws) {
  ChannelState state(profile.max_delay);
  std::vector<ChannelEvent> out;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    out.push_back(state.step_with_draw(profile, k, scalar(k), draws[i]));
  }
  return out;
}

}  // namespace

TEST_CASE("poisson pmf values and argument checks") {
  CHECK(poisson_pmf(0.0, 0) == 1.0);
  CHECK(poisson_pmf(0.0, 3) == 0.0);
  CHECK(poisson_pmf(0.7, 1) == doctest::Approx(0.7 * std::exp(-0.7)).epsilon(1e-14));
  CHECK(poisson_pmf(0.7, 1) == doctest::Approx(0.34761).epsilon(1e-5));
  CHECK_THROWS(poisson_pmf(-0.1, 0));
  CHECK_THROWS(poisson_pmf(1.0, -1));
  for (double lam : {0.1, 0.8, 3.0, 12.0}) {
    double total = 0.0;
    for (int j = 0; j < 200; ++j) total += poisson_pmf(lam, j);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("delay probabilities at lambda 0.8, N 3") {
  const auto profile = DelayProfile::constant(0.8, 3);
  const auto p = delay_probabilities(profile, 10);
  REQUIRE(p.gamma.size() == 4);
  CHECK(p.gamma[0] == doctest::Approx(0.44933).epsilon(1e-4));
  CHECK(p.gamma[1] == doctest::Approx(0.19796).epsilon(1e-4));
  double total = 0.0;
  for (double g : p.gamma) total += g;
  CHECK(p.dropout == doctest::Approx(1.0 - total).epsilon(1e-14));
  double bar = 0.0;
  for (std::size_t j = 0; j < p.gamma.size(); ++j) {
    CHECK(p.gamma_bar[j] == doctest::Approx(p.gamma[j] / total).epsilon(1e-14));
    bar += p.gamma_bar[j];
  }
  CHECK(bar == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("delay probabilities match brute-force enumeration of draw sequences") {
  struct Case {
    std::vector<double> schedule;
    int N;
  };
  const std::vector<Case> cases = {
      {{0.8}, 3}, {{0.7}, 2}, {{3.0}, 5}, {{0.2}, 1}, {{0.5, 1.5, 0.9, 2.5, 0.3, 1.1, 0.6}, 3}, {{0.0}, 2}};
  for (const auto& c : cases) {
    DelayProfile profile;
    profile.lambda_schedule = c.schedule;
    profile.max_delay = c.N;
    for (int k = 1; k <= 9; ++k) {
      const auto p = delay_probabilities(profile, k);
      const auto law = oracle::channel_law([&](int t) { return profile.lambda(t); }, c.N, k);
      REQUIRE(p.gamma.size() + 1 == law.size());
      for (std::size_t j = 0; j < p.gamma.size(); ++j) CHECK(p.gamma[j] == doctest::Approx(law[j]).epsilon(1e-12));
      CHECK(p.dropout == doctest::Approx(law.back()).epsilon(1e-12));
    }
  }
}

TEST_CASE("start-up steps restrict the delay support") {
  const auto profile = DelayProfile::constant(0.8, 3);
  const auto first = delay_probabilities(profile, 1);
  REQUIRE(first.gamma.size() == 1);
  CHECK(first.gamma[0] == doctest::Approx(std::exp(-0.8)));
  CHECK(first.gamma_bar[0] == 1.0);
  CHECK(delay_probabilities(profile, 2).gamma.size() == 2);
  CHECK(delay_probabilities(profile, 3).gamma.size() == 3);
  CHECK(delay_probabilities(profile, 4).gamma.size() == 4);
  CHECK(delay_probabilities(profile, 40).gamma.size() == 4);
}

TEST_CASE("lambda schedule broadcasts and holds its last entry") {
  DelayProfile p;
  p.lambda_schedule = {0.1, 0.2, 0.3};
  CHECK(p.lambda(1) == 0.1);
  CHECK(p.lambda(3) == 0.3);
  CHECK(p.lambda(50) == 0.3);
  CHECK_FALSE(p.stationary());
  CHECK(DelayProfile::constant(0.4, 2).lambda(17) == 0.4);
  CHECK(DelayProfile::constant(0.4, 2).stationary());
}

TEST_CASE("invalid channel parameters are rejected") {
  CHECK_THROWS_AS(DelayProfile::constant(-0.5, 2), ConfigError);
  CHECK_THROWS_AS(DelayProfile::constant(0.5, -1), ConfigError);
  CHECK_THROWS_AS(DelayProfile::constant(std::nan(""), 1), ConfigError);
  DelayProfile empty;
  empty.lambda_schedule.clear();
  CHECK_THROWS_AS(empty.validate(), ConfigError);
}

TEST_CASE("forced draw sequence reproduces the reference delivery table") {
  const auto profile = DelayProfile::constant(0.7, 2);
  const auto events = forced(profile, {0, 3, 1, 1, 0, 4, 0, 2, 0, 0});
  const std::vector<int> sources = {1, -1, 2, 3, 5, -1, 7, 6, 9, 10};
  REQUIRE(events.size() == sources.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    CAPTURE(i);
    CHECK(events[i].step == static_cast<int>(i) + 1);
    CHECK(events[i].source_index() == sources[i]);
    if (sources[i] > 0) CHECK(events[i].delivery->value(0) == sources[i]);
  }
  CHECK(no_repetition(events, profile));
}

TEST_CASE("a measurement already delivered cannot be delivered again") {
  const auto profile = DelayProfile::constant(1.0, 2);
  const auto events = forced(profile, {0, 1, 2});
  CHECK(events[0].source_index() == 1);
  CHECK_FALSE(events[1].delivered());
  CHECK_FALSE(events[2].delivered());
}

TEST_CASE("a delay reaching before step 1 is a dropout") {
  const auto profile = DelayProfile::constant(1.0, 3);
  const auto events = forced(profile, {1, 2, 2});
  CHECK_FALSE(events[0].delivered());
  CHECK_FALSE(events[1].delivered());
  CHECK(events[2].source_index() == 1);
}

TEST_CASE("buffer holds at most N+1 raw measurements") {
  const auto profile = DelayProfile::constant(1.0, 2);
  ChannelState state(2);
  for (int k = 1; k <= 10; ++k) {
    state.step_with_draw(profile, k, scalar(k), 5);
    CHECK(state.buffered() <= 3);
  }
}

TEST_CASE("zero rate channel delivers everything on time") {
  const auto profile = DelayProfile::constant(0.0, 3);
  std::vector<Vector> raw;
  for (int k = 1; k <= 100; ++k) raw.push_back(scalar(k));
  Rng rng = make_stream(7, 0, 0);
  const auto events = simulate_channel(profile, raw, rng);
  for (const auto& e : events) {
    REQUIRE(e.delivered());
    CHECK(e.delivery->true_delay == 0);
    CHECK(e.delivery->value(0) == e.step);
  }
}

TEST_CASE("simulated channel never repeats a source and respects the delay bound") {
  for (auto [lam, N] : std::vector<std::pair<double, int>>{{0.8, 3}, {3.0, 5}, {0.7, 2}, {5.0, 1}}) {
    const auto profile = DelayProfile::constant(lam, N);
    std::vector<Vector> raw(2000, scalar(0.0));
    Rng rng = make_stream(11, static_cast<std::uint64_t>(N), 1);
    const auto events = simulate_channel(profile, raw, rng);
    CHECK(no_repetition(events, profile));
    std::set<int> seen;
    for (const auto& e : events) {
      if (!e.delivered()) continue;
      CHECK(e.delivery->true_delay <= std::min(N, e.step - 1));
      CHECK(seen.insert(e.source_index()).second);
    }
  }
}

TEST_CASE("no_repetition flags a duplicated source and an out-of-range delay") {
  const auto profile = DelayProfile::constant(1.0, 2);
  std::vector<ChannelEvent> dup = {{1, Delivery{scalar(1), 0}}, {2, Delivery{scalar(1), 1}}};
  CHECK_FALSE(no_repetition(dup, profile));
  std::vector<ChannelEvent> early = {{1, Delivery{scalar(1), 1}}};
  CHECK_FALSE(no_repetition(early, profile));
  std::vector<ChannelEvent> far = {{1, std::nullopt}, {2, std::nullopt}, {3, std::nullopt}, {4, Delivery{scalar(1), 3}}};
  CHECK_FALSE(no_repetition(far, profile));
}

TEST_CASE("empirical delay frequencies agree with the channel law") {
  const auto profile = DelayProfile::constant(0.8, 3);
  const int steps = 200000;
  std::vector<Vector> raw(steps, scalar(0.0));
  Rng rng = make_stream(3, 0, 1);
  const auto events = simulate_channel(profile, raw, rng);
  const auto p = delay_probabilities(profile, 100);
  std::vector<double> counts(5, 0.0);
  for (const auto& e : events) {
    if (e.step <= 3) continue;
    counts[e.delivered() ? e.delivery->true_delay : 4] += 1.0;
  }
  const double n = steps - 3;
  for (int j = 0; j <= 4; ++j) {
    const double prob = j < 4 ? p.gamma[j] : p.dropout;
    const double se = std::sqrt(prob * (1 - prob) / n);
    CAPTURE(j);
    CHECK(std::abs(counts[j] / n - prob) < 4 * se);
  }
}

TEST_CASE("modified noise is white with lag-0 power scaled by the delivery rate") {
  const auto profile = DelayProfile::constant(0.8, 3);
  const int steps = 200000;
  Rng rng = make_stream(5, 0, 2);
  std::normal_distribution<double> normal;
  std::vector<Vector> noise(steps);
  for (auto& v : noise) v = scalar(normal(rng));
  const auto events = simulate_channel(profile, noise, rng);
  const Matrix R = Matrix::Identity(1, 1);
  const auto stats = modified_noise_autocorrelation(events, noise, profile, R, 3);
  REQUIRE(stats.size() == 4);
  const auto p = delay_probabilities(profile, 100);
  CHECK(stats[0].target(0, 0) == doctest::Approx(1.0 - p.dropout).epsilon(1e-3));
  for (const auto& s : stats) {
    CAPTURE(s.lag);
    CHECK(std::abs(s.value(0, 0) - s.target(0, 0)) < 4 * s.std_error(0, 0));
  }
  CHECK_THROWS(modified_noise_autocorrelation(events, noise, profile, R, steps));
}
