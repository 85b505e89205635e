#include <cmath>
#include <random>

#include "doctest.h"

#include "delayfilt/cubature.hpp"
#include "delayfilt/gauss_filter.hpp"
#include "oracles.hpp"

using namespace delayfilt;

namespace {

Matrix spd(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal;
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = normal(gen);
  return A * A.transpose() + 0.5 * Matrix::Identity(n, n);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

ChannelEvent delivered(int k, const Vector& y, int delay = 0) { return {k, Delivery{y, delay}}; }

struct LinearSetup {
  Matrix F, H, Q, R, P0;
  Vector m0;
  SystemModel model;
};

LinearSetup linear_setup() {
  LinearSetup s;
  s.F = Matrix(2, 2);
  s.F << 1.0, 0.1, -0.2, 0.95;
  s.H = Matrix(1, 2);
  s.H << 1.0, 0.5;
  s.Q = 0.2 * Matrix::Identity(2, 2);
  s.R = Matrix::Constant(1, 1, 0.3);
  s.m0 = vec({1.0, -1.0});
  s.P0 = spd(2, 4);
  s.model = linear_gaussian_model(s.F, s.H, s.Q, s.R, s.m0, s.P0);
  return s;
}

}  // namespace

TEST_CASE("third-degree rule has unit weight mass, zero mean and identity spread") {
  for (int n : {1, 2, 5, 9}) {
    const auto rule = CubatureRule::third_degree(n);
    CHECK(rule.size() == 2 * n);
    CHECK(rule.weight * rule.size() == doctest::Approx(1.0));
    const Vector mean = rule.unit_points.rowwise().sum() * rule.weight;
    const Matrix cov = rule.unit_points * rule.unit_points.transpose() * rule.weight;
    CHECK(mean.norm() < 1e-14);
    CHECK(max_abs(cov - Matrix::Identity(n, n)) < 1e-12);
  }
}

TEST_CASE("cubature transform of the identity returns the input moments") {
  const Matrix P = spd(3, 1);
  const Vector m = vec({0.5, -2.0, 3.0});
  const auto out = cubature_transform(m, P, [](const Vector& x) { return x; });
  CHECK((out.mean - m).norm() < 1e-12);
  CHECK(max_abs(out.cov - P) < 1e-12);
  CHECK(max_abs(out.cross - P) < 1e-12);
}

TEST_CASE("cubature transform is exact for affine maps") {
  const Matrix P = spd(4, 2);
  const Vector m = vec({1.0, 2.0, -1.0, 0.3});
  Matrix A(2, 4);
  A << 1, 2, 0, -1, 0.5, 0, 3, 1;
  const Vector b = vec({0.1, -7.0});
  const auto out = cubature_transform(m, P, [&](const Vector& x) -> Vector { return A * x + b; });
  CHECK((out.mean - (A * m + b)).norm() < 1e-10);
  CHECK(max_abs(out.cov - A * P * A.transpose()) < 1e-10);
  CHECK(max_abs(out.cross - P * A.transpose()) < 1e-10);
}

TEST_CASE("cubature reproduces the second moment of a standard normal") {
  const auto out = cubature_transform(Vector::Zero(1), Matrix::Identity(1, 1),
                                      [](const Vector& x) { return Vector::Constant(1, x(0) * x(0)); });
  CHECK(out.mean(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("jittered Cholesky handles definite, singular, zero and indefinite input") {
  const Matrix P = spd(3, 3);
  const Matrix L = jittered_cholesky(P);
  CHECK(max_abs(L * L.transpose() - P) < 1e-12);
  CHECK(max_abs(L.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()) == 0.0);

  Vector u = vec({1.0, 2.0, 3.0});
  const Matrix rank_one = u * u.transpose();
  const Matrix Lr = jittered_cholesky(rank_one);
  CHECK(max_abs(Lr * Lr.transpose() - rank_one) <= 1e-6 * rank_one.trace());

  CHECK(max_abs(jittered_cholesky(Matrix::Zero(2, 2))) == 0.0);

  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(jittered_cholesky(indefinite), NumericalError);
}

TEST_CASE("linear predict with N=0 equals the Kalman time update") {
  const auto s = linear_setup();
  const auto w0 = WindowBelief::from_prior(s.m0, s.P0);
  const auto w1 = predict(w0, s.model, 0);
  CHECK(w1.step == 1);
  CHECK(w1.lags() == 0);
  CHECK((w1.mean - s.F * s.m0).norm() < 1e-10);
  CHECK(max_abs(w1.cov - (s.F * s.P0 * s.F.transpose() + s.Q)) < 1e-10);
}

TEST_CASE("window shift keeps earlier marginals and grows to N lags") {
  const auto s = linear_setup();
  auto w = WindowBelief::from_prior(s.m0, s.P0);
  for (int k = 1; k <= 6; ++k) {
    const auto next = predict(w, s.model, 3);
    CHECK(next.lags() == std::min(3, k - 1));
    for (int lag = 1; lag <= next.lags(); ++lag) {
      CHECK((next.block_mean(lag) - w.block_mean(lag - 1)).norm() < 1e-10);
      for (int other = 1; other <= next.lags(); ++other) {
        CHECK(max_abs(next.block_cov(lag, other) - w.block_cov(lag - 1, other - 1)) < 1e-10);
      }
    }
    // Cross-covariance of the new state with the previous one is F P.
    if (next.lags() >= 1) CHECK(max_abs(next.block_cov(0, 1) - s.F * w.block_cov(0, 0)) < 1e-10);
    w = next;
  }
}

TEST_CASE("growth model predict mean agrees with Monte Carlo; variance is the rule's own") {
  const auto model = growth_model();
  const auto w = predict(WindowBelief::from_prior(Vector::Zero(1), Matrix::Identity(1, 1)), model, 0);
  Rng rng = make_stream(21, 0, 0);
  std::normal_distribution<double> normal;
  const int samples = 10000000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = normal(rng);
    const double y = model.transition(Vector::Constant(1, x), 1)(0) + std::sqrt(10.0) * normal(rng);
    sum += y;
    sum_sq += y * y;
  }
  const double mean = sum / samples;
  const double var = sum_sq / samples - mean * mean;
  CHECK(std::abs(w.mean(0) - mean) < 3.0 * std::sqrt(var / samples));
  // The two cubature points sit at x = +-1 where f is +-13 around 8 cos(1.2).
  CHECK(w.cov(0, 0) == doctest::Approx(169.0 + 10.0).epsilon(1e-12));
}

TEST_CASE("single-lag measurement prediction reduces to the lag-0 moments") {
  const auto s = linear_setup();
  const auto w = predict(WindowBelief::from_prior(s.m0, s.P0), s.model, 3);
  const auto probs = delay_probabilities(DelayProfile::constant(0.8, 3), 1);
  const auto pred = predict_measurement(w, s.model, probs);
  REQUIRE(pred.per_lag.size() == 1);
  CHECK((pred.y_hat - pred.per_lag[0].z_hat).norm() == 0.0);
  CHECK(max_abs(pred.S - pred.per_lag[0].Pzz) < 1e-14);
  CHECK(max_abs(pred.S - (s.H * w.cov * s.H.transpose() + s.R)) < 1e-10);
  CHECK(max_abs(pred.C - w.cov * s.H.transpose()) < 1e-10);
}

TEST_CASE("mixture moments are the weighted sums of the per-lag moments") {
  const auto model = coordinated_turn_model();
  auto w = WindowBelief::from_prior(model.initial_mean, model.initial_cov);
  for (int k = 1; k <= 5; ++k) w = predict(w, model, 3);
  const auto probs = delay_probabilities(DelayProfile::constant(0.9, 3), 5);
  for (auto spread : {SpreadTerm::kPerLag, SpreadTerm::kFullMixture}) {
    const auto pred = predict_measurement(w, model, probs, spread);
    Vector y = Vector::Zero(2);
    Matrix C = Matrix::Zero(5, 2);
    Matrix Pzz = Matrix::Zero(2, 2);
    Matrix spread_term = Matrix::Zero(2, 2);
    for (int s = 0; s <= 3; ++s) {
      const double g = pred.gamma_bar[s];
      y += g * pred.per_lag[s].z_hat;
      C += g * pred.per_lag[s].Pxz;
      Pzz += g * pred.per_lag[s].Pzz;
      spread_term += (spread == SpreadTerm::kPerLag ? g * (1 - g) : g) * pred.per_lag[s].z_hat *
                     pred.per_lag[s].z_hat.transpose();
    }
    if (spread == SpreadTerm::kFullMixture) spread_term -= y * y.transpose();
    CHECK((pred.y_hat - y).norm() <= 1e-12 * y.norm());
    CHECK(max_abs(pred.C - C) <= 1e-12 * max_abs(C));
    CHECK(max_abs(pred.S - (Pzz + spread_term)) <= 1e-12 * max_abs(pred.S));
    CHECK(max_abs(pred.window_cross.topRows(5) - pred.C) <= 1e-12 * max_abs(C));
  }
}

TEST_CASE("equal weights and identical lag predictions give the (1 - sum g^2) spread") {
  // A static state makes every lag block identical.
  const Matrix I = Matrix::Identity(1, 1);
  const auto model = linear_gaussian_model(I, I, Matrix::Zero(1, 1), I, Vector::Constant(1, 2.0), I);
  auto w = WindowBelief::from_prior(model.initial_mean, model.initial_cov);
  for (int k = 1; k <= 3; ++k) w = predict(w, model, 2);
  DelayProbabilities probs;
  probs.gamma = {0.2, 0.2, 0.2};
  probs.gamma_bar = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto pred = predict_measurement(w, model, probs);
  const double z = pred.per_lag[0].z_hat(0);
  CHECK(z == doctest::Approx(2.0));
  const double spread = pred.S(0, 0) - pred.per_lag[0].Pzz(0, 0);
  CHECK(spread == doctest::Approx((1.0 - 3.0 / 9.0) * z * z).epsilon(1e-12));
}

TEST_CASE("full-mixture moments match a Monte Carlo of the delayed measurement") {
  // Two-lag linear Gaussian window with a nonzero mean.
  const auto s = linear_setup();
  auto w = WindowBelief::from_prior(s.m0, s.P0);
  w = predict(w, s.model, 1);
  w = predict(w, s.model, 1);
  REQUIRE(w.lags() == 1);
  DelayProbabilities probs;
  probs.gamma = {0.5, 0.3};
  probs.gamma_bar = {0.625, 0.375};

  const Matrix L = jittered_cholesky(w.cov);
  Rng rng = make_stream(8, 0, 0);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution late(probs.gamma_bar[1]);
  const int samples = 1000000;
  std::vector<double> ys(samples);
  std::vector<double> xs(samples);
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vector e(4);
    for (int d = 0; d < 4; ++d) e(d) = normal(rng);
    const Vector x = w.mean + L * e;
    const int lag = late(rng) ? 1 : 0;
    ys[i] = (s.H * x.segment(2 * lag, 2))(0) + std::sqrt(s.R(0, 0)) * normal(rng);
    xs[i] = x(0);
    sum += ys[i];
  }
  const double mean = sum / samples;
  double var = 0.0, var_sq = 0.0, cross = 0.0, cross_sq = 0.0;
  const double xmean = [&] {
    double a = 0.0;
    for (double x : xs) a += x;
    return a / samples;
  }();
  for (int i = 0; i < samples; ++i) {
    const double d2 = (ys[i] - mean) * (ys[i] - mean);
    const double c = (ys[i] - mean) * (xs[i] - xmean);
    var += d2;
    var_sq += d2 * d2;
    cross += c;
    cross_sq += c * c;
  }
  var /= samples;
  cross /= samples;
  const double var_se = std::sqrt((var_sq / samples - var * var) / samples);
  const double cross_se = std::sqrt((cross_sq / samples - cross * cross) / samples);
  const double mean_se = std::sqrt(var / samples);

  const auto exact = predict_measurement(w, s.model, probs, SpreadTerm::kFullMixture);
  CHECK(std::abs(exact.y_hat(0) - mean) < 3 * mean_se);
  CHECK(std::abs(exact.S(0, 0) - var) < 3 * var_se);
  CHECK(std::abs(exact.C(0, 0) - cross) < 3 * cross_se);

  // The per-lag form ignores that only one lag is received and so departs
  // from the true mixture variance whenever the lag predictions differ.
  const auto per_lag = predict_measurement(w, s.model, probs, SpreadTerm::kPerLag);
  const double dz = exact.per_lag[0].z_hat(0) - exact.per_lag[1].z_hat(0);
  const double zsq = exact.per_lag[0].z_hat(0) * exact.per_lag[0].z_hat(0) * 0.625 * 0.375 +
                     exact.per_lag[1].z_hat(0) * exact.per_lag[1].z_hat(0) * 0.375 * 0.625;
  CHECK(per_lag.S(0, 0) - exact.S(0, 0) == doctest::Approx(zsq - 0.625 * 0.375 * dz * dz).epsilon(1e-9));
}

TEST_CASE("the two spread forms agree when every lag predicts zero") {
  const Matrix F = Matrix::Constant(1, 1, 0.8);
  const Matrix I = Matrix::Identity(1, 1);
  const auto model = linear_gaussian_model(F, I, I, I, Vector::Zero(1), I);
  auto w = WindowBelief::from_prior(Vector::Zero(1), I);
  for (int k = 1; k <= 4; ++k) w = predict(w, model, 3);
  const auto probs = delay_probabilities(DelayProfile::constant(1.2, 3), 4);
  const auto a = predict_measurement(w, model, probs, SpreadTerm::kPerLag);
  const auto b = predict_measurement(w, model, probs, SpreadTerm::kFullMixture);
  CHECK(max_abs(a.S - b.S) < 1e-14);
}

TEST_CASE("linear model, N=0, no dropouts: filter equals the Kalman recursion over 100 steps") {
  const auto s = linear_setup();
  Rng rng = make_stream(2, 0, 0);
  const auto truth = simulate_truth(s.model, 100, rng);
  std::vector<ChannelEvent> events;
  std::vector<std::optional<Vector>> ys;
  for (int k = 1; k <= 100; ++k) {
    events.push_back(delivered(k, truth.measurements[k - 1]));
    ys.emplace_back(truth.measurements[k - 1]);
  }
  const auto kf = oracle::kalman(s.F, s.H, s.Q, s.R, s.m0, s.P0, ys);
  for (auto policy : {DropoutPolicy::kPredicted, DropoutPolicy::kSkip}) {
    const auto gaf = gaf_run(s.model, DelayProfile::constant(0.0, 0), events, {policy, SpreadTerm::kPerLag});
    REQUIRE(gaf.size() == 100);
    for (int k = 0; k < 100; ++k) {
      CAPTURE(k);
      CHECK((gaf[k].mean - kf[k].mean).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(max_abs(gaf[k].cov - kf[k].cov) < 1e-10);
      CHECK(gaf[k].step == k + 1);
    }
  }
}

TEST_CASE("update top block follows the gain formula with the current-state cross-covariance") {
  const auto model = coordinated_turn_model();
  auto w = WindowBelief::from_prior(model.initial_mean, model.initial_cov);
  for (int k = 1; k <= 3; ++k) w = predict(w, model, 3);
  const auto probs = delay_probabilities(DelayProfile::constant(0.9, 3), 3);
  const auto pred = predict_measurement(w, model, probs);
  const Vector y = pred.y_hat + vec({12.0, -0.004});
  const auto post = update(w, pred, delivered(3, y, 1), model);
  const Matrix K = pred.C * pred.S.inverse();
  const Vector expected = w.block_mean(0) + K * model.residual(y, pred.y_hat);
  CHECK((post.block_mean(0) - expected).norm() < 1e-8 * expected.norm());
  const Matrix expected_cov = w.block_cov(0, 0) - K * pred.S * K.transpose();
  CHECK(max_abs(post.block_cov(0, 0) - expected_cov) < 1e-8 * max_abs(expected_cov));
  CHECK(post.cov.trace() <= w.cov.trace());
  CHECK(covariance_healthy(post.cov));
}

TEST_CASE("zero innovation leaves the mean unchanged") {
  const auto s = linear_setup();
  auto w = predict(WindowBelief::from_prior(s.m0, s.P0), s.model, 0);
  const auto pred = predict_measurement(w, s.model, delay_probabilities(DelayProfile::constant(0.0, 0), 1));
  const auto post = update(w, pred, delivered(1, pred.y_hat), s.model);
  CHECK((post.mean - w.mean).norm() == 0.0);
  CHECK(post.cov.trace() < w.cov.trace());
}

TEST_CASE("dropout policies") {
  const auto s = linear_setup();
  auto w = WindowBelief::from_prior(s.m0, s.P0);
  w = predict(w, s.model, 2);
  w = predict(w, s.model, 2);
  const auto pred = predict_measurement(w, s.model, delay_probabilities(DelayProfile::constant(0.8, 2), 2));
  const ChannelEvent lost{2, std::nullopt};

  const auto skipped = update(w, pred, lost, s.model, DropoutPolicy::kSkip);
  CHECK(skipped.mean == w.mean);
  CHECK(skipped.cov == w.cov);

  const auto predicted = update(w, pred, lost, s.model, DropoutPolicy::kPredicted);
  CHECK(predicted.mean == w.mean);
  CHECK(predicted.cov.trace() < w.cov.trace());

  // Over a run, skip never shrinks the covariance on a dropout step.
  GaussianDelayFilter filter(s.model, DelayProfile::constant(0.8, 2), {DropoutPolicy::kSkip, SpreadTerm::kPerLag});
  filter.step(delivered(1, vec({0.3})));
  const Matrix before = filter.window().current().cov;
  const Vector before_mean = filter.window().current().mean;
  const auto after = filter.step({2, std::nullopt});
  CHECK(after.cov.trace() >= before.trace());
  CHECK((after.mean - s.F * before_mean).norm() < 1e-12);
}

TEST_CASE("zero-rate channel with a window gives the N=0 result") {
  const auto model = growth_model();
  Rng rng = make_stream(4, 0, 0);
  const auto truth = simulate_truth(model, 60, rng);
  Rng crng = make_stream(4, 0, 1);
  const auto events = simulate_channel(DelayProfile::constant(0.0, 3), truth.measurements, crng);
  const auto windowed = gaf_run(model, DelayProfile::constant(0.0, 3), events);
  const auto plain = gaf_run(model, DelayProfile::constant(0.0, 0), events);
  for (std::size_t k = 0; k < plain.size(); ++k) {
    CHECK(std::abs(windowed[k].mean(0) - plain[k].mean(0)) <= 1e-9 * std::max(1.0, std::abs(plain[k].mean(0))));
    CHECK(std::abs(windowed[k].cov(0, 0) - plain[k].cov(0, 0)) <= 1e-9 * plain[k].cov(0, 0));
  }
}

TEST_CASE("covariances stay symmetric and factorable over delayed runs") {
  for (const auto& model : {growth_model(), coordinated_turn_model()}) {
    const double lambda = model.state_dim == 1 ? 0.8 : 0.9;
    const auto profile = DelayProfile::constant(lambda, 3);
    Rng rng = make_stream(5, 0, 0);
    const auto truth = simulate_truth(model, 100, rng);
    const auto events = simulate_channel(profile, truth.measurements, rng);
    for (auto policy : {DropoutPolicy::kPredicted, DropoutPolicy::kSkip}) {
      GaussianDelayFilter filter(model, profile, {policy, SpreadTerm::kPerLag});
      for (const auto& e : events) {
        const auto b = filter.step(e);
        CHECK(b.mean.allFinite());
        CHECK(max_abs(filter.window().cov - filter.window().cov.transpose()) == 0.0);
      }
      CHECK(filter.covariance_violations() == 0);
    }
  }
}

TEST_CASE("input errors") {
  const auto s = linear_setup();
  GaussianDelayFilter filter(s.model, DelayProfile::constant(0.5, 1));
  CHECK_THROWS_AS(filter.step({2, std::nullopt}), std::invalid_argument);

  // No sensor noise and a blind sensor make the innovation covariance singular.
  const Matrix Z = Matrix::Zero(1, 2);
  const auto blind = linear_gaussian_model(s.F, Z, s.Q, Matrix::Zero(1, 1), s.m0, s.P0);
  GaussianDelayFilter broken(blind, DelayProfile::constant(0.0, 0));
  CHECK_THROWS_AS(broken.step(delivered(1, vec({1.0}))), NumericalError);

  auto w = predict(WindowBelief::from_prior(s.m0, s.P0), s.model, 2);
  CHECK_THROWS_AS(predict_measurement(w, s.model, delay_probabilities(DelayProfile::constant(0.5, 2), 3)),
                  std::invalid_argument);
}
