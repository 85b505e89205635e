#include "delayfilt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace delayfilt {

std::vector<ComponentGroup> component_groups(const std::string& model_name) {
  if (model_name == "growth") return {{"state", {0}}};
  if (model_name == "coordinated_turn") return {{"position", {0, 2}}, {"velocity", {1, 3}}, {"turn_rate", {4}}};
  throw std::invalid_argument("no scoring groups for model '" + model_name + "'");
}

double squared_error(const Vector& truth, const Vector& estimate, const std::vector<int>& indices) {
  double acc = 0.0;
  for (int i : indices) {
    const double d = truth(i) - estimate(i);
    acc += d * d;
  }
  return acc;
}

std::vector<double> rmse_per_step(const std::vector<std::vector<Vector>>& truth,
                                  const std::vector<std::vector<Vector>>& estimates, const std::vector<int>& indices) {
  if (truth.size() != estimates.size()) throw std::invalid_argument("rmse: run count mismatch");
  if (truth.empty()) return {};
  const std::size_t steps = truth.front().size();
  std::vector<double> out(steps, 0.0);
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (truth[r].size() != steps || estimates[r].size() != steps) throw std::invalid_argument("rmse: step count mismatch");
    for (std::size_t k = 0; k < steps; ++k) out[k] += squared_error(truth[r][k], estimates[r][k], indices);
  }
  for (auto& v : out) v = std::sqrt(v / static_cast<double>(truth.size()));
  return out;
}

double time_average(const std::vector<double>& per_step, std::size_t begin, std::size_t end) {
  end = std::min(end, per_step.size());
  if (begin >= end) throw std::invalid_argument("time_average: empty range");
  double acc = 0.0;
  for (std::size_t k = begin; k < end; ++k) acc += per_step[k];
  return acc / static_cast<double>(end - begin);
}

double final_third_average(const std::vector<double>& per_step) {
  const std::size_t n = per_step.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 3);
  return time_average(per_step, n - tail, n);
}

}  // namespace delayfilt
