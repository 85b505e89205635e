#pragma once

#include <string>
#include <vector>

#include "delayfilt/types.hpp"

namespace delayfilt {

/// A named group of state components scored together (e.g. both positions).
struct ComponentGroup {
  std::string name;
  std::vector<int> indices;
};

/// Scoring groups for a model: "state" for the growth model, position /
/// velocity / turn_rate for the coordinated turn model.
std::vector<ComponentGroup> component_groups(const std::string& model_name);

/// Squared Euclidean error restricted to the given components.
double squared_error(const Vector& truth, const Vector& estimate, const std::vector<int>& indices);

/// Per-step RMSE across runs: sqrt(mean_r ||x_k - xhat_k||^2) over the selected
/// components. truth[r][k] and estimates[r][k] index run r, step k.
std::vector<double> rmse_per_step(const std::vector<std::vector<Vector>>& truth,
                                  const std::vector<std::vector<Vector>>& estimates, const std::vector<int>& indices);

/// Arithmetic mean of per-step values over [begin, end).
double time_average(const std::vector<double>& per_step, std::size_t begin = 0, std::size_t end = static_cast<std::size_t>(-1));

/// Mean over the last third of the steps (rounded so at least one step is used).
double final_third_average(const std::vector<double>& per_step);

}  // namespace delayfilt
