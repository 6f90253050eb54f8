#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "seqft/backend.hpp"
#include "seqft/metrics.hpp"
#include "seqft/task.hpp"

namespace seqft::testing {

/// Midpoint-rule integral of Perf(e^x) over x in [0, ln budget_max], computed
/// from the raw points by brute-force minimum at each sample. Exact whenever
/// every jump in log-step lies on a grid boundary.
inline double numeric_perf_auc(const std::vector<std::pair<std::int64_t, double>>& points, std::int64_t budget_max,
                               std::size_t samples = 1000000) {
  const double upper = std::log(static_cast<double>(budget_max));
  const double h = upper / static_cast<double>(samples);
  // Sample points are visited in increasing order, so a moving cursor keeps
  // the running minimum; each sample still recomputes its own budget.
  double sum = 0.0, carry = 0.0;
  double running = INFINITY;
  std::size_t next = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double budget = std::exp((static_cast<double>(i) + 0.5) * h);
    while (next < points.size() && static_cast<double>(points[next].first) <= budget) {
      running = std::min(running, points[next].second);
      ++next;
    }
    const double term = running * h - carry;
    const double t = sum + term;
    carry = (t - sum) - term;
    sum = t;
  }
  return sum;
}

inline ParameterState filled_state(Eigen::Index dim, double value) {
  auto s = ParameterState::zeros(dim);
  for (auto& g : s.groups) g.setConstant(value);
  return s;
}

inline TaskSpec synthetic_task(const std::string& id, const std::string& family, double l0 = 0.9, double linf = 0.1,
                               double tau = 1000.0, double optimum = 1.0, Eigen::Index dim = 4) {
  return TaskSpec{id, family, MetricSpec{}, SyntheticParams{l0, linf, tau, filled_state(dim, optimum)}};
}

/// Three-task world: A helps C, B hurts C, everything else neutral.
struct ToyWorld {
  TaskRegistry tasks;
  TransferEffectMatrix effects;
  ParameterState root = ParameterState::zeros(4);

  ToyWorld() {
    tasks.add(synthetic_task("A", "f1", 0.85, 0.15, 800.0, 1.0));
    tasks.add(synthetic_task("B", "f2", 0.80, 0.20, 1200.0, -1.0));
    tasks.add(synthetic_task("C", "f1", 0.90, 0.10, 1000.0, 0.5));
    effects.set("A", "C", {-0.2, 2.0});
    effects.set("B", "C", {0.3, 0.5});
  }

  std::unique_ptr<SyntheticBackend> backend(double sigma = 0.0) const {
    return std::make_unique<SyntheticBackend>(tasks, effects, root, sigma);
  }
};

}  // namespace seqft::testing
