#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqft/metrics.hpp"
#include "seqft/parameter_state.hpp"

namespace seqft {

/// Closed-form learner description: loss decays from zero_shot_loss toward
/// asymptote with the given time constant; parameters drift toward optimum.
struct SyntheticParams {
  double zero_shot_loss = 1.0;
  double asymptote = 0.0;
  double time_constant = 1000.0;
  ParameterState optimum;
};

struct TaskSpec {
  std::string task_id;
  std::string family_id;
  MetricSpec metric;
  std::optional<SyntheticParams> synthetic;

  void validate() const;
};

class TaskRegistry {
 public:
  TaskRegistry() = default;
  explicit TaskRegistry(std::vector<TaskSpec> tasks);

  void add(TaskSpec task);
  bool contains(const std::string& task_id) const { return index_.contains(task_id); }
  const TaskSpec& at(const std::string& task_id) const;
  const std::string& family_of(const std::string& task_id) const { return at(task_id).family_id; }
  const std::vector<TaskSpec>& tasks() const noexcept { return tasks_; }
  std::size_t size() const noexcept { return tasks_.size(); }

  /// Distinct family ids in first-seen order.
  std::vector<std::string> families() const;
  std::vector<std::string> members(const std::string& family_id) const;

 private:
  std::vector<TaskSpec> tasks_;
  std::map<std::string, std::size_t> index_;
};

nlohmann::json to_json(const MetricSpec& spec);
MetricSpec metric_from_json(const nlohmann::json& j);

/// Metric spec for a conventional metric name (accuracy, f1, rougeLsum, ...).
MetricSpec metric_for_name(const std::string& name);

nlohmann::json to_json(const ParameterState& state);
ParameterState state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TaskSpec& task);
TaskSpec task_from_json(const nlohmann::json& j);

}  // namespace seqft
