#include "seqft/task.hpp"

#include <algorithm>
#include <cmath>

#include "seqft/error.hpp"

namespace seqft {

void TaskSpec::validate() const {
  if (task_id.empty()) throw Error(ErrorCode::invalid_argument, "task without id");
  metric.validate();
  if (!synthetic) return;
  const auto& p = *synthetic;
  if (!(p.time_constant > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "task " + task_id + ": time constant must be positive");
  }
  if (!(p.asymptote <= p.zero_shot_loss)) {
    throw Error(ErrorCode::invalid_argument, "task " + task_id + ": asymptote above zero-shot loss");
  }
  if (p.asymptote < metric.lower_bound) {
    throw Error(ErrorCode::invalid_argument,
                "task " + task_id + ": asymptote below the metric lower bound");
  }
  if (!p.optimum.all_finite()) {
    throw Error(ErrorCode::non_finite_value, "task " + task_id + ": non-finite optimum");
  }
}

TaskRegistry::TaskRegistry(std::vector<TaskSpec> tasks) {
  for (auto& t : tasks) add(std::move(t));
}

void TaskRegistry::add(TaskSpec task) {
  task.validate();
  if (index_.contains(task.task_id)) {
    throw Error(ErrorCode::invalid_argument, "duplicate task id " + task.task_id);
  }
  index_.emplace(task.task_id, tasks_.size());
  tasks_.push_back(std::move(task));
}

const TaskSpec& TaskRegistry::at(const std::string& task_id) const {
  const auto it = index_.find(task_id);
  if (it == index_.end()) throw Error(ErrorCode::unknown_task, "unknown task '" + task_id + "'");
  return tasks_[it->second];
}

std::vector<std::string> TaskRegistry::families() const {
  std::vector<std::string> out;
  for (const auto& t : tasks_) {
    if (std::find(out.begin(), out.end(), t.family_id) == out.end()) out.push_back(t.family_id);
  }
  return out;
}

std::vector<std::string> TaskRegistry::members(const std::string& family_id) const {
  std::vector<std::string> out;
  for (const auto& t : tasks_) {
    if (t.family_id == family_id) out.push_back(t.task_id);
  }
  return out;
}

nlohmann::json to_json(const MetricSpec& spec) {
  return {{"metric_id", spec.metric_id},
          {"orientation", spec.orientation == Orientation::lower_is_better ? "lower_is_better"
                                                                           : "higher_is_better"},
          {"ceiling", spec.ceiling},
          {"lower_bound", spec.lower_bound}};
}

MetricSpec metric_from_json(const nlohmann::json& j) {
  if (j.is_string()) return metric_for_name(j.get<std::string>());
  MetricSpec spec;
  spec.metric_id = j.value("metric_id", std::string("loss"));
  const auto orientation = j.value("orientation", std::string("lower_is_better"));
  if (orientation == "lower_is_better") {
    spec.orientation = Orientation::lower_is_better;
  } else if (orientation == "higher_is_better") {
    spec.orientation = Orientation::higher_is_better;
  } else {
    throw Error(ErrorCode::schema_mismatch, "unknown metric orientation '" + orientation + "'");
  }
  spec.ceiling = j.value("ceiling", 1.0);
  spec.lower_bound = j.value("lower_bound", 0.0);
  spec.validate();
  return spec;
}

MetricSpec metric_for_name(const std::string& name) {
  MetricSpec spec;
  spec.metric_id = name;
  if (name == "accuracy" || name == "f1" || name == "rougeLsum") {
    spec.orientation = Orientation::higher_is_better;
    spec.ceiling = 1.0;
  } else {
    // nll, mean_edit and anything unrecognised are already losses.
    spec.orientation = Orientation::lower_is_better;
  }
  return spec;
}

nlohmann::json to_json(const ParameterState& state) {
  nlohmann::json j = nlohmann::json::object();
  for (auto g : kParamGroups) {
    j[std::string(group_name(g))] = std::vector<double>(state[g].begin(), state[g].end());
  }
  return j;
}

ParameterState state_from_json(const nlohmann::json& j) {
  ParameterState state;
  for (auto g : kParamGroups) {
    const auto key = std::string(group_name(g));
    if (!j.contains(key)) throw Error(ErrorCode::schema_mismatch, "state lacks group " + key);
    const auto values = j.at(key).get<std::vector<double>>();
    state[g] = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  return state;
}

nlohmann::json to_json(const TaskSpec& task) {
  nlohmann::json j{{"task_id", task.task_id}, {"family", task.family_id}, {"metric", to_json(task.metric)}};
  if (task.synthetic) {
    j["synthetic"] = {{"zero_shot_loss", task.synthetic->zero_shot_loss},
                      {"asymptote", task.synthetic->asymptote},
                      {"time_constant", task.synthetic->time_constant},
                      {"optimum", to_json(task.synthetic->optimum)}};
  }
  return j;
}

TaskSpec task_from_json(const nlohmann::json& j) {
  TaskSpec task;
  task.task_id = j.at("task_id").get<std::string>();
  task.family_id = j.value("family", std::string());
  task.metric = j.contains("metric") ? metric_from_json(j.at("metric")) : MetricSpec{};
  if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
    const auto& s = j.at("synthetic");
    SyntheticParams p;
    p.zero_shot_loss = s.at("zero_shot_loss").get<double>();
    p.asymptote = s.at("asymptote").get<double>();
    p.time_constant = s.at("time_constant").get<double>();
    p.optimum = state_from_json(s.at("optimum"));
    task.synthetic = std::move(p);
  }
  task.validate();
  return task;
}

}  // namespace seqft
