#include <algorithm>
#include <cmath>
#include <set>

#include "seqft/backend.hpp"
#include "seqft/error.hpp"
#include "seqft/rng.hpp"

namespace seqft {

void TrainRequest::validate() const {
  if (budget < 1) throw Error(ErrorCode::budget_out_of_range, "budget must be >= 1");
  if (!init.state) throw Error(ErrorCode::invalid_argument, "request without an initial state");
  for (std::size_t i = 0; i < eval_steps.size(); ++i) {
    if (eval_steps[i] < 0 || eval_steps[i] > budget) {
      throw Error(ErrorCode::budget_out_of_range,
                  "eval step " + std::to_string(eval_steps[i]) + " outside [0, budget]");
    }
    if (i > 0 && eval_steps[i] <= eval_steps[i - 1]) {
      throw Error(ErrorCode::non_monotone_steps, "eval steps must be strictly increasing");
    }
  }
  const auto has = [&](std::int64_t s) {
    return std::binary_search(eval_steps.begin(), eval_steps.end(), s);
  };
  if (!has(0) || !has(kProbeStep)) {
    throw Error(ErrorCode::eval_step_mismatch, "eval steps must include 0 and 5");
  }
}

void TrainResult::validate(const TrainRequest& request) const {
  const auto& pts = curve.points();
  if (pts.empty() || pts.front().step != 0) {
    throw Error(ErrorCode::missing_step_zero, "curve has no step-0 evaluation");
  }
  if (pts.size() != request.eval_steps.size()) {
    throw Error(ErrorCode::eval_step_mismatch, "curve has " + std::to_string(pts.size()) +
                                                   " points for " +
                                                   std::to_string(request.eval_steps.size()) +
                                                   " eval steps");
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].step != request.eval_steps[i]) {
      throw Error(ErrorCode::eval_step_mismatch,
                  "curve step " + std::to_string(pts[i].step) + " was not requested");
    }
  }
  for (double v : {probe.loss0, probe.loss5, probe.metric0, probe.metric5}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_value, "non-finite probe value");
  }
  if (!final_state.all_finite() || !best_state.all_finite()) {
    throw Error(ErrorCode::non_finite_value, "non-finite parameter state");
  }
  if (request.init.state && (!final_state.same_layout(*request.init.state) ||
                             !best_state.same_layout(*request.init.state))) {
    throw Error(ErrorCode::layout_mismatch, "returned state layout differs from the init");
  }
}

std::vector<std::int64_t> default_eval_schedule(std::int64_t budget, int points) {
  if (budget < kProbeStep) {
    throw Error(ErrorCode::budget_out_of_range, "budget must cover the probe step 5");
  }
  std::set<std::int64_t> steps{0, kProbeStep, budget};
  const double log_budget = std::log(static_cast<double>(budget));
  for (int i = 0; i < points; ++i) {
    const double frac = points == 1 ? 1.0 : static_cast<double>(i) / (points - 1);
    const auto s = static_cast<std::int64_t>(std::llround(std::exp(frac * log_budget)));
    steps.insert(std::clamp<std::int64_t>(s, 1, budget));
  }
  return {steps.begin(), steps.end()};
}

std::vector<std::int64_t> probe_eval_schedule() { return {0, kProbeStep}; }

TransferEffectMatrix::TransferEffectMatrix(double lineage_decay) : decay_(lineage_decay) {
  if (!(lineage_decay >= 0.0 && lineage_decay <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "lineage decay must lie in [0, 1]");
  }
}

void TransferEffectMatrix::set(const std::string& source, const std::string& target,
                               TransferEffect effect) {
  if (!(effect.rate_multiplier > 0.0) || !std::isfinite(effect.zero_shot_offset)) {
    throw Error(ErrorCode::invalid_argument, "transfer effect " + source + "->" + target +
                                                 " needs a positive rate multiplier");
  }
  entries_[{source, target}] = effect;
}

TransferEffect TransferEffectMatrix::at(const std::string& source, const std::string& target) const {
  const auto it = entries_.find({source, target});
  return it == entries_.end() ? TransferEffect{} : it->second;
}

TransferEffect TransferEffectMatrix::compose(const std::vector<std::string>& lineage,
                                             const std::string& target) const {
  TransferEffect total;
  double weight = 1.0;
  for (auto it = lineage.rbegin(); it != lineage.rend(); ++it) {
    const auto e = at(*it, target);
    total.zero_shot_offset += weight * e.zero_shot_offset;
    total.rate_multiplier *= std::pow(e.rate_multiplier, weight);
    weight *= decay_;
  }
  return total;
}

TrainResult synthetic_train(const TrainRequest& request, const TaskSpec& task,
                            const TransferEffectMatrix& effects, double noise_sigma) {
  if (!task.synthetic) {
    throw Error(ErrorCode::missing_synthetic_params, "task " + task.task_id + " is not synthetic");
  }
  request.validate();
  const auto& p = *task.synthetic;
  const auto& init = *request.init.state;
  if (!init.same_layout(p.optimum)) {
    throw Error(ErrorCode::layout_mismatch, "init state does not match task " + task.task_id);
  }

  const auto effect = effects.compose(request.init.lineage, task.task_id);
  const double start = std::max(p.zero_shot_loss + effect.zero_shot_offset, p.asymptote);
  const double rate = effect.rate_multiplier / p.time_constant;
  const double floor = task.metric.lower_bound;

  CounterRng noise(derive_seed(request.seed, "synthetic-noise/" + task.task_id));
  std::vector<LearningCurve::Point> points;
  points.reserve(request.eval_steps.size());
  for (auto s : request.eval_steps) {
    double loss = p.asymptote + (start - p.asymptote) * std::exp(-static_cast<double>(s) * rate);
    if (noise_sigma > 0.0) loss = std::max(floor, loss + noise_sigma * noise.normal());
    points.push_back({s, loss});
  }

  TrainResult result;
  result.curve = LearningCurve(std::move(points), task.metric.metric_id, floor);

  const auto& pts = result.curve.points();
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].value <= pts[best].value) best = i;
  }
  result.best_step = pts[best].step;

  const auto moved = [&](std::int64_t steps) {
    const double pull = 1.0 - std::exp(-static_cast<double>(steps) * rate);
    ParameterState out = init;
    for (auto g : kParamGroups) out[g] += (p.optimum[g] - init[g]) * pull;
    return out;
  };
  result.final_state = moved(request.budget);
  result.best_state = moved(result.best_step);

  const auto value_at = [&](std::int64_t step) {
    return std::find_if(pts.begin(), pts.end(), [&](const auto& pt) { return pt.step == step; })->value;
  };
  result.probe.loss0 = value_at(0);
  result.probe.loss5 = value_at(kProbeStep);
  result.probe.metric0 = task.metric.from_loss(result.probe.loss0);
  result.probe.metric5 = task.metric.from_loss(result.probe.loss5);
  return result;
}

SyntheticBackend::SyntheticBackend(TaskRegistry tasks, TransferEffectMatrix effects,
                                   ParameterState root, double noise_sigma)
    : tasks_(std::move(tasks)), effects_(std::move(effects)), root_(std::move(root)), sigma_(noise_sigma) {
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise sigma must be >= 0");
}

TrainResult SyntheticBackend::train(const TrainRequest& request) {
  return synthetic_train(request, tasks_.at(request.task_id), effects_, sigma_);
}

}  // namespace seqft
