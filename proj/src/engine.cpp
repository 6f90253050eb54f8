#include "seqft/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "seqft/error.hpp"

namespace seqft {

std::string checkpoint_id_for(std::span<const std::string> lineage) {
  if (lineage.empty()) return std::string(kRootCheckpointId);
  std::string id;
  for (const auto& t : lineage) {
    if (!id.empty()) id += '>';
    id += t;
  }
  return id;
}

Zoo::Zoo(std::shared_ptr<const ParameterState> root_state) {
  records_.push_back(
      CheckpointRecord{std::string(kRootCheckpointId), {}, std::move(root_state), std::nullopt});
}

const CheckpointRecord& Zoo::append(CheckpointRecord record) {
  if (record.lineage.empty()) {
    throw Error(ErrorCode::invalid_argument, "only the pre-trained root may have an empty lineage");
  }
  records_.push_back(std::move(record));
  return records_.back();
}

const CheckpointRecord* Zoo::find(std::string_view checkpoint_id) const {
  for (const auto& r : records_) {
    if (r.checkpoint_id == checkpoint_id) return &r;
  }
  return nullptr;
}

const CheckpointRecord& Zoo::at(std::string_view checkpoint_id) const {
  if (const auto* r = find(checkpoint_id)) return *r;
  throw Error(ErrorCode::unknown_checkpoint, "no checkpoint '" + std::string(checkpoint_id) + "' in zoo");
}

Trainer::Trainer(Backend& backend, std::int64_t budget, std::vector<std::int64_t> eval_steps)
    : backend_(backend),
      budget_(budget),
      eval_steps_(eval_steps.empty() ? default_eval_schedule(budget) : std::move(eval_steps)),
      root_{std::string(kRootCheckpointId), {}, std::make_shared<const ParameterState>(backend.root_state()),
            std::nullopt} {}

std::shared_ptr<const TrainResult> Trainer::run(const std::string& task_id, const CheckpointRecord& init,
                                                std::uint64_t seed, std::int64_t budget,
                                                const std::vector<std::int64_t>& steps) {
  std::ostringstream key;
  key << task_id << '|' << checkpoint_id_for(init.lineage) << '|' << seed << '|' << budget << '|';
  for (auto s : steps) key << s << ',';
  return runs_.get_or_compute(key.str(), [&] {
    TrainRequest request;
    request.task_id = task_id;
    request.budget = budget;
    request.eval_steps = steps;
    request.init = InitSpec{init.lineage, init.state};
    request.seed = seed;
    auto result = backend_.train(request);
    result.validate(request);
    return result;
  });
}

std::shared_ptr<const TrainResult> Trainer::train(const std::string& task_id, const CheckpointRecord& init,
                                                  std::uint64_t seed) {
  return run(task_id, init, seed, budget_, eval_steps_);
}

std::shared_ptr<const TrainResult> Trainer::probe(const std::string& task_id, const CheckpointRecord& init,
                                                  std::uint64_t seed) {
  static const std::vector<std::int64_t> steps = probe_eval_schedule();
  return run(task_id, init, seed, kProbeStep, steps);
}

std::shared_ptr<const TrainResult> Trainer::baseline_result(const std::string& task_id, std::uint64_t seed) {
  return train(task_id, root_, seed);
}

PerfSummary Trainer::baseline(const std::string& task_id, std::uint64_t seed) {
  return summarize(baseline_result(task_id, seed)->curve, budget_, task_id + "@independent");
}

double Trainer::relative(const std::string& task_id, const LearningCurve& curve, std::uint64_t seed) {
  return relative_perf_auc(summarize(curve, budget_), baseline(task_id, seed), tasks().at(task_id).metric);
}

CheckpointRecord Trainer::checkpoint_after(const std::string& task_id, const CheckpointRecord& init,
                                           std::uint64_t seed) {
  const auto result = train(task_id, init, seed);
  CheckpointRecord record;
  record.lineage = init.lineage;
  record.lineage.push_back(task_id);
  record.checkpoint_id = checkpoint_id_for(record.lineage);
  record.state = std::shared_ptr<const ParameterState>(result, &result->best_state);
  record.best = TaskBest{task_id, best_perf(result->curve, budget_), result->best_step,
                         summarize(result->curve, budget_, record.checkpoint_id)};
  return record;
}

CheckpointRecord Trainer::chain_checkpoint(std::span<const std::string> chain, std::uint64_t seed) {
  CheckpointRecord current = root_;
  for (const auto& task : chain) current = checkpoint_after(task, current, seed);
  return current;
}

Selection IndependentStrategy::select(const Zoo& zoo, const TaskSpec&, Trainer&, std::uint64_t) {
  return Selection{zoo.root().checkpoint_id, {}, 0};
}

const CheckpointRecord& naive_select(const Zoo& zoo) { return zoo.back(); }

Selection NaiveStrategy::select(const Zoo& zoo, const TaskSpec&, Trainer&, std::uint64_t) {
  return Selection{naive_select(zoo).checkpoint_id, {}, 0};
}

LearningCurve charge_probe_cost(const LearningCurve& curve, std::int64_t cost, double anchor_loss,
                                std::int64_t budget) {
  if (cost <= 0) return curve;
  std::vector<LearningCurve::Point> points{{0, anchor_loss}};
  for (const auto& p : curve.points()) {
    if (p.step + cost > budget) break;
    points.push_back({p.step + cost, p.value});
  }
  return LearningCurve(std::move(points), curve.metric_id(), curve.lower_bound());
}

namespace {

[[noreturn]] void rethrow_for_task(const Error& e, const std::string& task_id) {
  std::string_view message = e.what();
  message.remove_prefix(std::min(message.size(), to_string(e.code()).size() + 2));
  throw Error(e.code(), "task '" + task_id + "': " + std::string(message));
}

TaskOutcome make_outcome(const std::string& task_id, const CheckpointRecord& init, const TrainResult& result,
                         Trainer& trainer, std::uint64_t seed, const Selection& selection,
                         const RunOptions& options) {
  TaskOutcome out;
  out.task_id = task_id;
  out.init_checkpoint = init.checkpoint_id;
  out.init_lineage = init.lineage;
  out.curve = result.curve;
  out.scores = selection.scores;
  out.probe_steps = selection.probe_steps;
  if (options.charge_probe_cost && selection.probe_steps > 0) {
    const double anchor = trainer.baseline_result(task_id, seed)->curve.points().front().value;
    out.curve = charge_probe_cost(out.curve, selection.probe_steps, anchor, trainer.budget());
  }
  out.summary = summarize(out.curve, trainer.budget(), task_id + "@" + checkpoint_id_for(init.lineage));
  out.baseline = trainer.baseline(task_id, seed);
  out.relative = relative_perf_auc(out.summary, out.baseline, trainer.tasks().at(task_id).metric);
  return out;
}

}  // namespace

SequenceRun run_sequence(std::span<const std::string> tasks, InitStrategy& strategy, Trainer& trainer,
                         std::uint64_t seed, const RunOptions& options) {
  if (tasks.empty()) throw Error(ErrorCode::empty_input, "empty task sequence");
  SequenceRun run{{tasks.begin(), tasks.end()}, strategy.name(), trainer.budget(), seed,
                  Zoo(trainer.root().state), {}};
  for (const auto& task_id : tasks) {
    try {
      const auto& spec = trainer.tasks().at(task_id);
      const auto selection = strategy.select(run.zoo, spec, trainer, seed);
      const auto& init = run.zoo.at(selection.checkpoint_id);
      const auto result = trainer.train(task_id, init, seed);
      run.outcomes.push_back(make_outcome(task_id, init, *result, trainer, seed, selection, options));
      run.zoo.append(trainer.checkpoint_after(task_id, init, seed));
    } catch (const Error& e) {
      rethrow_for_task(e, task_id);
    }
  }
  return run;
}

OracleResult oracle_search(std::span<const std::string> tasks, Trainer& trainer, std::uint64_t seed,
                           std::size_t max_depth) {
  if (tasks.empty()) throw Error(ErrorCode::empty_input, "empty task sequence");
  const std::size_t n = tasks.size() - 1;
  if (n > max_depth) {
    throw Error(ErrorCode::depth_exceeded, std::to_string(n) + " prior tasks exceed the oracle depth limit " +
                                               std::to_string(max_depth));
  }
  const auto& target = tasks.back();

  std::vector<std::uint32_t> masks(std::size_t{1} << n);
  std::iota(masks.begin(), masks.end(), 0u);
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });

  OracleResult out;
  for (const auto mask : masks) {
    PathScore path;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) path.chain.push_back(tasks[i]);
    }
    if (!path.chain.empty()) {
      try {
        const auto init = trainer.chain_checkpoint(path.chain, seed);
        path.score = trainer.relative(target, trainer.train(target, init, seed)->curve, seed);
      } catch (const Error& e) {
        rethrow_for_task(e, target);
      }
    }
    if (path.score > out.best_score) {
      out.best_score = path.score;
      out.best_chain = path.chain;
    }
    out.paths.push_back(std::move(path));
  }
  return out;
}

SequenceRun run_oracle_sequence(std::span<const std::string> tasks, Trainer& trainer, std::uint64_t seed,
                                const RunOptions& options) {
  if (tasks.empty()) throw Error(ErrorCode::empty_input, "empty task sequence");
  SequenceRun run{{tasks.begin(), tasks.end()}, "oracle", trainer.budget(), seed,
                  Zoo(trainer.root().state), {}};
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& task_id = tasks[i];
    const auto search = oracle_search(tasks.subspan(0, i + 1), trainer, seed, options.max_oracle_depth);
    // Materialise every checkpoint on the chosen chain before selecting it.
    for (std::size_t j = 1; j <= search.best_chain.size(); ++j) {
      const std::span<const std::string> prefix(search.best_chain.data(), j);
      if (!run.zoo.find(checkpoint_id_for(prefix))) run.zoo.append(trainer.chain_checkpoint(prefix, seed));
    }
    const auto& init = run.zoo.at(checkpoint_id_for(search.best_chain));
    Selection selection{init.checkpoint_id, {}, 0};
    for (const auto& p : search.paths) selection.scores.push_back({checkpoint_id_for(p.chain), p.score});
    try {
      const auto result = trainer.train(task_id, init, seed);
      run.outcomes.push_back(make_outcome(task_id, init, *result, trainer, seed, selection, options));
      auto next = trainer.checkpoint_after(task_id, init, seed);
      if (!run.zoo.find(next.checkpoint_id)) run.zoo.append(std::move(next));
    } catch (const Error& e) {
      rethrow_for_task(e, task_id);
    }
  }
  return run;
}

OracleCheckReport fixture_oracle_check(std::span<const TripletResultRow> rows, double tolerance,
                                       const OracleExceptions& exceptions) {
  OracleCheckReport report;
  const auto record = [&](const TripletResultRow& r, const std::string& check, const std::string& detail) {
    OracleViolation v{r.table, r.row, check, detail};
    if (exceptions.contains({r.table, r.row, check})) {
      report.excused.push_back(std::move(v));
    } else {
      report.violations.push_back(std::move(v));
    }
  };
  for (const auto& r : rows) {
    for (double v : {r.a_to_c, r.b_to_c, r.naive, r.selective, r.oracle}) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::schema_mismatch,
                    "fixture row " + r.table + ":" + std::to_string(r.row) + " has a non-finite value");
      }
    }
    ++report.rows_checked;
    const double expected = std::max({0.0, r.a_to_c, r.b_to_c, r.naive});
    if (std::abs(r.oracle - expected) > tolerance) {
      std::ostringstream msg;
      msg << "oracle " << r.oracle << " != max(0, A->C, B->C, naive) = " << expected;
      record(r, "oracle", msg.str());
    }
    const double candidates[] = {0.0, r.a_to_c, r.b_to_c, r.naive};
    const bool selectable = std::any_of(std::begin(candidates), std::end(candidates),
                                        [&](double c) { return std::abs(r.selective - c) <= tolerance; });
    if (!selectable) {
      std::ostringstream msg;
      msg << "selective " << r.selective << " matches none of {0, A->C, B->C, naive}";
      record(r, "selective", msg.str());
    }
  }
  return report;
}

}  // namespace seqft
