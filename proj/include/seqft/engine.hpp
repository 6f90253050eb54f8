#pragma once

#include <cstdint>
#include <deque>
#include <exception>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "seqft/backend.hpp"
#include "seqft/metrics.hpp"

namespace seqft {

inline constexpr std::string_view kRootCheckpointId = "theta0";

/// Thread-safe memo table: concurrent readers, exactly one computation per key.
/// A failed computation is evicted so it can be retried.
template <typename Value>
class MemoCache {
 public:
  using Ptr = std::shared_ptr<const Value>;

  template <typename Compute>
  Ptr get_or_compute(const std::string& key, Compute&& compute) {
    std::promise<Ptr> promise;
    std::shared_future<Ptr> future;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) {
        future = it->second;
      } else {
        future = promise.get_future().share();
        entries_.emplace(key, future);
        owner = true;
      }
    }
    if (owner) {
      try {
        promise.set_value(std::make_shared<const Value>(compute()));
      } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(mutex_);
        entries_.erase(key);
      }
    }
    return future.get();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_future<Ptr>> entries_;
};

struct TaskBest {
  std::string task_id;
  double best_loss = 0.0;
  std::int64_t best_step = 0;
  PerfSummary summary;
};

struct CheckpointRecord {
  std::string checkpoint_id;
  std::vector<std::string> lineage;  // tasks trained through, oldest first
  std::shared_ptr<const ParameterState> state;
  std::optional<TaskBest> best;  // absent for the pre-trained root

  bool is_root() const noexcept { return lineage.empty(); }
};

/// Checkpoint id derived from a lineage ("theta0" for the root).
std::string checkpoint_id_for(std::span<const std::string> lineage);

/// Append-only checkpoint collection rooted at the pre-trained model.
class Zoo {
 public:
  explicit Zoo(std::shared_ptr<const ParameterState> root_state);

  const CheckpointRecord& root() const { return records_.front(); }
  const CheckpointRecord& back() const { return records_.back(); }
  const CheckpointRecord& append(CheckpointRecord record);
  const CheckpointRecord* find(std::string_view checkpoint_id) const;
  const CheckpointRecord& at(std::string_view checkpoint_id) const;
  const std::deque<CheckpointRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

 private:
  std::deque<CheckpointRecord> records_;
};

/// Wraps a backend with memoised training, probing, and independent baselines.
/// Training is keyed by (task, init lineage, seed, budget): the lineage fully
/// determines an init for deterministic backends, so shared chain prefixes are
/// trained once. Safe to share across threads.
class Trainer {
 public:
  Trainer(Backend& backend, std::int64_t budget, std::vector<std::int64_t> eval_steps = {});

  std::shared_ptr<const TrainResult> train(const std::string& task_id, const CheckpointRecord& init,
                                           std::uint64_t seed);
  /// Short run over the probe steps {0, 5}.
  std::shared_ptr<const TrainResult> probe(const std::string& task_id, const CheckpointRecord& init,
                                           std::uint64_t seed);
  /// Independent fine-tuning summary for `task_id` (cached by task, seed, budget).
  PerfSummary baseline(const std::string& task_id, std::uint64_t seed);
  std::shared_ptr<const TrainResult> baseline_result(const std::string& task_id, std::uint64_t seed);

  /// Relative PerfAUC (fraction) of `curve` against the independent baseline.
  double relative(const std::string& task_id, const LearningCurve& curve, std::uint64_t seed);

  /// Checkpoint obtained by training `task_id` from `init`.
  CheckpointRecord checkpoint_after(const std::string& task_id, const CheckpointRecord& init,
                                    std::uint64_t seed);
  /// Checkpoint at the end of a chain of tasks trained from the root.
  CheckpointRecord chain_checkpoint(std::span<const std::string> chain, std::uint64_t seed);

  const CheckpointRecord& root() const noexcept { return root_; }
  Backend& backend() noexcept { return backend_; }
  const TaskRegistry& tasks() const { return backend_.tasks(); }
  std::int64_t budget() const noexcept { return budget_; }
  const std::vector<std::int64_t>& eval_steps() const noexcept { return eval_steps_; }
  std::size_t trainings() const { return runs_.size(); }

 private:
  std::shared_ptr<const TrainResult> run(const std::string& task_id, const CheckpointRecord& init,
                                         std::uint64_t seed, std::int64_t budget,
                                         const std::vector<std::int64_t>& steps);

  Backend& backend_;
  std::int64_t budget_;
  std::vector<std::int64_t> eval_steps_;
  CheckpointRecord root_;
  MemoCache<TrainResult> runs_;
};

struct CandidateScore {
  std::string checkpoint_id;
  double confidence = 0.0;
};

struct Selection {
  std::string checkpoint_id;
  std::vector<CandidateScore> scores;
  std::int64_t probe_steps = 0;  // updates spent on probe runs
};

/// Picks the initialisation for the next task from the zoo.
class InitStrategy {
 public:
  virtual ~InitStrategy() = default;
  virtual std::string name() const = 0;
  virtual Selection select(const Zoo& zoo, const TaskSpec& target, Trainer& trainer,
                           std::uint64_t seed) = 0;
};

class IndependentStrategy final : public InitStrategy {
 public:
  std::string name() const override { return "independent"; }
  Selection select(const Zoo& zoo, const TaskSpec&, Trainer&, std::uint64_t) override;
};

/// Most recently trained checkpoint.
const CheckpointRecord& naive_select(const Zoo& zoo);

class NaiveStrategy final : public InitStrategy {
 public:
  std::string name() const override { return "naive"; }
  Selection select(const Zoo& zoo, const TaskSpec&, Trainer&, std::uint64_t) override;
};

struct TaskOutcome {
  std::string task_id;
  std::string init_checkpoint;
  std::vector<std::string> init_lineage;
  LearningCurve curve;
  PerfSummary summary;
  PerfSummary baseline;
  double relative = 0.0;  // fraction; reports print percent
  std::vector<CandidateScore> scores;
  std::int64_t probe_steps = 0;
};

struct SequenceRun {
  std::vector<std::string> tasks;
  std::string strategy;
  std::int64_t budget = 0;
  std::uint64_t seed = 0;
  Zoo zoo;
  std::vector<TaskOutcome> outcomes;
};

struct RunOptions {
  /// Charge probe updates against the task: the curve is shifted right by the
  /// probe cost and the gap is filled with the root's zero-shot loss.
  bool charge_probe_cost = false;
  std::size_t max_oracle_depth = 4;
};

/// Sequential fine-tuning: select an init, train, keep the best checkpoint.
SequenceRun run_sequence(std::span<const std::string> tasks, InitStrategy& strategy, Trainer& trainer,
                         std::uint64_t seed, const RunOptions& options = {});

struct PathScore {
  std::vector<std::string> chain;  // prior tasks on the init chain, in sequence order
  double score = 0.0;
};

struct OracleResult {
  std::vector<std::string> best_chain;
  double best_score = 0.0;
  std::vector<PathScore> paths;
};

/// Exhaustive search over all 2^n init chains for the last task of `tasks`;
/// ties prefer the shorter chain. The empty chain scores 0 by definition.
OracleResult oracle_search(std::span<const std::string> tasks, Trainer& trainer, std::uint64_t seed,
                           std::size_t max_depth = 4);

/// Runs every task of the sequence with its hindsight-optimal chain.
SequenceRun run_oracle_sequence(std::span<const std::string> tasks, Trainer& trainer,
                                std::uint64_t seed, const RunOptions& options = {});

/// Shifts a curve right by `cost` updates; the root's zero-shot loss holds
/// until the shifted curve starts.
LearningCurve charge_probe_cost(const LearningCurve& curve, std::int64_t cost, double anchor_loss,
                                std::int64_t budget);

/// One published triplet result (values in percent).
struct TripletResultRow {
  std::string table;
  int row = 0;
  double a_to_c = 0.0;
  double b_to_c = 0.0;
  double naive = 0.0;
  double selective = 0.0;
  double oracle = 0.0;
  std::string config;
};

struct OracleViolation {
  std::string table;
  int row = 0;
  std::string check;  // "oracle" or "selective"
  std::string detail;
};

struct OracleCheckReport {
  std::size_t rows_checked = 0;
  std::vector<OracleViolation> violations;
  std::vector<OracleViolation> excused;

  bool ok() const noexcept { return violations.empty(); }
};

/// (table, row, check) triples exempt from the oracle check.
using OracleExceptions = std::set<std::tuple<std::string, int, std::string>>;

/// oracle == max(0, A->C, B->C, naive) and selective in {0, A->C, B->C, naive}.
OracleCheckReport fixture_oracle_check(std::span<const TripletResultRow> rows, double tolerance = 0.005,
                                       const OracleExceptions& exceptions = {});

}  // namespace seqft
