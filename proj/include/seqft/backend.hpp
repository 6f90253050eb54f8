#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "seqft/metrics.hpp"
#include "seqft/parameter_state.hpp"
#include "seqft/task.hpp"

namespace seqft {

/// Steps at which the probe features are measured.
inline constexpr std::int64_t kProbeStep = 5;

/// Loss and raw task metric after 0 and 5 updates.
struct Probe {
  double loss0 = 0.0;
  double loss5 = 0.0;
  double metric0 = 0.0;
  double metric5 = 0.0;

  friend bool operator==(const Probe&, const Probe&) = default;
};

struct InitSpec {
  std::vector<std::string> lineage;  // oldest first; empty for the pre-trained root
  std::shared_ptr<const ParameterState> state;
};

struct TrainRequest {
  std::string task_id;
  std::int64_t budget = 0;
  std::vector<std::int64_t> eval_steps;
  InitSpec init;
  std::uint64_t seed = 0;

  /// Checks eval steps against the budget and the required probe steps.
  void validate() const;
};

struct TrainResult {
  LearningCurve curve;
  ParameterState final_state;  // after `budget` updates
  std::int64_t best_step = 0;  // eval step with the lowest loss (latest on ties)
  ParameterState best_state;   // checkpoint kept for the zoo
  Probe probe;

  /// Enforces the result contract for `request`; throws the matching ErrorCode.
  void validate(const TrainRequest& request) const;
};

/// Step 0, the probe step, then `points` log-spaced steps from 1 to budget.
std::vector<std::int64_t> default_eval_schedule(std::int64_t budget, int points = 16);

/// Steps {0, 5} used for probe-only runs.
std::vector<std::int64_t> probe_eval_schedule();

/// Trains task models from a given initialisation.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual TrainResult train(const TrainRequest& request) = 0;
  virtual const ParameterState& root_state() const = 0;
  virtual const TaskRegistry& tasks() const = 0;
};

struct TransferEffect {
  double zero_shot_offset = 0.0;
  double rate_multiplier = 1.0;

  friend bool operator==(const TransferEffect&, const TransferEffect&) = default;
};

/// Pairwise source -> target effects; missing entries are neutral.
class TransferEffectMatrix {
 public:
  explicit TransferEffectMatrix(double lineage_decay = 0.5);

  void set(const std::string& source, const std::string& target, TransferEffect effect);
  TransferEffect at(const std::string& source, const std::string& target) const;
  double lineage_decay() const noexcept { return decay_; }
  const std::map<std::pair<std::string, std::string>, TransferEffect>& entries() const noexcept {
    return entries_;
  }

  /// Decay-weighted composition over a lineage (most recent task weight 1):
  /// offsets add, rate multipliers multiply with exponent decay^k.
  TransferEffect compose(const std::vector<std::string>& lineage, const std::string& target) const;

 private:
  double decay_;
  std::map<std::pair<std::string, std::string>, TransferEffect> entries_;
};

/// Closed-form synthetic learner. Gaussian noise with `noise_sigma` is drawn
/// from a stream keyed by (request seed, task id).
TrainResult synthetic_train(const TrainRequest& request, const TaskSpec& task,
                            const TransferEffectMatrix& effects, double noise_sigma = 0.0);

class SyntheticBackend final : public Backend {
 public:
  SyntheticBackend(TaskRegistry tasks, TransferEffectMatrix effects, ParameterState root,
                   double noise_sigma = 0.0);

  TrainResult train(const TrainRequest& request) override;
  const ParameterState& root_state() const override { return root_; }
  const TaskRegistry& tasks() const override { return tasks_; }
  const TransferEffectMatrix& effects() const noexcept { return effects_; }
  double noise_sigma() const noexcept { return sigma_; }

 private:
  TaskRegistry tasks_;
  TransferEffectMatrix effects_;
  ParameterState root_;
  double sigma_;
};

}  // namespace seqft
