#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seqft/engine.hpp"
#include "seqft/features.hpp"
#include "seqft/gbdt.hpp"

namespace seqft {

/// Scores a candidate checkpoint as an initialisation for a target task.
class Discriminator {
 public:
  virtual ~Discriminator() = default;
  virtual std::string name() const = 0;
  /// Confidence in [0, 1]; > 0.5 means positive transfer is predicted.
  virtual double confidence(const CheckpointRecord& candidate, const TaskSpec& target, Trainer& trainer,
                            std::uint64_t seed) = 0;
  /// Updates spent on probe runs to score `candidates` non-root checkpoints.
  virtual std::int64_t probe_cost(std::size_t candidates) const = 0;
};

/// Confidence of a fitted GBDT over the probe-derived features.
class GbdtDiscriminator final : public Discriminator {
 public:
  explicit GbdtDiscriminator(std::shared_ptr<const GbdtModel> model);

  std::string name() const override { return "gbdt"; }
  double confidence(const CheckpointRecord& candidate, const TaskSpec& target, Trainer& trainer,
                    std::uint64_t seed) override;
  /// One 5-step probe per candidate plus the shared independent probe.
  std::int64_t probe_cost(std::size_t candidates) const override;

 private:
  std::shared_ptr<const GbdtModel> model_;
};

/// Hindsight discriminator: trains the target from the candidate and maps the
/// realised relative PerfAUC r (percent) to logistic(r / scale), so the
/// decision is exactly r > 0. Costs nothing to probe by convention.
class OracleDiscriminator final : public Discriminator {
 public:
  explicit OracleDiscriminator(double scale_percent = 5.0);

  std::string name() const override { return "oracle-labeled"; }
  double confidence(const CheckpointRecord& candidate, const TaskSpec& target, Trainer& trainer,
                    std::uint64_t seed) override;
  std::int64_t probe_cost(std::size_t) const override { return 0; }

 private:
  double scale_;
};

inline constexpr double kSelectionThreshold = 0.5;

/// Scores every non-root checkpoint; returns the most confident one above the
/// threshold (latest wins ties) or the root when none qualifies.
Selection selective_select(const Zoo& zoo, const TaskSpec& target, Discriminator& discriminator,
                           Trainer& trainer, std::uint64_t seed);

class SelectiveStrategy final : public InitStrategy {
 public:
  explicit SelectiveStrategy(std::shared_ptr<Discriminator> discriminator);

  std::string name() const override { return "selective"; }
  Selection select(const Zoo& zoo, const TaskSpec& target, Trainer& trainer, std::uint64_t seed) override;

 private:
  std::shared_ptr<Discriminator> discriminator_;
};

/// A (source, target) pair with its binary transfer label.
struct LabeledPair {
  std::string source;
  std::string target;
  bool positive = false;
};

struct TrainingSet {
  Eigen::MatrixXd features;  // one row per pair, kNumFeatures columns
  Eigen::VectorXd labels;    // 1 positive, 0 negative
  std::vector<LabeledPair> pairs;
};

/// Features of each pair, the candidate being `source` fine-tuned from the root.
TrainingSet build_training_set(std::span<const LabeledPair> pairs, Trainer& trainer, std::uint64_t seed);

/// Fits the selector model and stamps it with the built-in feature manifest.
GbdtModel train_selector(const TrainingSet& data, const GbdtHyperparams& hyperparams = {},
                         std::uint64_t seed = 0, std::vector<double>* loss_trace = nullptr);

/// Loads a selector model, refusing a manifest that differs from feature_names().
GbdtModel load_selector_model(const std::filesystem::path& path);

enum class StrategyKind { independent, naive, selective, oracle };

std::string_view strategy_name(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);

/// Runs one sequence with the given strategy; `discriminator` is required for
/// the selective strategy and ignored otherwise.
SequenceRun run_strategy(StrategyKind kind, std::span<const std::string> tasks, Trainer& trainer,
                         std::uint64_t seed, const RunOptions& options = {},
                         std::shared_ptr<Discriminator> discriminator = nullptr);

}  // namespace seqft
