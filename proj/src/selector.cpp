#include "seqft/selector.hpp"

#include <cmath>

#include "seqft/error.hpp"

namespace seqft {

GbdtDiscriminator::GbdtDiscriminator(std::shared_ptr<const GbdtModel> model) : model_(std::move(model)) {
  if (!model_) throw Error(ErrorCode::invalid_argument, "GBDT discriminator needs a model");
  if (model_->n_features() != kNumFeatures) {
    throw Error(ErrorCode::feature_mismatch, "selector model must take " + std::to_string(kNumFeatures) +
                                                 " features");
  }
}

double GbdtDiscriminator::confidence(const CheckpointRecord& candidate, const TaskSpec& target,
                                     Trainer& trainer, std::uint64_t seed) {
  const auto probes = collect_probes(candidate, target, trainer, seed);
  return model_->confidence(extract_features(candidate, target, probes, trainer.root(), trainer.tasks()));
}

std::int64_t GbdtDiscriminator::probe_cost(std::size_t candidates) const {
  return candidates == 0 ? 0 : kProbeStep * static_cast<std::int64_t>(candidates + 1);
}

OracleDiscriminator::OracleDiscriminator(double scale_percent) : scale_(scale_percent) {
  if (!(scale_ > 0.0)) throw Error(ErrorCode::invalid_argument, "oracle confidence scale must be positive");
}

double OracleDiscriminator::confidence(const CheckpointRecord& candidate, const TaskSpec& target,
                                       Trainer& trainer, std::uint64_t seed) {
  const auto result = trainer.train(target.task_id, candidate, seed);
  const double rel_percent = 100.0 * trainer.relative(target.task_id, result->curve, seed);
  return 1.0 / (1.0 + std::exp(-rel_percent / scale_));
}

Selection selective_select(const Zoo& zoo, const TaskSpec& target, Discriminator& discriminator,
                           Trainer& trainer, std::uint64_t seed) {
  Selection out{std::string(kRootCheckpointId), {}, 0};
  double best = kSelectionThreshold;
  std::size_t candidates = 0;
  for (const auto& record : zoo.records()) {
    if (record.is_root()) continue;
    ++candidates;
    const double c = discriminator.confidence(record, target, trainer, seed);
    out.scores.push_back({record.checkpoint_id, c});
    if (c > kSelectionThreshold && c >= best) {
      best = c;
      out.checkpoint_id = record.checkpoint_id;
    }
  }
  out.probe_steps = discriminator.probe_cost(candidates);
  return out;
}

SelectiveStrategy::SelectiveStrategy(std::shared_ptr<Discriminator> discriminator)
    : discriminator_(std::move(discriminator)) {
  if (!discriminator_) throw Error(ErrorCode::invalid_argument, "selective strategy needs a discriminator");
}

Selection SelectiveStrategy::select(const Zoo& zoo, const TaskSpec& target, Trainer& trainer,
                                    std::uint64_t seed) {
  return selective_select(zoo, target, *discriminator_, trainer, seed);
}

TrainingSet build_training_set(std::span<const LabeledPair> pairs, Trainer& trainer, std::uint64_t seed) {
  TrainingSet out;
  out.features.resize(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(kNumFeatures));
  out.labels.resize(static_cast<Eigen::Index>(pairs.size()));
  Eigen::Index row = 0;
  for (const auto& pair : pairs) {
    const auto& target = trainer.tasks().at(pair.target);
    const std::string chain[] = {pair.source};
    const auto candidate = trainer.chain_checkpoint(chain, seed);
    const auto probes = collect_probes(candidate, target, trainer, seed);
    out.features.row(row) = extract_features(candidate, target, probes, trainer.root(), trainer.tasks()).transpose();
    out.labels[row] = pair.positive ? 1.0 : 0.0;
    out.pairs.push_back(pair);
    ++row;
  }
  return out;
}

GbdtModel train_selector(const TrainingSet& data, const GbdtHyperparams& hyperparams, std::uint64_t seed,
                         std::vector<double>* loss_trace) {
  if (data.features.cols() != static_cast<Eigen::Index>(kNumFeatures)) {
    throw Error(ErrorCode::feature_mismatch, "training set has the wrong feature width");
  }
  auto model = gbdt_fit(data.features, data.labels, hyperparams, seed, loss_trace);
  const auto& names = feature_names();
  model.set_feature_names({names.begin(), names.end()});
  return model;
}

GbdtModel load_selector_model(const std::filesystem::path& path) {
  const auto& names = feature_names();
  return load_model(path, std::span<const std::string_view>(names.data(), names.size()));
}

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::independent: return "independent";
    case StrategyKind::naive: return "naive";
    case StrategyKind::selective: return "selective";
    case StrategyKind::oracle: return "oracle";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::independent, StrategyKind::naive, StrategyKind::selective, StrategyKind::oracle}) {
    if (strategy_name(k) == name) return k;
  }
  throw Error(ErrorCode::invalid_argument, "unknown strategy '" + std::string(name) + "'");
}

SequenceRun run_strategy(StrategyKind kind, std::span<const std::string> tasks, Trainer& trainer,
                         std::uint64_t seed, const RunOptions& options,
                         std::shared_ptr<Discriminator> discriminator) {
  switch (kind) {
    case StrategyKind::independent: {
      IndependentStrategy s;
      return run_sequence(tasks, s, trainer, seed, options);
    }
    case StrategyKind::naive: {
      NaiveStrategy s;
      return run_sequence(tasks, s, trainer, seed, options);
    }
    case StrategyKind::selective: {
      SelectiveStrategy s(std::move(discriminator));
      return run_sequence(tasks, s, trainer, seed, options);
    }
    case StrategyKind::oracle:
      return run_oracle_sequence(tasks, trainer, seed, options);
  }
  throw Error(ErrorCode::invalid_argument, "unknown strategy");
}

}  // namespace seqft
