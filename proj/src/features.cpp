#include "seqft/features.hpp"

#include <algorithm>
#include <cmath>

#include "seqft/error.hpp"

namespace seqft {

const std::array<std::string_view, kNumFeatures>& feature_names() {
  static const std::array<std::string_view, kNumFeatures> names{
      "rel_metric_0shot",        "rel_metric_5shot",        "rel_nll_0shot",
      "rel_nll_5shot",           "weight_max_softmax",      "weight_mean_softmax",
      "weight_max_embedding",    "weight_mean_embedding",   "weight_max_layers_1",
      "weight_mean_layers_1",    "weight_max_layers_2",     "weight_mean_layers_2",
      "weight_max_layers_3",     "weight_mean_layers_3",    "weight_max_layers_4",
      "weight_mean_layers_4",    "update_cosine_softmax",   "update_cosine_embedding",
      "update_cosine_layers_1",  "update_cosine_layers_2",  "update_cosine_layers_3",
      "update_cosine_layers_4",  "same_family_last",        "same_family_any"};
  return names;
}

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace

FeatureVector extract_features(const CheckpointRecord& candidate, const TaskSpec& target,
                               const ProbeSet& probes, const CheckpointRecord& root,
                               const TaskRegistry& registry) {
  if (!probes.candidate || !probes.independent || !probes.independent_state) {
    throw Error(ErrorCode::missing_probe, "features for " + candidate.checkpoint_id + " -> " +
                                              target.task_id + " need both probe runs");
  }
  if (!candidate.state || !root.state) throw Error(ErrorCode::invalid_argument, "checkpoint without state");
  const auto& cand_state = *candidate.state;
  const auto& root_state = *root.state;
  if (!cand_state.same_layout(root_state) || !probes.independent_state->same_layout(root_state)) {
    throw Error(ErrorCode::layout_mismatch, "candidate and root parameter layouts differ");
  }

  FeatureVector f = FeatureVector::Zero();
  const auto& metric = target.metric;
  const auto& c = *probes.candidate;
  const auto& ind = *probes.independent;
  f[0] = metric.to_loss(c.metric0) - metric.to_loss(ind.metric0);
  f[1] = metric.to_loss(c.metric5) - metric.to_loss(ind.metric5);
  f[2] = c.loss0 - ind.loss0;
  f[3] = c.loss5 - ind.loss5;

  for (std::size_t gi = 0; gi < kNumParamGroups; ++gi) {
    const auto g = kParamGroups[gi];
    const Eigen::VectorXd delta = cand_state[g] - root_state[g];
    const Eigen::VectorXd step5 = (*probes.independent_state)[g] - root_state[g];
    if (delta.size() > 0) {
      f[4 + 2 * gi] = delta.cwiseAbs().maxCoeff();
      f[5 + 2 * gi] = delta.cwiseAbs().mean();
    }
    f[16 + gi] = cosine(delta, step5);
  }

  if (!candidate.lineage.empty()) {
    const auto& family = target.family_id;
    f[22] = registry.family_of(candidate.lineage.back()) == family ? 1.0 : 0.0;
    f[23] = std::any_of(candidate.lineage.begin(), candidate.lineage.end(),
                        [&](const std::string& t) { return registry.family_of(t) == family; })
                ? 1.0
                : 0.0;
  }
  return f;
}

ProbeSet collect_probes(const CheckpointRecord& candidate, const TaskSpec& target, Trainer& trainer,
                        std::uint64_t seed) {
  const auto cand = trainer.probe(target.task_id, candidate, seed);
  const auto ind = trainer.probe(target.task_id, trainer.root(), seed);
  return ProbeSet{cand->probe, ind->probe, ind->final_state};
}

}  // namespace seqft
