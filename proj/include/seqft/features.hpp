#pragma once

#include <array>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "seqft/backend.hpp"
#include "seqft/engine.hpp"

namespace seqft {

inline constexpr std::size_t kNumFeatures = 24;

using FeatureVector = Eigen::Matrix<double, kNumFeatures, 1>;

/// Fixed feature order:
///   0-3   relative 0/5-shot metric and loss (candidate init minus independent init)
///   4-15  max / mean absolute weight change from the root, per parameter group
///   16-21 cosine between the candidate's total update and the independent
///         5-step update, per parameter group
///   22-23 candidate's last / any lineage task shares the target's family
const std::array<std::string_view, kNumFeatures>& feature_names();

/// Probe runs on the target task from the candidate and from the root.
struct ProbeSet {
  std::optional<Probe> candidate;
  std::optional<Probe> independent;
  std::optional<ParameterState> independent_state;  // root after 5 target updates
};

FeatureVector extract_features(const CheckpointRecord& candidate, const TaskSpec& target,
                               const ProbeSet& probes, const CheckpointRecord& root,
                               const TaskRegistry& registry);

/// Runs (or fetches memoised) probe runs for `candidate` on `target`.
ProbeSet collect_probes(const CheckpointRecord& candidate, const TaskSpec& target, Trainer& trainer,
                        std::uint64_t seed);

}  // namespace seqft
