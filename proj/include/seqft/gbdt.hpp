#pragma once

// Gradient-boosted regression trees for binary classification (logistic
// loss). Splits minimise the squared error of the pseudo-residuals; leaves take
// a Newton step; every round is line-searched so the training loss never rises.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace seqft {

struct GbdtHyperparams {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 2;
  double subsample = 1.0;  // row fraction per round; < 1 draws from the fit seed
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // squared-error reduction of the split
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  template <typename Derived>
  double predict(const Eigen::MatrixBase<Derived>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0) {
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].value;
  }

  std::size_t depth() const;
};

class GbdtModel {
 public:
  GbdtModel() = default;
  GbdtModel(std::size_t n_features, double base_score, GbdtHyperparams hyperparams,
            std::vector<RegressionTree> trees = {}, std::vector<std::string> feature_names = {});

  /// base_score + learning_rate * sum of tree outputs.
  template <typename Derived>
  double decision(const Eigen::MatrixBase<Derived>& x) const {
    check_width(static_cast<std::size_t>(x.size()));
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return base_score_ + hyperparams_.learning_rate * sum;
  }

  /// Logistic of the decision function, in (0, 1).
  template <typename Derived>
  double confidence(const Eigen::MatrixBase<Derived>& x) const {
    return 1.0 / (1.0 + std::exp(-decision(x)));
  }

  /// Binarised discriminator: confidence strictly above 0.5.
  template <typename Derived>
  bool decide(const Eigen::MatrixBase<Derived>& x) const {
    return confidence(x) > 0.5;
  }

  std::size_t n_features() const noexcept { return n_features_; }
  double base_score() const noexcept { return base_score_; }
  double learning_rate() const noexcept { return hyperparams_.learning_rate; }
  const GbdtHyperparams& hyperparams() const noexcept { return hyperparams_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  void set_feature_names(std::vector<std::string> names);

  /// Summed split gain per feature.
  std::vector<double> feature_importance() const;

  /// Mean logistic loss of the model over a labelled set.
  double logistic_loss(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels) const;

 private:
  void check_width(std::size_t width) const;

  std::size_t n_features_ = 0;
  double base_score_ = 0.0;
  GbdtHyperparams hyperparams_;
  std::vector<RegressionTree> trees_;
  std::vector<std::string> feature_names_;
};

/// Fits a model on rows of `features` with 0/1 `labels`. `loss_trace`, when
/// given, receives the training loss before the first round and after each.
GbdtModel gbdt_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                   const GbdtHyperparams& hyperparams = {}, std::uint64_t seed = 0,
                   std::vector<double>* loss_trace = nullptr);

/// Mean logistic loss for raw scores against 0/1 labels.
double mean_logistic_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

/// Versioned JSON with a feature-name manifest.
nlohmann::json to_json(const GbdtModel& model);

/// Parses a model; refuses it unless its manifest equals `expected_features`
/// (skipped when `expected_features` is empty).
GbdtModel gbdt_from_json(const nlohmann::json& j,
                         std::span<const std::string_view> expected_features = {});

void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path,
                     std::span<const std::string_view> expected_features = {});

}  // namespace seqft
