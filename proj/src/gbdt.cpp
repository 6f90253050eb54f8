#include "seqft/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "seqft/error.hpp"
#include "seqft/rng.hpp"

namespace seqft {

namespace {

constexpr double kHessianFloor = 1e-12;
constexpr double kMinGain = 1e-12;
constexpr int kMaxLineSearchHalvings = 30;

double softplus(double x) noexcept { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& residual, const Eigen::VectorXd& hessian,
              const GbdtHyperparams& hp)
      : x_(x), r_(residual), h_(hessian), hp_(hp) {}

  RegressionTree build(std::vector<Eigen::Index> rows) {
    RegressionTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(RegressionTree& tree, std::vector<Eigen::Index>& rows, int depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    const auto split = depth < hp_.max_depth ? best_split(rows) : SplitChoice{};
    if (split.feature < 0) {
      double sr = 0.0, sh = 0.0;
      for (auto i : rows) {
        sr += r_[i];
        sh += h_[i];
      }
      tree.nodes[index].value = sr / std::max(sh, kHessianFloor);
      return index;
    }

    std::vector<Eigen::Index> left, right;
    for (auto i : rows) (x_(i, split.feature) <= split.threshold ? left : right).push_back(i);
    tree.nodes[index].feature = split.feature;
    tree.nodes[index].threshold = split.threshold;
    tree.nodes[index].gain = split.gain;
    const int l = grow(tree, left, depth + 1);
    const int r = grow(tree, right, depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }

  SplitChoice best_split(const std::vector<Eigen::Index>& rows) const {
    SplitChoice best;
    const auto n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(std::max(1, hp_.min_samples_leaf));
    if (n < 2 * min_leaf) return best;

    double total = 0.0;
    for (auto i : rows) total += r_[i];
    const double parent = total * total / static_cast<double>(n);

    std::vector<Eigen::Index> order(rows);
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return x_(a, f) < x_(b, f) || (x_(a, f) == x_(b, f) && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        left_sum += r_[order[k - 1]];
        const double lo = x_(order[k - 1], f);
        const double hi = x_(order[k], f);
        if (k < min_leaf || n - k < min_leaf || !(lo < hi)) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(k) +
                            right_sum * right_sum / static_cast<double>(n - k) - parent;
        if (gain > best.gain + kMinGain) {
          double threshold = lo + 0.5 * (hi - lo);
          if (!(threshold < hi)) threshold = lo;
          best = SplitChoice{static_cast<int>(f), threshold, gain, k};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& r_;
  const Eigen::VectorXd& h_;
  const GbdtHyperparams& hp_;
};

void check_hyperparams(const GbdtHyperparams& hp) {
  if (hp.n_trees < 0 || hp.max_depth < 0 || hp.min_samples_leaf < 1 || !(hp.learning_rate > 0.0) ||
      !(hp.subsample > 0.0 && hp.subsample <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "invalid GBDT hyperparameters");
  }
}

}  // namespace

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[nodes[i].left] = level[i] + 1;
      level[nodes[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

GbdtModel::GbdtModel(std::size_t n_features, double base_score, GbdtHyperparams hyperparams,
                     std::vector<RegressionTree> trees, std::vector<std::string> feature_names)
    : n_features_(n_features),
      base_score_(base_score),
      hyperparams_(hyperparams),
      trees_(std::move(trees)),
      feature_names_(std::move(feature_names)) {
  if (!feature_names_.empty() && feature_names_.size() != n_features_) {
    throw Error(ErrorCode::feature_mismatch, "feature manifest size differs from model width");
  }
}

void GbdtModel::set_feature_names(std::vector<std::string> names) {
  if (names.size() != n_features_) {
    throw Error(ErrorCode::feature_mismatch, "feature manifest size differs from model width");
  }
  feature_names_ = std::move(names);
}

void GbdtModel::check_width(std::size_t width) const {
  if (width != n_features_) {
    throw Error(ErrorCode::feature_mismatch, "expected " + std::to_string(n_features_) + " features, got " +
                                                 std::to_string(width));
  }
}

std::vector<double> GbdtModel::feature_importance() const {
  std::vector<double> out(n_features_, 0.0);
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes) {
      if (n.feature >= 0) out[static_cast<std::size_t>(n.feature)] += n.gain;
    }
  }
  return out;
}

double GbdtModel::logistic_loss(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels) const {
  Eigen::VectorXd scores(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) scores[i] = decision(features.row(i).transpose());
  return mean_logistic_loss(scores, labels);
}

double mean_logistic_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) total += softplus(scores[i]) - labels[i] * scores[i];
  return scores.size() ? total / static_cast<double>(scores.size()) : 0.0;
}

GbdtModel gbdt_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                   const GbdtHyperparams& hp, std::uint64_t seed, std::vector<double>* loss_trace) {
  check_hyperparams(hp);
  const Eigen::Index n = features.rows();
  if (labels.size() != n) throw Error(ErrorCode::invalid_argument, "feature and label counts differ");
  if (n < 2) throw Error(ErrorCode::empty_input, "need at least two training examples");
  if (!features.allFinite()) throw Error(ErrorCode::non_finite_value, "non-finite training feature");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) throw Error(ErrorCode::invalid_argument, "labels must be 0 or 1");
  }
  const double positive_rate = labels.mean();
  if (positive_rate == 0.0 || positive_rate == 1.0) {
    throw Error(ErrorCode::single_class, "training data contains a single class");
  }

  const double base = std::log(positive_rate / (1.0 - positive_rate));
  Eigen::VectorXd scores = Eigen::VectorXd::Constant(n, base);
  double loss = mean_logistic_loss(scores, labels);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(loss);
  }

  CounterRng rng(derive_seed(seed, "gbdt-subsample"));
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(hp.n_trees));
  Eigen::VectorXd residual(n), hessian(n), update(n);

  for (int round = 0; round < hp.n_trees; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      residual[i] = labels[i] - p;
      hessian[i] = p * (1.0 - p);
    }
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    if (hp.subsample < 1.0) {
      shuffle(rows, rng);
      const auto keep = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::ceil(hp.subsample * static_cast<double>(n))));
      rows.resize(std::min(rows.size(), keep));
      std::sort(rows.begin(), rows.end());
    }

    auto tree = TreeBuilder(features, residual, hessian, hp).build(std::move(rows));
    for (Eigen::Index i = 0; i < n; ++i) update[i] = tree.predict(features.row(i).transpose());

    // Backtracking on the step keeps the training loss monotone.
    double step = 1.0;
    double next_loss = mean_logistic_loss(scores + hp.learning_rate * step * update, labels);
    for (int k = 0; k < kMaxLineSearchHalvings && next_loss > loss; ++k) {
      step *= 0.5;
      next_loss = mean_logistic_loss(scores + hp.learning_rate * step * update, labels);
    }
    if (next_loss > loss) {
      step = 0.0;
      next_loss = loss;
    }
    if (step != 1.0) {
      for (auto& node : tree.nodes) {
        if (node.feature < 0) node.value *= step;
      }
    }
    scores += hp.learning_rate * step * update;
    loss = next_loss;
    if (loss_trace) loss_trace->push_back(loss);
    trees.push_back(std::move(tree));
  }
  return GbdtModel(static_cast<std::size_t>(features.cols()), base, hp, std::move(trees));
}

nlohmann::json to_json(const GbdtModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees()) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   value = nlohmann::json::array(), gain = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      gain.push_back(n.gain);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"value", value},
                     {"gain", gain}});
  }
  const auto& hp = model.hyperparams();
  return {{"format", "seqft-gbdt"},
          {"version", 1},
          {"n_features", model.n_features()},
          {"feature_names", model.feature_names()},
          {"base_score", model.base_score()},
          {"learning_rate", hp.learning_rate},
          {"hyperparams",
           {{"n_trees", hp.n_trees},
            {"max_depth", hp.max_depth},
            {"min_samples_leaf", hp.min_samples_leaf},
            {"subsample", hp.subsample}}},
          {"trees", std::move(trees)}};
}

GbdtModel gbdt_from_json(const nlohmann::json& j, std::span<const std::string_view> expected_features) {
  try {
    if (j.at("format").get<std::string>() != "seqft-gbdt" || j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::schema_mismatch, "not a version-1 seqft GBDT model");
    }
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    const auto width = j.at("n_features").get<std::size_t>();
    if (!expected_features.empty()) {
      const bool same = names.size() == expected_features.size() &&
                        std::equal(names.begin(), names.end(), expected_features.begin());
      if (!same) throw Error(ErrorCode::manifest_mismatch, "model feature manifest differs from the built-in order");
    }

    GbdtHyperparams hp;
    hp.learning_rate = j.at("learning_rate").get<double>();
    const auto& h = j.at("hyperparams");
    hp.n_trees = h.at("n_trees").get<int>();
    hp.max_depth = h.at("max_depth").get<int>();
    hp.min_samples_leaf = h.at("min_samples_leaf").get<int>();
    hp.subsample = h.value("subsample", 1.0);

    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto value = t.at("value").get<std::vector<double>>();
      const auto gain = t.at("gain").get<std::vector<double>>();
      const auto count = feature.size();
      if (count == 0 || threshold.size() != count || left.size() != count || right.size() != count ||
          value.size() != count || gain.size() != count) {
        throw Error(ErrorCode::schema_mismatch, "ragged tree arrays");
      }
      RegressionTree tree;
      for (std::size_t i = 0; i < count; ++i) {
        TreeNode n{feature[i], threshold[i], left[i], right[i], value[i], gain[i]};
        if (n.feature >= static_cast<int>(width)) {
          throw Error(ErrorCode::schema_mismatch, "split feature index out of range");
        }
        if (n.feature >= 0) {
          const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(count); };
          if (!in_range(n.left) || !in_range(n.right)) {
            throw Error(ErrorCode::schema_mismatch, "tree child index out of range");
          }
        } else if (!std::isfinite(n.value)) {
          throw Error(ErrorCode::schema_mismatch, "non-finite leaf value");
        }
        tree.nodes.push_back(n);
      }
      trees.push_back(std::move(tree));
    }
    return GbdtModel(width, j.at("base_score").get<double>(), hp, std::move(trees), names);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad model file: ") + e.what());
  }
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
}

GbdtModel load_model(const std::filesystem::path& path, std::span<const std::string_view> expected_features) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad model file: ") + e.what());
  }
  return gbdt_from_json(j, expected_features);
}

}  // namespace seqft
