#include <doctest.h>

#include <random>

#include "seqft/error.hpp"
#include "seqft/gbdt.hpp"

using namespace seqft;

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
};

/// Brute force over every feature and every midpoint between distinct sorted
/// values: minimise the summed squared error of the residuals around each
/// side's mean.
Split exhaustive_root_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& residual, int min_leaf) {
  Split best;
  double best_sse = INFINITY;
  const auto n = x.rows();
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::vector<double> values(x.col(f).data(), x.col(f).data() + n);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = (values[k] + values[k + 1]) / 2.0;
      double ls = 0, rs = 0;
      int ln = 0, rn = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (x(i, f) <= t) {
          ls += residual[i];
          ++ln;
        } else {
          rs += residual[i];
          ++rn;
        }
      }
      if (ln < min_leaf || rn < min_leaf) continue;
      const double lm = ls / ln, rm = rs / rn;
      double sse = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = residual[i] - (x(i, f) <= t ? lm : rm);
        sse += d * d;
      }
      if (sse < best_sse - 1e-12) {
        best_sse = sse;
        best = {static_cast<int>(f), t};
      }
    }
  }
  return best;
}

void synthetic_set(int n, Eigen::MatrixXd& x, Eigen::VectorXd& y, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  x.resize(n, 5);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < 5; ++f) x(i, f) = normal(gen);
    const double score = 1.5 * x(i, 1) - x(i, 3) + 0.8 * x(i, 0) * x(i, 2) + 0.7 * normal(gen);
    y[i] = score > 0 ? 1.0 : 0.0;
  }
}

Eigen::MatrixXd column(std::initializer_list<double> values) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) x(i++, 0) = v;
  return x;
}

}  // namespace

TEST_CASE("prior-only model with balanced classes is undecided") {
  const GbdtModel model(3, 0.0, GbdtHyperparams{});
  const Eigen::Vector3d x(1, 2, 3);
  CHECK(model.confidence(x) == 0.5);
  CHECK_FALSE(model.decide(x));
  const Eigen::Vector2d wrong(1, 2);
  CHECK_THROWS_AS(model.confidence(wrong), Error);
}

TEST_CASE("single-class data is refused") {
  const auto x = column({0.1, 0.2, 0.3});
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  try {
    gbdt_fit(x, y);
    FAIL("expected single-class error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::single_class);
  }
}

TEST_CASE("separable 1-D data") {
  const auto x = column({0.05, 0.15, 0.25, 0.35, 0.65, 0.75, 0.85, 0.95});
  Eigen::VectorXd y(8);
  y << 0, 0, 0, 0, 1, 1, 1, 1;
  const auto model = gbdt_fit(x, y);
  for (Eigen::Index i = 0; i < 8; ++i) {
    CHECK(model.decide(x.row(i).transpose()) == (y[i] == 1.0));
  }
  const Eigen::VectorXd residual = y.array() - 0.5;
  const auto oracle = exhaustive_root_split(x, residual, 2);
  REQUIRE(!model.trees().empty());
  CHECK(model.trees()[0].nodes[0].feature == oracle.feature);
  CHECK(model.trees()[0].nodes[0].threshold == doctest::Approx(oracle.threshold).epsilon(1e-12));
  CHECK(oracle.threshold == doctest::Approx(0.5));

  Eigen::Matrix<double, 1, 1> far;
  far << 10.0;
  CHECK(model.confidence(far) > 0.9);

  double previous = 0.0;
  for (int k = 0; k <= 100; ++k) {
    Eigen::Matrix<double, 1, 1> p;
    p << -0.5 + 0.02 * k;
    const double c = model.confidence(p);
    CHECK(c >= previous);
    previous = c;
  }
}

TEST_CASE("contradictory duplicates stay at even odds") {
  const auto x = column({0.5, 0.5, 0.5, 0.5});
  Eigen::VectorXd y(4);
  y << 0, 1, 0, 1;
  const auto model = gbdt_fit(x, y);
  Eigen::Matrix<double, 1, 1> p;
  p << 0.5;
  CHECK(model.confidence(p) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("training loss is non-increasing and the first split matches brute force") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  synthetic_set(200, x, y, 3);
  std::vector<double> trace;
  const auto model = gbdt_fit(x, y, GbdtHyperparams{}, 0, &trace);
  REQUIRE(trace.size() == 101);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
  CHECK(trace.back() < trace.front());
  CHECK(model.logistic_loss(x, y) == doctest::Approx(trace.back()).epsilon(1e-12));

  const double p0 = y.mean();
  const Eigen::VectorXd residual = y.array() - p0;
  const auto oracle = exhaustive_root_split(x, residual, 2);
  CHECK(model.trees()[0].nodes[0].feature == oracle.feature);
  CHECK(model.trees()[0].nodes[0].threshold == doctest::Approx(oracle.threshold).epsilon(1e-12));
  CHECK(model.base_score() == doctest::Approx(std::log(p0 / (1 - p0))));
  for (const auto& t : model.trees()) CHECK(t.depth() <= 3);
}

TEST_CASE("decision and confidence agree at the threshold") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  synthetic_set(60, x, y, 8);
  const auto model = gbdt_fit(x, y, GbdtHyperparams{20, 2, 0.3, 2, 1.0});
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i).transpose();
    CHECK(model.decide(row) == (model.confidence(row) > 0.5));
    CHECK(model.decide(row) == (model.decision(row) > 0.0));
  }
  const auto importance = model.feature_importance();
  CHECK(importance.size() == 5);
  CHECK(std::max_element(importance.begin(), importance.end()) - importance.begin() != 4);
}

TEST_CASE("subsampled fits are reproducible per seed") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  synthetic_set(80, x, y, 2);
  GbdtHyperparams hp;
  hp.subsample = 0.5;
  const auto a = gbdt_fit(x, y, hp, 17);
  const auto b = gbdt_fit(x, y, hp, 17);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("model JSON round-trips confidences bit-exactly") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  synthetic_set(50, x, y, 4);
  auto model = gbdt_fit(x, y, GbdtHyperparams{30, 3, 0.1, 2, 1.0});
  model.set_feature_names({"f0", "f1", "f2", "f3", "f4"});
  const auto text = to_json(model).dump();
  const std::vector<std::string_view> names{"f0", "f1", "f2", "f3", "f4"};
  const auto back = gbdt_from_json(nlohmann::json::parse(text), names);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    CHECK(back.confidence(x.row(i).transpose()) == model.confidence(x.row(i).transpose()));
  }

  const std::vector<std::string_view> reordered{"f1", "f0", "f2", "f3", "f4"};
  try {
    gbdt_from_json(nlohmann::json::parse(text), reordered);
    FAIL("expected manifest mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::manifest_mismatch);
  }

  auto broken = nlohmann::json::parse(text);
  broken["trees"][0]["feature"][0] = 9;
  CHECK_THROWS_AS(gbdt_from_json(broken), Error);
}
