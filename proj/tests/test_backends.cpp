#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "seqft/backend.hpp"
#include "seqft/parameter_state.hpp"

using namespace seqft;
using seqft::testing::ToyWorld;

namespace {

TrainRequest request_for(const std::string& task, std::vector<std::string> lineage,
                         std::shared_ptr<const ParameterState> state, std::int64_t budget = 10000,
                         std::uint64_t seed = 1) {
  TrainRequest r;
  r.task_id = task;
  r.budget = budget;
  r.eval_steps = default_eval_schedule(budget);
  r.init = InitSpec{std::move(lineage), std::move(state)};
  r.seed = seed;
  return r;
}

/// Independent closed-form learner for a single-source lineage.
std::vector<std::pair<std::int64_t, double>> expected_curve(const SyntheticParams& p, TransferEffect e,
                                                            const std::vector<std::int64_t>& steps) {
  std::vector<std::pair<std::int64_t, double>> out;
  const double start = std::max(p.zero_shot_loss + e.zero_shot_offset, p.asymptote);
  for (auto s : steps) {
    out.emplace_back(s, p.asymptote + (start - p.asymptote) * std::exp(-s * e.rate_multiplier / p.time_constant));
  }
  return out;
}

double relative_from(const std::vector<std::pair<std::int64_t, double>>& method,
                     const std::vector<std::pair<std::int64_t, double>>& baseline, std::int64_t budget) {
  const double m = testing::numeric_perf_auc(method, budget);
  const double b = testing::numeric_perf_auc(baseline, budget);
  return (b - m) / b;
}

}  // namespace

TEST_CASE("default eval schedule covers 0, the probe step and the budget") {
  const auto steps = default_eval_schedule(10000);
  CHECK(steps.front() == 0);
  CHECK(std::binary_search(steps.begin(), steps.end(), kProbeStep));
  CHECK(steps.back() == 10000);
  CHECK(std::adjacent_find(steps.begin(), steps.end(), std::greater_equal<>()) == steps.end());
  CHECK_THROWS_AS(default_eval_schedule(4), Error);
  CHECK(probe_eval_schedule() == std::vector<std::int64_t>{0, 5});
}

TEST_CASE("train requests are validated") {
  ToyWorld w;
  auto root = std::make_shared<const ParameterState>(w.root);
  auto r = request_for("C", {}, root);
  r.eval_steps = {0, 10, 100};
  try {
    r.validate();
    FAIL("expected missing probe step");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::eval_step_mismatch);
  }
  r.eval_steps = {0, 5, 20000};
  CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("neutral init converges to the asymptote") {
  ToyWorld w;
  auto backend = w.backend();
  auto root = std::make_shared<const ParameterState>(w.root);
  TrainRequest r = request_for("C", {}, root, 100000);
  const auto result = backend->train(r);
  CHECK(result.curve.points().back().value == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(result.curve.points().front().value == doctest::Approx(0.9));
  CHECK(result.best_step == 100000);
  CHECK(result.final_state.squared_distance(w.tasks.at("C").synthetic->optimum) < 1e-20);
}

TEST_CASE("synthetic curves match the closed form and transfer signs") {
  ToyWorld w;
  auto backend = w.backend();
  auto root = std::make_shared<const ParameterState>(w.root);
  const auto& p = *w.tasks.at("C").synthetic;
  const auto steps = default_eval_schedule(10000);

  const auto baseline = backend->train(request_for("C", {}, root));
  const auto from_a = backend->train(request_for("C", {"A"}, root));
  const auto from_b = backend->train(request_for("C", {"B"}, root));

  const auto exp_base = expected_curve(p, {}, steps);
  const auto exp_a = expected_curve(p, {-0.2, 2.0}, steps);
  const auto exp_b = expected_curve(p, {0.3, 0.5}, steps);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(baseline.curve.points()[i].value == doctest::Approx(exp_base[i].second).epsilon(1e-14));
    CHECK(from_a.curve.points()[i].value == doctest::Approx(exp_a[i].second).epsilon(1e-14));
    CHECK(from_b.curve.points()[i].value == doctest::Approx(exp_b[i].second).epsilon(1e-14));
  }
  MetricSpec spec;
  const auto base = summarize(baseline.curve, 10000);
  const double rel_a = relative_perf_auc(summarize(from_a.curve, 10000), base, spec);
  const double rel_b = relative_perf_auc(summarize(from_b.curve, 10000), base, spec);
  CHECK(rel_a > 0.0);
  CHECK(rel_b < 0.0);
  CHECK(rel_a == doctest::Approx(relative_from(exp_a, exp_base, 10000)).epsilon(1e-3));
  CHECK(rel_b == doctest::Approx(relative_from(exp_b, exp_base, 10000)).epsilon(1e-3));
}

TEST_CASE("lineage effects compose with geometric decay") {
  ToyWorld w;
  const auto e = w.effects.compose({"A", "B"}, "C");
  CHECK(e.zero_shot_offset == doctest::Approx(0.3 + 0.5 * -0.2));
  CHECK(e.rate_multiplier == doctest::Approx(0.5 * std::sqrt(2.0)));
  const auto neutral = w.effects.compose({}, "C");
  CHECK(neutral.zero_shot_offset == 0.0);
  CHECK(neutral.rate_multiplier == 1.0);
  CHECK(w.effects.at("C", "A") == TransferEffect{});
}

TEST_CASE("zero-shot loss never starts below the asymptote") {
  TaskRegistry tasks;
  tasks.add(testing::synthetic_task("S", "f", 0.3, 0.25));
  tasks.add(testing::synthetic_task("T", "f", 0.5, 0.2));
  TransferEffectMatrix effects;
  effects.set("S", "T", {-0.6, 1.0});
  SyntheticBackend backend(tasks, effects, ParameterState::zeros(4));
  const auto r = backend.train(request_for("T", {"S"}, std::make_shared<const ParameterState>(ParameterState::zeros(4))));
  CHECK(r.curve.points().front().value == doctest::Approx(0.2));
}

TEST_CASE("noise is keyed by seed and task, not by lineage") {
  ToyWorld w;
  auto clean = w.backend(0.0);
  auto noisy = w.backend(0.01);
  auto root = std::make_shared<const ParameterState>(w.root);
  for (const std::vector<std::string> lineage : {std::vector<std::string>{}, {"A"}, {"B"}, {"A", "B"}}) {
    const auto c = clean->train(request_for("C", lineage, root, 10000, 3));
    const auto n = noisy->train(request_for("C", lineage, root, 10000, 3));
    const auto c0 = clean->train(request_for("C", {}, root, 10000, 3));
    const auto n0 = noisy->train(request_for("C", {}, root, 10000, 3));
    for (std::size_t i = 0; i < c.curve.size(); ++i) {
      const double d = n.curve.points()[i].value - c.curve.points()[i].value;
      const double d0 = n0.curve.points()[i].value - c0.curve.points()[i].value;
      CHECK(d == doctest::Approx(d0).epsilon(1e-12));
    }
  }
  const auto s1 = noisy->train(request_for("C", {}, root, 10000, 1));
  const auto s2 = noisy->train(request_for("C", {}, root, 10000, 2));
  CHECK(s1.curve != s2.curve);
}

TEST_CASE("states move toward the optimum and keep their layout") {
  ToyWorld w;
  auto backend = w.backend();
  auto root = std::make_shared<const ParameterState>(w.root);
  const auto r = backend->train(request_for("A", {}, root, 500));
  const auto& opt = w.tasks.at("A").synthetic->optimum;
  CHECK(r.final_state.same_layout(w.root));
  CHECK(r.final_state.squared_distance(opt) < w.root.squared_distance(opt));
  CHECK(r.best_state == r.final_state);  // loss decreases monotonically without noise
  CHECK(r.probe.loss0 == doctest::Approx(0.85));
}

TEST_CASE("state files round-trip bit-exactly") {
  ParameterState s = ParameterState::zeros(3);
  s[ParamGroup::softmax] << 0.1, 1.0 / 3.0, -2.5e-300;
  s[ParamGroup::layers_4] << std::nextafter(1.0, 2.0), -0.0, 1e308;
  s[ParamGroup::embedding].resize(5);
  s[ParamGroup::embedding].setLinSpaced(5, -1.0, 1.0);
  const auto path = std::filesystem::temp_directory_path() / "seqft_state_roundtrip.state";
  write_state(s, path);
  const auto back = read_state(path);
  CHECK(back == s);
  CHECK(std::signbit(back[ParamGroup::layers_4][1]));
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("seqft-state") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("state file corruption is detected") {
  const auto path = std::filesystem::temp_directory_path() / "seqft_state_truncated.state";
  write_state(ParameterState::zeros(4), path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_AS(read_state(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("task registry lookups") {
  ToyWorld w;
  CHECK(w.tasks.family_of("A") == "f1");
  CHECK(w.tasks.families() == std::vector<std::string>{"f1", "f2"});
  CHECK(w.tasks.members("f1") == std::vector<std::string>{"A", "C"});
  try {
    w.tasks.at("Z");
    FAIL("expected unknown task");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_task);
  }
  const auto j = to_json(w.tasks.at("A"));
  const auto back = task_from_json(j);
  CHECK(back.task_id == "A");
  CHECK(back.synthetic->optimum == w.tasks.at("A").synthetic->optimum);
  CHECK(metric_for_name("accuracy").orientation == Orientation::higher_is_better);
}
