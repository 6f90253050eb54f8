#include <doctest.h>

#include <atomic>
#include <thread>

#include "helpers.hpp"
#include "seqft/engine.hpp"
#include "seqft/selector.hpp"

using namespace seqft;
using seqft::testing::ToyWorld;

namespace {

const std::vector<std::string> kTriplet{"A", "B", "C"};

}  // namespace

TEST_CASE("memo cache computes each key once under contention") {
  MemoCache<int> cache;
  std::atomic<int> calls{0};
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 50; ++k) {
        const auto v = cache.get_or_compute("key" + std::to_string(k % 5), [&] {
          ++calls;
          std::this_thread::yield();
          return k % 5;
        });
        CHECK(*v >= 0);
      }
    });
  }
  threads.clear();
  CHECK(calls == 5);
  CHECK(cache.size() == 5);
}

TEST_CASE("memo cache evicts failed computations") {
  MemoCache<int> cache;
  CHECK_THROWS(cache.get_or_compute("k", []() -> int { throw std::runtime_error("boom"); }));
  CHECK(cache.size() == 0);
  CHECK(*cache.get_or_compute("k", [] { return 7; }) == 7);
}

TEST_CASE("zoo is rooted and append-only") {
  Zoo zoo(std::make_shared<const ParameterState>(ParameterState::zeros(2)));
  CHECK(zoo.root().checkpoint_id == "theta0");
  CHECK(naive_select(zoo).checkpoint_id == "theta0");
  CHECK_THROWS_AS(zoo.append(CheckpointRecord{"x", {}, zoo.root().state, std::nullopt}), Error);
  zoo.append(CheckpointRecord{"A", {"A"}, zoo.root().state, std::nullopt});
  CHECK(naive_select(zoo).checkpoint_id == "A");
  zoo.append(CheckpointRecord{"A>B", {"A", "B"}, zoo.root().state, std::nullopt});
  CHECK(naive_select(zoo).checkpoint_id == "A>B");
  try {
    zoo.at("nope");
    FAIL("expected unknown checkpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_checkpoint);
  }
}

TEST_CASE("a single task starts from the root under every strategy") {
  ToyWorld w;
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  const std::vector<std::string> one{"C"};
  for (auto kind : {StrategyKind::independent, StrategyKind::naive, StrategyKind::oracle}) {
    const auto run = run_strategy(kind, one, trainer, 1);
    REQUIRE(run.outcomes.size() == 1);
    CHECK(run.outcomes[0].init_checkpoint == "theta0");
    CHECK(run.outcomes[0].relative == 0.0);
  }
}

TEST_CASE("naive chaining follows the transfer effects") {
  ToyWorld w;
  w.effects.set("B", "C", {0.001, 1.0});  // B neutral for C
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  NaiveStrategy naive;
  const auto run = run_sequence(kTriplet, naive, trainer, 1);
  CHECK(run.outcomes[2].init_checkpoint == "A>B");
  CHECK(run.outcomes[2].relative > 0.0);
  CHECK(run.zoo.size() == 4);

  ToyWorld bad;
  bad.effects.set("A", "C", {0.2, 0.6});
  auto bad_backend = bad.backend();
  Trainer bad_trainer(*bad_backend, 10000);
  CHECK(run_sequence(kTriplet, naive, bad_trainer, 1).outcomes[2].relative < 0.0);
}

TEST_CASE("independent strategy equals the baseline") {
  ToyWorld w;
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  IndependentStrategy independent;
  for (const auto& o : run_sequence(kTriplet, independent, trainer, 2).outcomes) CHECK(o.relative == 0.0);
}

TEST_CASE("oracle search enumerates all chains") {
  ToyWorld w;
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  const auto result = oracle_search(kTriplet, trainer, 1);
  REQUIRE(result.paths.size() == 4);
  CHECK(result.paths[0].chain.empty());
  CHECK(result.paths[0].score == 0.0);
  CHECK(result.paths[1].chain == std::vector<std::string>{"A"});
  CHECK(result.paths[2].chain == std::vector<std::string>{"B"});
  CHECK(result.paths[3].chain == std::vector<std::string>{"A", "B"});
  CHECK(result.best_chain == std::vector<std::string>{"A"});
  double best = 0.0;
  for (const auto& p : result.paths) best = std::max(best, p.score);
  CHECK(result.best_score == best);
}

TEST_CASE("oracle falls back to the root when every chain hurts") {
  ToyWorld w;
  w.effects.set("A", "C", {0.2, 0.6});
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  const auto result = oracle_search(kTriplet, trainer, 1);
  CHECK(result.best_chain.empty());
  CHECK(result.best_score == 0.0);
  const auto run = run_oracle_sequence(kTriplet, trainer, 1);
  CHECK(run.outcomes[2].relative == 0.0);
  CHECK(run.outcomes[2].init_checkpoint == "theta0");
}

TEST_CASE("oracle search refuses deep sequences") {
  ToyWorld w;
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  const std::vector<std::string> deep{"A", "B", "A", "B", "A", "C"};
  try {
    oracle_search(deep, trainer, 1);
    FAIL("expected depth error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::depth_exceeded);
  }
}

TEST_CASE("oracle sequence inits exist in the zoo and dominate naive") {
  ToyWorld w;
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  const auto oracle = run_oracle_sequence(kTriplet, trainer, 3);
  for (const auto& o : oracle.outcomes) CHECK(oracle.zoo.find(o.init_checkpoint) != nullptr);
  NaiveStrategy naive;
  const auto n = run_sequence(kTriplet, naive, trainer, 3);
  for (std::size_t i = 0; i < kTriplet.size(); ++i) {
    CHECK(oracle.outcomes[i].relative >= std::max(0.0, n.outcomes[i].relative));
  }
}

TEST_CASE("trainer memoises shared chain prefixes") {
  ToyWorld w;
  auto backend = w.backend();
  Trainer trainer(*backend, 10000);
  oracle_search(kTriplet, trainer, 1);
  const auto after_search = trainer.trainings();
  NaiveStrategy naive;
  run_sequence(kTriplet, naive, trainer, 1);
  CHECK(trainer.trainings() == after_search);
}

TEST_CASE("concurrent sequences on one trainer match serial runs") {
  ToyWorld w;
  auto backend = w.backend(0.01);
  Trainer shared(*backend, 10000);
  std::vector<double> parallel(8);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < parallel.size(); ++i) {
      threads.emplace_back([&, i] { parallel[i] = run_oracle_sequence(kTriplet, shared, i % 2).outcomes[2].relative; });
    }
  }
  for (std::size_t i = 0; i < parallel.size(); ++i) {
    Trainer fresh(*backend, 10000);
    CHECK(parallel[i] == run_oracle_sequence(kTriplet, fresh, i % 2).outcomes[2].relative);
  }
}

TEST_CASE("probe cost charging shifts the curve") {
  const LearningCurve c({{0, 0.8}, {5, 0.7}, {100, 0.4}, {10000, 0.2}});
  const auto charged = charge_probe_cost(c, 15, 0.9, 10000);
  CHECK(charged.points().front().step == 0);
  CHECK(charged.points().front().value == 0.9);
  CHECK(charged.points()[1].step == 15);
  CHECK(charged.points().back().step == 115);
  CHECK(perf_auc(charged, 10000) > perf_auc(c, 10000));
  CHECK(charge_probe_cost(c, 0, 0.9, 10000) == c);
}

TEST_CASE("fixture oracle check on published rows") {
  const std::vector<TripletResultRow> rows{
      {"c1", 1, 43.31, 22.52, 56.97, 43.31, 56.97, "positive/positive"},
      {"c4", 3, -17.00, 17.00, 5.67, 0.00, 17.00, "negative/positive"},
      {"c6", 1, -17.00, -12.78, -17.39, -12.78, 0.00, "negative/neutral"},
      {"c2", 9, 14.07, -17.00, -1.44, 0.00, 14.07, "positive/negative"},
  };
  const auto report = fixture_oracle_check(rows);
  CHECK(report.ok());
  CHECK(report.rows_checked == 4);

  auto perturbed = rows;
  perturbed[1].oracle = 16.0;
  perturbed[2].selective = -5.0;
  const auto bad = fixture_oracle_check(perturbed);
  REQUIRE(bad.violations.size() == 2);
  CHECK(bad.violations[0].table == "c4");
  CHECK(bad.violations[0].row == 3);
  CHECK(bad.violations[1].check == "selective");

  const auto excused = fixture_oracle_check(perturbed, 0.005, {{"c4", 3, "oracle"}});
  CHECK(excused.violations.size() == 1);
  CHECK(excused.excused.size() == 1);
}
