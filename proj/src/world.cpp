#include "seqft/world.hpp"

#include <fstream>

#include "seqft/engine.hpp"
#include "seqft/error.hpp"
#include "seqft/rng.hpp"

namespace seqft {

namespace {

using nlohmann::json;

TransferEffect draw_effect(TransferLabel kind, CounterRng& rng) {
  switch (kind) {
    case TransferLabel::positive: return {rng.uniform(-0.25, -0.08), rng.uniform(1.3, 2.5)};
    case TransferLabel::negative: return {rng.uniform(0.08, 0.3), rng.uniform(0.4, 0.8)};
    default: return {rng.uniform(-0.01, 0.01), rng.uniform(0.97, 1.03)};
  }
}

}  // namespace

World generate_world(const WorldOptions& options, std::uint64_t seed) {
  if (options.families == 0 || options.tasks_per_family == 0 || options.group_dim <= 0) {
    throw Error(ErrorCode::invalid_argument, "world needs at least one family, task, and dimension");
  }
  World world;
  world.root = ParameterState::zeros(options.group_dim);
  world.noise_sigma = options.noise_sigma;

  CounterRng rng(derive_seed(seed, "world/tasks"));
  for (std::size_t f = 0; f < options.families; ++f) {
    const std::string family = "family_" + std::to_string(f);
    ParameterState center = ParameterState::zeros(options.group_dim);
    for (auto& g : center.groups) {
      for (auto& v : g) v = rng.normal();
    }
    for (std::size_t t = 0; t < options.tasks_per_family; ++t) {
      SyntheticParams p;
      p.zero_shot_loss = rng.uniform(0.6, 0.95);
      p.asymptote = rng.uniform(0.05, 0.3);
      p.time_constant = rng.uniform(300.0, 3000.0);
      p.optimum = center;
      for (auto& g : p.optimum.groups) {
        for (auto& v : g) v += 0.3 * rng.normal();
      }
      TaskSpec spec{"task_" + std::to_string(f) + "_" + std::to_string(t), family, MetricSpec{}, std::move(p)};
      world.tasks.add(std::move(spec));
    }
  }

  CounterRng effects_rng(derive_seed(seed, "world/effects"));
  for (const auto& s : world.tasks.tasks()) {
    for (const auto& t : world.tasks.tasks()) {
      if (s.task_id == t.task_id) continue;
      const bool same = s.family_id == t.family_id;
      const double pos = same ? options.same_family_positive : options.cross_family_positive;
      const double neg = same ? options.same_family_negative : options.cross_family_negative;
      const double u = effects_rng.uniform();
      const auto kind = u < pos ? TransferLabel::positive : u < pos + neg ? TransferLabel::negative
                                                                          : TransferLabel::neutral;
      world.effects.set(s.task_id, t.task_id, draw_effect(kind, effects_rng));
    }
  }
  return world;
}

std::unique_ptr<SyntheticBackend> make_backend(const World& world) {
  return std::make_unique<SyntheticBackend>(world.tasks, world.effects, world.root, world.noise_sigma);
}

std::vector<std::pair<std::string, std::string>> all_pairs(const TaskRegistry& registry) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : registry.tasks()) {
    for (const auto& t : registry.tasks()) {
      if (s.task_id != t.task_id) out.emplace_back(s.task_id, t.task_id);
    }
  }
  return out;
}

std::vector<TransferRecord> measure_pairs(Backend& backend, std::span<const std::pair<std::string, std::string>> pairs,
                                          std::size_t trials, std::int64_t budget, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::invalid_argument, "need at least one trial");
  Trainer trainer(backend, budget);
  std::vector<TransferRecord> out;
  out.reserve(pairs.size());
  for (const auto& [source, target] : pairs) {
    TransferRecord record{source, target, {}, TransferLabel::unlabeled};
    for (std::size_t k = 0; k < trials; ++k) {
      const auto trial_seed = seed + k;
      const std::string chain[] = {source};
      const auto init = trainer.chain_checkpoint(chain, trial_seed);
      const auto result = trainer.train(target, init, trial_seed);
      record.trials.push_back(100.0 * trainer.relative(target, result->curve, trial_seed));
    }
    record.label = label_pair(record);
    out.push_back(std::move(record));
  }
  return out;
}

json to_json(const World& world) {
  json tasks = json::array();
  for (const auto& t : world.tasks.tasks()) tasks.push_back(to_json(t));
  json effects = json::array();
  for (const auto& [key, e] : world.effects.entries()) {
    effects.push_back({{"source", key.first},
                       {"target", key.second},
                       {"zero_shot_offset", e.zero_shot_offset},
                       {"rate_multiplier", e.rate_multiplier}});
  }
  return {{"version", 1},
          {"kind", "synthetic"},
          {"noise_sigma", world.noise_sigma},
          {"lineage_decay", world.effects.lineage_decay()},
          {"root_state", to_json(world.root)},
          {"tasks", std::move(tasks)},
          {"effects", std::move(effects)}};
}

World world_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != 1 || j.value("kind", std::string("synthetic")) != "synthetic") {
      throw Error(ErrorCode::schema_mismatch, "not a version-1 synthetic world");
    }
    World world;
    world.noise_sigma = j.value("noise_sigma", 0.0);
    world.effects = TransferEffectMatrix(j.value("lineage_decay", 0.5));
    world.root = state_from_json(j.at("root_state"));
    for (const auto& t : j.at("tasks")) {
      auto spec = task_from_json(t);
      if (!spec.synthetic) throw Error(ErrorCode::missing_synthetic_params, "task " + spec.task_id);
      world.tasks.add(std::move(spec));
    }
    for (const auto& e : j.at("effects")) {
      world.effects.set(e.at("source").get<std::string>(), e.at("target").get<std::string>(),
                        TransferEffect{e.at("zero_shot_offset").get<double>(), e.at("rate_multiplier").get<double>()});
    }
    return world;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad world file: ") + e.what());
  }
}

std::unique_ptr<Backend> backend_from_json(const json& j, const std::filesystem::path& base_dir) {
  const auto kind = j.value("kind", std::string("synthetic"));
  if (kind == "synthetic") return make_backend(world_from_json(j));
  if (kind != "external") throw Error(ErrorCode::schema_mismatch, "unknown backend kind '" + kind + "'");
  try {
    TrainerEndpoint endpoint;
    endpoint.command = j.at("command").get<std::vector<std::string>>();
    if (endpoint.command.empty()) throw Error(ErrorCode::schema_mismatch, "empty worker command");
    std::filesystem::path workdir = j.value("workdir", std::string("."));
    endpoint.workdir = workdir.is_absolute() ? workdir : base_dir / workdir;
    endpoint.timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(1000.0 * j.value("timeout_seconds", 60.0)));
    TaskRegistry tasks;
    for (const auto& t : j.at("tasks")) tasks.add(task_from_json(t));
    return std::make_unique<ExternalBackend>(std::move(tasks), std::move(endpoint),
                                             state_from_json(j.at("root_state")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad backend config: ") + e.what());
  }
}

std::unique_ptr<Backend> load_backend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open backend config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad backend config: ") + e.what());
  }
  return backend_from_json(j, path.parent_path());
}

}  // namespace seqft
