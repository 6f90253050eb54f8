#include "seqft/report.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "seqft/error.hpp"

namespace seqft {

namespace {

using nlohmann::json;

std::string curve_ref(std::size_t triplet, std::string_view strategy) {
  return std::to_string(triplet) + "/" + std::string(strategy);
}

/// Pairwise A->C and B->C relative PerfAUC (percent) at the run seed.
std::pair<double, double> pairwise(const TripletSpec& t, Trainer& trainer, std::uint64_t seed) {
  const auto leg = [&](const std::string& source) {
    const std::string chain[] = {source};
    const auto init = trainer.chain_checkpoint(chain, seed);
    return 100.0 * trainer.relative(t.c, trainer.train(t.c, init, seed)->curve, seed);
  };
  return {leg(t.a), leg(t.b)};
}

struct Cell {
  ReportRow row;
  LearningCurve curve;
};

Cell run_cell(const TripletSpec& t, std::size_t index, StrategyKind kind, Trainer& trainer, std::uint64_t seed,
              const RunSettings& settings) {
  const auto tasks = t.sequence();
  const auto run = run_strategy(kind, tasks, trainer, seed, settings.options, settings.discriminator);
  const auto& last = run.outcomes.back();
  const auto [ac, bc] = pairwise(t, trainer, seed);
  Cell cell;
  auto& r = cell.row;
  r.triplet = index;
  r.config = t.config.name();
  r.a = t.a;
  r.b = t.b;
  r.c = t.c;
  r.strategy = std::string(strategy_name(kind));
  r.path = last.init_lineage;
  r.perf_auc = last.summary.perf_auc;
  r.baseline_perf_auc = last.baseline.perf_auc;
  r.lower_bound = trainer.tasks().at(t.c).metric.lower_bound;
  r.relative_percent = 100.0 * last.relative;
  r.a_to_c = ac;
  r.b_to_c = bc;
  r.probe_steps = last.probe_steps;
  r.curve_ref = curve_ref(index, r.strategy);
  cell.curve = last.curve;
  return cell;
}

double recompute_relative(const ReportRow& r, std::int64_t budget) {
  MetricSpec spec;
  spec.lower_bound = r.lower_bound;
  return 100.0 * relative_perf_auc(PerfSummary{r.perf_auc, budget, {}}, PerfSummary{r.baseline_perf_auc, budget, {}},
                                   spec);
}

json curve_to_json(const LearningCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points()) points.push_back(json::array({p.step, p.value}));
  return {{"metric_id", curve.metric_id()}, {"lower_bound", curve.lower_bound()}, {"points", std::move(points)}};
}

LearningCurve curve_from_json(const json& j) {
  std::vector<LearningCurve::Point> points;
  for (const auto& p : j.at("points")) points.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<double>()});
  return LearningCurve(std::move(points), j.at("metric_id").get<std::string>(), j.at("lower_bound").get<double>());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunReport run_benchmark(const Benchmark& benchmark, const std::string& benchmark_ref, Trainer& trainer,
                        std::uint64_t seed, const RunSettings& settings) {
  if (settings.strategies.empty()) throw Error(ErrorCode::invalid_argument, "no strategies requested");
  for (auto k : settings.strategies) {
    if (k == StrategyKind::selective && !settings.discriminator) {
      throw Error(ErrorCode::invalid_argument, "selective strategy requires a selector model");
    }
  }

  const auto n_strategies = settings.strategies.size();
  const auto total = benchmark.triplets.size() * n_strategies;
  std::vector<std::optional<Cell>> cells(total);
  std::vector<std::exception_ptr> failures(total);
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const auto triplet = i / n_strategies;
      try {
        cells[i] = run_cell(benchmark.triplets[triplet], triplet, settings.strategies[i % n_strategies], trainer,
                            seed, settings);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const auto jobs = std::max<std::size_t>(1, std::min(settings.jobs, total));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  RunReport report;
  report.benchmark = benchmark_ref;
  report.seed = seed;
  report.budget = trainer.budget();
  for (auto k : settings.strategies) report.strategies.emplace_back(strategy_name(k));
  for (auto& cell : cells) {
    report.curves.emplace(cell->row.curve_ref, std::move(cell->curve));
    report.rows.push_back(std::move(cell->row));
  }
  report.medians = compute_medians(report.rows);
  return report;
}

std::map<std::string, std::map<std::string, double>> compute_medians(const std::vector<ReportRow>& rows) {
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  std::map<std::string, std::map<std::size_t, std::pair<double, double>>> legs;  // config -> triplet -> legs
  for (const auto& r : rows) {
    values[r.strategy][r.config].push_back(r.relative_percent);
    legs[r.config][r.triplet] = {r.a_to_c, r.b_to_c};
  }
  for (const auto& [config, per_triplet] : legs) {
    for (const auto& [triplet, ab] : per_triplet) {
      values["a_to_c"][config].push_back(ab.first);
      values["b_to_c"][config].push_back(ab.second);
    }
  }
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [column, configs] : values) {
    for (const auto& [config, v] : configs) out[column][config] = median_of(v);
  }
  return out;
}

bool report_consistent(const RunReport& report) {
  for (const auto& r : report.rows) {
    if (recompute_relative(r, report.budget) != r.relative_percent) return false;
    if (!report.curves.contains(r.curve_ref)) return false;
    if (summarize(report.curves.at(r.curve_ref), report.budget).perf_auc != r.perf_auc) return false;
  }
  return compute_medians(report.rows) == report.medians;
}

json to_json(const RunReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"triplet", r.triplet},
                    {"config", r.config},
                    {"a", r.a},
                    {"b", r.b},
                    {"c", r.c},
                    {"strategy", r.strategy},
                    {"path", r.path},
                    {"perf_auc", r.perf_auc},
                    {"baseline_perf_auc", r.baseline_perf_auc},
                    {"lower_bound", r.lower_bound},
                    {"relative_percent", r.relative_percent},
                    {"a_to_c", r.a_to_c},
                    {"b_to_c", r.b_to_c},
                    {"probe_steps", r.probe_steps},
                    {"curve_ref", r.curve_ref}});
  }
  json curves = json::object();
  for (const auto& [ref, curve] : report.curves) curves[ref] = curve_to_json(curve);
  return {{"format", "seqft-report"},
          {"version", 1},
          {"tool_version", kToolVersion},
          {"benchmark", report.benchmark},
          {"seed", report.seed},
          {"budget", report.budget},
          {"strategies", report.strategies},
          {"rows", std::move(rows)},
          {"medians", report.medians},
          {"curves", std::move(curves)}};
}

RunReport report_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "seqft-report" || j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::schema_mismatch, "not a version-1 seqft report");
    }
    RunReport report;
    report.benchmark = j.at("benchmark").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.budget = j.at("budget").get<std::int64_t>();
    report.strategies = j.at("strategies").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.triplet = r.at("triplet").get<std::size_t>();
      row.config = r.at("config").get<std::string>();
      row.a = r.at("a").get<std::string>();
      row.b = r.at("b").get<std::string>();
      row.c = r.at("c").get<std::string>();
      row.strategy = r.at("strategy").get<std::string>();
      row.path = r.at("path").get<std::vector<std::string>>();
      row.perf_auc = r.at("perf_auc").get<double>();
      row.baseline_perf_auc = r.at("baseline_perf_auc").get<double>();
      row.lower_bound = r.at("lower_bound").get<double>();
      row.relative_percent = r.at("relative_percent").get<double>();
      row.a_to_c = r.at("a_to_c").get<double>();
      row.b_to_c = r.at("b_to_c").get<double>();
      row.probe_steps = r.at("probe_steps").get<std::int64_t>();
      row.curve_ref = r.at("curve_ref").get<std::string>();
      report.rows.push_back(std::move(row));
    }
    report.medians = j.at("medians").get<std::map<std::string, std::map<std::string, double>>>();
    for (const auto& [ref, c] : j.at("curves").items()) report.curves.emplace(ref, curve_from_json(c));
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad report: ") + e.what());
  }
}

RunReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open report " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, std::string("bad report: ") + e.what());
  }
  return report_from_json(j);
}

void save_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

std::string export_curves_csv(const RunReport& report) {
  std::string out = "triplet,strategy,step,perf\n";
  for (const auto& r : report.rows) {
    const auto it = report.curves.find(r.curve_ref);
    if (it == report.curves.end()) {
      throw Error(ErrorCode::dangling_reference, "row " + std::to_string(r.triplet) + "/" + r.strategy +
                                                     " references missing curve '" + r.curve_ref + "'");
    }
    const auto& points = it->second.points();
    const auto perf = running_min(it->second);
    for (std::size_t i = 0; i < points.size(); ++i) {
      out += std::to_string(r.triplet) + "," + r.strategy + "," + std::to_string(points[i].step) + "," +
             format_double(perf.points()[i].value) + "\n";
    }
  }
  return out;
}

std::map<std::string, LearningCurve> import_curves_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "triplet,strategy,step,perf") {
    throw Error(ErrorCode::schema_mismatch, "curve export must start with its header");
  }
  std::map<std::string, std::vector<LearningCurve::Point>> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string triplet, strategy, step, perf;
    if (!std::getline(fields, triplet, ',') || !std::getline(fields, strategy, ',') ||
        !std::getline(fields, step, ',') || !std::getline(fields, perf)) {
      throw Error(ErrorCode::schema_mismatch, "bad curve row '" + line + "'");
    }
    try {
      points[triplet + "/" + strategy].push_back({std::stoll(step), std::stod(perf)});
    } catch (const std::exception&) {
      throw Error(ErrorCode::schema_mismatch, "bad curve row '" + line + "'");
    }
  }
  std::map<std::string, LearningCurve> out;
  for (auto& [ref, p] : points) {
    out.emplace(ref, LearningCurve(std::move(p), "loss", -std::numeric_limits<double>::infinity()));
  }
  return out;
}

}  // namespace seqft
