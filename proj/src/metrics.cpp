#include "seqft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace seqft {

void MetricSpec::validate() const {
  if (!std::isfinite(lower_bound) || lower_bound < 0.0) {
    throw Error(ErrorCode::invalid_argument, "metric '" + metric_id + "' needs a lower bound >= 0");
  }
  if (orientation == Orientation::higher_is_better && !std::isfinite(ceiling)) {
    throw Error(ErrorCode::invalid_argument, "metric '" + metric_id + "' needs a finite ceiling");
  }
}

PerfSummary summarize(const LearningCurve& curve, std::int64_t budget_max, std::string curve_id) {
  return PerfSummary{perf_auc(curve, budget_max), budget_max, std::move(curve_id)};
}

double relative_perf_auc(const PerfSummary& method, const PerfSummary& independent,
                         const MetricSpec& spec) {
  if (method.budget_max != independent.budget_max) {
    throw Error(ErrorCode::invalid_argument, "method and baseline use different budgets");
  }
  const double floor = spec.lower_bound * std::log(static_cast<double>(independent.budget_max));
  const double gap = independent.perf_auc - floor;
  if (!(gap > 0.0)) {
    throw Error(ErrorCode::degenerate_baseline,
                "independent PerfAUC does not exceed the metric floor");
  }
  return (independent.perf_auc - method.perf_auc) / gap;
}

double median_of(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::empty_input, "median of empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

LearningCurve running_min(const LearningCurve& curve) {
  std::vector<LearningCurve::Point> out;
  out.reserve(curve.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : curve.points()) {
    best = std::min(best, p.value);
    out.push_back({p.step, best});
  }
  return LearningCurve(std::move(out), curve.metric_id(), curve.lower_bound());
}

}  // namespace seqft
