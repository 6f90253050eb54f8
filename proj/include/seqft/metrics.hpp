#pragma once

// Learning-curve efficiency metrics. Every metric is handled in
// lower-is-better ("loss-like") form; MetricSpec converts raw scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqft/error.hpp"

namespace seqft {

enum class Orientation { lower_is_better, higher_is_better };

/// How a raw task score maps onto a loss-like value. For higher-is-better
/// metrics the loss is `ceiling - raw` (e.g. error = 1 - accuracy).
struct MetricSpec {
  std::string metric_id = "loss";
  Orientation orientation = Orientation::lower_is_better;
  double ceiling = 1.0;
  double lower_bound = 0.0;  // in loss space

  double to_loss(double raw) const noexcept {
    return orientation == Orientation::lower_is_better ? raw : ceiling - raw;
  }
  double from_loss(double loss) const noexcept {
    return orientation == Orientation::lower_is_better ? loss : ceiling - loss;
  }
  void validate() const;
};

template <typename Scalar>
struct CurvePoint {
  std::int64_t step = 0;
  Scalar value{};

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Loss-like evaluations of one training run at strictly increasing steps.
template <typename Scalar>
class BasicLearningCurve {
 public:
  using Point = CurvePoint<Scalar>;

  BasicLearningCurve() = default;

  explicit BasicLearningCurve(std::vector<Point> points, std::string metric_id = "loss",
                              Scalar lower_bound = Scalar(0))
      : points_(std::move(points)), metric_id_(std::move(metric_id)), lower_bound_(lower_bound) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      if (p.step < 0) {
        throw Error(ErrorCode::invalid_curve, "negative step " + std::to_string(p.step));
      }
      if (i > 0 && p.step <= points_[i - 1].step) {
        throw Error(ErrorCode::non_monotone_steps,
                    "step " + std::to_string(p.step) + " does not follow " +
                        std::to_string(points_[i - 1].step));
      }
      if (!std::isfinite(static_cast<double>(p.value))) {
        throw Error(ErrorCode::non_finite_value, "value at step " + std::to_string(p.step));
      }
      if (p.value < lower_bound_) {
        throw Error(ErrorCode::below_lower_bound,
                    "value at step " + std::to_string(p.step) + " is below the metric lower bound");
      }
    }
  }

  const std::vector<Point>& points() const noexcept { return points_; }
  const std::string& metric_id() const noexcept { return metric_id_; }
  Scalar lower_bound() const noexcept { return lower_bound_; }
  bool empty() const noexcept { return points_.empty(); }
  std::size_t size() const noexcept { return points_.size(); }
  std::int64_t first_step() const { return points_.front().step; }
  std::int64_t last_step() const { return points_.back().step; }

  friend bool operator==(const BasicLearningCurve&, const BasicLearningCurve&) = default;

 private:
  std::vector<Point> points_;
  std::string metric_id_ = "loss";
  Scalar lower_bound_{};
};

using LearningCurve = BasicLearningCurve<double>;

/// Best (minimum) loss over all points with step <= budget.
template <typename Scalar>
Scalar best_perf(const BasicLearningCurve<Scalar>& curve, std::int64_t budget) {
  if (curve.empty()) throw Error(ErrorCode::empty_input, "best_perf on empty curve");
  if (budget < curve.first_step()) {
    throw Error(ErrorCode::budget_out_of_range,
                "budget " + std::to_string(budget) + " precedes first recorded step");
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (const auto& p : curve.points()) {
    if (p.step > budget) break;
    best = std::min(best, p.value);
  }
  return best;
}

/// Area under Perf(e^b) for b in [0, ln budget_max], integrated exactly over
/// the right-continuous running-minimum step function. B = 1 maps to b = 0;
/// a step-0 point, when present, participates in Perf(1).
template <typename Scalar>
Scalar perf_auc(const BasicLearningCurve<Scalar>& curve, std::int64_t budget_max) {
  if (budget_max < 1) {
    throw Error(ErrorCode::budget_out_of_range, "budget_max must be >= 1");
  }
  if (curve.empty() || curve.first_step() > 1) {
    throw Error(ErrorCode::missing_anchor, "curve needs a point at step 0 or 1");
  }
  using std::log;
  const auto& pts = curve.points();
  const Scalar log_max = log(static_cast<Scalar>(budget_max));
  Scalar running = std::numeric_limits<Scalar>::infinity();
  Scalar area(0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].step > budget_max) break;
    running = std::min(running, pts[i].value);
    const Scalar start = pts[i].step <= 1 ? Scalar(0) : log(static_cast<Scalar>(pts[i].step));
    Scalar end = log_max;
    if (i + 1 < pts.size() && pts[i + 1].step < budget_max) {
      end = pts[i + 1].step <= 1 ? Scalar(0) : log(static_cast<Scalar>(pts[i + 1].step));
    }
    if (end > start) area += running * (end - start);
  }
  return area;
}

struct PerfSummary {
  double perf_auc = 0.0;
  std::int64_t budget_max = 1;
  std::string curve_id;
};

PerfSummary summarize(const LearningCurve& curve, std::int64_t budget_max, std::string curve_id = {});

/// (PerfAUC_ind - PerfAUC_m) / (PerfAUC_ind - L ln B_max), as a fraction.
double relative_perf_auc(const PerfSummary& method, const PerfSummary& independent,
                         const MetricSpec& spec);

/// Median; even counts average the two middle order statistics.
double median_of(std::span<const double> values);

/// Running minimum of a curve, one point per recorded step.
LearningCurve running_min(const LearningCurve& curve);

}  // namespace seqft
