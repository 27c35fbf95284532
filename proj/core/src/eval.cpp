#include "nodef/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nodef/text.hpp"

namespace nodef {
namespace {

void check_lengths(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size()) throw std::invalid_argument("metrics: length mismatch");
  if (p.empty()) throw std::invalid_argument("metrics: empty input");
}

}  // namespace

double log_loss(std::span<const double> predictions, std::span<const int> labels) {
  check_lengths(predictions, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], kProbabilityClip, 1.0 - kProbabilityClip);
    total -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(predictions.size());
}

double accuracy(std::span<const double> predictions, std::span<const int> labels,
                double threshold) {
  check_lengths(predictions, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if ((predictions[i] >= threshold) == (labels[i] != 0)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double auc(std::span<const double> predictions, std::span<const int> labels) {
  check_lengths(predictions, labels);
  const std::size_t n = predictions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });

  // Sum of midranks (1-based) of the positives.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && predictions[order[stop]] == predictions[order[start]]) ++stop;
    const double midrank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[order[k]]) {
        rank_sum += midrank;
        ++positives;
      }
    }
    start = stop;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw SingleClassError("auc: labels contain a single class");
  }
  const double np = static_cast<double>(positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

MetricsReport evaluate(std::span<const double> predictions, std::span<const int> labels) {
  MetricsReport r;
  r.auc = auc(predictions, labels);
  r.log_loss = log_loss(predictions, labels);
  r.accuracy = accuracy(predictions, labels);
  r.n = predictions.size();
  return r;
}

std::string to_key_value(const MetricsReport& report) {
  return "n=" + std::to_string(report.n) + " log_loss=" + text::format_double(report.log_loss) +
         " accuracy=" + text::format_double(report.accuracy) +
         " auc=" + text::format_double(report.auc);
}

std::vector<int> observed_labels(const Dataset& dataset) {
  std::vector<int> y;
  y.reserve(dataset.size());
  for (const auto& s : dataset) y.push_back(s.y() ? 1 : 0);
  return y;
}

std::vector<GridPoint> enumerate_grid(const GridSpec& grid, ModelKind kind,
                                      const TrainConfig& base) {
  std::vector<GridPoint> out;
  const std::vector<std::size_t> Ls = kind == ModelKind::nodef ? grid.L : std::vector{base.L};
  const std::vector<double> lvs =
      kind == ModelKind::naive ? std::vector{base.lambda_V} : grid.lambda_V;
  for (std::size_t L : Ls) {
    for (double lw : grid.lambda_w) {
      for (double lv : lvs) out.push_back({L, lw, lv});
    }
  }
  if (out.empty()) throw std::invalid_argument("grid_search: empty grid");
  return out;
}

bool better_candidate(const GridEvaluation& a, const GridEvaluation& b) {
  if (a.validation.log_loss != b.validation.log_loss) {
    return a.validation.log_loss < b.validation.log_loss;
  }
  if (a.point.L != b.point.L) return a.point.L < b.point.L;
  if (a.point.lambda_w != b.point.lambda_w) return a.point.lambda_w > b.point.lambda_w;
  return a.point.lambda_V > b.point.lambda_V;
}

GridSearchResult grid_search(const Dataset& raw_train, const Dataset& raw_validation,
                             const std::vector<GridPoint>& points, ModelKind kind,
                             const TrainOptions& base,
                             const std::function<void(const std::string&)>& warn) {
  if (points.empty()) throw std::invalid_argument("grid_search: empty grid");
  const std::vector<int> labels = observed_labels(raw_validation);

  GridSearchResult result;
  bool have_best = false;
  for (const auto& point : points) {
    TrainOptions opts = base;
    opts.config.L = point.L;
    opts.config.lambda_w = point.lambda_w;
    opts.config.lambda_V = point.lambda_V;
    try {
      TrainedModel model = train_model(raw_train, kind, opts);
      const auto preds = predict_dataset(model, raw_validation, PredictionMode::window);
      GridEvaluation ev{point, evaluate(preds, labels)};
      if (!std::isfinite(ev.validation.log_loss)) {
        throw NumericalError("validation log loss is not finite");
      }
      result.evaluated.push_back(ev);
      if (!have_best || better_candidate(ev, {result.best, result.validation})) {
        result.best = point;
        result.validation = ev.validation;
        result.model = std::move(model);
        have_best = true;
      }
    } catch (const SingleClassError&) {
      throw;
    } catch (const std::exception& err) {
      ++result.failed;
      if (warn) {
        warn("grid point L=" + std::to_string(point.L) +
             " lambda_w=" + text::format_double(point.lambda_w) +
             " lambda_V=" + text::format_double(point.lambda_V) + " failed: " + err.what());
      }
    }
  }
  if (!have_best) throw std::runtime_error("grid_search: every grid point failed");
  return result;
}

}  // namespace nodef
