#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodef/model.hpp"

namespace nodef {

/// AUC is undefined unless both classes are present.
class SingleClassError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kProbabilityClip = 1e-15;

/// Mean negative log-likelihood with predictions clipped to
/// [1e-15, 1 - 1e-15].
double log_loss(std::span<const double> predictions, std::span<const int> labels);

/// Fraction of samples where (p >= threshold) matches the label.
double accuracy(std::span<const double> predictions, std::span<const int> labels,
                double threshold = 0.5);

/// Mann-Whitney probability that a random positive outranks a random
/// negative, ties counting one half. O(n log n).
double auc(std::span<const double> predictions, std::span<const int> labels);

struct MetricsReport {
  double log_loss = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t n = 0;
};

/// Throws SingleClassError when the labels hold a single class.
MetricsReport evaluate(std::span<const double> predictions, std::span<const int> labels);

/// "n=... log_loss=... accuracy=... auc=..." on one line.
std::string to_key_value(const MetricsReport& report);

std::vector<int> observed_labels(const Dataset& dataset);

// ---------------------------------------------------------------------------
// Hyperparameter search on a validation set

struct GridSpec {
  std::vector<std::size_t> L{10, 20, 30};
  std::vector<double> lambda_w{1.0, 0.1, 0.01};
  std::vector<double> lambda_V{1.0, 0.1, 0.01};
};

struct GridPoint {
  std::size_t L = 0;
  double lambda_w = 0.0;
  double lambda_V = 0.0;
};

struct GridEvaluation {
  GridPoint point;
  MetricsReport validation;
};

struct GridSearchResult {
  GridPoint best;
  MetricsReport validation;
  TrainedModel model;
  std::vector<GridEvaluation> evaluated;  // successful fits, in enumeration order
  std::size_t failed = 0;
};

/// Grid points actually searched for a model kind. Naive varies only
/// lambda_w; the exponential baseline varies lambda_w and lambda_V; NoDeF
/// varies all three. Fixed coordinates come from `base`.
std::vector<GridPoint> enumerate_grid(const GridSpec& grid, ModelKind kind,
                                      const TrainConfig& base);

/// Fits one model per grid point and keeps the lowest validation log loss
/// (window-aware predictions). Ties go to smaller L, then larger lambda_w,
/// then larger lambda_V. Failed fits are reported through `warn` and
/// skipped; throws std::runtime_error if every fit fails.
GridSearchResult grid_search(const Dataset& raw_train, const Dataset& raw_validation,
                             const std::vector<GridPoint>& points, ModelKind kind,
                             const TrainOptions& base,
                             const std::function<void(const std::string&)>& warn = {});

/// True when a should be preferred over b under the selection rule.
bool better_candidate(const GridEvaluation& a, const GridEvaluation& b);

}  // namespace nodef
