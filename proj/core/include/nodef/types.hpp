#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nodef {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a computed objective or probability is not finite.
/// Carries the offending sample indices (dataset order) when known.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::vector<std::size_t> samples = {},
                 int iteration = -1)
      : std::runtime_error(what), samples_(std::move(samples)), iteration_(iteration) {}

  const std::vector<std::size_t>& samples() const noexcept { return samples_; }
  int iteration() const noexcept { return iteration_; }

 private:
  std::vector<std::size_t> samples_;
  int iteration_;
};

/// One row of a conversion log after ingestion.
///
/// `delay` is present iff the conversion has been observed. Times are in
/// whatever unit the caller works in (days for raw data, model units after a
/// TimeTransform has been applied).
class Sample {
 public:
  /// Throws std::invalid_argument when the label/delay/elapsed combination
  /// is inconsistent or x holds non-finite entries.
  Sample(Vector x, bool converted, std::optional<double> delay, double elapsed);

  static Sample observed(Vector x, double delay, double elapsed) {
    return Sample(std::move(x), true, delay, elapsed);
  }
  static Sample unobserved(Vector x, double elapsed) {
    return Sample(std::move(x), false, std::nullopt, elapsed);
  }

  const Vector& x() const noexcept { return x_; }
  bool y() const noexcept { return delay_.has_value(); }
  const std::optional<double>& delay() const noexcept { return delay_; }
  double elapsed() const noexcept { return elapsed_; }

 private:
  Vector x_;
  std::optional<double> delay_;
  double elapsed_;
};

/// Ordered collection of samples sharing feature dimensionality M.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, std::vector<Sample> samples);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

 private:
  std::size_t dim_ = 0;
  std::vector<Sample> samples_;
};

struct IndexPartition {
  std::vector<std::size_t> positive;  // y = 1
  std::vector<std::size_t> negative;  // y = 0
};

/// Splits sample indices by observed label, preserving dataset order.
/// Throws std::invalid_argument on an empty dataset.
IndexPartition partition_indices(const Dataset& dataset);

/// Equally spaced pseudo-points on the time axis plus the kernel bandwidth.
class PseudoGrid {
 public:
  PseudoGrid(std::vector<double> points, double bandwidth);

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<double>& points() const noexcept { return points_; }
  double operator[](std::size_t l) const { return points_[l]; }
  double bandwidth() const noexcept { return bandwidth_; }
  double spacing() const noexcept {
    return points_.size() > 1 ? points_[1] - points_[0] : 0.0;
  }

  PseudoGrid with_bandwidth(double bandwidth) const { return PseudoGrid(points_, bandwidth); }

 private:
  std::vector<double> points_;
  double bandwidth_;
};

/// Conversion weights w (length M) and intensity weights V (L x M).
struct NoDeFParams {
  Vector w;
  Matrix V;

  static NoDeFParams zeros(std::size_t dim, std::size_t num_points) {
    return {Vector::Zero(static_cast<Eigen::Index>(dim)),
            Matrix::Zero(static_cast<Eigen::Index>(num_points), static_cast<Eigen::Index>(dim))};
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(w.size()); }
  std::size_t num_points() const noexcept { return static_cast<std::size_t>(V.rows()); }

  /// Throws std::invalid_argument if shapes disagree or entries are non-finite.
  void validate(std::size_t dim, std::size_t num_points) const;
};

struct TrainConfig {
  std::size_t L = 40;
  double lambda_w = 0.01;
  double lambda_V = 0.01;
  int max_iters = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Standard deviation of the random initial perturbation of w and V.
  /// Zero keeps the all-zero start.
  double init_jitter = 0.0;

  // Inner L-BFGS budget per M-step.
  int inner_iters = 50;
  int lbfgs_memory = 10;
  double inner_grad_tol = 1e-6;

  /// Worker threads for per-sample reductions. Results do not depend on it.
  unsigned threads = 1;

  void validate() const;
};

/// Posterior over the hidden conversion flag for each unobserved sample.
/// Entries are aligned: index[k] is the dataset position of the k-th
/// negative sample, q0[k] + q1[k] = 1.
struct Posteriors {
  std::vector<std::size_t> index;
  std::vector<double> q0;
  std::vector<double> q1;

  std::size_t size() const noexcept { return index.size(); }
  bool empty() const noexcept { return index.empty(); }
};

}  // namespace nodef
