#include "nodef/types.hpp"

#include <cmath>
#include <string>

namespace nodef {

Sample::Sample(Vector x, bool converted, std::optional<double> delay, double elapsed)
    : x_(std::move(x)), delay_(delay), elapsed_(elapsed) {
  if (!std::isfinite(elapsed_) || elapsed_ < 0.0) {
    throw std::invalid_argument("sample: elapsed time must be finite and nonnegative");
  }
  if (converted != delay_.has_value()) {
    throw std::invalid_argument(converted ? "sample: converted sample requires a delay"
                                          : "sample: unconverted sample must not carry a delay");
  }
  if (delay_) {
    if (!std::isfinite(*delay_) || *delay_ < 0.0) {
      throw std::invalid_argument("sample: delay must be finite and nonnegative");
    }
    if (*delay_ > elapsed_) {
      throw std::invalid_argument("sample: delay exceeds elapsed time");
    }
  }
  if (!x_.allFinite()) {
    throw std::invalid_argument("sample: feature vector has non-finite entries");
  }
}

Dataset::Dataset(std::size_t dim, std::vector<Sample> samples)
    : dim_(dim), samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (static_cast<std::size_t>(samples_[i].x().size()) != dim_) {
      throw std::invalid_argument("dataset: sample " + std::to_string(i) + " has dimension " +
                                  std::to_string(samples_[i].x().size()) + ", expected " +
                                  std::to_string(dim_));
    }
  }
}

IndexPartition partition_indices(const Dataset& dataset) {
  if (dataset.empty()) {
    throw std::invalid_argument("partition_indices: empty dataset");
  }
  IndexPartition out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset[i].y() ? out.positive : out.negative).push_back(i);
  }
  return out;
}

PseudoGrid::PseudoGrid(std::vector<double> points, double bandwidth)
    : points_(std::move(points)), bandwidth_(bandwidth) {
  if (points_.empty()) {
    throw std::invalid_argument("grid: no pseudo-points");
  }
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw std::invalid_argument("grid: bandwidth must be positive");
  }
  if (!(points_.front() >= 0.0)) {
    throw std::invalid_argument("grid: pseudo-points must be nonnegative");
  }
  if (points_.size() > 1) {
    const double step = points_[1] - points_[0];
    if (!(step > 0.0)) {
      throw std::invalid_argument("grid: pseudo-points must be strictly increasing");
    }
    for (std::size_t l = 1; l < points_.size(); ++l) {
      const double diff = points_[l] - points_[l - 1];
      if (!(diff > 0.0) || std::abs(diff - step) > 1e-9 * std::max(1.0, step)) {
        throw std::invalid_argument("grid: pseudo-points must be equally spaced");
      }
    }
  }
}

void NoDeFParams::validate(std::size_t dim, std::size_t num_points) const {
  if (static_cast<std::size_t>(w.size()) != dim || static_cast<std::size_t>(V.cols()) != dim ||
      static_cast<std::size_t>(V.rows()) != num_points) {
    throw std::invalid_argument("params: expected w of length " + std::to_string(dim) +
                                " and V of shape " + std::to_string(num_points) + "x" +
                                std::to_string(dim));
  }
  if (!w.allFinite() || !V.allFinite()) {
    throw std::invalid_argument("params: non-finite entries");
  }
}

void TrainConfig::validate() const {
  if (L < 2) throw std::invalid_argument("config: L must be at least 2");
  if (!(lambda_w >= 0.0) || !(lambda_V >= 0.0)) {
    throw std::invalid_argument("config: regularization strengths must be nonnegative");
  }
  if (max_iters < 1) throw std::invalid_argument("config: max_iters must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
  if (inner_iters < 1 || lbfgs_memory < 1 || !(inner_grad_tol > 0.0)) {
    throw std::invalid_argument("config: invalid inner optimizer settings");
  }
  if (!(init_jitter >= 0.0)) throw std::invalid_argument("config: init_jitter must be >= 0");
}

}  // namespace nodef
