#pragma once

#include <functional>
#include <vector>

#include "nodef/types.hpp"

namespace nodef {

struct LbfgsOptions {
  int max_iterations = 50;
  int memory = 10;
  /// Stop once the gradient infinity-norm falls below this.
  double gradient_tolerance = 1e-6;
  /// Armijo and curvature constants of the strong Wolfe conditions.
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_steps = 40;
};

enum class LbfgsStatus {
  converged,           // gradient tolerance met
  max_iterations,      // iteration cap reached
  line_search_failed,  // no acceptable step; best point so far returned
};

const char* to_string(LbfgsStatus status) noexcept;

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  /// Objective at the start point and after every accepted step.
  std::vector<double> trace;
};

/// Objective to maximise; returns f(x) and writes the gradient into `grad`.
/// A non-finite return value marks x as infeasible for the line search.
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

/// Limited-memory BFGS ascent with a strong Wolfe line search.
///
/// The returned point never has a lower objective than x0. Throws
/// NumericalError if the objective or gradient at x0 is not finite.
LbfgsResult lbfgs_maximize(const ObjectiveFn& objective, Vector x0,
                           const LbfgsOptions& options = {});

}  // namespace nodef
