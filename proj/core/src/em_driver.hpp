#pragma once

// Outer EM loop shared by the NoDeF trainer and the exponential-delay
// baseline. A Step type provides
//   Posteriors e_step(const Params&)
//   void update_conversion(Params&, const Posteriors&)
//   void update_delay(Params&, const Posteriors&)
//   double q(const Params&, const Posteriors&, int iteration)
// where q() throws NumericalError on a non-finite value. The trace records
// q() plus the posterior entropy.

#include <string>
#include <vector>

#include "nodef/trainer.hpp"
#include "nodef/types.hpp"

namespace nodef::detail {

inline constexpr double kQDecreaseTolerance = 1e-8;

struct EmOutcome {
  std::vector<double> q_trace;
  int iterations = 0;
  bool converged = false;
  bool q_decreased = false;
  std::string stop_reason;
};

template <class Params, class Step>
EmOutcome run_em(Step& step, Params& params, int max_iters, double tol) {
  EmOutcome out;
  for (int j = 1; j <= max_iters; ++j) {
    const Posteriors post = step.e_step(params);
    step.update_conversion(params, post);
    step.update_delay(params, post);
    const double q = step.q(params, post, j) + posterior_entropy(post);
    out.q_trace.push_back(q);
    out.iterations = j;
    // No previous Q exists at j = 1.
    if (j >= 2) {
      const double gain = q - out.q_trace[out.q_trace.size() - 2];
      if (gain < -kQDecreaseTolerance) {
        out.q_decreased = true;
        out.stop_reason = "objective decreased by " + std::to_string(-gain);
        return out;
      }
      if (gain < tol) {
        out.converged = true;
        out.stop_reason = "objective gain below tolerance";
        return out;
      }
    }
  }
  out.stop_reason = "iteration limit reached";
  return out;
}

}  // namespace nodef::detail
