#pragma once

#include "nodef/types.hpp"

namespace nodef {

// Logistic conversion classifier p(c | x; w). The trainer only relies on
// the probability and the gradient of its log, so another differentiable
// classifier can replace it behind these two calls.

/// p(c = converted | x; w). Throws std::invalid_argument on dimension mismatch.
double conv_prob(const Vector& x, const Vector& w, bool converted);

/// Gradient in w of log p(c | x; w): x (1 - sigma) for c = 1, -x sigma for c = 0.
Vector grad_log_conv(const Vector& x, const Vector& w, bool converted);

}  // namespace nodef
