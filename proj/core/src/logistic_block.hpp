#pragma once

#include <cstddef>
#include <vector>

#include "nodef/numeric.hpp"
#include "nodef/types.hpp"

namespace nodef::detail {

/// Posterior-weighted logistic log-likelihood minus (lambda/2)|w|^2:
///   sum_pos log s(z) + sum_neg [q0 log s(-z) + q1 log s(z)],   s = sigmoid.
/// Rows of x_pos / x_neg are samples; q0/q1 align with x_neg rows.
inline double logistic_block(const Matrix& x_pos, const Matrix& x_neg,
                             const std::vector<double>& q0, const std::vector<double>& q1,
                             const Vector& w, double lambda, unsigned threads, Vector* grad) {
  struct Partial {
    double value = 0.0;
    Vector grad;
  };
  const bool want_grad = grad != nullptr;
  Partial init;
  if (want_grad) init.grad = Vector::Zero(w.size());
  auto combine = [&](Partial& acc, const Partial& p) {
    acc.value += p.value;
    if (want_grad) acc.grad += p.grad;
  };

  const Partial pos = chunked_reduce(
      static_cast<std::size_t>(x_pos.rows()), threads, init,
      [&](std::size_t b, std::size_t e, Partial& out) {
        const auto rows = x_pos.middleRows(static_cast<Eigen::Index>(b),
                                           static_cast<Eigen::Index>(e - b));
        const Vector z = rows * w;
        Vector coef(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          out.value += log_sigmoid(z[i]);
          coef[i] = sigmoid(-z[i]);
        }
        if (want_grad) out.grad.noalias() += rows.transpose() * coef;
      },
      combine);

  const Partial neg = chunked_reduce(
      static_cast<std::size_t>(x_neg.rows()), threads, init,
      [&](std::size_t b, std::size_t e, Partial& out) {
        const auto rows = x_neg.middleRows(static_cast<Eigen::Index>(b),
                                           static_cast<Eigen::Index>(e - b));
        const Vector z = rows * w;
        Vector coef(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          const std::size_t k = b + static_cast<std::size_t>(i);
          const double a0 = q0[k];
          const double a1 = q1[k];
          if (a0 != 0.0) out.value += a0 * log_sigmoid(-z[i]);
          if (a1 != 0.0) out.value += a1 * log_sigmoid(z[i]);
          coef[i] = a1 * sigmoid(-z[i]) - a0 * sigmoid(z[i]);
        }
        if (want_grad) out.grad.noalias() += rows.transpose() * coef;
      },
      combine);

  const double value = pos.value + neg.value - 0.5 * lambda * w.squaredNorm();
  if (want_grad) *grad = pos.grad + neg.grad - lambda * w;
  return value;
}

/// Stacks the feature vectors of the given samples as matrix rows.
inline Matrix stack_rows(const Dataset& dataset, const std::vector<std::size_t>& index) {
  Matrix out(static_cast<Eigen::Index>(index.size()), static_cast<Eigen::Index>(dataset.dim()));
  for (std::size_t k = 0; k < index.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = dataset[index[k]].x().transpose();
  }
  return out;
}

}  // namespace nodef::detail
