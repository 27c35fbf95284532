#include "nodef/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "em_driver.hpp"
#include "logistic_block.hpp"
#include "nodef/numeric.hpp"

namespace nodef {

Vector fit_naive(const Dataset& dataset, double lambda, const LbfgsOptions& options,
                 unsigned threads) {
  if (dataset.empty()) throw std::invalid_argument("fit_naive: empty dataset");
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_naive: lambda must be >= 0");
  const IndexPartition parts = partition_indices(dataset);
  const Matrix x_pos = detail::stack_rows(dataset, parts.positive);
  const Matrix x_neg = detail::stack_rows(dataset, parts.negative);
  // Unobserved rows are certain negatives: q0 = 1, q1 = 0.
  const std::vector<double> q0(parts.negative.size(), 1.0);
  const std::vector<double> q1(parts.negative.size(), 0.0);
  auto objective = [&](const Vector& w, Vector& grad) {
    return detail::logistic_block(x_pos, x_neg, q0, q1, w, lambda, threads, &grad);
  };
  return lbfgs_maximize(objective, Vector::Zero(static_cast<Eigen::Index>(dataset.dim())),
                        options)
      .x;
}

void DfmParams::validate(std::size_t dim) const {
  if (static_cast<std::size_t>(wc.size()) != dim || static_cast<std::size_t>(wd.size()) != dim) {
    throw std::invalid_argument("dfm: expected weight vectors of length " + std::to_string(dim));
  }
  if (!wc.allFinite() || !wd.allFinite()) throw std::invalid_argument("dfm: non-finite weights");
}

double dfm_rate(const Vector& x, const DfmParams& params) {
  if (x.size() != params.wd.size()) throw std::invalid_argument("dfm: dimension mismatch");
  return std::exp(params.wd.dot(x));
}

double dfm_delay_density(double d, const Vector& x, const DfmParams& params) {
  if (!(d >= 0.0)) throw std::invalid_argument("dfm: delay must be nonnegative");
  const double rate = dfm_rate(x, params);
  return rate * std::exp(-rate * d);
}

double dfm_survival(double e, const Vector& x, const DfmParams& params) {
  if (!(e >= 0.0)) throw std::invalid_argument("dfm: elapsed time must be nonnegative");
  return std::exp(-dfm_rate(x, params) * e);
}

double dfm_predict(const Vector& x, const DfmParams& params, std::optional<double> horizon) {
  if (x.size() != params.wc.size()) throw std::invalid_argument("dfm: dimension mismatch");
  const double p = sigmoid(params.wc.dot(x));
  if (!horizon) return p;
  if (!(*horizon >= 0.0)) throw std::invalid_argument("dfm: horizon must be nonnegative");
  return p * -std::expm1(-dfm_rate(x, params) * *horizon);
}

DfmProblem::DfmProblem(const Dataset& dataset, unsigned threads)
    : dim_(dataset.dim()), threads_(std::max(1u, threads)) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset[i].y() ? positives_ : negatives_).push_back(i);
  }
  x_pos_ = detail::stack_rows(dataset, positives_);
  x_neg_ = detail::stack_rows(dataset, negatives_);
  delay_pos_.resize(static_cast<Eigen::Index>(positives_.size()));
  elapsed_neg_.resize(static_cast<Eigen::Index>(negatives_.size()));
  for (std::size_t k = 0; k < positives_.size(); ++k) {
    delay_pos_[static_cast<Eigen::Index>(k)] = *dataset[positives_[k]].delay();
  }
  for (std::size_t k = 0; k < negatives_.size(); ++k) {
    elapsed_neg_[static_cast<Eigen::Index>(k)] = dataset[negatives_[k]].elapsed();
  }
}

void DfmProblem::check_posteriors(const Posteriors& post) const {
  if (post.index != negatives_ || post.q0.size() != negatives_.size() ||
      post.q1.size() != negatives_.size()) {
    throw std::invalid_argument("dfm: posteriors must cover exactly the unobserved samples");
  }
}

Posteriors DfmProblem::e_step(const DfmParams& params) const {
  params.validate(dim_);
  Posteriors post;
  post.index = negatives_;
  post.q0.resize(negatives_.size());
  post.q1.resize(negatives_.size());
  if (negatives_.empty()) return post;
  const Vector zc = x_neg_ * params.wc;
  const Vector zd = x_neg_ * params.wd;
  for (std::size_t k = 0; k < negatives_.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::tie(post.q0[k], post.q1[k]) =
        conversion_posterior(zc[i], -std::exp(zd[i]) * elapsed_neg_[i]);
  }
  return post;
}

double DfmProblem::conversion_objective(const Vector& wc, const Posteriors& post, double lambda,
                                        Vector* grad) const {
  check_posteriors(post);
  return detail::logistic_block(x_pos_, x_neg_, post.q0, post.q1, wc, lambda, threads_, grad);
}

double DfmProblem::delay_objective(const Vector& wd, const Posteriors& post, double lambda,
                                   Vector* grad) const {
  check_posteriors(post);
  struct Partial {
    double value = 0.0;
    Vector grad;
  };
  const bool want_grad = grad != nullptr;
  Partial init;
  if (want_grad) init.grad = Vector::Zero(wd.size());
  auto combine = [&](Partial& acc, const Partial& p) {
    acc.value += p.value;
    if (want_grad) acc.grad += p.grad;
  };

  // log(rate) - rate d for observed delays
  const Partial pos = chunked_reduce(
      positives_.size(), threads_, init,
      [&](std::size_t b, std::size_t e, Partial& out) {
        const auto first = static_cast<Eigen::Index>(b);
        const auto n = static_cast<Eigen::Index>(e - b);
        const auto rows = x_pos_.middleRows(first, n);
        const Vector z = rows * wd;
        Vector coef(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double rd = std::exp(z[i]) * delay_pos_[first + i];
          out.value += z[i] - rd;
          coef[i] = 1.0 - rd;
        }
        if (want_grad) out.grad.noalias() += rows.transpose() * coef;
      },
      combine);

  // -q1 rate e for unobserved samples
  const Partial neg = chunked_reduce(
      negatives_.size(), threads_, init,
      [&](std::size_t b, std::size_t e, Partial& out) {
        const auto first = static_cast<Eigen::Index>(b);
        const auto n = static_cast<Eigen::Index>(e - b);
        const auto rows = x_neg_.middleRows(first, n);
        const Vector z = rows * wd;
        Vector coef(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double re = post.q1[b + static_cast<std::size_t>(i)] * std::exp(z[i]) *
                            elapsed_neg_[first + i];
          out.value -= re;
          coef[i] = -re;
        }
        if (want_grad) out.grad.noalias() += rows.transpose() * coef;
      },
      combine);

  const double value = pos.value + neg.value - 0.5 * lambda * wd.squaredNorm();
  if (want_grad) *grad = pos.grad + neg.grad - lambda * wd;
  return value;
}

double DfmProblem::q_objective(const DfmParams& params, const Posteriors& post,
                               const DfmLambdas& lambdas) const {
  params.validate(dim_);
  const double value = conversion_objective(params.wc, post, lambdas.conversion) +
                       delay_objective(params.wd, post, lambdas.delay);
  if (!std::isfinite(value)) throw NumericalError("dfm: objective is not finite");
  return value;
}

namespace {

class DfmStep {
 public:
  DfmStep(const DfmProblem& problem, const DfmLambdas& lambdas, const LbfgsOptions& options)
      : problem_(problem), lambdas_(lambdas), options_(options) {}

  Posteriors e_step(const DfmParams& params) const { return problem_.e_step(params); }

  void update_conversion(DfmParams& params, const Posteriors& post) const {
    auto objective = [&](const Vector& w, Vector& grad) {
      return problem_.conversion_objective(w, post, lambdas_.conversion, &grad);
    };
    params.wc = lbfgs_maximize(objective, params.wc, options_).x;
  }

  void update_delay(DfmParams& params, const Posteriors& post) const {
    auto objective = [&](const Vector& w, Vector& grad) {
      return problem_.delay_objective(w, post, lambdas_.delay, &grad);
    };
    params.wd = lbfgs_maximize(objective, params.wd, options_).x;
  }

  double q(const DfmParams& params, const Posteriors& post, int iteration) const {
    try {
      return problem_.q_objective(params, post, lambdas_);
    } catch (const NumericalError& err) {
      throw NumericalError("EM iteration " + std::to_string(iteration) + ": " + err.what(),
                           err.samples(), iteration);
    }
  }

 private:
  const DfmProblem& problem_;
  const DfmLambdas& lambdas_;
  const LbfgsOptions& options_;
};

}  // namespace

DfmFitResult fit_dfm(const Dataset& dataset, const DfmLambdas& lambdas, int max_iters,
                     double tol, const LbfgsOptions& inner, unsigned threads) {
  if (dataset.empty()) throw std::invalid_argument("fit_dfm: empty dataset");
  if (!(lambdas.conversion >= 0.0) || !(lambdas.delay >= 0.0)) {
    throw std::invalid_argument("fit_dfm: regularization strengths must be nonnegative");
  }
  if (max_iters < 1 || !(tol > 0.0)) throw std::invalid_argument("fit_dfm: invalid stopping rule");
  const DfmProblem problem(dataset, threads);
  DfmStep step(problem, lambdas, inner);
  DfmFitResult result;
  result.params = DfmParams::zeros(dataset.dim());
  const detail::EmOutcome em = detail::run_em(step, result.params, max_iters, tol);
  result.q_trace = em.q_trace;
  result.iterations = em.iterations;
  result.converged = em.converged;
  result.q_decreased = em.q_decreased;
  result.stop_reason = em.stop_reason;
  return result;
}

}  // namespace nodef
