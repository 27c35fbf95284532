#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nodef/lbfgs.hpp"
#include "nodef/trainer.hpp"
#include "nodef/types.hpp"

namespace nodef {

// Comparison models.
//
// NAIVE: plain logistic regression on the observed labels, so conversions
// that have not happened yet count as negatives.
//
// DFM: delayed-feedback model with an exponential delay. The rate is
// exp(wd . x); p(d | x, c=1) = rate * exp(-rate d) and a sample that will
// convert is still unconverted at elapsed time e with probability
// exp(-rate e). Trained with the same EM loop as NoDeF.

/// Penalised logistic MLE on the observed labels. Throws on an empty dataset.
Vector fit_naive(const Dataset& dataset, double lambda, const LbfgsOptions& options = {},
                 unsigned threads = 1);

struct DfmParams {
  Vector wc;  // conversion weights
  Vector wd;  // log-rate weights

  static DfmParams zeros(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return {Vector::Zero(n), Vector::Zero(n)};
  }
  void validate(std::size_t dim) const;
};

struct DfmLambdas {
  double conversion = 0.01;
  double delay = 0.01;
};

/// exp(wd . x)
double dfm_rate(const Vector& x, const DfmParams& params);

/// Exponential delay density rate * exp(-rate d).
double dfm_delay_density(double d, const Vector& x, const DfmParams& params);

/// exp(-rate e)
double dfm_survival(double e, const Vector& x, const DfmParams& params);

/// Eventual probability when `horizon` is empty, otherwise
/// sigmoid(wc . x) (1 - exp(-rate E)). Throws for a negative horizon.
double dfm_predict(const Vector& x, const DfmParams& params, std::optional<double> horizon);

/// Data layout and objective pieces for the exponential-delay model; mirrors
/// NoDeFProblem.
class DfmProblem {
 public:
  explicit DfmProblem(const Dataset& dataset, unsigned threads = 1);

  Posteriors e_step(const DfmParams& params) const;
  double conversion_objective(const Vector& wc, const Posteriors& post, double lambda,
                              Vector* grad = nullptr) const;
  double delay_objective(const Vector& wd, const Posteriors& post, double lambda,
                         Vector* grad = nullptr) const;
  double q_objective(const DfmParams& params, const Posteriors& post,
                     const DfmLambdas& lambdas) const;

 private:
  void check_posteriors(const Posteriors& post) const;

  std::size_t dim_;
  unsigned threads_;
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
  Matrix x_pos_;
  Matrix x_neg_;
  Vector delay_pos_;
  Vector elapsed_neg_;
};

struct DfmFitResult {
  DfmParams params;
  std::vector<double> q_trace;
  int iterations = 0;
  bool converged = false;
  bool q_decreased = false;
  std::string stop_reason;
};

/// Times in `dataset` are expected to be normalised already (see
/// fit_time_transform with TimeTransformKind::max_scale).
DfmFitResult fit_dfm(const Dataset& dataset, const DfmLambdas& lambdas, int max_iters = 100,
                     double tol = 1e-6, const LbfgsOptions& inner = {}, unsigned threads = 1);

}  // namespace nodef
