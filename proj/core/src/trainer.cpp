#include "nodef/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

#include "em_driver.hpp"
#include "logistic_block.hpp"
#include "nodef/kernel.hpp"
#include "nodef/numeric.hpp"

namespace nodef {
namespace {

// log(exp(a) + exp(b))
double log_add(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

Matrix sigmoid_of(const Matrix& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

// alpha (1 - alpha), evaluated without cancellation.
Matrix sigmoid_slope(const Matrix& z) {
  return z.unaryExpr([](double v) { return sigmoid(v) * sigmoid(-v); });
}

std::string describe(const std::vector<std::size_t>& samples) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(samples.size(), 10);
  for (std::size_t k = 0; k < shown; ++k) {
    if (k) out += ",";
    out += std::to_string(samples[k]);
  }
  if (samples.size() > shown) out += ",...";
  return out;
}

}  // namespace

std::pair<double, double> conversion_posterior(double score, double log_survival) {
  // log u1 - log u0 with u0 = sigmoid(-z), u1 = sigmoid(z) s(e)
  const double log_odds = log_sigmoid(score) + log_survival - log_sigmoid(-score);
  if (std::isnan(log_odds)) return {1.0, 0.0};
  return {sigmoid(-log_odds), sigmoid(log_odds)};
}

NoDeFProblem::NoDeFProblem(const Dataset& dataset, const PseudoGrid& grid, unsigned threads)
    : dim_(dataset.dim()), num_points_(grid.size()), threads_(std::max(1u, threads)) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset[i].y() ? positives_ : negatives_).push_back(i);
  }
  x_pos_ = detail::stack_rows(dataset, positives_);
  x_neg_ = detail::stack_rows(dataset, negatives_);

  const auto L = static_cast<Eigen::Index>(num_points_);
  kval_pos_.resize(static_cast<Eigen::Index>(positives_.size()), L);
  kint_pos_.resize(static_cast<Eigen::Index>(positives_.size()), L);
  kint_neg_.resize(static_cast<Eigen::Index>(negatives_.size()), L);
  for (std::size_t k = 0; k < positives_.size(); ++k) {
    const KernelProfile p = kernel_profile(grid, *dataset[positives_[k]].delay());
    kval_pos_.row(static_cast<Eigen::Index>(k)) = p.value.transpose();
    kint_pos_.row(static_cast<Eigen::Index>(k)) = p.integral.transpose();
  }
  for (std::size_t k = 0; k < negatives_.size(); ++k) {
    const double e = dataset[negatives_[k]].elapsed();
    for (Eigen::Index l = 0; l < L; ++l) {
      kint_neg_(static_cast<Eigen::Index>(k), l) =
          kernel_integral_0_to(e, grid[static_cast<std::size_t>(l)], grid.bandwidth());
    }
  }
}

void NoDeFProblem::check_params(const NoDeFParams& params) const {
  if (params.dim() != dim_ || static_cast<std::size_t>(params.V.cols()) != dim_ ||
      params.num_points() != num_points_) {
    throw std::invalid_argument("trainer: parameters do not match the dataset dimension " +
                                std::to_string(dim_) + " and grid size " +
                                std::to_string(num_points_));
  }
}

void NoDeFProblem::check_posteriors(const Posteriors& post) const {
  if (post.index != negatives_ || post.q0.size() != negatives_.size() ||
      post.q1.size() != negatives_.size()) {
    throw std::invalid_argument("trainer: posteriors must cover exactly the unobserved samples");
  }
}

Posteriors NoDeFProblem::e_step(const NoDeFParams& params) const {
  check_params(params);
  Posteriors post;
  post.index = negatives_;
  post.q0.resize(negatives_.size());
  post.q1.resize(negatives_.size());
  if (negatives_.empty()) return post;

  const Vector z = x_neg_ * params.w;
  const Matrix alpha = sigmoid_of(x_neg_ * params.V.transpose());
  const Vector log_surv = -(alpha.cwiseProduct(kint_neg_)).rowwise().sum();
  for (std::size_t k = 0; k < negatives_.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::tie(post.q0[k], post.q1[k]) = conversion_posterior(z[i], log_surv[i]);
  }
  return post;
}

double NoDeFProblem::conversion_objective(const Vector& w, const Posteriors& post,
                                          double lambda_w, Vector* grad) const {
  check_posteriors(post);
  return detail::logistic_block(x_pos_, x_neg_, post.q0, post.q1, w, lambda_w, threads_, grad);
}

double NoDeFProblem::delay_objective(const Matrix& V, const Posteriors& post, double lambda_V,
                                     Matrix* grad, ObjectiveStats* stats) const {
  check_posteriors(post);
  struct Partial {
    double value = 0.0;
    Matrix grad;
    std::size_t clamps = 0;
  };
  const bool want_grad = grad != nullptr;
  Partial init;
  if (want_grad) init.grad = Matrix::Zero(V.rows(), V.cols());
  auto combine = [&](Partial& acc, const Partial& p) {
    acc.value += p.value;
    acc.clamps += p.clamps;
    if (want_grad) acc.grad += p.grad;
  };

  // Observed conversions: log s(d) + log h(d).
  const Partial pos = chunked_reduce(
      positives_.size(), threads_, init,
      [&](std::size_t b, std::size_t e, Partial& out) {
        const auto n = static_cast<Eigen::Index>(e - b);
        const auto first = static_cast<Eigen::Index>(b);
        const auto rows = x_pos_.middleRows(first, n);
        const Matrix z = rows * V.transpose();
        const Matrix alpha = sigmoid_of(z);
        const auto kval = kval_pos_.middleRows(first, n);
        const auto kint = kint_pos_.middleRows(first, n);
        Vector hazard = alpha.cwiseProduct(kval).rowwise().sum();
        const Vector cum = alpha.cwiseProduct(kint).rowwise().sum();
        for (Eigen::Index i = 0; i < n; ++i) {
          if (!(hazard[i] >= kHazardFloor)) {
            hazard[i] = kHazardFloor;
            ++out.clamps;
          }
          out.value += std::log(hazard[i]) - cum[i];
        }
        if (want_grad) {
          Matrix coef = kval.array().colwise() / hazard.array();
          coef -= kint;
          coef = coef.cwiseProduct(sigmoid_slope(z));
          out.grad.noalias() += coef.transpose() * rows;
        }
      },
      combine);

  // Unobserved: q1 log s(e). The c = 0 branch does not depend on V.
  const Partial neg = chunked_reduce(
      negatives_.size(), threads_, init,
      [&](std::size_t b, std::size_t e, Partial& out) {
        const auto n = static_cast<Eigen::Index>(e - b);
        const auto first = static_cast<Eigen::Index>(b);
        const auto rows = x_neg_.middleRows(first, n);
        const Matrix z = rows * V.transpose();
        const auto kint = kint_neg_.middleRows(first, n);
        const Vector cum = sigmoid_of(z).cwiseProduct(kint).rowwise().sum();
        Vector q1(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          q1[i] = post.q1[b + static_cast<std::size_t>(i)];
          out.value -= q1[i] * cum[i];
        }
        if (want_grad) {
          Matrix coef = sigmoid_slope(z).cwiseProduct(kint);
          coef = -(coef.array().colwise() * q1.array()).matrix();
          out.grad.noalias() += coef.transpose() * rows;
        }
      },
      combine);

  if (stats) stats->hazard_clamps += pos.clamps;
  const double value = pos.value + neg.value - 0.5 * lambda_V * V.squaredNorm();
  if (want_grad) *grad = pos.grad + neg.grad - lambda_V * V;
  return value;
}

double NoDeFProblem::q_objective(const NoDeFParams& params, const Posteriors& post,
                                 double lambda_w, double lambda_V, ObjectiveStats* stats) const {
  check_params(params);
  const double value = conversion_objective(params.w, post, lambda_w) +
                       delay_objective(params.V, post, lambda_V, nullptr, stats);
  if (!std::isfinite(value)) {
    const auto bad = nonfinite_samples(params, post);
    throw NumericalError("objective is not finite (samples: " + describe(bad) + ")", bad);
  }
  return value;
}

std::vector<std::size_t> NoDeFProblem::nonfinite_samples(const NoDeFParams& params,
                                                         const Posteriors& post) const {
  std::vector<std::size_t> bad;
  const Vector zp = x_pos_ * params.w;
  const Matrix ap = sigmoid_of(x_pos_ * params.V.transpose());
  for (std::size_t k = 0; k < positives_.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double h = std::max(ap.row(i).dot(kval_pos_.row(i)), kHazardFloor);
    const double term = log_sigmoid(zp[i]) + std::log(h) - ap.row(i).dot(kint_pos_.row(i));
    if (!std::isfinite(term)) bad.push_back(positives_[k]);
  }
  const Vector zn = x_neg_ * params.w;
  const Matrix an = sigmoid_of(x_neg_ * params.V.transpose());
  for (std::size_t k = 0; k < negatives_.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double q0 = k < post.q0.size() ? post.q0[k] : 0.0;
    const double q1 = k < post.q1.size() ? post.q1[k] : 0.0;
    const double term = q0 * log_sigmoid(-zn[i]) +
                        q1 * (log_sigmoid(zn[i]) - an.row(i).dot(kint_neg_.row(i)));
    if (!std::isfinite(term)) bad.push_back(negatives_[k]);
  }
  return bad;
}

double NoDeFProblem::log_likelihood(const NoDeFParams& params, double lambda_w,
                                    double lambda_V) const {
  check_params(params);
  double total = 0.0;
  const Vector zp = x_pos_ * params.w;
  const Matrix ap = sigmoid_of(x_pos_ * params.V.transpose());
  for (Eigen::Index i = 0; i < zp.size(); ++i) {
    const double h = std::max(ap.row(i).dot(kval_pos_.row(i)), kHazardFloor);
    total += log_sigmoid(zp[i]) + std::log(h) - ap.row(i).dot(kint_pos_.row(i));
  }
  const Vector zn = x_neg_ * params.w;
  const Matrix an = sigmoid_of(x_neg_ * params.V.transpose());
  for (Eigen::Index i = 0; i < zn.size(); ++i) {
    const double log_surv = -an.row(i).dot(kint_neg_.row(i));
    total += log_add(log_sigmoid(-zn[i]), log_sigmoid(zn[i]) + log_surv);
  }
  return total - 0.5 * lambda_w * params.w.squaredNorm() -
         0.5 * lambda_V * params.V.squaredNorm();
}

double posterior_entropy(const Posteriors& post) {
  double h = 0.0;
  auto term = [](double q) { return q > 0.0 ? -q * std::log(q) : 0.0; };
  for (std::size_t k = 0; k < post.size(); ++k) h += term(post.q0[k]) + term(post.q1[k]);
  return h;
}

Posteriors e_step(const Dataset& dataset, const NoDeFParams& params, const PseudoGrid& grid) {
  return NoDeFProblem(dataset, grid).e_step(params);
}

double q_objective(const Dataset& dataset, const NoDeFParams& params, const Posteriors& post,
                   const PseudoGrid& grid, double lambda_w, double lambda_V) {
  return NoDeFProblem(dataset, grid).q_objective(params, post, lambda_w, lambda_V);
}

Vector grad_w(const Dataset& dataset, const NoDeFParams& params, const Posteriors& post,
              double lambda_w) {
  // The w-block does not touch the grid; a one-point placeholder suffices.
  const NoDeFProblem problem(dataset, PseudoGrid({0.0}, 1.0));
  if (params.dim() != dataset.dim()) throw std::invalid_argument("grad_w: dimension mismatch");
  Vector g;
  problem.conversion_objective(params.w, post, lambda_w, &g);
  return g;
}

Matrix grad_V(const Dataset& dataset, const NoDeFParams& params, const Posteriors& post,
              const PseudoGrid& grid, double lambda_V) {
  const NoDeFProblem problem(dataset, grid);
  params.validate(dataset.dim(), grid.size());
  Matrix g;
  problem.delay_objective(params.V, post, lambda_V, &g);
  return g;
}

NoDeFParams initial_params(std::size_t dim, const TrainConfig& config) {
  NoDeFParams params = NoDeFParams::zeros(dim, config.L);
  if (config.init_jitter > 0.0) {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, config.init_jitter);
    for (Eigen::Index i = 0; i < params.w.size(); ++i) params.w[i] = noise(rng);
    for (Eigen::Index i = 0; i < params.V.size(); ++i) params.V.data()[i] = noise(rng);
  }
  return params;
}

namespace {

class NoDeFStep {
 public:
  NoDeFStep(const NoDeFProblem& problem, const TrainConfig& config)
      : problem_(problem), config_(config) {
    options_.max_iterations = config.inner_iters;
    options_.memory = config.lbfgs_memory;
    options_.gradient_tolerance = config.inner_grad_tol;
  }

  Posteriors e_step(const NoDeFParams& params) const { return problem_.e_step(params); }

  void update_conversion(NoDeFParams& params, const Posteriors& post) const {
    auto objective = [&](const Vector& w, Vector& grad) {
      return problem_.conversion_objective(w, post, config_.lambda_w, &grad);
    };
    params.w = lbfgs_maximize(objective, params.w, options_).x;
  }

  void update_delay(NoDeFParams& params, const Posteriors& post) const {
    const Eigen::Index rows = params.V.rows();
    const Eigen::Index cols = params.V.cols();
    auto objective = [&](const Vector& flat, Vector& grad) {
      const Eigen::Map<const Matrix> V(flat.data(), rows, cols);
      Matrix g;
      const double value = problem_.delay_objective(V, post, config_.lambda_V, &g);
      grad = Eigen::Map<const Vector>(g.data(), g.size());
      return value;
    };
    const Vector start = Eigen::Map<const Vector>(params.V.data(), params.V.size());
    const LbfgsResult r = lbfgs_maximize(objective, start, options_);
    params.V = Eigen::Map<const Matrix>(r.x.data(), rows, cols);
  }

  double q(const NoDeFParams& params, const Posteriors& post, int iteration) {
    try {
      ObjectiveStats stats;
      const double value =
          problem_.q_objective(params, post, config_.lambda_w, config_.lambda_V, &stats);
      clamps_ += stats.hazard_clamps;
      return value;
    } catch (const NumericalError& err) {
      throw NumericalError("EM iteration " + std::to_string(iteration) + ": " + err.what(),
                           err.samples(), iteration);
    }
  }

  std::size_t clamps() const noexcept { return clamps_; }

 private:
  const NoDeFProblem& problem_;
  const TrainConfig& config_;
  LbfgsOptions options_;
  std::size_t clamps_ = 0;
};

}  // namespace

FitResult fit_from(const Dataset& dataset, const TrainConfig& config, const PseudoGrid& grid,
                   NoDeFParams init) {
  if (dataset.empty()) throw std::invalid_argument("fit: empty dataset");
  config.validate();
  init.validate(dataset.dim(), grid.size());

  const NoDeFProblem problem(dataset, grid, config.threads);
  NoDeFStep step(problem, config);
  FitResult result;
  result.params = std::move(init);
  const detail::EmOutcome em =
      detail::run_em(step, result.params, config.max_iters, config.tol);
  result.q_trace = em.q_trace;
  result.iterations = em.iterations;
  result.converged = em.converged;
  result.q_decreased = em.q_decreased;
  result.stop_reason = em.stop_reason;
  result.hazard_clamps = step.clamps();
  return result;
}

FitResult fit(const Dataset& dataset, const TrainConfig& config, const PseudoGrid& grid) {
  if (grid.size() != config.L) {
    throw std::invalid_argument("fit: grid has " + std::to_string(grid.size()) +
                                " points but config.L is " + std::to_string(config.L));
  }
  return fit_from(dataset, config, grid, initial_params(dataset.dim(), config));
}

}  // namespace nodef
