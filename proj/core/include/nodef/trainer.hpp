#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nodef/lbfgs.hpp"
#include "nodef/types.hpp"

namespace nodef {

/// Floor applied to the hazard before taking its log or dividing by it.
inline constexpr double kHazardFloor = 1e-300;

struct ObjectiveStats {
  /// Number of positive samples whose hazard was raised to kHazardFloor.
  std::size_t hazard_clamps = 0;
};

/// Normalised posterior (q0, q1) over the hidden conversion flag of an
/// unobserved sample, given its conversion score z = w.x and the log
/// survival at its elapsed time.
std::pair<double, double> conversion_posterior(double score, double log_survival);

/// Training data laid out for repeated objective evaluation: features split
/// by label and kernel values/integrals at every delay and elapsed time
/// precomputed against the grid.
///
/// The problem keeps references to neither the dataset nor the grid.
class NoDeFProblem {
 public:
  NoDeFProblem(const Dataset& dataset, const PseudoGrid& grid, unsigned threads = 1);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_points() const noexcept { return num_points_; }
  const std::vector<std::size_t>& positives() const noexcept { return positives_; }
  const std::vector<std::size_t>& negatives() const noexcept { return negatives_; }

  Posteriors e_step(const NoDeFParams& params) const;

  /// Conversion block of Q: every term that depends on w, plus its penalty.
  double conversion_objective(const Vector& w, const Posteriors& post, double lambda_w,
                              Vector* grad = nullptr) const;

  /// Delay block of Q: every term that depends on V, plus its penalty.
  double delay_objective(const Matrix& V, const Posteriors& post, double lambda_V,
                         Matrix* grad = nullptr, ObjectiveStats* stats = nullptr) const;

  /// Full penalised lower bound. Throws NumericalError naming the offending
  /// samples when a term is not finite.
  double q_objective(const NoDeFParams& params, const Posteriors& post, double lambda_w,
                     double lambda_V, ObjectiveStats* stats = nullptr) const;

  /// Penalised marginal log-likelihood with the hidden flag summed out.
  double log_likelihood(const NoDeFParams& params, double lambda_w, double lambda_V) const;

  /// Dataset positions whose Q term is not finite under (params, post).
  std::vector<std::size_t> nonfinite_samples(const NoDeFParams& params,
                                             const Posteriors& post) const;

 private:
  void check_params(const NoDeFParams& params) const;
  void check_posteriors(const Posteriors& post) const;

  std::size_t dim_;
  std::size_t num_points_;
  unsigned threads_;
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
  Matrix x_pos_;       // n1 x M
  Matrix x_neg_;       // n0 x M
  Matrix kval_pos_;    // n1 x L, k(t_l, d_i)
  Matrix kint_pos_;    // n1 x L, integral of k over [0, d_i]
  Matrix kint_neg_;    // n0 x L, integral of k over [0, e_i]
};

Posteriors e_step(const Dataset& dataset, const NoDeFParams& params, const PseudoGrid& grid);

double q_objective(const Dataset& dataset, const NoDeFParams& params, const Posteriors& post,
                   const PseudoGrid& grid, double lambda_w, double lambda_V);

Vector grad_w(const Dataset& dataset, const NoDeFParams& params, const Posteriors& post,
              double lambda_w);

Matrix grad_V(const Dataset& dataset, const NoDeFParams& params, const Posteriors& post,
              const PseudoGrid& grid, double lambda_V);

/// Entropy of the hidden-flag posteriors, -sum q log q. Adding it to Q gives
/// the full Jensen bound, which equals the log-likelihood right after an
/// E-step and never decreases across EM iterations.
double posterior_entropy(const Posteriors& post);

struct FitResult {
  NoDeFParams params;
  /// Q + posterior_entropy after each outer iteration's M-step, against that
  /// iteration's posteriors. The entropy does not depend on the parameters,
  /// so it leaves the M-step untouched.
  std::vector<double> q_trace;
  int iterations = 0;
  bool converged = false;
  /// Set when Q dropped by more than 1e-8 between iterations.
  bool q_decreased = false;
  std::size_t hazard_clamps = 0;
  std::string stop_reason;
};

/// EM with an L-BFGS w-update followed by an L-BFGS V-update per iteration.
/// Throws NumericalError (with iteration and samples) on a non-finite Q.
FitResult fit(const Dataset& dataset, const TrainConfig& config, const PseudoGrid& grid);

/// Same as fit() but starting from the given parameters.
FitResult fit_from(const Dataset& dataset, const TrainConfig& config, const PseudoGrid& grid,
                   NoDeFParams init);

/// The all-zero start, optionally perturbed by N(0, init_jitter^2) noise
/// drawn from config.seed.
NoDeFParams initial_params(std::size_t dim, const TrainConfig& config);

}  // namespace nodef
