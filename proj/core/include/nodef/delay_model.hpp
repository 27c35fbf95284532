#pragma once

#include "nodef/types.hpp"

namespace nodef {

// Time-delay model. The hazard at time d for features x is a sum of
// Gaussian bumps centred on the pseudo-points, each scaled by an intensity
// sigmoid(V_l . x). Survival, delay density and the conversion-by-horizon
// prediction all follow from it in closed form.
//
// Every function checks x.size() == V.cols() and V.rows() == grid.size()
// and throws std::invalid_argument otherwise, or for negative times.

double intensity(const Vector& x, const Eigen::Ref<const Vector>& V_row);

/// sigmoid(V x), one intensity per pseudo-point.
Vector intensities(const Vector& x, const Matrix& V);

double hazard(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid);

/// Integrated hazard over [0, d].
double cumulative_hazard(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid);

double survival(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid);

/// survival(d) * hazard(d). Note that it integrates to 1 - survival_limit(),
/// not to 1: the kernel sum has finite total mass.
double delay_density(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid);

/// Probability a sample that will convert has not yet done so after e.
double prob_no_conversion_yet(double e, const Vector& x, const Matrix& V, const PseudoGrid& grid);

/// Survival as d -> infinity; strictly positive for finite weights.
double survival_limit(const Vector& x, const Matrix& V, const PseudoGrid& grid);

/// Eventual conversion probability sigmoid(w . x).
double predict_eventual(const Vector& x, const Vector& w);

/// Probability of conversion within horizon E: eventual * (1 - survival(E)).
double predict_by_time(const Vector& x, double E, const NoDeFParams& params,
                       const PseudoGrid& grid);

/// Limit of predict_by_time as E -> infinity: eventual * (1 - survival_limit).
/// Because the delay distribution is defective this is the model's
/// probability that a conversion is ever observed, and it sits below
/// predict_eventual.
double predict_limit(const Vector& x, const NoDeFParams& params, const PseudoGrid& grid);

}  // namespace nodef
