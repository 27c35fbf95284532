#include "nodef/delay_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nodef/kernel.hpp"
#include "nodef/numeric.hpp"

namespace nodef {
namespace {

void check_shapes(const Vector& x, const Matrix& V, const PseudoGrid& grid) {
  if (V.cols() != x.size()) {
    throw std::invalid_argument("delay model: V has " + std::to_string(V.cols()) +
                                " columns but x has length " + std::to_string(x.size()));
  }
  if (static_cast<std::size_t>(V.rows()) != grid.size()) {
    throw std::invalid_argument("delay model: V has " + std::to_string(V.rows()) +
                                " rows but the grid has " + std::to_string(grid.size()) +
                                " points");
  }
}

void check_time(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("delay model: time must be nonnegative");
}

}  // namespace

double intensity(const Vector& x, const Eigen::Ref<const Vector>& V_row) {
  if (V_row.size() != x.size()) {
    throw std::invalid_argument("intensity: dimension mismatch");
  }
  return sigmoid(V_row.dot(x));
}

Vector intensities(const Vector& x, const Matrix& V) {
  if (V.cols() != x.size()) throw std::invalid_argument("intensities: dimension mismatch");
  return (V * x).unaryExpr([](double z) { return sigmoid(z); });
}

double hazard(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid) {
  check_shapes(x, V, grid);
  check_time(d);
  const Vector alpha = intensities(x, V);
  double h = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    h += alpha[static_cast<Eigen::Index>(l)] * gauss_kernel(grid[l], d, grid.bandwidth());
  }
  return h;
}

double cumulative_hazard(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid) {
  check_shapes(x, V, grid);
  check_time(d);
  const Vector alpha = intensities(x, V);
  double acc = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    acc += alpha[static_cast<Eigen::Index>(l)] *
           kernel_integral_0_to(d, grid[l], grid.bandwidth());
  }
  return acc;
}

double survival(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid) {
  return std::exp(-cumulative_hazard(d, x, V, grid));
}

double delay_density(double d, const Vector& x, const Matrix& V, const PseudoGrid& grid) {
  return survival(d, x, V, grid) * hazard(d, x, V, grid);
}

double prob_no_conversion_yet(double e, const Vector& x, const Matrix& V,
                              const PseudoGrid& grid) {
  return survival(e, x, V, grid);
}

namespace {

double cumulative_hazard_limit(const Vector& x, const Matrix& V, const PseudoGrid& grid) {
  const Vector alpha = intensities(x, V);
  double acc = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    acc += alpha[static_cast<Eigen::Index>(l)] *
           kernel_integral_to_inf(0.0, grid[l], grid.bandwidth());
  }
  return acc;
}

}  // namespace

double survival_limit(const Vector& x, const Matrix& V, const PseudoGrid& grid) {
  check_shapes(x, V, grid);
  return std::exp(-cumulative_hazard_limit(x, V, grid));
}

double predict_eventual(const Vector& x, const Vector& w) {
  if (w.size() != x.size()) throw std::invalid_argument("predict_eventual: dimension mismatch");
  return sigmoid(w.dot(x));
}

double predict_by_time(const Vector& x, double E, const NoDeFParams& params,
                       const PseudoGrid& grid) {
  check_time(E);
  const double p = predict_eventual(x, params.w);
  // 1 - exp(-H) via expm1 keeps precision for small horizons
  return p * -std::expm1(-cumulative_hazard(E, x, params.V, grid));
}

double predict_limit(const Vector& x, const NoDeFParams& params, const PseudoGrid& grid) {
  check_shapes(x, params.V, grid);
  const double p = predict_eventual(x, params.w);
  return p * -std::expm1(-cumulative_hazard_limit(x, params.V, grid));
}

}  // namespace nodef
