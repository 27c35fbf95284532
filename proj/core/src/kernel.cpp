#include "nodef/kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nodef {
namespace {

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("kernel: bandwidth must be positive");
  }
}

void check_limit(double a) {
  if (!(a >= 0.0)) {
    throw std::invalid_argument("kernel: integration limit must be nonnegative");
  }
}

// h * sqrt(pi / 2)
double half_mass(double h) { return h * std::sqrt(std::numbers::pi / 2.0); }

// erf(hi) - erf(lo) for hi >= lo, routed through erfc when both arguments sit
// in the same tail so the difference keeps its relative precision.
double erf_difference(double hi, double lo) {
  if (lo >= 0.0) return std::erfc(lo) - std::erfc(hi);
  if (hi <= 0.0) return std::erfc(-hi) - std::erfc(-lo);
  return std::erf(hi) - std::erf(lo);
}

}  // namespace

double gauss_kernel(double t_l, double tau, double h) {
  check_bandwidth(h);
  const double u = (t_l - tau) / h;
  return std::exp(-0.5 * u * u);
}

double kernel_integral_0_to(double a, double t_l, double h) {
  check_bandwidth(h);
  check_limit(a);
  if (a == 0.0) return 0.0;
  const double s = std::numbers::sqrt2 * h;
  return half_mass(h) * erf_difference(t_l / s, (t_l - a) / s);
}

double kernel_integral_to_inf(double a, double t_l, double h) {
  check_bandwidth(h);
  check_limit(a);
  // 1 + erf(u) == erfc(-u)
  return half_mass(h) * std::erfc(-(t_l - a) / (std::numbers::sqrt2 * h));
}

PseudoGrid make_grid(std::size_t L, double t_max) {
  if (L < 2) throw std::invalid_argument("make_grid: L must be at least 2");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw std::invalid_argument("make_grid: t_max must be positive");
  }
  std::vector<double> points(L);
  const double step = t_max / static_cast<double>(L - 1);
  for (std::size_t l = 0; l < L; ++l) points[l] = static_cast<double>(l) * step;
  points.back() = t_max;
  return PseudoGrid(std::move(points), step / 2.0);
}

KernelProfile kernel_profile(const PseudoGrid& grid, double tau) {
  const auto L = static_cast<Eigen::Index>(grid.size());
  KernelProfile p{Vector(L), Vector(L)};
  for (Eigen::Index l = 0; l < L; ++l) {
    const double t = grid[static_cast<std::size_t>(l)];
    p.value[l] = gauss_kernel(t, tau, grid.bandwidth());
    p.integral[l] = kernel_integral_0_to(tau, t, grid.bandwidth());
  }
  return p;
}

}  // namespace nodef
