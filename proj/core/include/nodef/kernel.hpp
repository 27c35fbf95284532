#pragma once

#include <cstddef>

#include "nodef/types.hpp"

namespace nodef {

// Gaussian kernel on the time axis. Any kernel usable by the delay model must
// expose the same three closed forms: the point value and the integrals over
// [0, a] and [a, inf).

/// exp(-(t_l - tau)^2 / (2 h^2)). Throws std::invalid_argument for h <= 0.
double gauss_kernel(double t_l, double tau, double h);

/// Integral of gauss_kernel(t_l, ., h) over [0, a]. Requires a >= 0.
double kernel_integral_0_to(double a, double t_l, double h);

/// Integral of gauss_kernel(t_l, ., h) over [a, inf). Requires a >= 0.
double kernel_integral_to_inf(double a, double t_l, double h);

/// L points from 0 to t_max inclusive, bandwidth half the spacing.
PseudoGrid make_grid(std::size_t L, double t_max);

/// Kernel values k(t_l, tau) and cumulative integrals over [0, tau] for every
/// pseudo-point of a grid, evaluated at one time tau.
struct KernelProfile {
  Vector value;
  Vector integral;
};

KernelProfile kernel_profile(const PseudoGrid& grid, double tau);

}  // namespace nodef
