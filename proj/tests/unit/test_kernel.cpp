#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nodef/kernel.hpp"
#include "support/oracles.hpp"

using namespace nodef;
using nodef::oracle::integrate_piecewise;
using nodef::oracle::rel_error;

TEST(GaussKernel, HandValues) {
  EXPECT_NEAR(gauss_kernel(0.0, 1.0, 1.0), 0.606531, 1e-6);
  EXPECT_NEAR(gauss_kernel(0.0, 3.0, 1.0), 0.011109, 1e-6);
  EXPECT_DOUBLE_EQ(gauss_kernel(2.0, 2.0, 0.3), 1.0);
  EXPECT_THROW(gauss_kernel(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(KernelIntegral, ZeroToA) {
  // Not the full Gaussian mass sqrt(2 pi): the tails beyond [0, 10] hold
  // about 1.4e-6 of it.
  const double inner =
      integrate_piecewise([](double tau) { return gauss_kernel(5.0, tau, 1.0); }, 0.0, 10.0, {5.0});
  EXPECT_NEAR(kernel_integral_0_to(10.0, 5.0, 1.0), inner, 1e-12);
  EXPECT_NEAR(kernel_integral_0_to(10.0, 5.0, 1.0), std::sqrt(2.0 * M_PI), 2e-6);
  EXPECT_NEAR(kernel_integral_0_to(10.0, 0.0, 1.0), 1.253314, 1e-6);
  EXPECT_DOUBLE_EQ(kernel_integral_0_to(0.0, 3.0, 1.0), 0.0);
  EXPECT_THROW(kernel_integral_0_to(-1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(KernelIntegral, AToInfinity) {
  EXPECT_NEAR(kernel_integral_to_inf(0.0, 0.0, 1.0), 1.253314, 1e-6);
  EXPECT_NEAR(kernel_integral_to_inf(0.0, 5.0, 1.0), 2.506628, 1e-6);
  EXPECT_THROW(kernel_integral_to_inf(-1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(KernelIntegral, MatchesQuadrature) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const double a = 15.0 * u(rng), t = -3.0 + 20.0 * u(rng), h = 0.02 + 2.0 * u(rng);
    auto f = [&](double tau) { return gauss_kernel(t, tau, h); };
    EXPECT_LT(rel_error(kernel_integral_0_to(a, t, h), integrate_piecewise(f, 0.0, a, {t})), 1e-10);
    const double far = std::max(a, t) + 40.0 * h;
    EXPECT_LT(rel_error(kernel_integral_to_inf(a, t, h), integrate_piecewise(f, a, far, {t})),
              1e-10);
  }
}

TEST(KernelIntegral, DerivativeIsKernel) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double a = 0.5 + 9.0 * u(rng), t = 10.0 * u(rng), h = 0.2 + u(rng);
    const double fd = oracle::central_difference(
        [&](double v) { return kernel_integral_0_to(v, t, h); }, a, 1e-5);
    EXPECT_NEAR(fd, gauss_kernel(t, a, h), 1e-8);
  }
}

TEST(KernelIntegral, FarTailsStayAccurate) {
  // Both erf arguments deep in the same tail: plain erf differences cancel.
  const double v = kernel_integral_0_to(1.0, 30.0, 1.0);
  const double oracle =
      integrate_piecewise([](double tau) { return gauss_kernel(30.0, tau, 1.0); }, 0.0, 1.0, {});
  EXPECT_GT(v, 0.0);
  EXPECT_LT(oracle::strict_rel_error(v, oracle), 1e-8);
  const double tail = kernel_integral_to_inf(20.0, 0.0, 1.0);
  EXPECT_GT(tail, 0.0);
  EXPECT_LT(oracle::strict_rel_error(
                tail, integrate_piecewise(
                          [](double tau) { return gauss_kernel(0.0, tau, 1.0); }, 20.0, 60.0, {})),
            1e-8);
}

TEST(MakeGrid, Placement) {
  const PseudoGrid g = make_grid(5, 8.0);
  EXPECT_EQ(g.points(), (std::vector<double>{0.0, 2.0, 4.0, 6.0, 8.0}));
  EXPECT_DOUBLE_EQ(g.bandwidth(), 1.0);
  EXPECT_THROW(make_grid(1, 8.0), std::invalid_argument);
  EXPECT_THROW(make_grid(5, 0.0), std::invalid_argument);
}

TEST(KernelProfileTest, MatchesPointwise) {
  const PseudoGrid g = make_grid(6, 5.0);
  const KernelProfile p = kernel_profile(g, 2.3);
  for (std::size_t l = 0; l < g.size(); ++l) {
    EXPECT_DOUBLE_EQ(p.value[l], gauss_kernel(g[l], 2.3, g.bandwidth()));
    EXPECT_DOUBLE_EQ(p.integral[l], kernel_integral_0_to(2.3, g[l], g.bandwidth()));
  }
}
