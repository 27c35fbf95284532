#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the closed forms under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nodef/types.hpp"

namespace nodef::oracle {

/// Adaptive Gauss-Kronrod on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  if (a == b) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol, &err);
}

/// Splits [a, b] at the given breakpoints so narrow kernel bumps are never
/// straddled by a single coarse panel.
inline double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                                  std::vector<double> breaks, double tol = 1e-13) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = std::max(a, breaks[k]);
    const double hi = std::min(b, breaks[k + 1]);
    if (hi > lo) total += integrate(f, lo, hi, tol);
  }
  return total;
}

inline double central_difference(const std::function<double(double)>& f, double x, double step) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

/// |a - b| / max(|a|, |b|, 1)
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

/// Plain |a - b| / max(|a|, |b|) for identities that must hold in the
/// relative sense even for tiny values.
inline double strict_rel_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// O(n^2) pairwise AUC: fraction of (positive, negative) pairs ordered
/// correctly, ties counting one half.
inline double pairwise_auc(const std::vector<double>& p, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[j]) continue;
      pairs += 1.0;
      if (p[i] > p[j]) {
        wins += 1.0;
      } else if (p[i] == p[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

/// Local maxima of a sampled curve after greedy suppression: peaks are taken
/// in decreasing height and any peak closer than `separation` to an
/// already-kept one is dropped. Boundary points count when higher than
/// their single neighbour.
inline std::vector<double> separated_modes(const std::vector<double>& t,
                                           const std::vector<double>& f, double separation) {
  std::vector<std::size_t> peaks;
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || f[i] > f[i - 1];
    const bool right = i + 1 == n || f[i] >= f[i + 1];
    if (left && right && f[i] > 0.0) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  std::vector<double> kept;
  for (std::size_t i : peaks) {
    const bool far = std::all_of(kept.begin(), kept.end(),
                                 [&](double m) { return std::abs(m - t[i]) >= separation; });
    if (far) kept.push_back(t[i]);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = g(rng);
  }
  return m;
}

/// Small mixed dataset: features N(0,1) with a trailing bias of 1, elapsed
/// times U(0.5, t_max), roughly half the samples converted with a delay
/// below their elapsed time.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                              double t_max = 8.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = random_vector(rng, dim);
    x[static_cast<Eigen::Index>(dim) - 1] = 1.0;
    const double e = 0.5 + (t_max - 0.5) * u(rng);
    if (u(rng) < 0.5) {
      samples.push_back(Sample::observed(std::move(x), e * u(rng), e));
    } else {
      samples.push_back(Sample::unobserved(std::move(x), e));
    }
  }
  return Dataset(dim, std::move(samples));
}

}  // namespace nodef::oracle
