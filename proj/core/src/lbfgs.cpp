#include "nodef/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

namespace nodef {
namespace {

// Internally everything is a minimisation of f = -objective.
struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative along p
  Vector x;
  Vector g;
};

class LineSearch {
 public:
  LineSearch(const ObjectiveFn& objective, const LbfgsOptions& opt, const Vector& x0,
             double f0, const Vector& direction, double slope0)
      : objective_(objective), opt_(opt), x0_(x0), f0_(f0), p_(direction), d0_(slope0) {}

  // Returns true with `out` holding a strong Wolfe point, or true with a point
  // that only satisfies sufficient decrease when the search runs out of
  // budget; false when no decrease at all was found.
  bool run(double alpha_init, Point& out) {
    Point prev{0.0, f0_, d0_, {}, {}};
    double alpha = alpha_init;
    for (int i = 0; i < opt_.max_line_search_steps; ++i) {
      Point cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        // Step left the feasible region; shrink toward the last good point.
        alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
        continue;
      }
      if (cur.f > f0_ + opt_.c1 * cur.alpha * d0_ || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur, out);
      }
      if (std::abs(cur.slope) <= -opt_.c2 * d0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) {
        return zoom(cur, prev, out);
      }
      prev = std::move(cur);
      alpha = std::min(alpha * 2.0, prev.alpha + 1e10);
    }
    return fallback(out);
  }

 private:
  Point eval(double alpha) {
    Point pt;
    pt.alpha = alpha;
    pt.x = x0_ + alpha * p_;
    Vector grad(x0_.size());
    const double value = objective_(pt.x, grad);
    pt.f = -value;
    pt.g = -grad;
    if (!std::isfinite(pt.f) || !pt.g.allFinite()) {
      pt.f = std::numeric_limits<double>::infinity();
      pt.slope = 0.0;
      return pt;
    }
    pt.slope = pt.g.dot(p_);
    if (pt.f < f0_ && (!best_ || pt.f < best_->f)) best_ = pt;
    return pt;
  }

  bool zoom(Point lo, Point hi, Point& out) {
    for (int i = 0; i < opt_.max_line_search_steps; ++i) {
      const double alpha = interpolate(lo, hi);
      Point cur = eval(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * alpha * d0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * d0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
    }
    return fallback(out);
  }

  // Minimiser of the cubic through (lo, hi), safeguarded into the interior.
  static double interpolate(const Point& lo, const Point& hi) {
    const double a = lo.alpha;
    const double b = hi.alpha;
    const double width = b - a;
    double t = a + 0.5 * width;
    if (std::isfinite(hi.f)) {
      const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
      const double disc = d1 * d1 - lo.slope * hi.slope;
      if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = hi.slope - lo.slope + 2.0 * d2;
        if (denom != 0.0) {
          const double c = b - (b - a) * (hi.slope + d2 - d1) / denom;
          if (std::isfinite(c)) t = c;
        }
      }
    }
    const double lo_b = std::min(a, b) + 0.1 * std::abs(width);
    const double hi_b = std::max(a, b) - 0.1 * std::abs(width);
    if (!(t >= lo_b && t <= hi_b)) t = a + 0.5 * width;
    return t;
  }

  // Budget exhausted: settle for the lowest value seen if it improved on f0.
  bool fallback(Point& out) {
    if (!best_) return false;
    out = *best_;
    return true;
  }

  const ObjectiveFn& objective_;
  const LbfgsOptions& opt_;
  const Vector& x0_;
  double f0_;
  const Vector& p_;
  double d0_;
  std::optional<Point> best_;
};

}  // namespace

const char* to_string(LbfgsStatus status) noexcept {
  switch (status) {
    case LbfgsStatus::converged:
      return "converged";
    case LbfgsStatus::max_iterations:
      return "max_iterations";
    case LbfgsStatus::line_search_failed:
      return "line_search_failed";
  }
  return "unknown";
}

LbfgsResult lbfgs_maximize(const ObjectiveFn& objective, Vector x0,
                           const LbfgsOptions& options) {
  const Eigen::Index n = x0.size();
  Vector grad(n);
  const double value0 = objective(x0, grad);
  if (!std::isfinite(value0) || !grad.allFinite()) {
    throw NumericalError("lbfgs: objective or gradient not finite at the start point");
  }

  LbfgsResult result;
  result.x = std::move(x0);
  result.value = value0;
  result.gradient = grad;
  result.trace.push_back(value0);

  Vector x = result.x;
  double f = -value0;
  Vector g = -grad;

  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  const auto memory = static_cast<std::size_t>(std::max(1, options.memory));

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      result.status = LbfgsStatus::converged;
      return result;
    }

    // Two-loop recursion for p = -H g.
    Vector q = g;
    std::vector<double> a(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      a[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= a[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double b = rho_hist[k] * y_hist[k].dot(q);
      q += s_hist[k] * (a[k] - b);
    }
    Vector p = -q;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      // Curvature history is no longer useful; restart with steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      p = -g;
      slope = g.dot(p);
    }

    const double alpha_init = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    Point next;
    bool moved = LineSearch(objective, options, x, f, p, slope).run(alpha_init, next) &&
                 next.f < f;
    if (!moved && !s_hist.empty()) {
      // One more attempt along steepest descent before giving up.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      p = -g;
      slope = g.dot(p);
      moved = LineSearch(objective, options, x, f, p, slope)
                  .run(std::min(1.0, 1.0 / g.norm()), next) &&
              next.f < f;
    }
    if (!moved) {
      result.status = LbfgsStatus::line_search_failed;
      return result;
    }

    Vector s = next.x - x;
    Vector y = next.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (s_hist.size() == memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x = std::move(next.x);
    f = next.f;
    g = std::move(next.g);

    result.x = x;
    result.value = -f;
    result.gradient = -g;
    result.iterations = iter + 1;
    result.trace.push_back(-f);
  }
  result.status = g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance
                      ? LbfgsStatus::converged
                      : LbfgsStatus::max_iterations;
  return result;
}

}  // namespace nodef
