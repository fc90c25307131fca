// Resistance of rotating bodies: the cost c(phi, phi+), the functional
// F(eta) = sum c d eta, its minimum over measures with lambda marginals and
// the ratio kappa of its maximum to the smooth-body value.
#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "roughscatter/body.hpp"
#include "roughscatter/errors.hpp"
#include "roughscatter/measures.hpp"

namespace roughscatter {

/// Density varrho(phi) of the rotation-averaged velocity distribution
/// relative to the normal.  The uniform density is the constant 3/8, which
/// makes F(eta0) = 1.
struct RotationDensity {
  std::string name = "uniform";
  std::function<double(double)> value = [](double) { return 0.375; };

  double operator()(double phi) const { return value(phi); }

  static RotationDensity uniform() { return {}; }

  /// exp(-phi^2 / (2 w^2)), unnormalized.
  static RotationDensity gaussian(double width) {
    if (!(width > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gaussian width must be positive");
    return {"gaussian:" + std::to_string(width), [width](double p) { return std::exp(-0.5 * p * p / (width * width)); }};
  }

  /// cos(phi)^k.
  static RotationDensity cos_power(double k) {
    return {"cos_power:" + std::to_string(k), [k](double p) { return std::pow(std::cos(p), k); }};
  }

  /// 1 + s sin(phi), |s| <= 1.
  static RotationDensity tilted(double s) {
    if (!(std::abs(s) <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "tilt must lie in [-1, 1]");
    return {"tilted:" + std::to_string(s), [s](double p) { return 1.0 + s * std::sin(p); }};
  }

  /// Parses "uniform", "gaussian:w", "cos_power:k" or "tilted:s".
  static RotationDensity parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    double arg = 0.0;
    if (colon != std::string::npos) {
      try {
        std::size_t used = 0;
        arg = std::stod(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParse, "bad density parameter in '" + text + "'");
      }
    }
    if (head == "uniform" && colon == std::string::npos) return uniform();
    if (colon == std::string::npos) throw Error(ErrorCode::kParse, "unknown density '" + text + "'");
    if (head == "gaussian") return gaussian(arg);
    if (head == "cos_power") return cos_power(arg);
    if (head == "tilted") return tilted(arg);
    throw Error(ErrorCode::kParse, "unknown density '" + text + "'");
  }

  /// Throws unless the density is finite and nonnegative on a grid.
  void validate(int grid = 1001) const {
    for (int g = 0; g < grid; ++g) {
      const double v = value(-kHalfPi + kPi * g / (grid - 1));
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "density must be finite and >= 0");
    }
  }
};

/// c(phi, phi+) = (1 + cos(phi - phi+)) (varrho(phi) + varrho(phi+)) / 2.
inline double cost(const RotationDensity& r, double phi, double phi_plus) {
  return (1.0 + std::cos(phi - phi_plus)) * 0.5 * (r(phi) + r(phi_plus));
}

namespace detail {

template <class F>
double integrate(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// Integral over [-pi/2, pi/2], split at 0 so spikes there are resolved.
template <class F>
double integrate_angle(F f) {
  return integrate(f, -kHalfPi, 0.0) + integrate(f, 0.0, kHalfPi);
}

}  // namespace detail

/// kappa = int varrho cos / int varrho cos^3.
inline double kappa(const RotationDensity& r) {
  const double num = detail::integrate_angle([&](double p) { return r(p) * std::cos(p); });
  const double den = detail::integrate_angle([&](double p) { return r(p) * std::pow(std::cos(p), 3); });
  if (!(den > 0.0)) throw Error(ErrorCode::kZeroDenominator, "int varrho cos^3 vanishes");
  return num / den;
}

/// Cost at cell representatives of an equal-lambda grid.
struct CostGrid {
  int n = 0;
  std::vector<double> c;

  double at(int i, int j) const { return c[static_cast<std::size_t>(i) * n + j]; }
};

inline CostGrid cost_grid(const RotationDensity& r, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "grid size must be positive");
  const Binning b(BinningKind::kEqualLambda, n);
  CostGrid g;
  g.n = n;
  g.c.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.c[static_cast<std::size_t>(i) * n + j] = cost(r, b.representative(i), b.representative(j));
  return g;
}

/// F of a grid measure by cell-representative quadrature.
inline double evaluate_F(const GridMeasure& eta, const RotationDensity& r) {
  const Binning& b = eta.binning();
  double s = 0.0;
  for (int i = 0; i < b.bins(); ++i)
    for (int j = 0; j < b.bins(); ++j) {
      const double m = eta.at(i, j);
      if (m != 0.0) s += m * cost(r, b.representative(i), b.representative(j));
    }
  return s;
}

/// F of a closed-form family: line integrals of the cost along its support.
inline double evaluate_F(AnalyticFamily f, const RotationDensity& r) {
  double s = 0.0;
  for (const LineComponent& c : components(f)) {
    s += detail::integrate([&](double p) { return c.weight(p) * cost(r, p, c.target(p)); }, c.lo,
                           std::min(0.0, c.hi)) +
         detail::integrate([&](double p) { return c.weight(p) * cost(r, p, c.target(p)); }, std::max(0.0, c.lo),
                           c.hi);
  }
  return s;
}

struct TransportPlan {
  int n = 0;
  /// Row-major masses; both marginals are 2/n per cell.
  std::vector<double> mass;
  double value = 0.0;
  /// Optimality certificate: dual potentials with u_i + v_j <= c_ij.
  std::vector<double> u, v;
  double dual_value = 0.0;
  double max_dual_violation = 0.0;
  double max_slack_on_support = 0.0;

  double at(int i, int j) const { return mass[static_cast<std::size_t>(i) * n + j]; }
  double duality_gap() const { return value - dual_value; }
  bool certified(double tol = 1e-10) const {
    return max_dual_violation <= tol && max_slack_on_support <= tol && std::abs(duality_gap()) <= tol;
  }
};

namespace detail {

/// Minimum-cost perfect matching (Hungarian method with potentials).
/// Returns row -> column and the potentials.
inline std::vector<int> hungarian(const CostGrid& g, std::vector<double>& u_out, std::vector<double>& v_out) {
  const int n = g.n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = g.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(n);
  for (int j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
  u_out.assign(u.begin() + 1, u.end());
  v_out.assign(v.begin() + 1, v.end());
  return match;
}

}  // namespace detail

/// Exact minimum of sum c_ij P_ij over P >= 0 with all row and column sums
/// 2/n.  With equal marginals the vertices of this polytope are scaled
/// permutation matrices, so a minimum-cost assignment is optimal; the
/// returned plan is symmetrized, which keeps the value for symmetric costs.
inline TransportPlan solve_min(const CostGrid& g) {
  const int n = g.n;
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need n >= 2");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!std::isfinite(g.at(i, j))) throw Error(ErrorCode::kSolverFailure, "non-finite cost");
  TransportPlan plan;
  plan.n = n;
  const std::vector<int> match = detail::hungarian(g, plan.u, plan.v);
  const double w = 2.0 / n;
  plan.mass.assign(static_cast<std::size_t>(n) * n, 0.0);
  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    plan.mass[static_cast<std::size_t>(i) * n + match[i]] += 0.5 * w;
    plan.mass[static_cast<std::size_t>(match[i]) * n + i] += 0.5 * w;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) value += plan.at(i, j) * g.at(i, j);
  plan.value = value;
  // Dual of the transportation problem: max sum (2/n)(u_i + v_j) subject to
  // u_i + v_j <= c_ij.
  double dual = 0.0;
  for (int i = 0; i < n; ++i) dual += w * (plan.u[i] + plan.v[i]);
  plan.dual_value = dual;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double slack = g.at(i, j) - plan.u[i] - plan.v[j];
      plan.max_dual_violation = std::max(plan.max_dual_violation, -slack);
      if (j == match[i]) plan.max_slack_on_support = std::max(plan.max_slack_on_support, std::abs(slack));
    }
  for (int i = 0; i < n; ++i) {
    double row = 0.0, col = 0.0;
    for (int j = 0; j < n; ++j) {
      row += plan.at(i, j);
      col += plan.at(j, i);
    }
    if (std::abs(row - w) > 1e-12 || std::abs(col - w) > 1e-12) {
      throw Error(ErrorCode::kSolverFailure, "plan marginals are off");
    }
  }
  return plan;
}

inline TransportPlan solve_min(const RotationDensity& r, int n) { return solve_min(cost_grid(r, n)); }

/// Plan as a grid measure on the equal-lambda binning.
inline GridMeasure to_measure(const TransportPlan& p) {
  GridMeasure gm(Binning(BinningKind::kEqualLambda, p.n));
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j < p.n; ++j) gm.at(i, j) = p.at(i, j);
  return gm;
}

/// Resistance of a body from its nu histogram: sum over sides of F of the
/// side slab (which carries mass 2 c_i).
inline double resistance(const T3Histogram& h, const RotationDensity& r) {
  const Binning& b = h.binning();
  double s = 0.0;
  for (int side = 0; side < h.sides(); ++side)
    for (int i = 0; i < b.bins(); ++i)
      for (int j = 0; j < b.bins(); ++j) {
        const double m = h.at(side, i, j);
        if (m != 0.0) s += m * cost(r, b.representative(i), b.representative(j));
      }
  return s;
}

/// Resistance of a body whose every side carries the closed-form family f:
/// |dB| F(f).
inline double resistance(const ConvexBody& body, AnalyticFamily f, const RotationDensity& r) {
  return body.perimeter() * evaluate_F(f, r);
}

}  // namespace roughscatter
