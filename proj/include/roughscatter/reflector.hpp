// Ellipse/parabola reflector pairs and the pseudo-billiard map they define.
//
// Angles are polar angles about the origin O measured clockwise from (0, 1),
// the same convention as the hollow's angle coordinate: direction psi is
// (sin psi, cos psi).
#pragma once

#include <array>
#include <cmath>
#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roughscatter/errors.hpp"
#include "roughscatter/geometry.hpp"
#include "roughscatter/hollow.hpp"
#include "roughscatter/sampling.hpp"
#include "roughscatter/synthesis.hpp"

namespace roughscatter {

inline Vec2 direction_at(double psi) { return {std::sin(psi), std::cos(psi)}; }
inline Point2 polar_point(double psi, double r) { return r * direction_at(psi); }
inline double polar_angle(Point2 p) { return std::atan2(p.x, p.y); }
/// Counter-clockwise angle from +x, as used by the curve extents.
inline double math_angle(double psi) { return kHalfPi - psi; }

struct Calibration {
  double lambda = 0.0;
  double lambda_prime = 0.0;
};

/// Focusing factor of an ellipse with semi-axes sqrt(1 + l), sqrt(l) and foci
/// 2 apart: the rate of change of the angle at the origin with respect to
/// the angle at the other focus, l / (1 + sqrt(1 + l))^2 = (a - 1)/(a + 1).
inline double focusing_factor(double l) {
  const double a = std::sqrt(1.0 + l);
  return (a - 1.0) / (a + 1.0);
}

/// Solves focusing_factor(l) = cos(angle) / 2 for l.
inline double calibrated_lambda(double angle) {
  const double c = 0.5 * std::cos(angle);
  if (!(c > 0.0) || !(std::abs(angle) < kHalfPi)) throw Error(ErrorCode::kDegenerate, "cos(angle) must be positive");
  return 4.0 * c / ((1.0 - c) * (1.0 - c));
}

/// lambda from cos(Phi'), lambda' from cos(Phi).
inline Calibration calibrate(double Phi, double Phi_prime) {
  return {calibrated_lambda(Phi_prime), calibrated_lambda(Phi)};
}

/// One reflector pair: ellipses with foci (O, F) and (O, F'), |OF| = |OF'| = 2,
/// and parabolas with foci F, F' on the common axis FF' with focal distance
/// delta, opening towards each other.
struct ReflectorSpec {
  double Phi = 0.0;
  double Phi_prime = 0.0;
  double lambda = 1.0;
  double lambda_prime = 1.0;
  double delta = 0.0;

  static ReflectorSpec calibrated(double Phi, double Phi_prime, double delta) {
    const Calibration c = calibrate(Phi, Phi_prime);
    return {Phi, Phi_prime, c.lambda, c.lambda_prime, delta};
  }

  Point2 F() const { return polar_point(Phi, 2.0); }
  Point2 F_prime() const { return polar_point(Phi_prime, 2.0); }
  /// Unit vector from F to F'.
  UnitVec2 axis() const { return UnitVec2(F_prime() - F()); }
  /// Half the opening angle FOF'.
  double half_gap() const { return 0.5 * std::abs(Phi_prime - Phi); }
  /// Focal distance at which the parabolas pass through O.
  double delta_critical() const { return 1.0 - std::sin(half_gap()); }
  /// Distances from F to the two points where the parabola crosses line OF:
  /// towards O and away from O.
  double inner_crossing() const { return 2.0 * delta / (1.0 - std::sin(half_gap())); }
  double outer_crossing() const { return 2.0 * delta / (1.0 + std::sin(half_gap())); }
  /// Far vertex of the ellipse on ray OF, as a distance from O.
  double ellipse_vertex() const { return 1.0 + std::sqrt(1.0 + lambda); }
  double ellipse_prime_vertex() const { return 1.0 + std::sqrt(1.0 + lambda_prime); }

  EllipticArc ellipse(AngleRange r = {0.0, kTwoPi}) const { return {{0.0, 0.0}, F(), lambda, r}; }
  EllipticArc ellipse_prime(AngleRange r = {0.0, kTwoPi}) const { return {{0.0, 0.0}, F_prime(), lambda_prime, r}; }
  ParabolicArc parabola(std::optional<AngleRange> r = {}) const { return {F(), axis(), delta, r ? *r : open_range(axis())}; }
  ParabolicArc parabola_prime(std::optional<AngleRange> r = {}) const {
    return {F_prime(), -axis(), delta, r ? *r : open_range(-axis())};
  }

 private:
  /// Whole parabola apart from the direction of its axis.
  static AngleRange open_range(UnitVec2 u) {
    const double ax = std::atan2(u.y(), u.x());
    return {ax + 1e-9, kTwoPi - 2e-9};
  }
};

struct PseudoBilliardResult {
  double phi_out = 0.0;
  double xi_out = 0.0;
  /// Reflection points in order of reflection.
  std::array<Point2, 4> hits{};
};

namespace detail {

/// First forward hit where the ray leaves the conic's interior, i.e.
/// reflects from its interior side.
inline std::optional<HitRecord> interior_hit(const Ray& ray, const BoundaryCurve& c) {
  for (const HitRecord& h : intersect(ray, c, kTMin)) {
    if (dot(implicit_gradient(c, h.point), ray.dir) > 0.0) return h;
  }
  return std::nullopt;
}

}  // namespace detail

/// Pseudo-billiard map of a reflector pair: starting at (xi, 0) with velocity
/// (sin phi, cos phi), reflect from the interior sides of E, P, P', E' in
/// turn (ignoring every other crossing) and return the crossing of the line
/// y = 0.  With reverse set the order is E', P', P, E.
inline PseudoBilliardResult pseudo_billiard(const ReflectorSpec& spec, double phi, double xi, bool reverse = false) {
  std::array<BoundaryCurve, 4> order{spec.ellipse(), spec.parabola(), spec.parabola_prime(), spec.ellipse_prime()};
  if (reverse) order = {order[3], order[2], order[1], order[0]};
  PseudoBilliardResult r;
  Ray ray{{xi, 0.0}, entry_direction(phi)};
  for (int s = 0; s < 4; ++s) {
    const auto h = detail::interior_hit(ray, order[s]);
    if (!h) throw Error(ErrorCode::kOrderViolation, "reflection " + std::to_string(s + 1) + " does not occur");
    r.hits[s] = h->point;
    ray = Ray{h->point, reflect(ray.dir, h->normal)};
  }
  if (!(ray.dir.y() < 0.0)) throw Error(ErrorCode::kOrderViolation, "trajectory does not return to the line");
  const double t = -ray.origin.y / ray.dir.y();
  r.xi_out = ray.origin.x + t * ray.dir.x();
  r.phi_out = exit_angle(ray.dir);
  return r;
}

// --- Reflector hollows -----------------------------------------------------

enum class WallRole { kEdge, kMirror, kEllipse, kEllipsePrime, kParabola, kParabolaPrime, kShield, kRadial };

inline const char* role_name(WallRole r) {
  switch (r) {
    case WallRole::kEdge: return "edge";
    case WallRole::kMirror: return "mirror";
    case WallRole::kEllipse: return "ellipse";
    case WallRole::kEllipsePrime: return "ellipse_prime";
    case WallRole::kParabola: return "parabola";
    case WallRole::kParabolaPrime: return "parabola_prime";
    case WallRole::kShield: return "shield";
    case WallRole::kRadial: return "radial";
  }
  return "unknown";
}

/// Reflector pair channelling J^{i,j} to J^{sigma(i),j} (i < sigma(i)).
struct SubPair {
  int i = 0;
  int j = 0;
  ReflectorSpec spec;
  /// J^{i,j} and J^{sigma(i),j}.
  double lo = 0.0, hi = 0.0, lo_prime = 0.0, hi_prime = 0.0;
  /// Angular intervals taken by the two lateral reflectors.
  double wedge_lo = 0.0, wedge_hi = 0.0, wedge_prime_lo = 0.0, wedge_prime_hi = 0.0;
  /// Radii of the shielding arcs in front of the parabolas.
  double shield = 0.0, shield_prime = 0.0;
  /// Sub-intervals of J^{i,j} and J^{sigma(i),j} that are channelled exactly.
  double good_lo = 0.0, good_hi = 0.0, good_prime_lo = 0.0, good_prime_hi = 0.0;
  /// Largest opening half-width for which the channel conditions hold.
  double a_max = 0.0;
  /// Wall ids of E, P, P', E'.
  std::array<int, 4> walls{-1, -1, -1, -1};
};

struct ReflectorHollowOptions {
  /// Fixed subdivision count; chosen from the derivative bounds when unset.
  std::optional<int> k;
  int k_max = 400;
  /// Fixed opening half-width; found by bisection when unset.
  std::optional<double> a;
  /// Grid size for locating the exactly channelled sub-intervals.
  int grid = 64;
  int bisection_steps = 40;
};

struct ReflectorHollow {
  InvolutivePermutation sigma;
  double epsilon = 0.0;
  int k = 0;
  /// Opening half-width and the inner half-width a (1 + eps)^-3.
  double a = 0.0;
  double a_inner = 0.0;
  Hollow hollow;
  std::vector<WallRole> roles;
  std::vector<SubPair> pairs;
};

namespace detail {

/// Angle psi' with sin psi' = sin psi + mass.
inline double shift_by_mass(double psi, double mass) {
  const double s = std::sin(psi) + mass;
  if (!(std::abs(s) < 1.0)) throw Error(ErrorCode::kInfeasibleEpsilon, "angular shift leaves [-pi/2, pi/2]");
  return std::asin(s);
}

/// Arc of the circle of radius r about O over [psi0, psi1].
inline CircularArc polar_arc(double r, double psi0, double psi1) {
  return {{0.0, 0.0}, r, {math_angle(psi0), -(psi1 - psi0)}};
}

inline AngleRange polar_range(double psi0, double psi1) { return {math_angle(psi0), -(psi1 - psi0)}; }

/// Range of polar angles about a focus running from direction d0 to d1
/// through direction mid.
inline AngleRange sweep_through(Vec2 d0, Vec2 mid, Vec2 d1) {
  const double a0 = std::atan2(d0.y, d0.x), am = std::atan2(mid.y, mid.x), a1 = std::atan2(d1.y, d1.x);
  const double s1 = wrap_pi(am - a0), s2 = wrap_pi(a1 - am);
  return {a0, s1 + s2};
}

/// Left-side lateral parabola arc of P: from the crossing towards O around
/// the vertex to the outer crossing.
inline ParabolicArc parabola_arc(const ReflectorSpec& s) {
  const Vec2 f = UnitVec2(s.F()).vec();
  return s.parabola(sweep_through(-1.0 * f, -1.0 * s.axis().vec(), f));
}

/// Right-side arc of P', from the outer crossing around the vertex to the
/// crossing towards O.
inline ParabolicArc parabola_prime_arc(const ReflectorSpec& s) {
  const Vec2 f = UnitVec2(s.F_prime()).vec();
  return s.parabola_prime(sweep_through(f, s.axis().vec(), -1.0 * f));
}

/// Largest radius of the chord F F' (thickened by band) at polar angles in
/// [w0, w1]; zero when the chord does not pass there.
inline double chord_radius_in(const ReflectorSpec& s, double band, double w0, double w1) {
  const double t1 = std::min(s.Phi, s.Phi_prime), t2 = std::max(s.Phi, s.Phi_prime);
  const double lo = std::max(w0 - band, t1), hi = std::min(w1 + band, t2);
  if (lo > hi) return 0.0;
  const double mid = 0.5 * (t1 + t2), half = 0.5 * (t2 - t1);
  const double dev = std::max(std::abs(lo - mid), std::abs(hi - mid));
  return 2.0 * std::cos(half) / std::cos(std::min(dev, half)) + band;
}

/// -(cos Phi'/cos Phi) dphi'/dphi and (cos Phi'/cos Phi)(cos phi/cos phi')
/// at phi on the axis trajectory.
inline std::pair<double, double> derivative_ratios(const ReflectorSpec& s, double phi) {
  const double h = 1e-6;
  const double p = pseudo_billiard(s, phi, 0.0).phi_out;
  const double d = (pseudo_billiard(s, phi + h, 0.0).phi_out - pseudo_billiard(s, phi - h, 0.0).phi_out) / (2 * h);
  const double c = std::cos(s.Phi_prime) / std::cos(s.Phi);
  return {-c * d, c * std::cos(phi) / std::cos(p)};
}

struct Anchors {
  int i, j;
  double lo, hi, lo_prime, hi_prime;
  double Phi, Phi_prime;
};

/// Anchor angles of every sub-pair for subdivision k.  An anchor of P that
/// coincides with an anchor of P' is moved right past the neighbouring
/// lateral reflector.
inline std::vector<Anchors> sub_pair_anchors(const InvolutivePermutation& sigma, int k, double eps) {
  const int m = sigma.size();
  const auto fine = [&](int i, int j) { return Binning::edge(BinningKind::kEqualLambda, k * m, (i - 1) * k + j); };
  std::vector<Anchors> out;
  for (int i = 2; i <= m - 1; ++i) {
    const int t = sigma(i);
    if (t <= i || t >= m) continue;
    for (int j = 1; j <= k; ++j) out.push_back({i, j, fine(i, j - 1), fine(i, j), fine(t, j - 1), fine(t, j), fine(i, j - 1), fine(t, j)});
  }
  const double w = eps / (k * m);
  for (auto& p : out) {
    for (const auto& q : out) {
      if (std::abs(q.Phi_prime - p.Phi) < 1e-15) p.Phi = shift_by_mass(p.lo, 4.0 * w);
    }
  }
  return out;
}

/// Smallest k for which both derivative ratios stay in [(1+eps)^-1, 1+eps]
/// within mass 2/(km) of every anchor.
inline int choose_k(const InvolutivePermutation& sigma, double eps, int k_max) {
  const int m = sigma.size();
  for (int k = 1; k <= k_max; ++k) {
    bool ok = true;
    for (const Anchors& a : sub_pair_anchors(sigma, k, eps)) {
      const ReflectorSpec s = ReflectorSpec::calibrated(a.Phi, a.Phi_prime, 0.0);
      ReflectorSpec sd = s;
      sd.delta = 0.25 * s.delta_critical();
      for (double t : {-0.95, -0.5, 0.5, 0.95}) {
        const double sp = std::sin(a.Phi) + t * 2.0 / (k * m);
        if (!(std::abs(sp) < 1.0)) continue;
        try {
          const auto [r1, r2] = derivative_ratios(sd, std::asin(sp));
          ok = r1 >= 1.0 / (1.0 + eps) && r1 <= 1.0 + eps && r2 >= 1.0 / (1.0 + eps) && r2 <= 1.0 + eps;
        } catch (const Error&) {
          ok = false;
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (ok) return k;
  }
  throw Error(ErrorCode::kInfeasibleEpsilon, "no subdivision up to k_max meets the derivative bounds");
}

}  // namespace detail

/// Hollow whose scattering sends almost every direction in J^i to J^sigma(i)
/// for interior cells: reflector pairs for transposed interior cells,
/// radius-2 mirror arcs for fixed cells (and cells paired with J^1 or J^m),
/// straight edges over J^1 and J^m.
inline ReflectorHollow build_reflector_hollow(const InvolutivePermutation& sigma, double eps,
                                              const ReflectorHollowOptions& opt = {}) {
  const int m = sigma.size();
  if (m < 3) throw Error(ErrorCode::kInvalidArgument, "need m >= 3");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  ReflectorHollow out;
  out.sigma = sigma;
  out.epsilon = eps;
  out.k = opt.k ? *opt.k : detail::choose_k(sigma, eps, opt.k_max);
  const int k = out.k;
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  const DirectionPartition part = partition(m);
  const double wmass = eps / (k * m);

  // Sub-pairs with their lateral reflector wedges.
  for (const auto& a : detail::sub_pair_anchors(sigma, k, eps)) {
    SubPair p;
    p.i = a.i;
    p.j = a.j;
    p.lo = a.lo;
    p.hi = a.hi;
    p.lo_prime = a.lo_prime;
    p.hi_prime = a.hi_prime;
    p.spec = ReflectorSpec::calibrated(a.Phi, a.Phi_prime, 0.0);
    p.wedge_hi = a.Phi;
    p.wedge_lo = detail::shift_by_mass(a.Phi, -wmass);
    p.wedge_prime_lo = a.Phi_prime;
    p.wedge_prime_hi = detail::shift_by_mass(a.Phi_prime, wmass);
    out.pairs.push_back(p);
  }
  auto& pairs = out.pairs;
  const std::size_t np = pairs.size();

  // Parabola size: inside the wedge and clear of every other pair's chord.
  std::vector<double> r_in(np);
  for (std::size_t p = 0; p < np; ++p) {
    r_in[p] = std::min(2.0 * std::sin(0.8 * (pairs[p].wedge_hi - pairs[p].wedge_lo)),
                       2.0 * std::sin(0.8 * (pairs[p].wedge_prime_hi - pairs[p].wedge_prime_lo)));
  }
  std::vector<double> shield(np), shield_prime(np);
  for (int iter = 0; iter < 3; ++iter) {
    std::vector<double> next = r_in;
    for (std::size_t p = 0; p < np; ++p) {
      double rmax = 0.0, rmax_prime = 0.0;
      for (std::size_t q = 0; q < np; ++q) {
        if (q == p) continue;
        rmax = std::max(rmax, detail::chord_radius_in(pairs[q].spec, r_in[q], pairs[p].wedge_lo, pairs[p].wedge_hi));
        rmax_prime = std::max(rmax_prime, detail::chord_radius_in(pairs[q].spec, r_in[q], pairs[p].wedge_prime_lo,
                                                                  pairs[p].wedge_prime_hi));
      }
      if (!(rmax < 1.99) || !(rmax_prime < 1.99)) {
        throw Error(ErrorCode::kInfeasibleEpsilon, "lateral reflector wedge is crossed by another channel");
      }
      const double g = 2.0 - rmax, gp = 2.0 - rmax_prime;
      next[p] = std::min({r_in[p], 0.25 * g, 0.25 * gp});
      shield[p] = rmax + 0.4 * g;
      shield_prime[p] = rmax_prime + 0.4 * gp;
    }
    r_in = next;
  }
  for (std::size_t p = 0; p < np; ++p) {
    SubPair& s = pairs[p];
    s.spec.delta = 0.5 * r_in[p] * (1.0 - std::sin(s.spec.half_gap()));
    s.shield = shield[p];
    s.shield_prime = shield_prime[p];
  }

  // Main element: base curves over the interior cells.
  struct Base {
    double lo, hi;
    WallRole role;
    int pair;
  };
  std::vector<Base> base;
  for (int i = 2; i <= m - 1; ++i) {
    const int t = sigma(i);
    if (t == i || t == 1 || t == m) {
      base.push_back({part.lo(i), part.hi(i), WallRole::kMirror, -1});
      continue;
    }
    for (std::size_t p = 0; p < np; ++p) {
      if (pairs[p].i == i) base.push_back({pairs[p].lo, pairs[p].hi, WallRole::kEllipse, static_cast<int>(p)});
      if (pairs[p].i == t) base.push_back({pairs[p].lo_prime, pairs[p].hi_prime, WallRole::kEllipsePrime, static_cast<int>(p)});
    }
  }
  std::sort(base.begin(), base.end(), [](const Base& x, const Base& y) { return x.lo < y.lo; });
  struct Reserve {
    double lo, hi;
    bool prime;
    int pair;
  };
  std::vector<Reserve> reserve;
  for (std::size_t p = 0; p < np; ++p) {
    reserve.push_back({pairs[p].wedge_lo, pairs[p].wedge_hi, false, static_cast<int>(p)});
    reserve.push_back({pairs[p].wedge_prime_lo, pairs[p].wedge_prime_hi, true, static_cast<int>(p)});
  }
  std::sort(reserve.begin(), reserve.end(), [](const Reserve& x, const Reserve& y) { return x.lo < y.lo; });
  for (std::size_t r = 1; r < reserve.size(); ++r) {
    if (reserve[r].lo < reserve[r - 1].hi - 1e-15) throw Error(ErrorCode::kInfeasibleEpsilon, "lateral reflectors overlap");
  }

  // Assemble the wall chain for opening half-width a.
  const auto assemble = [&](double a, std::vector<WallRole>* roles, std::vector<SubPair>* tagged) {
    std::vector<BoundaryCurve> walls;
    std::vector<WallRole> rl;
    const auto push = [&](BoundaryCurve c, WallRole role) {
      const Point2 start = curve_start(c);
      const Point2 from = walls.empty() ? Point2{-a, 0.0} : curve_end(walls.back());
      if (distance(from, start) > 1e-13) {
        walls.push_back(Segment{from, start});
        rl.push_back(walls.size() == 1 ? WallRole::kEdge : WallRole::kRadial);
      }
      walls.push_back(std::move(c));
      rl.push_back(role);
      return static_cast<int>(walls.size()) - 1;
    };
    const auto fill = [&](double x, double y) {
      for (const Base& b : base) {
        const double lo = std::max(x, b.lo), hi = std::min(y, b.hi);
        if (!(hi > lo + 1e-15)) continue;
        if (b.role == WallRole::kMirror) {
          push(detail::polar_arc(2.0, lo, hi), b.role);
        } else if (b.role == WallRole::kEllipse) {
          const int id = push(pairs[b.pair].spec.ellipse(detail::polar_range(lo, hi)), b.role);
          if (tagged) (*tagged)[b.pair].walls[0] = id;
        } else {
          const int id = push(pairs[b.pair].spec.ellipse_prime(detail::polar_range(lo, hi)), b.role);
          if (tagged) (*tagged)[b.pair].walls[3] = id;
        }
      }
    };
    double cursor = -kHalfPi;
    for (const Reserve& r : reserve) {
      fill(cursor, r.lo);
      const SubPair& p = pairs[r.pair];
      if (!r.prime) {
        push(detail::polar_arc(p.shield, r.lo, r.hi), WallRole::kShield);
        const int id = push(detail::parabola_arc(p.spec), WallRole::kParabola);
        if (tagged) (*tagged)[r.pair].walls[1] = id;
      } else {
        const int id = push(detail::parabola_prime_arc(p.spec), WallRole::kParabolaPrime);
        if (tagged) (*tagged)[r.pair].walls[2] = id;
        push(detail::polar_arc(p.shield_prime, r.lo, r.hi), WallRole::kShield);
      }
      cursor = r.hi;
    }
    fill(cursor, kHalfPi);
    walls.push_back(Segment{curve_end(walls.back()), {a, 0.0}});
    rl.push_back(WallRole::kEdge);
    if (roles) *roles = rl;
    return walls;
  };

  // Exactly channelled directions from the axis trajectories, then the
  // opening width by bisection over traced trajectories.
  double r_min = 1.0;
  for (double r : r_in) r_min = std::min(r_min, r);
  const double a_probe = 0.25 * r_min;
  const Hollow probe(assemble(a_probe, nullptr, &pairs), a_probe, "reflector");
  TraceOptions to;
  to.record_curves = true;
  to.max_bounces = 64;
  const auto channelled = [&](const SubPair& p, double xi, double phi, bool reverse, double* phi_out, double* xi_out) {
    const TraceResult r = trace(probe, {xi, phi}, to);
    if (!r.ok() || r.curves.size() != 4) return false;
    for (int s = 0; s < 4; ++s)
      if (r.curves[s] != p.walls[reverse ? 3 - s : s]) return false;
    const double lo = reverse ? p.lo : p.lo_prime, hi = reverse ? p.hi : p.hi_prime;
    if (phi_out) *phi_out = r.out.phi;
    if (xi_out) *xi_out = r.out.xi;
    return r.out.phi > lo && r.out.phi < hi;
  };
  for (SubPair& p : pairs) {
    const int n = opt.grid;
    std::vector<char> good(n + 1);
    std::vector<double> image(n + 1);
    const auto phi_at = [&](int g) {
      return std::asin(std::sin(p.lo) + (std::sin(p.hi) - std::sin(p.lo)) * g / n);
    };
    for (int g = 0; g <= n; ++g) good[g] = channelled(p, 0.0, phi_at(g), false, &image[g], nullptr);
    int best_lo = 0, best_len = 0;
    for (int g = 0; g <= n;) {
      if (!good[g]) {
        ++g;
        continue;
      }
      int h = g;
      while (h <= n && good[h]) ++h;
      if (h - g > best_len) {
        best_len = h - g;
        best_lo = g;
      }
      g = h;
    }
    if (best_len < 3) throw Error(ErrorCode::kInfeasibleEpsilon, "sub-pair channels almost no directions");
    const int g0 = best_lo + 1, g1 = best_lo + best_len - 2;
    p.good_lo = phi_at(g0);
    p.good_hi = phi_at(g1);
    p.good_prime_lo = std::min(image[g0], image[g1]);
    p.good_prime_hi = std::max(image[g0], image[g1]);
  }
  const double lo_bound = 1.0 / std::pow(1.0 + eps, 3), hi_bound = std::pow(1.0 + eps, 3);
  const auto admissible = [&](const SubPair& p, double a) {
    for (bool reverse : {false, true}) {
      const double lo = reverse ? p.good_prime_lo : p.good_lo, hi = reverse ? p.good_prime_hi : p.good_hi;
      for (int g = 0; g <= 8; ++g) {
        const double phi = std::asin(std::sin(lo) + (std::sin(hi) - std::sin(lo)) * g / 8.0);
        for (double xi : {-a, -0.5 * a, 0.5 * a, a}) {
          const double h = 1e-3 * a;
          double x1 = 0.0, x2 = 0.0;
          if (!channelled(p, xi, phi, reverse, nullptr, nullptr)) return false;
          if (!channelled(p, xi - h, phi, reverse, nullptr, &x1) || !channelled(p, xi + h, phi, reverse, nullptr, &x2)) {
            return false;
          }
          const double d = std::abs(x2 - x1) / (2 * h);
          if (d < lo_bound || d > hi_bound) return false;
        }
      }
    }
    return true;
  };
  // Fixed cells: the directions lost near the ends of J^i stay below eps |J^i|.
  double a = a_probe / (1.0 + 1e-3);
  for (int i = 2; i <= m - 1; ++i) {
    const int t = sigma(i);
    if (t == i || t == 1 || t == m) a = std::min(a, 4.0 * std::tan(0.25 * eps * (part.hi(i) - part.lo(i))));
  }
  for (SubPair& p : pairs) {
    if (opt.a) break;
    double lo = 0.0, hi = a;
    if (admissible(p, hi)) {
      lo = hi;
    } else {
      for (int s = 0; s < opt.bisection_steps; ++s) {
        const double mid = 0.5 * (lo + hi);
        (admissible(p, mid) ? lo : hi) = mid;
      }
    }
    if (!(lo > 0.0)) throw Error(ErrorCode::kInfeasibleEpsilon, "no opening width keeps the channel");
    p.a_max = lo;
    a = std::min(a, lo);
  }
  if (opt.a) a = *opt.a;
  out.a = a;
  out.a_inner = a / std::pow(1.0 + eps, 3);
  out.hollow = Hollow(assemble(a, &out.roles, &pairs), a, "reflector");
  return out;
}

/// Misdirected inflow per interior cell: the measure of (xi, phi) in
/// I x J^i with phi+ outside J^sigma(i) (discarded trajectories count as
/// misdirected), as an absolute mass and as a fraction of the cell's 2/m.
struct MisdirectionReport {
  std::vector<int> cells;
  std::vector<double> mass;
  std::vector<double> fraction;
  std::vector<std::uint64_t> discarded;
  std::uint64_t samples_per_cell = 0;
};

inline MisdirectionReport misdirection(const ReflectorHollow& rh, std::uint64_t samples_per_cell, std::uint64_t seed,
                                       int threads = 0) {
  const int m = rh.sigma.size();
  const DirectionPartition part = partition(m);
  MisdirectionReport rep;
  rep.samples_per_cell = samples_per_cell;
  const double a = rh.hollow.half_width();
  for (int i = 2; i <= m - 1; ++i) {
    if (i == rh.sigma(1) || i == rh.sigma(m)) continue;
    const int target = rh.sigma(i);
    struct Count {
      std::uint64_t wrong = 0, discarded = 0;
    };
    const double s0 = std::sin(part.lo(i)), s1 = std::sin(part.hi(i));
    const auto counts = run_shards<Count>(samples_per_cell, seed + 1000003ull * i, threads,
                                          [&](int, std::uint64_t n, Rng& rng) {
                                            Count c;
                                            for (std::uint64_t t = 0; t < n; ++t) {
                                              const double xi = a * (2.0 * rng.uniform() - 1.0);
                                              const double phi = std::asin(s0 + (s1 - s0) * rng.uniform());
                                              const TraceResult r = trace(rh.hollow, {xi, phi});
                                              if (!r.ok()) {
                                                ++c.wrong;
                                                ++c.discarded;
                                              } else if (part.cell(r.out.phi) != target) {
                                                ++c.wrong;
                                              }
                                            }
                                            return c;
                                          });
    Count total;
    for (const Count& c : counts) {
      total.wrong += c.wrong;
      total.discarded += c.discarded;
    }
    const double f = static_cast<double>(total.wrong) / static_cast<double>(samples_per_cell);
    rep.cells.push_back(i);
    rep.fraction.push_back(f);
    rep.mass.push_back(f * 2.0 / m);
    rep.discarded.push_back(total.discarded);
  }
  return rep;
}

}  // namespace roughscatter
