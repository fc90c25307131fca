// 2D ray geometry: curve primitives, analytic ray intersection, specular
// reflection and a bounding-volume index for first-hit queries.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "roughscatter/errors.hpp"

namespace roughscatter {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHalfPi = 0.5 * std::numbers::pi;

/// Forward guard applied to every ray query so a ray leaving a wall does
/// not re-hit it at t = 0.
inline constexpr double kTMin = 1e-9;
/// Hits with |<n, dir>| below this are reported as near-tangent.
inline constexpr double kTangencyTol = 1e-9;
/// Distance slack for endpoint inclusion.
inline constexpr double kEndpointTol = 1e-12;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

using Point2 = Vec2;

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
/// Counter-clockwise perpendicular.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// A vector of unit length.  Construction normalizes.
class UnitVec2 {
 public:
  constexpr UnitVec2() = default;
  explicit UnitVec2(Vec2 v) {
    const double len = norm(v);
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw Error(ErrorCode::kInvalidArgument, "cannot normalize a zero vector");
    }
    v_ = v / len;
  }
  UnitVec2(double x, double y) : UnitVec2(Vec2{x, y}) {}

  /// Unit vector at math angle theta (counter-clockwise from +x).
  static UnitVec2 from_angle(double theta) {
    UnitVec2 u;
    u.v_ = {std::cos(theta), std::sin(theta)};
    return u;
  }

  /// Wraps a vector the caller guarantees to be of unit length.
  static constexpr UnitVec2 unchecked(Vec2 v) {
    UnitVec2 u;
    u.v_ = v;
    return u;
  }

  constexpr double x() const { return v_.x; }
  constexpr double y() const { return v_.y; }
  constexpr Vec2 vec() const { return v_; }
  constexpr operator Vec2() const { return v_; }
  UnitVec2 operator-() const {
    UnitVec2 u;
    u.v_ = -v_;
    return u;
  }

 private:
  Vec2 v_{0.0, 1.0};
};

struct Ray {
  Point2 origin;
  UnitVec2 dir;

  Point2 at(double t) const { return origin + t * dir.vec(); }
};

/// Specular reflection of v in the line with normal n.
inline UnitVec2 reflect(UnitVec2 v, UnitVec2 n) {
  const Vec2 out = v.vec() - 2.0 * dot(v, n) * n.vec();
  return UnitVec2(out);
}

/// Wraps an angle into [0, 2pi).
inline double wrap_two_pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

/// Wraps an angle into (-pi, pi].
inline double wrap_pi(double a) {
  double r = wrap_two_pi(a);
  if (r > kPi) r -= kTwoPi;
  return r;
}

/// Half-open angular interval [start, start + sweep) for sweep > 0, or
/// (start + sweep, start] traversed clockwise for sweep < 0.  The start is
/// the closed end.
struct AngleRange {
  double start = 0.0;
  double sweep = kTwoPi;

  double end() const { return start + sweep; }
  double at(double s) const { return start + s * sweep; }

  /// Membership of angle theta for a point at distance radius from the
  /// polar center; the slack at the closed end is kEndpointTol in length.
  bool contains(double theta, double radius) const {
    if (std::abs(sweep) >= kTwoPi) return true;
    const double off = sweep > 0.0 ? wrap_two_pi(theta - start)
                                   : wrap_two_pi(start - theta);
    if (off < std::abs(sweep)) return true;
    const double back = (kTwoPi - off) * radius;
    return back <= kEndpointTol;
  }

  /// Fractional position of theta along the range (may be outside [0,1]).
  double fraction(double theta) const {
    const double off = sweep > 0.0 ? wrap_two_pi(theta - start)
                                   : wrap_two_pi(start - theta);
    return off / std::abs(sweep);
  }
};

struct Segment {
  Point2 p0;
  Point2 p1;
};

/// Arc of the circle |p - center| = radius over a polar range about center.
struct CircularArc {
  Point2 center;
  double radius = 1.0;
  AngleRange range;
};

/// Arc of the ellipse with foci focus1, focus2 (|focus1 - focus2| = 2),
/// semi-major axis sqrt(1 + lambda) and semi-minor axis sqrt(lambda).  The
/// range is the polar angle about focus1.
struct EllipticArc {
  Point2 focus1;
  Point2 focus2;
  double lambda = 1.0;
  AngleRange range;

  double semi_major() const { return std::sqrt(1.0 + lambda); }
  double semi_minor() const { return std::sqrt(lambda); }
  double axis_angle() const {
    return std::atan2(focus2.y - focus1.y, focus2.x - focus1.x);
  }
  /// Distance from focus1 to the ellipse in direction theta.
  double radius_at(double theta) const {
    return lambda / (semi_major() - std::cos(theta - axis_angle()));
  }
};

/// Arc of the parabola with the given focus, opening direction axis and
/// focus-to-vertex distance delta.  The range is the polar angle about the
/// focus and must not contain the axis direction.
struct ParabolicArc {
  Point2 focus;
  UnitVec2 axis;
  double delta = 1.0;
  AngleRange range;

  double axis_angle() const { return std::atan2(axis.y(), axis.x()); }
  /// Distance from the focus to the parabola in direction theta.
  double radius_at(double theta) const {
    return 2.0 * delta / (1.0 - std::cos(theta - axis_angle()));
  }
};

using BoundaryCurve = std::variant<Segment, CircularArc, EllipticArc, ParabolicArc>;

struct HitRecord {
  double t = 0.0;
  Point2 point;
  UnitVec2 normal;
  int curve = -1;
};

namespace detail {

/// Up to two hits of a ray with one conic or segment.
struct HitPair {
  std::array<HitRecord, 2> hit;
  int count = 0;

  void push(const HitRecord& h) { hit[count++] = h; }
  void sort() {
    if (count == 2 && hit[1].t < hit[0].t) std::swap(hit[0], hit[1]);
  }
};

/// Real roots of a t^2 + b t + c = 0 in ascending order.
inline int solve_quadratic(double a, double b, double c, double& r0, double& r1) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) return 0;
  if (std::abs(a) <= 1e-15 * scale) {
    if (b == 0.0) return 0;
    r0 = -c / b;
    return 1;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return 0;
  const double s = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(s, b));
  if (q == 0.0) {
    r0 = r1 = 0.0;
    return 2;
  }
  r0 = q / a;
  r1 = c / q;
  if (r1 < r0) std::swap(r0, r1);
  return 2;
}

inline UnitVec2 facing(Vec2 grad, const Ray& ray) {
  UnitVec2 n(grad);
  if (dot(n, ray.dir) > 0.0) n = -n;
  return n;
}

inline void intersect_curve(const Ray& ray, const Segment& s, double t_min, HitPair& out) {
  const Vec2 e = s.p1 - s.p0;
  const double denom = cross(ray.dir, e);
  const double len = norm(e);
  if (std::abs(denom) <= 1e-300 || len == 0.0) return;
  const Vec2 w = s.p0 - ray.origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, ray.dir) / denom;
  const double tol = kEndpointTol / len;
  if (u < -tol || u > 1.0 + tol || !(t > t_min)) return;
  out.push({t, ray.at(t), facing(perp(e), ray), -1});
}

inline void intersect_curve(const Ray& ray, const CircularArc& c, double t_min, HitPair& out) {
  const Vec2 oc = ray.origin - c.center;
  double r0 = 0.0, r1 = 0.0;
  const int n = solve_quadratic(1.0, 2.0 * dot(oc, ray.dir), dot(oc, oc) - c.radius * c.radius, r0, r1);
  for (int i = 0; i < n; ++i) {
    const double t = i == 0 ? r0 : r1;
    if (!(t > t_min)) continue;
    const Point2 p = ray.at(t);
    const Vec2 d = p - c.center;
    if (!c.range.contains(std::atan2(d.y, d.x), c.radius)) continue;
    out.push({t, p, facing(d, ray), -1});
  }
}

inline void intersect_curve(const Ray& ray, const EllipticArc& e, double t_min, HitPair& out) {
  const Point2 center = 0.5 * (e.focus1 + e.focus2);
  const UnitVec2 e1(e.focus2 - e.focus1);
  const Vec2 e2 = perp(e1);
  const double a2 = 1.0 + e.lambda;
  const double b2 = e.lambda;
  const Vec2 o = ray.origin - center;
  const double ox = dot(o, e1), oy = dot(o, e2);
  const double dx = dot(ray.dir, e1), dy = dot(ray.dir, e2);
  double r0 = 0.0, r1 = 0.0;
  const int n = solve_quadratic(dx * dx / a2 + dy * dy / b2,
                                2.0 * (ox * dx / a2 + oy * dy / b2),
                                ox * ox / a2 + oy * oy / b2 - 1.0, r0, r1);
  for (int i = 0; i < n; ++i) {
    const double t = i == 0 ? r0 : r1;
    if (!(t > t_min)) continue;
    const Point2 p = ray.at(t);
    const Vec2 d = p - e.focus1;
    if (!e.range.contains(std::atan2(d.y, d.x), norm(d))) continue;
    const Vec2 q = p - center;
    const Vec2 grad = (dot(q, e1) / a2) * e1.vec() + (dot(q, e2) / b2) * e2;
    out.push({t, p, facing(grad, ray), -1});
  }
}

inline void intersect_curve(const Ray& ray, const ParabolicArc& pa, double t_min, HitPair& out) {
  const Vec2 u = pa.axis;
  const Vec2 w = perp(u);
  // Solve from the point of closest approach to the focus: rays through or
  // near the focus otherwise lose digits when delta is small.
  const double t0 = -dot(ray.origin - pa.focus, ray.dir);
  const Vec2 o = ray.origin - pa.focus + t0 * ray.dir.vec();
  const double X0 = dot(o, u), Y0 = dot(o, w);
  const double dX = dot(ray.dir, u), dY = dot(ray.dir, w);
  const double d = pa.delta;
  double r0 = 0.0, r1 = 0.0;
  const int n = solve_quadratic(dY * dY, 2.0 * Y0 * dY - 4.0 * d * dX,
                                Y0 * Y0 - 4.0 * d * d - 4.0 * d * X0, r0, r1);
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (i == 0 ? r0 : r1);
    if (!(t > t_min)) continue;
    const Point2 p = ray.at(t);
    const Vec2 q = p - pa.focus;
    if (!pa.range.contains(std::atan2(q.y, q.x), norm(q))) continue;
    const Vec2 grad = -4.0 * d * u + 2.0 * dot(q, w) * w;
    out.push({t, p, facing(grad, ray), -1});
  }
}

inline void intersect_any(const Ray& ray, const BoundaryCurve& c, int id, double t_min, HitPair& out) {
  const int before = out.count;
  std::visit([&](const auto& curve) { intersect_curve(ray, curve, t_min, out); }, c);
  for (int i = before; i < out.count; ++i) out.hit[i].curve = id;
  out.sort();
}

}  // namespace detail

/// All forward hits of ray with curve (t > t_min), sorted by t.
inline std::vector<HitRecord> intersect(const Ray& ray, const BoundaryCurve& curve,
                                        double t_min = kTMin, int id = 0) {
  detail::HitPair hp;
  detail::intersect_any(ray, curve, id, t_min, hp);
  return {hp.hit.begin(), hp.hit.begin() + hp.count};
}

/// Gradient at p of an implicit function of the curve's full conic that is
/// negative inside (the disk, the ellipse's interior, the parabola's focal
/// side) and positive outside.  For a segment, the left normal.
inline Vec2 implicit_gradient(const BoundaryCurve& curve, Point2 p) {
  struct V {
    Point2 p;
    Vec2 operator()(const Segment& s) const { return perp(s.p1 - s.p0); }
    Vec2 operator()(const CircularArc& c) const { return p - c.center; }
    Vec2 operator()(const EllipticArc& e) const {
      const Point2 center = 0.5 * (e.focus1 + e.focus2);
      const UnitVec2 e1(e.focus2 - e.focus1);
      const Vec2 e2 = perp(e1);
      const Vec2 q = p - center;
      return (dot(q, e1) / (1.0 + e.lambda)) * e1.vec() + (dot(q, e2) / e.lambda) * e2;
    }
    Vec2 operator()(const ParabolicArc& pa) const {
      const Vec2 w = perp(pa.axis);
      return -4.0 * pa.delta * pa.axis.vec() + 2.0 * dot(p - pa.focus, w) * w;
    }
  };
  return std::visit(V{p}, curve);
}

/// Point of the curve at parameter s in [0, 1].
inline Point2 point_at(const BoundaryCurve& curve, double s) {
  struct V {
    double s;
    Point2 operator()(const Segment& c) const { return c.p0 + s * (c.p1 - c.p0); }
    Point2 operator()(const CircularArc& c) const {
      return c.center + c.radius * UnitVec2::from_angle(c.range.at(s)).vec();
    }
    Point2 operator()(const EllipticArc& c) const {
      const double th = c.range.at(s);
      return c.focus1 + c.radius_at(th) * UnitVec2::from_angle(th).vec();
    }
    Point2 operator()(const ParabolicArc& c) const {
      const double th = c.range.at(s);
      return c.focus + c.radius_at(th) * UnitVec2::from_angle(th).vec();
    }
  };
  return std::visit(V{s}, curve);
}

inline Point2 curve_start(const BoundaryCurve& c) { return point_at(c, 0.0); }
inline Point2 curve_end(const BoundaryCurve& c) { return point_at(c, 1.0); }

/// n + 1 points along the curve at equal parameter steps.
inline std::vector<Point2> sample_curve(const BoundaryCurve& c, int n) {
  std::vector<Point2> pts;
  pts.reserve(n + 1);
  for (int i = 0; i <= n; ++i) pts.push_back(point_at(c, static_cast<double>(i) / n));
  return pts;
}

struct Box {
  Point2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void expand(Point2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  void expand(const Box& b) {
    expand(b.lo);
    expand(b.hi);
  }
  void pad(double d) {
    lo -= Vec2{d, d};
    hi += Vec2{d, d};
  }
  Point2 center() const { return 0.5 * (lo + hi); }

  /// Entry parameter of the ray into the box, or +inf if missed.
  double enter(const Ray& r, double t_max) const {
    double t0 = 0.0, t1 = t_max;
    const double o[2] = {r.origin.x, r.origin.y};
    const double d[2] = {r.dir.x(), r.dir.y()};
    const double l[2] = {lo.x, lo.y};
    const double h[2] = {hi.x, hi.y};
    for (int k = 0; k < 2; ++k) {
      if (d[k] == 0.0) {
        if (o[k] < l[k] || o[k] > h[k]) return std::numeric_limits<double>::infinity();
        continue;
      }
      double a = (l[k] - o[k]) / d[k];
      double b = (h[k] - o[k]) / d[k];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t0 > t1) return std::numeric_limits<double>::infinity();
    }
    return t0;
  }
};

/// Conservative axis-aligned bounds of a curve.
inline Box bounding_box(const BoundaryCurve& c) {
  Box b;
  if (const auto* s = std::get_if<Segment>(&c)) {
    b.expand(s->p0);
    b.expand(s->p1);
    b.pad(kEndpointTol);
    return b;
  }
  constexpr int n = 256;
  const auto pts = sample_curve(c, n);
  double chord = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    b.expand(pts[i]);
    if (i > 0) chord = std::max(chord, distance(pts[i], pts[i - 1]));
  }
  // Arc between samples deviates from its chord by well under a chord length.
  b.pad(chord + 1e-9);
  return b;
}

/// Outcome of a first-hit query.  A second hit on another curve at the same
/// parameter (a corner) is reported in twin.
struct FirstHit {
  enum class Kind { kNone, kHit, kNearTangent };
  Kind kind = Kind::kNone;
  HitRecord hit;
  std::optional<HitRecord> twin;

  explicit operator bool() const { return kind == Kind::kHit; }
};

namespace detail {

struct Best {
  HitRecord first;
  HitRecord second;
  bool has_first = false;
  bool has_second = false;

  void offer(const HitRecord& h) {
    if (!has_first || h.t < first.t) {
      if (has_first) {
        second = first;
        has_second = true;
      }
      first = h;
      has_first = true;
    } else if (h.curve != first.curve && (!has_second || h.t < second.t)) {
      second = h;
      has_second = true;
    }
  }
  double bound() const {
    return has_first ? first.t + 1e-12 * std::max(1.0, first.t)
                     : std::numeric_limits<double>::infinity();
  }
  FirstHit finish(const Ray& ray) const {
    FirstHit r;
    if (!has_first) return r;
    r.hit = first;
    if (has_second && second.t <= bound()) r.twin = second;
    r.kind = std::abs(dot(first.normal, ray.dir)) < kTangencyTol ? FirstHit::Kind::kNearTangent
                                                                : FirstHit::Kind::kHit;
    return r;
  }
};

}  // namespace detail

/// Reference first-hit query: scans every curve.
inline FirstHit first_hit(const Ray& ray, std::span<const BoundaryCurve> curves, double t_min = kTMin) {
  detail::Best best;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    detail::HitPair hp;
    detail::intersect_any(ray, curves[i], static_cast<int>(i), t_min, hp);
    for (int k = 0; k < hp.count; ++k) best.offer(hp.hit[k]);
  }
  return best.finish(ray);
}

/// Bounding-volume hierarchy over a fixed curve list.
class CurveIndex {
 public:
  CurveIndex() = default;
  explicit CurveIndex(std::vector<BoundaryCurve> curves) : curves_(std::move(curves)) { build(); }

  const std::vector<BoundaryCurve>& curves() const { return curves_; }

  FirstHit first_hit(const Ray& ray, double t_min = kTMin) const {
    if (curves_.size() <= kLinearScanLimit) return roughscatter::first_hit(ray, curves_, t_min);
    detail::Best best;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.enter(ray, best.bound()) == std::numeric_limits<double>::infinity()) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
          const int id = order_[i];
          detail::HitPair hp;
          detail::intersect_any(ray, curves_[id], id, t_min, hp);
          for (int k = 0; k < hp.count; ++k) best.offer(hp.hit[k]);
        }
      } else {
        stack[top++] = node.left;
        stack[top++] = node.left + 1;
      }
    }
    return best.finish(ray);
  }

 private:
  static constexpr std::size_t kLinearScanLimit = 8;

  struct Node {
    Box box;
    int left = -1;  // children at left, left + 1
    int first = 0;
    int count = 0;
  };

  void build() {
    const int n = static_cast<int>(curves_.size());
    boxes_.resize(n);
    order_.resize(n);
    for (int i = 0; i < n; ++i) {
      boxes_[i] = bounding_box(curves_[i]);
      order_[i] = i;
    }
    nodes_.clear();
    if (n == 0) return;
    nodes_.reserve(2 * n);
    nodes_.push_back({});
    split(0, 0, n, 0);
  }

  void split(int node, int first, int count, int depth) {
    Box box;
    for (int i = first; i < first + count; ++i) box.expand(boxes_[order_[i]]);
    nodes_[node].box = box;
    if (count <= 4 || depth >= 30) {
      nodes_[node].first = first;
      nodes_[node].count = count;
      return;
    }
    const bool by_x = (box.hi.x - box.lo.x) >= (box.hi.y - box.lo.y);
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](int a, int b) {
                       const Point2 ca = boxes_[a].center(), cb = boxes_[b].center();
                       return by_x ? (ca.x < cb.x || (ca.x == cb.x && a < b))
                                   : (ca.y < cb.y || (ca.y == cb.y && a < b));
                     });
    const int left = static_cast<int>(nodes_.size());
    nodes_[node].left = left;
    nodes_.push_back({});
    nodes_.push_back({});
    split(left, first, mid - first, depth + 1);
    split(left + 1, mid, first + count - mid, depth + 1);
  }

  std::vector<BoundaryCurve> curves_;
  std::vector<Box> boxes_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace roughscatter
