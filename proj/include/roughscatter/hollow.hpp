// Hollows (a bounded cavity with a flat opening) and the billiard map on
// their opening.
//
// Local frame: the opening is I = [-a, a] x {0}, the cavity lies in y > 0
// and the outer normal is n = (0, -1).  A state (xi, phi) enters at (xi, 0)
// moving with velocity (sin phi, cos phi); the exit angle phi+ is read off
// the exit velocity -(sin phi+, cos phi+).
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "roughscatter/errors.hpp"
#include "roughscatter/geometry.hpp"
#include "roughscatter/sampling.hpp"

namespace roughscatter {

struct InState {
  double xi = 0.0;
  double phi = 0.0;
};

using OutState = InState;

enum class TraceStatus {
  kOk,
  kNearTangent,
  kMaxBounces,
  kEscapedGeometry,
  kDegenerateExit,
  kSingularPoint,
};

inline const char* status_name(TraceStatus s) {
  switch (s) {
    case TraceStatus::kOk: return "OK";
    case TraceStatus::kNearTangent: return "NEAR_TANGENT";
    case TraceStatus::kMaxBounces: return "MAX_BOUNCES";
    case TraceStatus::kEscapedGeometry: return "ESCAPED_GEOMETRY";
    case TraceStatus::kDegenerateExit: return "DEGENERATE_EXIT";
    case TraceStatus::kSingularPoint: return "SINGULAR_POINT";
  }
  return "UNKNOWN";
}

struct TraceOptions {
  int max_bounces = 10000;
  bool record_path = false;
  bool record_curves = false;
};

struct TraceResult {
  TraceStatus status = TraceStatus::kOk;
  OutState out;
  int bounces = 0;
  /// Total path length inside the cavity.
  double length = 0.0;
  std::vector<Point2> path;
  /// Curve id of every reflection, in order.
  std::vector<int> curves;

  bool ok() const { return status == TraceStatus::kOk; }
};

/// Velocity of a particle entering with angle coordinate phi.
inline UnitVec2 entry_direction(double phi) {
  return UnitVec2::unchecked({std::sin(phi), std::cos(phi)});
}

/// Angle coordinate of an exit velocity.
inline double exit_angle(Vec2 v) { return std::atan2(-v.x, -v.y); }

class Hollow {
 public:
  Hollow() = default;

  /// walls must form a chain from (-a, 0) to (a, 0) lying in y > 0 apart
  /// from its end points.  An empty wall list is the flat mirror.
  Hollow(std::vector<BoundaryCurve> walls, double half_width, std::string kind = "custom")
      : kind_(std::move(kind)), half_width_(half_width), index_(std::move(walls)) {
    if (!(half_width_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "opening half-width must be positive");
    validate();
    measure();
  }

  static Hollow flat(double half_width = 1.0) { return Hollow({}, half_width, "flat"); }

  const std::string& kind() const { return kind_; }
  double half_width() const { return half_width_; }
  bool is_flat() const { return index_.curves().empty(); }
  const std::vector<BoundaryCurve>& walls() const { return index_.curves(); }
  const CurveIndex& index() const { return index_; }

  /// Area of the cavity.
  double area() const { return area_; }
  /// Horizontal extent [x_min, x_max] and depth of the cavity.
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double depth() const { return depth_; }
  /// Polyline through the walls from (-a, 0) to (a, 0).
  const std::vector<Point2>& outline() const { return outline_; }

 private:
  void validate() const {
    const auto& w = index_.curves();
    if (w.empty()) return;
    const double a = half_width_;
    const double tol = 1e-9 * std::max(1.0, a);
    if (distance(curve_start(w.front()), {-a, 0.0}) > tol || distance(curve_end(w.back()), {a, 0.0}) > tol) {
      throw Error(ErrorCode::kInvalidArgument, "walls must run from (-a,0) to (a,0)");
    }
    for (std::size_t i = 1; i < w.size(); ++i) {
      const Point2 p = curve_end(w[i - 1]);
      const Point2 q = curve_start(w[i]);
      if (distance(p, q) > 1e-9 * std::max(1.0, norm(p))) {
        throw Error(ErrorCode::kInvalidArgument, "walls do not form a chain at curve " + std::to_string(i));
      }
    }
    for (const auto& c : w) {
      for (const Point2& p : sample_curve(c, 64)) {
        if (p.y < -1e-12) throw Error(ErrorCode::kInvalidArgument, "wall point below the opening line");
      }
    }
  }

  void measure() {
    const auto& w = index_.curves();
    outline_.clear();
    x_min_ = -half_width_;
    x_max_ = half_width_;
    depth_ = 0.0;
    area_ = 0.0;
    if (w.empty()) return;
    outline_.push_back({-half_width_, 0.0});
    double twice_area = 0.0;
    Point2 prev = outline_.back();
    for (const auto& c : w) {
      const bool straight = std::holds_alternative<Segment>(c);
      const int n = straight ? 1 : 4096;
      const int stride = straight ? 1 : 64;
      for (int i = 1; i <= n; ++i) {
        const Point2 p = point_at(c, static_cast<double>(i) / n);
        twice_area += cross(prev, p);
        prev = p;
        x_min_ = std::min(x_min_, p.x);
        x_max_ = std::max(x_max_, p.x);
        depth_ = std::max(depth_, p.y);
        if (i % stride == 0) outline_.push_back(p);
      }
    }
    twice_area += cross(prev, outline_.front());
    area_ = 0.5 * std::abs(twice_area);
  }

  std::string kind_ = "flat";
  double half_width_ = 1.0;
  CurveIndex index_;
  double area_ = 0.0;
  double x_min_ = -1.0;
  double x_max_ = 1.0;
  double depth_ = 0.0;
  std::vector<Point2> outline_;
};

/// Isosceles right triangle on the opening [-1, 1] with the right angle at
/// (0, 1).
inline Hollow make_triangular() {
  return Hollow({Segment{{-1.0, 0.0}, {0.0, 1.0}}, Segment{{0.0, 1.0}, {1.0, 0.0}}}, 1.0, "triangular");
}

/// Rectangle of width 2 and depth 2/h on the opening [-1, 1].
inline Hollow make_rectangular(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::kInvalidRatio, "h must be positive");
  const double d = 2.0 / h;
  return Hollow({Segment{{-1.0, 0.0}, {-1.0, d}}, Segment{{-1.0, d}, {1.0, d}}, Segment{{1.0, d}, {1.0, 0.0}}},
                1.0, "rectangular");
}

/// Billiard map of the hollow: enters at (xi, 0) with angle coordinate phi
/// and returns the state at the first crossing of the opening.
inline TraceResult trace(const Hollow& hollow, InState s, const TraceOptions& opt = {}) {
  TraceResult r;
  const double a = hollow.half_width();
  if (!(std::abs(s.xi) < a) || !(std::abs(s.phi) < kHalfPi)) {
    throw Error(ErrorCode::kInvalidArgument, "state outside (-a,a) x (-pi/2,pi/2)");
  }
  if (opt.record_path) r.path.push_back({s.xi, 0.0});
  if (hollow.is_flat()) {
    r.out = {s.xi, -s.phi};
    r.bounces = 1;
    return r;
  }
  Ray ray{{s.xi, 0.0}, entry_direction(s.phi)};
  const CurveIndex& index = hollow.index();
  while (true) {
    const FirstHit fh = index.first_hit(ray);
    const double dy = ray.dir.y();
    const double t_line = dy < 0.0 ? -ray.origin.y / dy : std::numeric_limits<double>::infinity();
    if (fh.kind == FirstHit::Kind::kNearTangent && fh.hit.t < t_line) {
      r.status = TraceStatus::kNearTangent;
      return r;
    }
    if (!fh || fh.hit.t >= t_line) {
      if (!std::isfinite(t_line)) {
        r.status = TraceStatus::kEscapedGeometry;
        return r;
      }
      const double x = ray.origin.x + t_line * ray.dir.x();
      r.length += t_line;
      if (opt.record_path) r.path.push_back({x, 0.0});
      if (std::abs(x) < a - kEndpointTol) {
        r.out = {x, exit_angle(ray.dir)};
        return r;
      }
      r.status = std::abs(x) <= a + kEndpointTol ? TraceStatus::kDegenerateExit : TraceStatus::kEscapedGeometry;
      return r;
    }
    if (r.bounces >= opt.max_bounces) {
      r.status = TraceStatus::kMaxBounces;
      return r;
    }
    const HitRecord& h = fh.hit;
    UnitVec2 dir = reflect(ray.dir, h.normal);
    int hits = 1;
    if (fh.twin) {
      const double c = std::abs(dot(h.normal, fh.twin->normal));
      if (c < 1e-9) {
        dir = reflect(dir, fh.twin->normal);
        hits = 2;
      } else if (c < 1.0 - 1e-9) {
        r.status = TraceStatus::kSingularPoint;
        return r;
      }
    }
    r.bounces += hits;
    r.length += h.t;
    if (opt.record_path) r.path.push_back(h.point);
    if (opt.record_curves) {
      r.curves.push_back(h.curve);
      if (hits == 2) r.curves.push_back(fh.twin->curve);
    }
    ray = Ray{h.point, dir};
  }
}

/// Draws an entry state from the normalized inflow measure on the opening:
/// xi uniform, phi with density cos(phi)/2.
inline InState sample_inflow(double a, Rng& rng) {
  const double u = rng.uniform();
  const double w = rng.uniform();
  return {a * (2.0 * u - 1.0), std::asin(2.0 * w - 1.0)};
}

}  // namespace roughscatter
