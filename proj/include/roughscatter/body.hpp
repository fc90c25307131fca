// Whole bodies: a convex polygon or disk B, hollows packed along the sides,
// the billiard map on the boundary and the measure nu on (phi, phi+, side).
//
// Boundary points are given by arclength s from vertex 0 (polygons) or from
// angle 0 (disks), counter-clockwise.  A boundary state (s, phi) describes
// a particle arriving with velocity -v where v = cos(phi) n + sin(phi) t,
// n the outer normal and t the counter-clockwise tangent at s.  The result
// (s+, phi+) describes the outgoing velocity v+ in the same way at s+.
#pragma once

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roughscatter/errors.hpp"
#include "roughscatter/geometry.hpp"
#include "roughscatter/hollow.hpp"
#include "roughscatter/measures.hpp"
#include "roughscatter/sampling.hpp"

namespace roughscatter {

enum class BodyKind { kPolygon, kDisk };

/// Convex polygon (vertices counter-clockwise, no collinear triples) or a
/// disk centred at the origin.  A disk is split into `cells` equal arcs,
/// which play the role of sides for binning.
class ConvexBody {
 public:
  ConvexBody() : ConvexBody(unit_square()) {}

  static ConvexBody polygon(std::vector<Point2> vertices) {
    ConvexBody b(BodyKind::kPolygon);
    b.vertices_ = std::move(vertices);
    const auto& v = b.vertices_;
    const std::size_t n = v.size();
    if (n < 3) throw Error(ErrorCode::kInvalidArgument, "polygon needs at least 3 vertices");
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e1 = v[(i + 1) % n] - v[i];
      const Vec2 e2 = v[(i + 2) % n] - v[(i + 1) % n];
      if (!(norm(e1) > 0.0)) throw Error(ErrorCode::kInvalidArgument, "repeated polygon vertex");
      if (!(cross(e1, e2) > 1e-12 * norm(e1) * norm(e2))) {
        throw Error(ErrorCode::kInvalidArgument, "polygon must be strictly convex and counter-clockwise");
      }
    }
    b.finish();
    return b;
  }

  static ConvexBody disk(double radius = 1.0, int cells = 64) {
    if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "disk radius must be positive");
    if (cells < 3) throw Error(ErrorCode::kInvalidArgument, "disk needs at least 3 cells");
    ConvexBody b(BodyKind::kDisk);
    b.radius_ = radius;
    b.cells_ = cells;
    b.finish();
    return b;
  }

  static ConvexBody unit_square() { return polygon({{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}); }

  BodyKind kind() const { return kind_; }
  bool is_disk() const { return kind_ == BodyKind::kDisk; }
  const std::vector<Point2>& vertices() const { return vertices_; }
  double radius() const { return radius_; }
  /// Number of sides (arc cells for a disk).
  int sides() const { return static_cast<int>(lengths_.size()); }
  /// Length c_i of side i.
  double side_length(int i) const { return lengths_[i]; }
  const std::vector<double>& side_lengths() const { return lengths_; }
  /// Arclength at which side i starts.
  double side_start(int i) const { return starts_[i]; }
  /// Outer normal of side i (of the middle of arc cell i).
  UnitVec2 side_normal(int i) const { return normals_[i]; }
  double perimeter() const { return perimeter_; }
  double area() const { return area_; }
  Point2 centroid() const { return centroid_; }

  /// Side containing arclength s.
  int side_of(double s) const {
    s = wrap(s);
    const auto it = std::upper_bound(starts_.begin(), starts_.end(), s);
    return std::max(0, static_cast<int>(it - starts_.begin()) - 1);
  }

  Point2 point(double s) const {
    s = wrap(s);
    if (is_disk()) return radius_ * UnitVec2::from_angle(s / radius_).vec();
    const int i = side_of(s);
    return vertices_[i] + (s - starts_[i]) * tangent(i).vec();
  }

  UnitVec2 normal_at(double s) const {
    if (is_disk()) return UnitVec2::from_angle(wrap(s) / radius_);
    return normals_[side_of(s)];
  }

  /// Counter-clockwise unit tangent of polygon side i.
  UnitVec2 tangent(int i) const {
    return UnitVec2(vertices_[(i + 1) % vertices_.size()] - vertices_[i]);
  }

  /// Arclength of the boundary point p (assumed on the boundary).
  double arclength_of(Point2 p) const {
    if (is_disk()) return wrap(radius_ * std::atan2(p.y, p.x));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sides(); ++i) {
      const Vec2 d = p - vertices_[i];
      const double u = std::clamp(dot(d, tangent(i)), 0.0, lengths_[i]);
      const double dist = distance(vertices_[i] + u * tangent(i).vec(), p);
      if (dist < best_d) {
        best_d = dist;
        best = i;
      }
    }
    return wrap(starts_[best] + std::clamp(dot(p - vertices_[best], tangent(best)), 0.0, lengths_[best]));
  }

  double wrap(double s) const {
    double r = std::fmod(s, perimeter_);
    if (r < 0.0) r += perimeter_;
    if (r >= perimeter_) r -= perimeter_;
    return r;
  }

  /// |sum c_i n_i|; zero for a closed polygon.
  double closure_defect() const {
    Vec2 s;
    for (int i = 0; i < sides(); ++i) s += lengths_[i] * normals_[i].vec();
    return norm(s);
  }

  /// Polygon whose vertices are the ends of the sides; the body itself for
  /// polygons and the inscribed regular polygon for disks.
  ConvexBody inscribed_polygon() const {
    if (!is_disk()) return *this;
    std::vector<Point2> v(cells_);
    for (int i = 0; i < cells_; ++i) v[i] = point(starts_[i]);
    return polygon(std::move(v));
  }

 private:
  explicit ConvexBody(BodyKind k) : kind_(k) {}

  void finish() {
    lengths_.clear();
    starts_.clear();
    normals_.clear();
    if (is_disk()) {
      perimeter_ = kTwoPi * radius_;
      area_ = kPi * radius_ * radius_;
      centroid_ = {0.0, 0.0};
      for (int i = 0; i < cells_; ++i) {
        starts_.push_back(perimeter_ * i / cells_);
        lengths_.push_back(perimeter_ / cells_);
        normals_.push_back(UnitVec2::from_angle(kTwoPi * (i + 0.5) / cells_));
      }
      return;
    }
    const std::size_t n = vertices_.size();
    perimeter_ = 0.0;
    double twice = 0.0;
    Vec2 c;
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 p = vertices_[i], q = vertices_[(i + 1) % n];
      starts_.push_back(perimeter_);
      lengths_.push_back(distance(p, q));
      perimeter_ += lengths_.back();
      const UnitVec2 t(q - p);
      normals_.push_back(UnitVec2::unchecked({t.y(), -t.x()}));
      const double w = cross(p, q);
      twice += w;
      c += w * (p + q);
    }
    area_ = 0.5 * twice;
    centroid_ = c / (3.0 * twice);
  }

  BodyKind kind_;
  std::vector<Point2> vertices_;
  double radius_ = 0.0;
  int cells_ = 0;
  std::vector<double> lengths_, starts_;
  std::vector<UnitVec2> normals_;
  double perimeter_ = 0.0;
  double area_ = 0.0;
  Point2 centroid_;
};

/// Minimal sum_i c_i <n_i, v>^2 over a grid of directions v.
inline double nondegeneracy_min(const ConvexBody& b, int grid = 360) {
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid; ++g) {
    const Vec2 v = UnitVec2::from_angle(kPi * g / grid).vec();
    double s = 0.0;
    for (int i = 0; i < b.sides(); ++i) s += b.side_length(i) * std::pow(dot(b.side_normal(i), v), 2);
    best = std::min(best, s);
  }
  return best;
}

/// Total mu-mass of the boundary phase space: int <n, v>_+ dv = 2 per unit
/// length of boundary.
inline double mu_mass(const ConvexBody& b) { return 2.0 * b.perimeter(); }

/// Minimal ratio |xi - xi'| / (boundary distance between xi and xi') over
/// pairs of boundary points.
inline double chord_arc_constant(const ConvexBody& b) {
  const double L = b.perimeter();
  const auto ratio = [&](double s, double d) {
    d = std::clamp(d, 1e-9 * L, 0.5 * L);
    return distance(b.point(s), b.point(s + d)) / d;
  };
  if (b.is_disk()) {
    // Rotation invariant: fix one point and minimize over the arc distance.
    const auto r = boost::math::tools::brent_find_minima([&](double d) { return ratio(0.0, d); }, 1e-6 * L, 0.5 * L,
                                                         std::numeric_limits<double>::digits);
    return r.second;
  }
  const int n = 1024;
  double best = std::numeric_limits<double>::infinity(), bs = 0.0, bd = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j <= n / 2; ++j) {
      const double r = ratio(L * i / n, L * j / n);
      if (r < best) {
        best = r;
        bs = L * i / n;
        bd = L * j / n;
      }
    }
  }
  // Pattern search around the best grid pair.
  for (double h = L / n; h > 1e-13 * L; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto [ds, dd] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
        const double r = ratio(bs + ds, bd + dd);
        if (r < best) {
          best = r;
          bs += ds;
          bd = std::clamp(bd + dd, 1e-9 * L, 0.5 * L);
          moved = true;
        }
      }
    }
  }
  return best;
}

// --- Packing --------------------------------------------------------------

struct PackingParams {
  /// Number of first-order copies per side.
  int copies = 16;
  /// Number of packing levels.
  int levels = 1;
  /// Required portion of every rectangle base covered by openings.
  double kappa = 0.5;
};

/// A copy of a template hollow on a side: opening centred at `center`
/// (distance from the side's first vertex) and scaled by `scale`.
struct PlacedHollow {
  int side = 0;
  double center = 0.0;
  double scale = 1.0;
  int level = 1;
};

struct SidePacking {
  std::vector<PlacedHollow> copies;
  /// Portion of the side not covered by openings after each level.
  std::vector<double> uncovered_by_level;
  /// Portion of each rectangle base covered by openings.
  double realized_kappa = 0.0;
};

namespace detail {

/// Horizontal extent of the template outline below height t.
inline std::pair<double, double> footprint(const Hollow& h, double t) {
  double lo = -h.half_width(), hi = h.half_width();
  const auto& o = h.outline();
  for (std::size_t k = 1; k < o.size(); ++k) {
    Point2 p = o[k - 1], q = o[k];
    if (p.y > q.y) std::swap(p, q);
    if (p.y > t) continue;
    lo = std::min(lo, p.x);
    hi = std::max(hi, p.x);
    const Point2 r = q.y <= t ? q : p + ((t - p.y) / (q.y - p.y)) * (q - p);
    lo = std::min(lo, r.x);
    hi = std::max(hi, r.x);
  }
  return {lo, hi};
}

struct Rect {
  double x0, x1, height;
};

}  // namespace detail

/// Places copies of `tmpl` along a side of length L whose packing triangle
/// has its apex at (apex_x, apex_h) in side coordinates (x along the side,
/// height into the body).  Level 1 fills one rectangle standing on the side
/// with `copies` flush copies; every further level fills the gaps between
/// the openings of the previous level, in strips low enough to avoid the
/// copies above them.
inline SidePacking pack_side(double L, double apex_x, double apex_h, const Hollow& tmpl, const PackingParams& p,
                             int side = 0) {
  if (tmpl.is_flat()) throw Error(ErrorCode::kInvalidArgument, "cannot pack the flat mirror");
  if (p.copies < 1 || p.levels < 1) throw Error(ErrorCode::kInvalidArgument, "copies and levels must be positive");
  const double a = tmpl.half_width();
  const double d = tmpl.x_max() - tmpl.x_min();
  const double D = tmpl.depth();
  const double ratio = 2.0 * a / d;
  if (!(p.kappa > 0.0 && p.kappa < ratio)) {
    throw Error(ErrorCode::kInvalidArgument, "kappa must lie in (0, |I|/d) = (0, " + std::to_string(ratio) + ")");
  }
  // Copies are spread with a small spacing so neighbours never touch.
  const double spacing = std::min(1e-6, 0.5 * (1.0 - p.kappa / ratio));
  SidePacking out;
  out.realized_kappa = ratio * (1.0 - spacing);

  const double c = (1.0 - spacing) * D / (p.copies * d);
  const double h1 = L * c / (1.0 + L * c / apex_h);
  const double x0 = apex_x * h1 / apex_h, x1 = L + (apex_x - L) * h1 / apex_h;
  if (!(h1 > 0.0) || !(x1 > x0)) throw Error(ErrorCode::kDoesNotFit, "template does not fit the side");

  // Strip height (template units) below which the copy stays near its opening.
  const double spare_l = -a - tmpl.x_min(), spare_r = tmpl.x_max() - a;
  const double g = 0.25 * std::min(spare_l, spare_r);
  double strip = 0.0;
  if (g > 1e-12 * a) {
    double lo = 0.0, hi = D;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto [fl, fr] = detail::footprint(tmpl, mid);
      (fl >= -a - g && fr <= a + g ? lo : hi) = mid;
    }
    strip = 0.999 * lo;
  }

  std::vector<detail::Rect> rects{{x0, x1, h1}};
  double covered = 0.0;
  for (int level = 1; level <= p.levels && !rects.empty(); ++level) {
    std::vector<detail::Rect> next;
    for (const detail::Rect& r : rects) {
      const double w = r.x1 - r.x0;
      int n = level == 1 ? p.copies : static_cast<int>(std::ceil((1.0 - spacing) * w * D / (d * r.height)));
      n = std::max(n, 1);
      const double s = (1.0 - spacing) * w / (n * d);
      if (!(s * D <= r.height * (1.0 + 1e-12))) throw Error(ErrorCode::kDoesNotFit, "copy deeper than its rectangle");
      const double gap = spacing * w / n;
      std::vector<double> centers;
      for (int j = 0; j < n; ++j) {
        const double left = r.x0 + 0.5 * gap + j * (s * d + gap);
        centers.push_back(left - s * tmpl.x_min());
        out.copies.push_back({side, centers.back(), s, level});
        covered += 2.0 * a * s;
      }
      if (strip > 0.0) {
        double from = r.x0;
        for (int j = 0; j <= n; ++j) {
          const double to = j < n ? centers[j] - s * (a + g) : r.x1;
          if (to > from) next.push_back({from, to, std::min(r.height, s * strip)});
          if (j < n) from = centers[j] + s * (a + g);
        }
      }
    }
    out.uncovered_by_level.push_back(1.0 - covered / L);
    rects = std::move(next);
  }
  std::sort(out.copies.begin(), out.copies.end(),
            [](const PlacedHollow& x, const PlacedHollow& y) { return x.center < y.center; });
  return out;
}

/// Body coordinates of the point `local` of a placed copy.
inline Point2 place_point(const ConvexBody& b, const PlacedHollow& c, Point2 local) {
  return b.vertices()[c.side] + (c.center + c.scale * local.x) * b.tangent(c.side).vec() -
         (c.scale * local.y) * b.side_normal(c.side).vec();
}

// --- Rough bodies ---------------------------------------------------------

/// What sits on one side: nothing (a flat face) or packed copies of a hollow.
struct SideSpec {
  std::shared_ptr<const Hollow> hollow;
  PackingParams packing;
};

struct RoughBodySpec {
  ConvexBody body;
  /// One entry per side, or a single entry used for every side.
  std::vector<SideSpec> sides;
  /// Treat the whole interior as cavity (Q empty): particles cross B along
  /// a chord.
  bool empty_interior = false;
};

class RoughBody {
 public:
  RoughBody() = default;

  explicit RoughBody(RoughBodySpec spec) : spec_(std::move(spec)) {
    const ConvexBody& b = spec_.body;
    const int n = b.sides();
    if (!spec_.sides.empty() && spec_.sides.size() != 1 && static_cast<int>(spec_.sides.size()) != n) {
      throw Error(ErrorCode::kInvalidArgument, "side list must have one entry or one per side");
    }
    templates_.assign(n, nullptr);
    packings_.assign(n, {});
    for (int i = 0; i < n; ++i) {
      const SideSpec* s = side_spec(i);
      if (!s || !s->hollow || s->hollow->is_flat()) continue;
      if (b.is_disk()) throw Error(ErrorCode::kInvalidArgument, "hollows are only placed on polygon sides");
      if (spec_.empty_interior) throw Error(ErrorCode::kInvalidArgument, "an empty interior has no hollows");
      templates_[i] = s->hollow;
      const Vec2 rel = b.centroid() - b.vertices()[i];
      const double ax = dot(rel, b.tangent(i)), ah = -dot(rel, b.side_normal(i));
      packings_[i] = pack_side(b.side_length(i), ax, ah, *s->hollow, s->packing, i);
      for (const PlacedHollow& c : packings_[i].copies) area_removed_ += c.scale * c.scale * s->hollow->area();
    }
    if (spec_.empty_interior) area_removed_ = b.area();
  }

  const RoughBodySpec& spec() const { return spec_; }
  const ConvexBody& body() const { return spec_.body; }
  const SidePacking& packing(int side) const { return packings_[side]; }
  const Hollow* side_template(int side) const { return templates_[side].get(); }
  double area_removed() const { return area_removed_; }

  /// Copy whose opening contains position x on the side, if any.
  const PlacedHollow* copy_at(int side, double x) const {
    if (!templates_[side]) return nullptr;
    const auto& cs = packings_[side].copies;
    const double a = templates_[side]->half_width();
    auto it = std::upper_bound(cs.begin(), cs.end(), x, [](double v, const PlacedHollow& c) { return v < c.center; });
    for (auto cand : {it, it == cs.begin() ? cs.end() : std::prev(it)}) {
      if (cand == cs.end()) continue;
      if (std::abs(x - cand->center) < cand->scale * a) return &*cand;
    }
    return nullptr;
  }

 private:
  const SideSpec* side_spec(int i) const {
    if (spec_.sides.empty()) return nullptr;
    return spec_.sides.size() == 1 ? &spec_.sides[0] : &spec_.sides[i];
  }

  RoughBodySpec spec_;
  std::vector<std::shared_ptr<const Hollow>> templates_;
  std::vector<SidePacking> packings_;
  double area_removed_ = 0.0;
};

struct PackingCheck {
  std::size_t copies = 0;
  std::size_t overlapping_pairs = 0;
  std::size_t outside_triangle = 0;
  bool ok() const { return overlapping_pairs == 0 && outside_triangle == 0; }
};

namespace detail {

inline bool segments_cross(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const double d1 = cross(p2 - p1, q1 - p1), d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1), d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

inline bool inside_convex(const std::vector<Point2>& poly, Point2 p, double tol) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
    if (cross(b - a, p - a) < -tol * norm(b - a)) return false;
  }
  return true;
}

}  // namespace detail

/// Exhaustive validity check of copies of h on one side of b: copies lie in
/// the side's packing triangle (hence in B, apart from other sides) and no
/// two copies cross.
inline PackingCheck check_side(const ConvexBody& b, int side, const Hollow& h, const std::vector<PlacedHollow>& copies) {
  PackingCheck out;
  const std::vector<Point2> tri{b.vertices()[side], b.vertices()[(side + 1) % b.sides()], b.centroid()};
  struct Item {
    std::vector<Point2> outline;
    double lo, hi;
  };
  std::vector<Item> items;
  for (const PlacedHollow& c : copies) {
    Item it{{}, c.center + c.scale * h.x_min(), c.center + c.scale * h.x_max()};
    for (const Point2& p : h.outline()) it.outline.push_back(place_point(b, c, p));
    for (const Point2& p : it.outline)
      if (!detail::inside_convex(tri, p, 1e-12)) {
        ++out.outside_triangle;
        break;
      }
    items.push_back(std::move(it));
  }
  out.copies = items.size();
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.lo < y.lo; });
  for (std::size_t p = 0; p < items.size(); ++p) {
    for (std::size_t q = p + 1; q < items.size() && items[q].lo < items[p].hi; ++q) {
      const auto& A = items[p].outline;
      const auto& B = items[q].outline;
      bool hit = false;
      for (std::size_t u = 0; u + 1 < A.size() && !hit; ++u)
        for (std::size_t v = 0; v + 1 < B.size() && !hit; ++v) hit = detail::segments_cross(A[u], A[u + 1], B[v], B[v + 1]);
      if (hit) ++out.overlapping_pairs;
    }
  }
  return out;
}

inline PackingCheck check_packing(const RoughBody& rb) {
  PackingCheck out;
  for (int i = 0; i < rb.body().sides(); ++i) {
    if (!rb.side_template(i)) continue;
    const PackingCheck c = check_side(rb.body(), i, *rb.side_template(i), rb.packing(i).copies);
    out.copies += c.copies;
    out.overlapping_pairs += c.overlapping_pairs;
    out.outside_triangle += c.outside_triangle;
  }
  return out;
}

// --- Billiard map on the boundary -----------------------------------------

struct BoundaryState {
  double s = 0.0;
  double phi = 0.0;
};

struct BodyTrace {
  TraceStatus status = TraceStatus::kOk;
  BoundaryState out;
  /// Path length inside B minus Q.
  double length = 0.0;
  int bounces = 0;
  bool entered_hollow = false;

  bool ok() const { return status == TraceStatus::kOk; }
};

inline BodyTrace trace_body(const RoughBody& rb, BoundaryState in, const TraceOptions& opt = {}) {
  if (!(std::abs(in.phi) < kHalfPi)) throw Error(ErrorCode::kInvalidArgument, "phi outside (-pi/2, pi/2)");
  const ConvexBody& b = rb.body();
  BodyTrace r;
  in.s = b.wrap(in.s);
  if (rb.spec().empty_interior) {
    // Straight chord through B with velocity -v.
    const UnitVec2 n = b.normal_at(in.s);
    const Vec2 t = perp(n.vec());
    const Point2 p = b.point(in.s);
    const Vec2 vel = -(std::cos(in.phi) * n.vec() + std::sin(in.phi) * t);
    double len = 0.0;
    if (b.is_disk()) {
      len = -2.0 * dot(p, vel);
    } else {
      len = std::numeric_limits<double>::infinity();
      const int m = b.sides();
      for (int i = 0; i < m; ++i) {
        const double den = dot(vel, b.side_normal(i).vec());
        if (den <= 1e-15) continue;
        const double tt = dot(b.vertices()[i] - p, b.side_normal(i).vec()) / den;
        if (tt > 1e-12 * b.perimeter()) len = std::min(len, tt);
      }
    }
    const Point2 q = p + len * vel;
    r.out.s = b.arclength_of(q);
    const UnitVec2 n2 = b.normal_at(r.out.s);
    r.out.phi = std::atan2(dot(vel, perp(n2.vec())), dot(vel, n2.vec()));
    r.length = len;
    return r;
  }
  const int side = b.side_of(in.s);
  const PlacedHollow* c = b.is_disk() ? nullptr : rb.copy_at(side, in.s - b.side_start(side));
  if (!c) {
    r.out = {in.s, -in.phi};
    r.bounces = 1;
    return r;
  }
  r.entered_hollow = true;
  const double x = in.s - b.side_start(side);
  const TraceResult h = trace(*rb.side_template(side), {(x - c->center) / c->scale, -in.phi}, opt);
  r.status = h.status;
  r.bounces = h.bounces;
  r.length = h.length * c->scale;
  if (!h.ok()) return r;
  r.out = {b.side_start(side) + c->center + c->scale * h.out.xi, -h.out.phi};
  return r;
}

/// Draws a boundary state from mu normalized to a probability: s uniform in
/// arclength, phi with density cos(phi)/2.
inline BoundaryState sample_boundary(const ConvexBody& b, Rng& rng) {
  const double u = rng.uniform();
  const double w = rng.uniform();
  return {b.perimeter() * u, std::asin(2.0 * w - 1.0)};
}

// --- nu histograms ----------------------------------------------------------

/// Masses of nu on (phi cell, phi+ cell, side); the total is 2|dB|.
class T3Histogram {
 public:
  T3Histogram() = default;
  T3Histogram(ConvexBody body, Binning b)
      : body_(std::move(body)), binning_(std::move(b)),
        mass_(static_cast<std::size_t>(body_.sides()) * binning_.bins() * binning_.bins(), 0.0) {}

  const ConvexBody& body() const { return body_; }
  const Binning& binning() const { return binning_; }
  int sides() const { return body_.sides(); }
  int bins() const { return binning_.bins(); }
  double& at(int side, int i, int j) { return mass_[(static_cast<std::size_t>(side) * bins() + i) * bins() + j]; }
  double at(int side, int i, int j) const {
    return mass_[(static_cast<std::size_t>(side) * bins() + i) * bins() + j];
  }
  const std::vector<double>& masses() const { return mass_; }
  std::vector<double>& masses() { return mass_; }

  double total_mass() const {
    double s = 0.0;
    for (double m : mass_) s += m;
    return s;
  }

  /// Slab of one side as a grid measure normalized to mass 2.
  GridMeasure side_measure(int side) const {
    GridMeasure gm(binning_);
    double tot = 0.0;
    for (int i = 0; i < bins(); ++i)
      for (int j = 0; j < bins(); ++j) tot += at(side, i, j);
    if (!(tot > 0.0)) return gm;
    for (int i = 0; i < bins(); ++i)
      for (int j = 0; j < bins(); ++j) gm.at(i, j) = 2.0 * at(side, i, j) / tot;
    return gm;
  }

  std::uint64_t samples = 0;
  std::array<std::uint64_t, kStatusCount> discarded{};

  std::uint64_t discarded_total() const {
    std::uint64_t s = 0;
    for (auto d : discarded) s += d;
    return s;
  }

 private:
  ConvexBody body_;
  Binning binning_;
  std::vector<double> mass_;
};

struct BodyEstimateOptions {
  std::uint64_t samples = 1000000;
  Binning binning{BinningKind::kEqualLambda, 16};
  std::uint64_t seed = 1;
  int threads = 0;
  int max_bounces = 10000;
  double max_discard_rate = 0.01;
};

inline T3Histogram estimate_nu(const RoughBody& rb, const BodyEstimateOptions& opt) {
  if (opt.samples < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one sample");
  const ConvexBody& b = rb.body();
  const Binning& bin = opt.binning;
  const std::size_t cells = static_cast<std::size_t>(b.sides()) * bin.bins() * bin.bins();
  struct Shard {
    std::vector<std::uint64_t> counts;
    std::array<std::uint64_t, kStatusCount> discarded{};
  };
  TraceOptions to;
  to.max_bounces = opt.max_bounces;
  auto shards = run_shards<Shard>(opt.samples, opt.seed, opt.threads, [&](int, std::uint64_t n, Rng& rng) {
    Shard s;
    s.counts.assign(cells, 0);
    for (std::uint64_t k = 0; k < n; ++k) {
      const BoundaryState in = sample_boundary(b, rng);
      const BodyTrace r = trace_body(rb, in, to);
      if (!r.ok()) {
        ++s.discarded[static_cast<int>(r.status)];
        continue;
      }
      const int side = b.side_of(in.s);
      ++s.counts[(static_cast<std::size_t>(side) * bin.bins() + bin.cell(in.phi)) * bin.bins() + bin.cell(r.out.phi)];
    }
    return s;
  });
  T3Histogram h(b, bin);
  std::vector<std::uint64_t> counts(cells, 0);
  for (const Shard& s : shards) {
    for (std::size_t k = 0; k < cells; ++k) counts[k] += s.counts[k];
    for (int k = 0; k < kStatusCount; ++k) h.discarded[k] += s.discarded[k];
  }
  const double w = mu_mass(b) / static_cast<double>(opt.samples);
  for (std::size_t k = 0; k < cells; ++k) h.masses()[k] = w * static_cast<double>(counts[k]);
  h.samples = opt.samples;
  const double rate = static_cast<double>(h.discarded_total()) / static_cast<double>(opt.samples);
  if (rate > opt.max_discard_rate) {
    throw Error(ErrorCode::kDiscardRateExceeded, "discarded fraction " + std::to_string(rate));
  }
  return h;
}

/// Distance of the (v, n) and (v+, n) marginals from <v, n>_+ u x tau_B,
/// per side and cell; reported on the scale of a mass-2 measure.
inline LambdaDefect a1_defect(const T3Histogram& h) {
  LambdaDefect d;
  for (int s = 0; s < h.sides(); ++s) {
    for (int i = 0; i < h.bins(); ++i) {
      const double target = h.body().side_length(s) * h.binning().lambda_mass(i);
      double row = 0.0, col = 0.0;
      for (int j = 0; j < h.bins(); ++j) {
        row += h.at(s, i, j);
        col += h.at(s, j, i);
      }
      d.incoming += std::abs(row - target);
      d.outgoing += std::abs(col - target);
    }
  }
  const double scale = 0.5 / h.body().perimeter();
  d.incoming *= scale;
  d.outgoing *= scale;
  return d;
}

/// Distance between nu and its image under (v, v+, n) -> (v+, v, n), on the
/// scale of a mass-2 measure.
inline double a2_defect(const T3Histogram& h) {
  double s = 0.0;
  for (int side = 0; side < h.sides(); ++side)
    for (int i = 0; i < h.bins(); ++i)
      for (int j = 0; j < h.bins(); ++j) s += std::abs(h.at(side, i, j) - h.at(side, j, i));
  return 0.5 * s / h.body().perimeter();
}

/// Carries a histogram over the sides (arc cells) of a body to the
/// polygon whose vertices are the side ends: angles relative to the normal
/// are kept, masses are scaled by chord length over arc length.
inline T3Histogram project_polygon(const T3Histogram& h) {
  const ConvexBody poly = h.body().inscribed_polygon();
  T3Histogram out(poly, h.binning());
  for (int s = 0; s < h.sides(); ++s) {
    const double arc = h.body().side_length(s);
    if (!(arc > 0.0)) throw Error(ErrorCode::kEmptyCell, "cell " + std::to_string(s) + " has no boundary mass");
    const double r = poly.side_length(s) / arc;
    for (int i = 0; i < h.bins(); ++i)
      for (int j = 0; j < h.bins(); ++j) out.at(s, i, j) = r * h.at(s, i, j);
  }
  out.samples = h.samples;
  out.discarded = h.discarded;
  return out;
}

// --- Integral statistics -----------------------------------------------------

struct Lemma1Stats {
  /// mu-integrals of |xi - xi+|, |n - n+| and the flight length, with their
  /// Monte-Carlo standard errors.
  double I_xi = 0.0, I_n = 0.0, I_tau = 0.0;
  double se_xi = 0.0, se_n = 0.0, se_tau = 0.0;
  double c_B = 0.0;
  double area_removed = 0.0;
  double bound_xi = 0.0;
  double bound_n = 0.0;
  /// Whether the |n - n+| bound applies (small removed area).
  bool n_bound_applies = false;
  bool xi_ok = false;
  bool n_ok = false;
  std::uint64_t samples = 0;
  std::uint64_t discarded = 0;
};

inline Lemma1Stats lemma1_stats(const RoughBody& rb, std::uint64_t samples, std::uint64_t seed, int threads = 0) {
  if (samples < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two samples");
  const ConvexBody& b = rb.body();
  struct Acc {
    std::array<double, 3> sum{}, sq{};
    std::uint64_t discarded = 0;
  };
  auto shards = run_shards<Acc>(samples, seed, threads, [&](int, std::uint64_t n, Rng& rng) {
    Acc a;
    for (std::uint64_t k = 0; k < n; ++k) {
      const BoundaryState in = sample_boundary(b, rng);
      const BodyTrace r = trace_body(rb, in);
      if (!r.ok()) {
        ++a.discarded;
        continue;
      }
      const double v[3] = {distance(b.point(in.s), b.point(r.out.s)),
                           norm(b.normal_at(in.s).vec() - b.normal_at(r.out.s).vec()), r.length};
      for (int q = 0; q < 3; ++q) {
        a.sum[q] += v[q];
        a.sq[q] += v[q] * v[q];
      }
    }
    return a;
  });
  Acc tot;
  for (const Acc& a : shards) {
    for (int q = 0; q < 3; ++q) {
      tot.sum[q] += a.sum[q];
      tot.sq[q] += a.sq[q];
    }
    tot.discarded += a.discarded;
  }
  const double n = static_cast<double>(samples);
  const double M = mu_mass(b);
  std::array<double, 3> mean{}, se{};
  for (int q = 0; q < 3; ++q) {
    // Discarded samples contribute zero; they are also counted in n.
    mean[q] = tot.sum[q] / n;
    const double var = std::max(0.0, tot.sq[q] / n - mean[q] * mean[q]);
    se[q] = M * std::sqrt(var / (n - 1.0));
  }
  Lemma1Stats s;
  s.samples = samples;
  s.discarded = tot.discarded;
  s.I_xi = M * mean[0];
  s.I_n = M * mean[1];
  s.I_tau = M * mean[2];
  s.se_xi = se[0];
  s.se_n = se[1];
  s.se_tau = se[2];
  s.c_B = chord_arc_constant(b);
  s.area_removed = rb.area_removed();
  s.bound_xi = kTwoPi * s.area_removed;
  s.bound_n = kTwoPi * std::sqrt(8.0 * kPi) / std::sqrt(s.c_B) * std::sqrt(s.area_removed);
  s.n_bound_applies = s.area_removed <= s.c_B * b.perimeter() * b.perimeter() / kTwoPi;
  s.xi_ok = s.I_xi - 3.0 * s.se_xi <= s.bound_xi;
  s.n_ok = !s.n_bound_applies || s.I_n - 3.0 * s.se_n <= s.bound_n;
  return s;
}

}  // namespace roughscatter
