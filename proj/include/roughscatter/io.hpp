// JSON and CSV forms of hollows, body specs, measures and reports.
//
// Hollow JSON: {"kind": "hollow", "name": ..., "half_width": a,
// "walls": [curve...]} or a template shorthand {"template": "triangular"},
// {"template": "rectangular", "h": 0.01}, {"template": "flat"}.  Curves:
//   {"type": "segment", "p0": [x, y], "p1": [x, y]}
//   {"type": "circular_arc", "center": [x, y], "radius": r, "start": t, "sweep": s}
//   {"type": "elliptic_arc", "focus1": [..], "focus2": [..], "lambda": l, "start": t, "sweep": s}
//   {"type": "parabolic_arc", "focus": [..], "axis": [..], "delta": d, "start": t, "sweep": s}
// Arc angles are polar angles about the centre, the first focus or the
// focus, counter-clockwise from +x; a negative sweep runs clockwise.
//
// Body JSON: {"kind": "body", "body": {"polygon": [[x, y], ...]} or
// {"disk": {"radius": r, "cells": n}}, "empty_interior": false,
// "sides": [{"hollow": <hollow JSON or {"file": path}>, "copies": m,
// "levels": l, "kappa": k}, ...]}.  One side entry applies to every side.
#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "roughscatter/body.hpp"
#include "roughscatter/errors.hpp"
#include "roughscatter/geometry.hpp"
#include "roughscatter/hollow.hpp"
#include "roughscatter/measures.hpp"
#include "roughscatter/reflector.hpp"
#include "roughscatter/synthesis.hpp"
#include "roughscatter/transport.hpp"

namespace roughscatter {

using json = nlohmann::json;

#ifndef ROUGHSCATTER_VERSION
#define ROUGHSCATTER_VERSION "unknown"
#endif

inline const char* version() { return ROUGHSCATTER_VERSION; }

namespace io {

inline json point(Point2 p) { return json::array({p.x, p.y}); }

inline Point2 point(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::kParse, "expected a point [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw Error(ErrorCode::kParse, std::string("missing number '") + key + "'");
  return j.at(key).get<double>();
}

inline json to_json(const BoundaryCurve& c) {
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Segment>) {
          return {{"type", "segment"}, {"p0", point(k.p0)}, {"p1", point(k.p1)}};
        } else if constexpr (std::is_same_v<T, CircularArc>) {
          return {{"type", "circular_arc"}, {"center", point(k.center)}, {"radius", k.radius},
                  {"start", k.range.start}, {"sweep", k.range.sweep}};
        } else if constexpr (std::is_same_v<T, EllipticArc>) {
          return {{"type", "elliptic_arc"}, {"focus1", point(k.focus1)}, {"focus2", point(k.focus2)},
                  {"lambda", k.lambda}, {"start", k.range.start}, {"sweep", k.range.sweep}};
        } else {
          return {{"type", "parabolic_arc"}, {"focus", point(k.focus)}, {"axis", point(k.axis.vec())},
                  {"delta", k.delta}, {"start", k.range.start}, {"sweep", k.range.sweep}};
        }
      },
      c);
}

inline BoundaryCurve curve_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw Error(ErrorCode::kParse, "curve needs a 'type'");
  }
  const std::string t = j.at("type");
  const auto range = [&] { return AngleRange{number(j, "start"), number(j, "sweep")}; };
  if (t == "segment") return Segment{point(j.at("p0")), point(j.at("p1"))};
  if (t == "circular_arc") return CircularArc{point(j.at("center")), number(j, "radius"), range()};
  if (t == "elliptic_arc") return EllipticArc{point(j.at("focus1")), point(j.at("focus2")), number(j, "lambda"), range()};
  if (t == "parabolic_arc") {
    // An axis that is already unit up to rounding is kept bit-exact.
    const Vec2 v = point(j.at("axis"));
    const UnitVec2 axis = std::abs(norm(v) - 1.0) < 1e-15 ? UnitVec2::unchecked(v) : UnitVec2(v);
    return ParabolicArc{point(j.at("focus")), axis, number(j, "delta"), range()};
  }
  throw Error(ErrorCode::kParse, "unknown curve type '" + t + "'");
}

inline json to_json(const Hollow& h) {
  json walls = json::array();
  for (const auto& c : h.walls()) walls.push_back(to_json(c));
  return {{"kind", "hollow"}, {"name", h.kind()}, {"half_width", h.half_width()}, {"walls", walls}};
}

inline json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

inline Hollow hollow_from_json(const json& j, const std::filesystem::path& base = {}) {
  try {
    if (j.contains("file")) return hollow_from_json(read_file(base / j.at("file").get<std::string>()), base);
    if (j.value("kind", std::string()) == "reflector_hollow") return hollow_from_json(j.at("hollow"), base);
    if (j.contains("template")) {
      const std::string t = j.at("template");
      if (t == "flat") return Hollow::flat();
      if (t == "triangular") return make_triangular();
      if (t == "rectangular") return make_rectangular(number(j, "h"));
      throw Error(ErrorCode::kParse, "unknown template '" + t + "'");
    }
    if (!j.contains("walls") || !j.at("walls").is_array()) throw Error(ErrorCode::kParse, "hollow needs 'walls'");
    std::vector<BoundaryCurve> walls;
    for (const json& c : j.at("walls")) walls.push_back(curve_from_json(c));
    const std::string name = j.value("name", std::string("custom"));
    return Hollow(std::move(walls), number(j, "half_width"), name);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

inline ConvexBody body_from_json(const json& j) {
  if (j.contains("polygon")) {
    std::vector<Point2> v;
    for (const json& p : j.at("polygon")) v.push_back(point(p));
    return ConvexBody::polygon(std::move(v));
  }
  if (j.contains("disk")) {
    const json& d = j.at("disk");
    return ConvexBody::disk(number(d, "radius"), d.value("cells", 64));
  }
  if (j.contains("square")) return ConvexBody::unit_square();
  throw Error(ErrorCode::kParse, "body needs 'polygon' or 'disk'");
}

inline json to_json(const ConvexBody& b) {
  if (b.is_disk()) return {{"disk", {{"radius", b.radius()}, {"cells", b.sides()}}}};
  json v = json::array();
  for (const Point2& p : b.vertices()) v.push_back(point(p));
  return {{"polygon", v}};
}

inline RoughBodySpec body_spec_from_json(const json& j, const std::filesystem::path& base = {}) {
  try {
    if (!j.contains("body")) throw Error(ErrorCode::kParse, "body spec needs 'body'");
    RoughBodySpec spec;
    spec.body = body_from_json(j.at("body"));
    spec.empty_interior = j.value("empty_interior", false);
    if (j.contains("sides")) {
      for (const json& s : j.at("sides")) {
        SideSpec side;
        if (s.contains("hollow") && !s.at("hollow").is_null()) {
          side.hollow = std::make_shared<const Hollow>(hollow_from_json(s.at("hollow"), base));
        }
        side.packing.copies = s.value("copies", side.packing.copies);
        side.packing.levels = s.value("levels", side.packing.levels);
        side.packing.kappa = s.value("kappa", side.packing.kappa);
        spec.sides.push_back(std::move(side));
      }
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

inline json to_json(const RoughBodySpec& s) {
  json sides = json::array();
  for (const SideSpec& side : s.sides) {
    sides.push_back({{"hollow", side.hollow ? to_json(*side.hollow) : json(nullptr)},
                     {"copies", side.packing.copies},
                     {"levels", side.packing.levels},
                     {"kappa", side.packing.kappa}});
  }
  return {{"kind", "body"}, {"body", to_json(s.body)}, {"empty_interior", s.empty_interior}, {"sides", sides}};
}

/// Error classes for the CLI exit status: 2 for bad input, 3 for numeric
/// or solver failures.
inline int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidRatio:
    case ErrorCode::kNotInLambda:
    case ErrorCode::kAsymmetricInput:
    case ErrorCode::kBinningMismatch:
    case ErrorCode::kDoesNotFit:
    case ErrorCode::kEmptyCell:
    case ErrorCode::kParse: return 2;
    default: return 3;
  }
}

/// Spec file of either kind: "kind" decides, defaulting to hollow.
inline bool is_body_spec(const json& j) { return j.value("kind", std::string("hollow")) == "body"; }

inline json binning_json(const Binning& b) { return {{"kind", binning_name(b.kind())}, {"bins", b.bins()}}; }

inline json status_counts(const std::array<std::uint64_t, kStatusCount>& d) {
  json j = json::object();
  for (int k = 1; k < kStatusCount; ++k) j[status_name(static_cast<TraceStatus>(k))] = d[k];
  return j;
}

inline json to_json(const GridMeasure& gm) {
  json rows = json::array();
  for (int i = 0; i < gm.bins(); ++i) {
    json r = json::array();
    for (int j = 0; j < gm.bins(); ++j) r.push_back(gm.at(i, j));
    rows.push_back(r);
  }
  return {{"binning", binning_json(gm.binning())}, {"edges", gm.binning().edges()}, {"mass", rows},
          {"samples", gm.samples}, {"discarded", status_counts(gm.discarded)}};
}

/// CSV with one row per phi cell and one column per phi+ cell.
inline std::string to_csv(const GridMeasure& gm) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < gm.bins(); ++i) {
    for (int j = 0; j < gm.bins(); ++j) os << (j ? "," : "") << gm.at(i, j);
    os << "\n";
  }
  return os.str();
}

/// Long-format CSV: side,phi_cell,phi_plus_cell,mass (nonzero cells only).
inline std::string to_csv(const T3Histogram& h) {
  std::ostringstream os;
  os.precision(17);
  os << "side,phi_cell,phi_plus_cell,mass\n";
  for (int s = 0; s < h.sides(); ++s)
    for (int i = 0; i < h.bins(); ++i)
      for (int j = 0; j < h.bins(); ++j)
        if (h.at(s, i, j) != 0.0) os << s << "," << i << "," << j << "," << h.at(s, i, j) << "\n";
  return os.str();
}

inline json to_json(const T3Histogram& h) {
  json sides = json::array();
  for (int s = 0; s < h.sides(); ++s) {
    json rows = json::array();
    for (int i = 0; i < h.bins(); ++i) {
      json r = json::array();
      for (int j = 0; j < h.bins(); ++j) r.push_back(h.at(s, i, j));
      rows.push_back(r);
    }
    sides.push_back({{"length", h.body().side_length(s)},
                     {"normal", point(h.body().side_normal(s).vec())},
                     {"mass", rows}});
  }
  return {{"body", to_json(h.body())}, {"binning", binning_json(h.binning())}, {"sides", sides},
          {"samples", h.samples}, {"discarded", status_counts(h.discarded)}};
}

inline json to_json(const ReflectorHollow& rh) {
  json h = to_json(rh.hollow);
  json roles = json::array();
  for (WallRole r : rh.roles) roles.push_back(role_name(r));
  h["roles"] = roles;
  json pairs = json::array();
  for (const SubPair& p : rh.pairs) {
    pairs.push_back({{"i", p.i},
                     {"j", p.j},
                     {"Phi", p.spec.Phi},
                     {"Phi_prime", p.spec.Phi_prime},
                     {"lambda", p.spec.lambda},
                     {"lambda_prime", p.spec.lambda_prime},
                     {"delta", p.spec.delta},
                     {"cell", {p.lo, p.hi}},
                     {"cell_prime", {p.lo_prime, p.hi_prime}},
                     {"channelled", {p.good_lo, p.good_hi}},
                     {"channelled_prime", {p.good_prime_lo, p.good_prime_hi}},
                     {"walls", p.walls},
                     {"a_max", p.a_max}});
  }
  return {{"kind", "reflector_hollow"},
          {"permutation", rh.sigma.to_string()},
          {"m", rh.sigma.size()},
          {"epsilon", rh.epsilon},
          {"k", rh.k},
          {"a", rh.a},
          {"a_inner", rh.a_inner},
          {"hollow", h},
          {"pairs", pairs}};
}

inline json to_json(const MisdirectionReport& r) {
  json cells = json::array();
  for (std::size_t c = 0; c < r.cells.size(); ++c) {
    cells.push_back({{"cell", r.cells[c]},
                     {"misdirected_fraction", r.fraction[c]},
                     {"misdirected_mass", r.mass[c]},
                     {"discarded", r.discarded[c]}});
  }
  return {{"samples_per_cell", r.samples_per_cell}, {"cells", cells}};
}

inline std::string rational_string(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline json to_json(const RationalBlockInput& c) {
  json rows = json::array();
  for (int i = 0; i < c.k; ++i) {
    json r = json::array();
    for (int j = 0; j < c.k; ++j) r.push_back(rational_string(c.at(i, j)));
    rows.push_back(r);
  }
  return {{"k", c.k}, {"c", rows}};
}

}  // namespace io
}  // namespace roughscatter
