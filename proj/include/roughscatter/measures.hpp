// Scattering measures on the angle square [-pi/2, pi/2]^2: histograms,
// closed-form reference families and the marginal/symmetry defects.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "roughscatter/errors.hpp"
#include "roughscatter/geometry.hpp"
#include "roughscatter/hollow.hpp"
#include "roughscatter/sampling.hpp"

namespace roughscatter {

enum class BinningKind { kEqualLambda, kUniform };

inline const char* binning_name(BinningKind k) {
  return k == BinningKind::kEqualLambda ? "equal_lambda" : "uniform";
}

/// Partition of [-pi/2, pi/2] into B cells, either of equal mass under
/// cos(phi) dphi or of equal length.
class Binning {
 public:
  Binning() : Binning(BinningKind::kEqualLambda, 32) {}
  Binning(BinningKind kind, int bins) : kind_(kind), bins_(bins) {
    if (bins < 1) throw Error(ErrorCode::kInvalidArgument, "bins must be positive");
    edges_.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) edges_[i] = edge(kind, bins, i);
  }

  /// i-th boundary of the partition (i = 0..bins).
  static double edge(BinningKind kind, int bins, int i) {
    if (i <= 0) return -kHalfPi;
    if (i >= bins) return kHalfPi;
    if (kind == BinningKind::kEqualLambda) return std::asin(-1.0 + 2.0 * i / bins);
    return -kHalfPi + kPi * i / bins;
  }

  BinningKind kind() const { return kind_; }
  int bins() const { return bins_; }
  const std::vector<double>& edges() const { return edges_; }
  double lo(int i) const { return edges_[i]; }
  double hi(int i) const { return edges_[i + 1]; }

  int cell(double phi) const {
    double f = kind_ == BinningKind::kEqualLambda ? 0.5 * (std::sin(phi) + 1.0) : (phi + kHalfPi) / kPi;
    int i = static_cast<int>(std::floor(f * bins_));
    if (i < 0) i = 0;
    if (i >= bins_) i = bins_ - 1;
    return i;
  }

  /// Mass of cell i under cos(phi) dphi.
  double lambda_mass(int i) const {
    if (kind_ == BinningKind::kEqualLambda) return 2.0 / bins_;
    return std::sin(hi(i)) - std::sin(lo(i));
  }

  /// Median of cell i under cos(phi) dphi.
  double representative(int i) const {
    return std::asin(0.5 * (std::sin(lo(i)) + std::sin(hi(i))));
  }

  bool operator==(const Binning& o) const { return kind_ == o.kind_ && bins_ == o.bins_; }

 private:
  BinningKind kind_;
  int bins_;
  std::vector<double> edges_;
};

inline constexpr int kStatusCount = 6;

/// Histogram measure on the angle square; mass(i, j) is the mass of the
/// cell (phi in J_i, phi+ in J_j).
class GridMeasure {
 public:
  GridMeasure() = default;
  explicit GridMeasure(Binning b) : binning_(std::move(b)), mass_(binning_.bins() * binning_.bins(), 0.0) {}

  const Binning& binning() const { return binning_; }
  int bins() const { return binning_.bins(); }
  double& at(int i, int j) { return mass_[i * bins() + j]; }
  double at(int i, int j) const { return mass_[i * bins() + j]; }
  const std::vector<double>& masses() const { return mass_; }

  double total_mass() const {
    double s = 0.0;
    for (double m : mass_) s += m;
    return s;
  }

  std::vector<double> row_marginal() const {
    std::vector<double> r(bins(), 0.0);
    for (int i = 0; i < bins(); ++i)
      for (int j = 0; j < bins(); ++j) r[i] += at(i, j);
    return r;
  }

  std::vector<double> column_marginal() const {
    std::vector<double> c(bins(), 0.0);
    for (int i = 0; i < bins(); ++i)
      for (int j = 0; j < bins(); ++j) c[j] += at(i, j);
    return c;
  }

  GridMeasure transposed() const {
    GridMeasure t(binning_);
    for (int i = 0; i < bins(); ++i)
      for (int j = 0; j < bins(); ++j) t.at(j, i) = at(i, j);
    t.samples = samples;
    t.discarded = discarded;
    return t;
  }

  /// Number of traced samples and per-status discard counts (indexed by
  /// TraceStatus) for empirical measures.
  std::uint64_t samples = 0;
  std::array<std::uint64_t, kStatusCount> discarded{};

  std::uint64_t discarded_total() const {
    std::uint64_t s = 0;
    for (auto d : discarded) s += d;
    return s;
  }

 private:
  Binning binning_;
  std::vector<double> mass_;
};

/// Total variation distance 1/2 sum |a - b|.
inline double tv_distance(const GridMeasure& a, const GridMeasure& b) {
  if (!(a.binning() == b.binning())) throw Error(ErrorCode::kBinningMismatch, "measures use different binnings");
  double s = 0.0;
  for (std::size_t k = 0; k < a.masses().size(); ++k) s += std::abs(a.masses()[k] - b.masses()[k]);
  return 0.5 * s;
}

struct LambdaDefect {
  double incoming = 0.0;  // marginal in phi
  double outgoing = 0.0;  // marginal in phi+
};

/// Distances of both marginals from the binned cos(phi) dphi.
inline LambdaDefect lambda_defect(const GridMeasure& gm) {
  const auto r = gm.row_marginal();
  const auto c = gm.column_marginal();
  LambdaDefect d;
  for (int i = 0; i < gm.bins(); ++i) {
    const double l = gm.binning().lambda_mass(i);
    d.incoming += std::abs(r[i] - l);
    d.outgoing += std::abs(c[i] - l);
  }
  d.incoming *= 0.5;
  d.outgoing *= 0.5;
  return d;
}

/// Distance between the measure and its reflection in the diagonal.
inline double symmetry_defect(const GridMeasure& gm) { return tv_distance(gm, gm.transposed()); }

// --- Closed-form families -------------------------------------------------

enum class AnalyticFamily { kEta0, kEtaTriangular, kEtaRectLimit, kEtaStar };

inline const char* family_name(AnalyticFamily f) {
  switch (f) {
    case AnalyticFamily::kEta0: return "eta0";
    case AnalyticFamily::kEtaTriangular: return "eta_triangular";
    case AnalyticFamily::kEtaRectLimit: return "eta_rect_limit";
    case AnalyticFamily::kEtaStar: return "eta_star";
  }
  return "unknown";
}

/// Mass density w(phi) carried by the line phi+ = slope * phi + offset for
/// phi in [lo, hi]; w = coef * cos(phi) or coef * |sin(phi)|.
struct LineComponent {
  int slope = 1;
  double offset = 0.0;
  bool sine_weight = false;
  double coef = 1.0;
  double lo = -kHalfPi;
  double hi = kHalfPi;

  double weight(double phi) const { return coef * (sine_weight ? std::abs(std::sin(phi)) : std::cos(phi)); }
  /// Antiderivative of the weight.
  double primitive(double phi) const {
    if (!sine_weight) return coef * std::sin(phi);
    return coef * std::copysign(1.0 - std::cos(phi), phi);
  }
  double target(double phi) const { return slope * phi + offset; }
};

inline std::vector<LineComponent> components(AnalyticFamily f) {
  const double q = 0.25 * kPi;
  switch (f) {
    case AnalyticFamily::kEta0:
      return {{-1, 0.0, false, 1.0, -kHalfPi, kHalfPi}};
    case AnalyticFamily::kEtaStar:
      return {{1, 0.0, false, 1.0, -kHalfPi, kHalfPi}};
    case AnalyticFamily::kEtaRectLimit:
      return {{-1, 0.0, false, 0.5, -kHalfPi, kHalfPi}, {1, 0.0, false, 0.5, -kHalfPi, kHalfPi}};
    case AnalyticFamily::kEtaTriangular:
      return {
          {-1, -kHalfPi, false, 1.0, -kHalfPi, -q},
          {1, 0.0, false, 1.0, -q, q},
          {-1, kHalfPi, false, 1.0, q, kHalfPi},
          {-1, -kHalfPi, true, 1.0, -q, 0.0},
          {1, 0.0, true, -1.0, -q, q},
          {-1, kHalfPi, true, 1.0, 0.0, q},
      };
  }
  return {};
}

/// Exact cell masses of a closed-form family on the given binning.
inline GridMeasure discretize(AnalyticFamily f, const Binning& b) {
  GridMeasure gm(b);
  for (const LineComponent& c : components(f)) {
    for (int i = 0; i < b.bins(); ++i) {
      const double p0 = std::max(c.lo, b.lo(i));
      const double p1 = std::min(c.hi, b.hi(i));
      if (!(p1 > p0)) continue;
      for (int j = 0; j < b.bins(); ++j) {
        // Preimage of J_j under the line map.
        double q0 = c.slope > 0 ? b.lo(j) - c.offset : c.offset - b.hi(j);
        double q1 = c.slope > 0 ? b.hi(j) - c.offset : c.offset - b.lo(j);
        q0 = std::max(q0, p0);
        q1 = std::min(q1, p1);
        if (q1 > q0) gm.at(i, j) += c.primitive(q1) - c.primitive(q0);
      }
    }
  }
  return gm;
}

// --- Estimation -----------------------------------------------------------

struct EstimateOptions {
  std::uint64_t samples = 1000000;
  Binning binning;
  std::uint64_t seed = 1;
  int threads = 0;
  int max_bounces = 10000;
  /// Largest tolerated fraction of discarded trajectories.
  double max_discard_rate = 0.01;
};

/// Monte-Carlo estimate of the scattering measure of a hollow.  Every
/// sample carries mass 2/N; discarded trajectories are counted by status.
inline GridMeasure estimate(const Hollow& hollow, const EstimateOptions& opt) {
  if (opt.samples < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one sample");
  struct Shard {
    std::vector<std::uint64_t> counts;
    std::array<std::uint64_t, kStatusCount> discarded{};
  };
  const Binning& b = opt.binning;
  const int cells = b.bins() * b.bins();
  TraceOptions to;
  to.max_bounces = opt.max_bounces;
  auto shards = run_shards<Shard>(opt.samples, opt.seed, opt.threads, [&](int, std::uint64_t n, Rng& rng) {
    Shard s;
    s.counts.assign(cells, 0);
    for (std::uint64_t k = 0; k < n; ++k) {
      const InState in = sample_inflow(hollow.half_width(), rng);
      const TraceResult r = trace(hollow, in, to);
      if (!r.ok()) {
        ++s.discarded[static_cast<int>(r.status)];
        continue;
      }
      ++s.counts[b.cell(in.phi) * b.bins() + b.cell(r.out.phi)];
    }
    return s;
  });
  std::vector<std::uint64_t> counts(cells, 0);
  GridMeasure gm(b);
  for (const Shard& s : shards) {
    for (int k = 0; k < cells; ++k) counts[k] += s.counts[k];
    for (int k = 0; k < kStatusCount; ++k) gm.discarded[k] += s.discarded[k];
  }
  const double w = 2.0 / static_cast<double>(opt.samples);
  for (int i = 0; i < b.bins(); ++i)
    for (int j = 0; j < b.bins(); ++j) gm.at(i, j) = w * static_cast<double>(counts[i * b.bins() + j]);
  gm.samples = opt.samples;
  const double rate = static_cast<double>(gm.discarded_total()) / static_cast<double>(opt.samples);
  if (rate > opt.max_discard_rate) {
    throw Error(ErrorCode::kDiscardRateExceeded, "discarded fraction " + std::to_string(rate));
  }
  return gm;
}

}  // namespace roughscatter
