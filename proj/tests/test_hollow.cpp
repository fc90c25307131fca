#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "roughscatter/hollow.hpp"

using namespace roughscatter;

namespace {

struct Sampled {
  std::vector<double> phi_out;
  std::size_t discarded = 0;
};

Sampled sample_exit_angles(const Hollow& h, std::size_t n, std::uint64_t seed) {
  Sampled s;
  s.phi_out.reserve(n);
  Rng rng(seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const TraceResult r = trace(h, sample_inflow(h.half_width(), rng));
    if (r.ok()) s.phi_out.push_back(r.out.phi); else ++s.discarded;
  }
  return s;
}

/// Kolmogorov-Smirnov distance of samples to the CDF (1 + sin phi)/2.
double ks_to_inflow(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 0.5 * (1.0 + std::sin(x[i]));
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return d;
}

}  // namespace

TEST(Triangular, Shape) {
  const Hollow h = make_triangular();
  ASSERT_EQ(h.walls().size(), 2u);
  const auto& left = std::get<Segment>(h.walls()[0]);
  const auto& right = std::get<Segment>(h.walls()[1]);
  EXPECT_EQ(left.p1, (Point2{0.0, 1.0}));
  EXPECT_NEAR(distance(left.p0, left.p1), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(distance(right.p0, right.p1), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(dot(left.p1 - left.p0, right.p1 - right.p0), 0.0, 1e-15);
  EXPECT_NEAR(h.area(), 1.0, 1e-12);
}

TEST(Triangular, DoubleReflectionAtCenter) {
  const TraceResult r = trace(make_triangular(), {0.0, 0.0});
  ASSERT_TRUE(r.ok()) << status_name(r.status);
  EXPECT_EQ(r.bounces, 2);
  EXPECT_NEAR(r.out.xi, 0.0, 1e-14);
  EXPECT_NEAR(r.out.phi, 0.0, 1e-14);
}

TEST(Triangular, SingleReflectionLateral) {
  const Hollow h = make_triangular();
  for (double xi : {-0.9, -0.5, 0.0, 0.4, 0.95}) {
    const TraceResult r = trace(h, {xi, 3 * kPi / 8});
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.bounces, 1);
    EXPECT_NEAR(r.out.phi, kPi / 8, 1e-12);
  }
}

TEST(Triangular, SingleBounceFractionOnGrid) {
  const Hollow h = make_triangular();
  const int n = 10000;
  int single = 0;
  for (int i = 0; i < n; ++i) {
    const double xi = -1.0 + (2.0 * i + 1.0) / n;
    const TraceResult r = trace(h, {xi, kPi / 8});
    ASSERT_TRUE(r.ok());
    ASSERT_TRUE(r.bounces == 1 || r.bounces == 2);
    if (r.bounces == 1) {
      ++single;
      EXPECT_NEAR(r.out.phi, 3 * kPi / 8, 1e-12);
    } else {
      EXPECT_NEAR(r.out.phi, kPi / 8, 1e-12);
    }
  }
  EXPECT_NEAR(static_cast<double>(single) / n, std::tan(kPi / 8), 0.01);
}

TEST(Rectangular, Shape) {
  EXPECT_NEAR(make_rectangular(2.0).depth(), 1.0, 1e-15);
  EXPECT_NEAR(make_rectangular(0.01).depth(), 200.0, 1e-12);
  EXPECT_THROW(make_rectangular(0.0), Error);
  EXPECT_THROW(make_rectangular(-1.0), Error);
}

TEST(Rectangular, Retroreflection) {
  for (double h : {0.01, 0.5, 2.0}) {
    const TraceResult r = trace(make_rectangular(h), {0.0, 0.0});
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.bounces, 1);
    EXPECT_NEAR(r.out.xi, 0.0, 1e-14);
    EXPECT_NEAR(r.out.phi, 0.0, 1e-14);
  }
  // Straight down and straight back up: the exit point equals the entry.
  const TraceResult r = trace(make_rectangular(2.0), {0.3, 0.0});
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.out.xi, 0.3, 1e-14);
  EXPECT_NEAR(r.out.phi, 0.0, 1e-14);
}

TEST(Rectangular, ParityMatchesDiagonal) {
  const Hollow h = make_rectangular(0.3);
  Rng rng(5, 0);
  for (int i = 0; i < 20000; ++i) {
    const InState s = sample_inflow(1.0, rng);
    const TraceResult r = trace(h, s);
    ASSERT_TRUE(r.ok());
    if (r.bounces % 2 == 0) {
      EXPECT_NEAR(r.out.phi, s.phi, 1e-9);
    } else {
      EXPECT_NEAR(r.out.phi, -s.phi, 1e-9);
    }
  }
}

TEST(Rectangular, DiagonalSplitForDeepHollow) {
  const Hollow h = make_rectangular(0.01);
  Rng rng(17, 0);
  const int n = 100000;
  int same = 0, flipped = 0;
  for (int i = 0; i < n; ++i) {
    const InState s = sample_inflow(1.0, rng);
    const TraceResult r = trace(h, s);
    if (!r.ok()) continue;
    same += std::abs(r.out.phi - s.phi) < 1e-9;
    flipped += std::abs(r.out.phi + s.phi) < 1e-9;
  }
  EXPECT_NEAR(static_cast<double>(same) / n, 0.5, 0.02);
  EXPECT_NEAR(static_cast<double>(flipped) / n, 0.5, 0.02);
}

TEST(Flat, MirrorLaw) {
  const TraceResult r = trace(Hollow::flat(), {0.2, 0.7});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.out.xi, 0.2);
  EXPECT_EQ(r.out.phi, -0.7);
}

TEST(Trace, InvolutionCanonicalHollows) {
  for (const Hollow& h : {make_triangular(), make_rectangular(0.01), make_rectangular(2.0), Hollow::flat()}) {
    Rng rng(99, 0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const InState s = sample_inflow(1.0, rng);
      const TraceResult r = trace(h, s);
      if (!r.ok()) continue;
      const TraceResult back = trace(h, r.out);
      ASSERT_TRUE(back.ok());
      worst = std::max({worst, std::abs(back.out.xi - s.xi), std::abs(back.out.phi - s.phi)});
    }
    EXPECT_LT(worst, 1e-8) << h.kind();
  }
}

TEST(Trace, PathSegmentsAreConsistent) {
  TraceOptions opt;
  opt.record_path = true;
  const TraceResult r = trace(make_rectangular(0.5), {0.1, 0.6}, opt);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.path.size(), static_cast<std::size_t>(r.bounces) + 2);
  double len = 0.0;
  for (std::size_t i = 1; i < r.path.size(); ++i) len += distance(r.path[i], r.path[i - 1]);
  EXPECT_NEAR(len, r.length, 1e-10);
}

TEST(Trace, RejectsInvalidState) {
  EXPECT_THROW(trace(make_triangular(), {1.0, 0.0}), Error);
  EXPECT_THROW(trace(make_triangular(), {0.0, 1.6}), Error);
}

TEST(SampleInflow, MedianAndSymmetry) {
  Rng rng(3, 0);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const InState s = sample_inflow(1.0, rng);
    ASSERT_LT(std::abs(s.xi), 1.0);
    ASSERT_LT(std::abs(s.phi), kHalfPi);
    sum += std::sin(s.phi);
  }
  EXPECT_NEAR(sum / n, 0.0, 3e-3);
  EXPECT_EQ(std::asin(2.0 * 0.5 - 1.0), 0.0);
}

TEST(MeasurePreservation, ExitAngleKolmogorovSmirnov) {
  for (const Hollow& h : {Hollow::flat(), make_triangular(), make_rectangular(0.01)}) {
    const Sampled s = sample_exit_angles(h, 1000000, 2024);
    EXPECT_LT(s.discarded, 10000u);
    EXPECT_LT(ks_to_inflow(s.phi_out), 0.005) << h.kind();
  }
}
