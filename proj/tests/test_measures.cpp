#include <gtest/gtest.h>

#include <cmath>

#include "roughscatter/measures.hpp"

using namespace roughscatter;

namespace {

const AnalyticFamily kFamilies[] = {AnalyticFamily::kEta0, AnalyticFamily::kEtaTriangular,
                                    AnalyticFamily::kEtaRectLimit, AnalyticFamily::kEtaStar};

/// Deterministic midpoint quadrature of the hollow's measure over an
/// (xi, phi) grid, binned like an estimate.
GridMeasure quadrature_measure(const Hollow& h, const Binning& b, int nxi, int nphi) {
  GridMeasure gm(b);
  const double a = h.half_width();
  const double dxi = 2.0 * a / nxi, dphi = kPi / nphi;
  for (int p = 0; p < nphi; ++p) {
    const double phi = -kHalfPi + (p + 0.5) * dphi;
    const double w = std::cos(phi) * dphi * dxi / (2.0 * a);
    for (int q = 0; q < nxi; ++q) {
      const TraceResult r = trace(h, {-a + (q + 0.5) * dxi, phi});
      if (r.ok()) gm.at(b.cell(phi), b.cell(r.out.phi)) += w;
    }
  }
  return gm;
}

}  // namespace

TEST(Binning, EqualLambdaEdges) {
  const Binning b(BinningKind::kEqualLambda, 4);
  EXPECT_NEAR(b.lo(1), -kPi / 6, 1e-15);
  EXPECT_NEAR(b.lo(2), 0.0, 1e-15);
  EXPECT_NEAR(b.hi(2), kPi / 6, 1e-15);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::sin(b.hi(i)) - std::sin(b.lo(i)), 0.5, 1e-15);
    EXPECT_EQ(b.cell(b.representative(i)), i);
  }
}

TEST(Analytic, MassAndLambdaMembership) {
  for (BinningKind kind : {BinningKind::kEqualLambda, BinningKind::kUniform}) {
    for (int bins : {2, 7, 32}) {
      const Binning b(kind, bins);
      for (AnalyticFamily f : kFamilies) {
        const GridMeasure gm = discretize(f, b);
        EXPECT_NEAR(gm.total_mass(), 2.0, 1e-12) << family_name(f);
        const LambdaDefect d = lambda_defect(gm);
        EXPECT_LT(d.incoming, 1e-12) << family_name(f);
        EXPECT_LT(d.outgoing, 1e-12) << family_name(f);
        EXPECT_LT(symmetry_defect(gm), 1e-12) << family_name(f);
        for (double m : gm.masses()) EXPECT_GE(m, -1e-15);
      }
    }
  }
}

TEST(Analytic, DisjointDiagonals) {
  for (BinningKind kind : {BinningKind::kEqualLambda, BinningKind::kUniform}) {
    for (int bins : {2, 4, 32}) {
      const Binning b(kind, bins);
      EXPECT_NEAR(tv_distance(discretize(AnalyticFamily::kEta0, b), discretize(AnalyticFamily::kEtaStar, b)), 2.0,
                  1e-12);
    }
  }
}

TEST(Analytic, TriangularMatchesTracedQuadrature) {
  const Binning b(BinningKind::kEqualLambda, 8);
  const GridMeasure ref = quadrature_measure(make_triangular(), b, 400, 4000);
  const GridMeasure an = discretize(AnalyticFamily::kEtaTriangular, b);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(an.at(i, j), ref.at(i, j), 2e-3) << i << "," << j;
}

TEST(Distance, Properties) {
  const Binning b(BinningKind::kEqualLambda, 16);
  const GridMeasure x = discretize(AnalyticFamily::kEtaTriangular, b);
  const GridMeasure y = discretize(AnalyticFamily::kEtaRectLimit, b);
  EXPECT_EQ(tv_distance(x, x), 0.0);
  EXPECT_EQ(tv_distance(x, y), tv_distance(y, x));
  EXPECT_THROW(tv_distance(x, discretize(AnalyticFamily::kEta0, Binning(BinningKind::kUniform, 16))), Error);
}

TEST(Defects, NegativeControls) {
  const Binning b(BinningKind::kEqualLambda, 8);
  GridMeasure gm = discretize(AnalyticFamily::kEtaStar, b);
  gm.at(0, 1) += 0.01;
  EXPECT_NEAR(symmetry_defect(gm), 0.01, 1e-15);
  GridMeasure skew(b);
  skew.at(0, 0) = 2.0;
  const LambdaDefect d = lambda_defect(skew);
  EXPECT_GT(d.incoming, 0.0);
  EXPECT_GT(d.outgoing, 0.0);
  EXPECT_EQ(lambda_defect(discretize(AnalyticFamily::kEta0, b)).incoming, 0.0);
}

TEST(Estimate, FlatMirrorMatchesEta0) {
  EstimateOptions opt;
  opt.samples = 1000000;
  opt.seed = 1;
  const GridMeasure gm = estimate(Hollow::flat(), opt);
  EXPECT_LT(tv_distance(gm, discretize(AnalyticFamily::kEta0, opt.binning)), 0.02);
  EXPECT_NEAR(gm.total_mass(), 2.0, 1e-9);
}

TEST(Estimate, TriangularMatchesAndIsInLambda) {
  EstimateOptions opt;
  opt.samples = 1000000;
  opt.seed = 2;
  const GridMeasure gm = estimate(make_triangular(), opt);
  EXPECT_LT(tv_distance(gm, discretize(AnalyticFamily::kEtaTriangular, opt.binning)), 0.03);
  const LambdaDefect d = lambda_defect(gm);
  EXPECT_LT(d.incoming, 0.01);
  EXPECT_LT(d.outgoing, 0.01);
  EXPECT_NEAR(gm.total_mass() + 2.0 * gm.discarded_total() / gm.samples, 2.0, 1e-9);
}

TEST(Estimate, DeepRectangleMatchesLimit) {
  EstimateOptions opt;
  opt.samples = 200000;
  opt.seed = 3;
  const GridMeasure gm = estimate(make_rectangular(0.01), opt);
  EXPECT_LT(tv_distance(gm, discretize(AnalyticFamily::kEtaRectLimit, opt.binning)), 0.05);
}

TEST(Estimate, ReproducibleAcrossThreadCounts) {
  EstimateOptions opt;
  opt.samples = 50000;
  opt.seed = 77;
  opt.threads = 1;
  const GridMeasure a = estimate(make_rectangular(0.5), opt);
  opt.threads = 3;
  const GridMeasure b = estimate(make_rectangular(0.5), opt);
  EXPECT_EQ(a.masses(), b.masses());
  opt.seed = 78;
  const GridMeasure c = estimate(make_rectangular(0.5), opt);
  EXPECT_NE(a.masses(), c.masses());
}

TEST(Estimate, DiscardRateGuard) {
  EstimateOptions opt;
  opt.samples = 1000;
  opt.max_bounces = 1;
  EXPECT_THROW(estimate(make_rectangular(0.01), opt), Error);
  opt.max_bounces = 10000;
  EXPECT_NO_THROW(estimate(make_rectangular(0.01), opt));
}
