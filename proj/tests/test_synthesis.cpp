#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <algorithm>

#include "roughscatter/reflector.hpp"
#include "roughscatter/synthesis.hpp"

using namespace roughscatter;

namespace {

struct Pair {
  double Phi, Phi_prime;
};

const Pair kPairs[] = {{-0.5, 0.7}, {-1.0, -0.2}, {0.1, 0.9}, {-0.3, 0.25}};

ReflectorSpec calibrated_pair(const Pair& p, double fraction = 0.25) {
  ReflectorSpec s = ReflectorSpec::calibrated(p.Phi, p.Phi_prime, 0.0);
  s.delta = fraction * s.delta_critical();
  return s;
}

double central(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

/// Clockwise angle from a to b.
double clockwise(Vec2 a, Vec2 b) { return std::atan2(cross(b, a), dot(a, b)); }

}  // namespace

TEST(Partition, Boundaries) {
  const DirectionPartition p2 = partition(2);
  EXPECT_DOUBLE_EQ(p2.boundaries[0], -kHalfPi);
  EXPECT_DOUBLE_EQ(p2.boundaries[1], 0.0);
  EXPECT_DOUBLE_EQ(p2.boundaries[2], kHalfPi);
  const DirectionPartition p4 = partition(4);
  EXPECT_NEAR(p4.boundaries[1], -kPi / 6, 1e-15);
  EXPECT_NEAR(p4.boundaries[3], kPi / 6, 1e-15);
  for (int m = 1; m <= 64; ++m) {
    const DirectionPartition p = partition(m);
    for (int i = 1; i <= m; ++i) EXPECT_NEAR(std::sin(p.hi(i)) - std::sin(p.lo(i)), 2.0 / m, 1e-14);
  }
  EXPECT_THROW(partition(0), Error);
}

TEST(Permutation, ParseAndValidate) {
  const auto s = InvolutivePermutation::parse("1 5;2 4", 5);
  EXPECT_EQ(s.map(), (std::vector<int>{5, 4, 3, 2, 1}));
  EXPECT_EQ(s, InvolutivePermutation::reversal(5));
  EXPECT_EQ(s.to_string(), "1 5;2 4");
  EXPECT_EQ(InvolutivePermutation::parse("", 3), InvolutivePermutation::identity(3));
  EXPECT_THROW(InvolutivePermutation::parse("1 2 3", 3), Error);
  EXPECT_THROW(InvolutivePermutation::parse("1 2;2 3", 3), Error);
  EXPECT_THROW(InvolutivePermutation::parse("1 7", 3), Error);
  EXPECT_THROW(InvolutivePermutation::parse("1 x", 3), Error);
  EXPECT_THROW(InvolutivePermutation(std::vector<int>{2, 3, 1}), Error);
}

TEST(Calibrate, Values) {
  EXPECT_NEAR(calibrate(0.3, 0.0).lambda, 8.0, 1e-12);
  EXPECT_NEAR(calibrate(0.3, kPi / 3).lambda, 16.0 / 9.0, 1e-12);
  EXPECT_NEAR(calibrate(kPi / 3, 0.3).lambda_prime, 16.0 / 9.0, 1e-12);
  EXPECT_LT(calibrate(0.0, kHalfPi - 1e-8).lambda, 1e-7);
  EXPECT_THROW(calibrate(0.0, kHalfPi), Error);
  for (double a : {-1.2, -0.4, 0.0, 0.8, 1.5}) {
    const double l = calibrated_lambda(a);
    const double e = std::sqrt(1 + l);
    EXPECT_NEAR(l / ((1 + e) * (1 + e)), 0.5 * std::cos(a), 1e-14);
  }
}

TEST(PseudoBilliard, AxisTrajectoryLandsOnPairedAngle) {
  for (const Pair& p : kPairs) {
    const ReflectorSpec s = calibrated_pair(p);
    const auto r = pseudo_billiard(s, p.Phi, 0.0);
    EXPECT_NEAR(r.phi_out, p.Phi_prime, 1e-9);
    EXPECT_NEAR(r.xi_out, 0.0, 1e-12);
    const auto back = pseudo_billiard(s, p.Phi_prime, 0.0, true);
    EXPECT_NEAR(back.phi_out, p.Phi, 1e-9);
  }
}

TEST(PseudoBilliard, FocalTrajectoriesReturnToOrigin) {
  const ReflectorSpec s = calibrated_pair(kPairs[0]);
  for (double d : {-0.02, -0.005, 0.01, 0.03}) {
    const auto r = pseudo_billiard(s, s.Phi + d, 0.0);
    EXPECT_NEAR(r.xi_out, 0.0, 1e-12);
  }
}

TEST(PseudoBilliard, EllipseAngleRelation) {
  for (const Pair& p : kPairs) {
    const ReflectorSpec s = calibrated_pair(p);
    for (double d : {-0.03, -0.01, 0.002, 0.02, 0.04}) {
      const auto r = pseudo_billiard(s, p.Phi + d, 0.0);
      // Angle at F from the second segment to FO.
      const double alpha = clockwise(r.hits[0] - s.F(), -s.F());
      const double l = s.lambda, lp = s.lambda_prime;
      const double rhs = l * std::sin(alpha) / (2 + l - 2 * std::cos(alpha) * std::sqrt(1 + l));
      EXPECT_NEAR(std::sin(d), rhs, 1e-8);
      const double rhs_prime = -lp * std::sin(alpha) / (2 + lp - 2 * std::cos(alpha) * std::sqrt(1 + lp));
      EXPECT_NEAR(std::sin(r.phi_out - p.Phi_prime), rhs_prime, 1e-8);
    }
  }
}

TEST(PseudoBilliard, AngleDerivativeAtAxis) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> lam(0.3, 6.0);
  for (const Pair& p : kPairs) {
    ReflectorSpec s = calibrated_pair(p);
    s.lambda = lam(g);
    s.lambda_prime = lam(g);
    const double dphi = central([&](double x) { return pseudo_billiard(s, x, 0.0).phi_out; }, p.Phi);
    // Both ellipse relations linearized at the axis, alpha = pi.
    const auto f = [](double l) { return l / std::pow(1 + std::sqrt(1 + l), 2); };
    EXPECT_NEAR(dphi, -f(s.lambda_prime) / f(s.lambda), 1e-4);
    s.lambda_prime = s.lambda;
    EXPECT_NEAR(central([&](double x) { return pseudo_billiard(s, x, 0.0).phi_out; }, p.Phi), -1.0, 1e-4);
  }
}

TEST(PseudoBilliard, CalibratedDerivatives) {
  for (const Pair& p : kPairs) {
    const ReflectorSpec s = calibrated_pair(p);
    const double dxi = central([&](double x) { return pseudo_billiard(s, p.Phi, x).xi_out; }, 0.0, 1e-7);
    EXPECT_NEAR(std::abs(dxi), 1.0, 1e-3);
    const double dphi = central([&](double x) { return pseudo_billiard(s, x, 0.0).phi_out; }, p.Phi);
    EXPECT_NEAR(std::cos(p.Phi_prime) / std::cos(p.Phi) * dphi, -1.0, 1e-3);
  }
}

TEST(PseudoBilliard, IndependentOfParabolaFocalDistance) {
  for (const Pair& p : kPairs) {
    const ReflectorSpec a = calibrated_pair(p, 0.5), b = calibrated_pair(p, 0.25);
    for (double d : {-0.03, -0.01, 0.0, 0.015, 0.03}) {
      EXPECT_NEAR(pseudo_billiard(a, p.Phi + d, 0.0).phi_out, pseudo_billiard(b, p.Phi + d, 0.0).phi_out, 1e-10);
    }
  }
}

TEST(PseudoBilliard, SmallFocalDistanceKeepsPrecision) {
  // Rays through the focus of a tiny parabola, as in the reflector hollows.
  for (const Pair& p : kPairs) {
    const ReflectorSpec s = calibrated_pair(p, 1e-3);
    EXPECT_NEAR(pseudo_billiard(s, p.Phi, 0.0).phi_out, p.Phi_prime, 1e-9);
    EXPECT_NEAR(pseudo_billiard(s, p.Phi_prime, 0.0, true).phi_out, p.Phi, 1e-9);
  }
}

TEST(PseudoBilliard, OrderViolation) {
  const ReflectorSpec s = calibrated_pair(kPairs[0]);
  // Starting far outside the ellipse and moving away from it.
  try {
    pseudo_billiard(s, 0.5, 10.0);
    ADD_FAILURE() << "expected ORDER_VIOLATION";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOrderViolation);
  }
}

namespace {

/// Checks that the expansion of a is a symmetric permutation matrix whose
/// blocks sum to the entries of a.
::testing::AssertionResult valid_expansion(int k, const std::vector<std::int64_t>& a) {
  const PermutationExpansion e = expand_to_permutation(k, a);
  const int n = e.sigma.size();
  const std::vector<std::uint8_t> d = e.dense();
  std::vector<std::int64_t> sums(static_cast<std::size_t>(k) * k, 0);
  for (int r = 0; r < n; ++r) {
    int row = 0, col = 0;
    for (int c = 0; c < n; ++c) {
      row += d[r * n + c];
      col += d[c * n + r];
      if (d[r * n + c] != d[c * n + r]) return ::testing::AssertionFailure() << "D not symmetric";
    }
    if (row != 1 || col != 1) return ::testing::AssertionFailure() << "row/column " << r << " not a unit";
    sums[e.block_of(r + 1) * k + e.block_of(e.sigma(r + 1))] += 1;
  }
  if (sums != a) return ::testing::AssertionFailure() << "block sums differ";
  return ::testing::AssertionSuccess();
}

}  // namespace

TEST(ExpandToPermutation, Examples) {
  const auto one = expand_to_permutation(1, {1});
  EXPECT_EQ(one.sigma.map(), std::vector<int>{1});
  const auto two = expand_to_permutation(2, {0, 2, 2, 0});
  EXPECT_EQ(two.sigma.map(), (std::vector<int>{3, 4, 1, 2}));
  EXPECT_EQ(two.block_sizes, (std::vector<std::int64_t>{2, 2}));
  try {
    expand_to_permutation(2, {0, 1, 2, 0});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAsymmetricInput);
  }
}

TEST(ExpandToPermutation, ExhaustiveSmall) {
  int cases = 0;
  for (int k = 1; k <= 4; ++k) {
    std::vector<std::pair<int, int>> upper;
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) upper.push_back({i, j});
    int combos = 1;
    for (std::size_t t = 0; t < upper.size(); ++t) combos *= 3;
    for (int code = 0; code < combos; ++code) {
      std::vector<std::int64_t> a(static_cast<std::size_t>(k) * k, 0);
      int c = code;
      for (auto [i, j] : upper) {
        a[i * k + j] = a[j * k + i] = c % 3;
        c /= 3;
      }
      ASSERT_TRUE(valid_expansion(k, a)) << "k=" << k << " code=" << code;
      ++cases;
    }
  }
  EXPECT_EQ(cases, 3 + 27 + 729 + 59049);
}

TEST(ExpandToPermutation, RandomCases) {
  std::mt19937_64 g(31);
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + static_cast<int>(g() % 6);
    std::vector<std::int64_t> a(static_cast<std::size_t>(k) * k, 0);
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) a[i * k + j] = a[j * k + i] = static_cast<std::int64_t>(g() % 4);
    ASSERT_TRUE(valid_expansion(k, a)) << "case " << t;
  }
}

TEST(ApproximateMeasure, AnalyticFamiliesWithinBound) {
  for (AnalyticFamily f : {AnalyticFamily::kEta0, AnalyticFamily::kEtaStar, AnalyticFamily::kEtaRectLimit,
                           AnalyticFamily::kEtaTriangular}) {
    for (int k : {4, 8, 16}) {
      const GridMeasure eta = discretize(f, Binning(BinningKind::kEqualLambda, k));
      const RationalBlockInput c = approximate_measure(eta);
      for (int i = 0; i < k; ++i) {
        Rational row(0);
        for (int j = 0; j < k; ++j) {
          EXPECT_EQ(c.at(i, j), c.at(j, i));
          EXPECT_GE(c.at(i, j), Rational(0));
          EXPECT_LE(std::abs(c.value(i, j) - eta.at(i, j)), std::pow(k, -3.0)) << family_name(f);
          row += c.at(i, j);
        }
        EXPECT_EQ(row, Rational(2, k));
      }
    }
  }
}

TEST(ApproximateMeasure, AntiDiagonalIsExact) {
  const RationalBlockInput c = approximate_measure(discretize(AnalyticFamily::kEta0, Binning(BinningKind::kEqualLambda, 4)));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(c.at(i, j), i + j == 3 ? Rational(1, 2) : Rational(0));
}

TEST(ApproximateMeasure, RandomLambdaInputs) {
  // Symmetrized random permutation plans are in the discrete Lambda.
  std::mt19937_64 g(8);
  for (int t = 0; t < 50; ++t) {
    const int k = 2 + static_cast<int>(g() % 10);
    const Binning b(BinningKind::kEqualLambda, k);
    GridMeasure eta(b);
    const int copies = 5;
    for (int c = 0; c < copies; ++c) {
      std::vector<int> p(k);
      std::iota(p.begin(), p.end(), 0);
      std::shuffle(p.begin(), p.end(), g);
      for (int i = 0; i < k; ++i) {
        eta.at(i, p[i]) += 1.0 / (k * copies);
        eta.at(p[i], i) += 1.0 / (k * copies);
      }
    }
    const RationalBlockInput c = approximate_measure(eta);
    for (int i = 0; i < k; ++i) {
      EXPECT_GE(c.at(i, i), Rational(0));
      for (int j = 0; j < k; ++j) EXPECT_LE(std::abs(c.value(i, j) - eta.at(i, j)), std::pow(k, -3.0));
    }
    // The integer form expands to a permutation with the same block sums.
    const IntegerBlockMatrix m = to_integer_matrix(c);
    if (m.scale <= 4096) EXPECT_TRUE(valid_expansion(m.k, m.a));
  }
}

TEST(ApproximateMeasure, RejectsMeasuresOutsideLambda) {
  GridMeasure eta = discretize(AnalyticFamily::kEta0, Binning(BinningKind::kEqualLambda, 4));
  eta.at(0, 0) += 0.1;
  try {
    approximate_measure(eta);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotInLambda);
  }
}

TEST(ReflectorHollow, IdentityIsCircularMirror) {
  const ReflectorHollow rh = build_reflector_hollow(InvolutivePermutation::identity(3), 0.1);
  ASSERT_EQ(rh.roles.size(), 3u);
  EXPECT_EQ(rh.roles[0], WallRole::kEdge);
  EXPECT_EQ(rh.roles[1], WallRole::kMirror);
  EXPECT_EQ(rh.roles[2], WallRole::kEdge);
  EXPECT_TRUE(rh.pairs.empty());

  EstimateOptions opt;
  opt.samples = 200000;
  opt.seed = 5;
  const GridMeasure gm = estimate(rh.hollow, opt);
  const Binning& b = opt.binning;
  const DirectionPartition part = partition(3);
  double row = 0.0, near = 0.0;
  for (int i = 0; i < b.bins(); ++i) {
    if (b.lo(i) < part.lo(2) || b.hi(i) > part.hi(2)) continue;
    for (int j = 0; j < b.bins(); ++j) {
      row += gm.at(i, j);
      if (std::abs(i - j) <= 1) near += gm.at(i, j);
    }
  }
  EXPECT_GT(near / row, 0.95);
}

TEST(ReflectorHollow, CircularMirrorFocusingRelation) {
  // Wide opening so that rays off the axis return through it.
  ReflectorHollowOptions o;
  o.a = 0.5;
  const ReflectorHollow rh = build_reflector_hollow(InvolutivePermutation::identity(3), 0.1, o);
  TraceOptions to;
  to.record_curves = true;
  int checked = 0;
  double worst = 0.0;
  for (double xi = -0.45; xi < 0.45; xi += 0.01) {
    for (double phi = -0.3; phi < 0.3; phi += 0.01) {
      if (std::abs(xi) < 0.05) continue;
      const TraceResult r = trace(rh.hollow, {xi, phi}, to);
      if (!r.ok() || r.curves.size() != 1 || rh.roles[r.curves[0]] != WallRole::kMirror) continue;
      if (std::abs(r.out.xi) < 0.05) continue;
      // Hit point on the radius-2 circle; theta is its angle from the x-axis.
      const double s = xi * std::sin(phi);
      const double t = -s + std::sqrt(s * s + 4.0 - xi * xi);
      const double theta = std::atan2(t * std::cos(phi), xi + t * std::sin(phi));
      worst = std::max(worst, std::abs(1.0 / xi + 1.0 / r.out.xi - std::cos(theta)));
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
  EXPECT_LT(worst, 1e-9);
}

TEST(ReflectorHollow, ReversalStructure) {
  const ReflectorHollow rh = build_reflector_hollow(InvolutivePermutation::reversal(5), 0.1);
  EXPECT_EQ(rh.pairs.size(), static_cast<std::size_t>(rh.k));
  EXPECT_LT(rh.a_inner, rh.a);
  EXPECT_NEAR(rh.a_inner * std::pow(1.1, 3), rh.a, 1e-15);
  const DirectionPartition part = partition(5);
  const double wmass = 0.1 / (rh.k * 5);
  for (const SubPair& p : rh.pairs) {
    EXPECT_EQ(p.i, 2);
    for (int w : p.walls) ASSERT_GE(w, 0);
    EXPECT_EQ(rh.roles[p.walls[0]], WallRole::kEllipse);
    EXPECT_EQ(rh.roles[p.walls[1]], WallRole::kParabola);
    EXPECT_EQ(rh.roles[p.walls[2]], WallRole::kParabolaPrime);
    EXPECT_EQ(rh.roles[p.walls[3]], WallRole::kEllipsePrime);
    EXPECT_GE(p.good_lo, p.lo);
    EXPECT_LE(p.good_hi, p.hi);
    EXPECT_GE(p.good_prime_lo, p.lo_prime);
    EXPECT_LE(p.good_prime_hi, p.hi_prime);
    EXPECT_LT(p.spec.delta, p.spec.delta_critical());
    // Lateral reflectors take lambda-mass eps/(km) each.
    EXPECT_NEAR(std::sin(p.wedge_hi) - std::sin(p.wedge_lo), wmass, 1e-12);
    EXPECT_NEAR(std::sin(p.wedge_prime_hi) - std::sin(p.wedge_prime_lo), wmass, 1e-12);
    EXPECT_GE(p.a_max, rh.a);
  }
  EXPECT_LE(rh.a, 4.0 * std::tan(0.25 * 0.1 * (part.hi(3) - part.lo(3))));
}

TEST(ReflectorHollow, InnerOpeningChannelsExactly) {
  const ReflectorHollow rh = build_reflector_hollow(InvolutivePermutation::reversal(5), 0.1);
  const DirectionPartition part = partition(5);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TraceOptions to;
  to.record_curves = true;
  for (const SubPair& p : rh.pairs) {
    for (int n = 0; n < 200; ++n) {
      const double xi = rh.a_inner * (2.0 * u(gen) - 1.0);
      const double phi = p.good_lo + (p.good_hi - p.good_lo) * u(gen);
      const TraceResult r = trace(rh.hollow, {xi, phi}, to);
      ASSERT_TRUE(r.ok());
      ASSERT_EQ(r.curves, (std::vector<int>{p.walls[0], p.walls[1], p.walls[2], p.walls[3]}));
      EXPECT_EQ(part.cell(r.out.phi), 4);
    }
  }
}

TEST(ReflectorHollow, MisdirectionShrinksWithEpsilon) {
  const auto sigma = InvolutivePermutation::parse("1 5;2 4", 5);
  std::vector<double> worst;
  for (double eps : {0.2, 0.1, 0.05}) {
    const MisdirectionReport rep = misdirection(build_reflector_hollow(sigma, eps), 4000, 9);
    ASSERT_EQ(rep.cells, (std::vector<int>{2, 3, 4}));
    worst.push_back(*std::max_element(rep.fraction.begin(), rep.fraction.end()));
    for (std::size_t c = 0; c < rep.cells.size(); ++c) EXPECT_NEAR(rep.mass[c], rep.fraction[c] * 0.4, 1e-15);
  }
  EXPECT_GT(worst[0], worst[1]);
  EXPECT_GT(worst[1], worst[2]);
  EXPECT_LE(worst[2], 0.1);
}

TEST(ReflectorHollow, Validation) {
  EXPECT_THROW(build_reflector_hollow(InvolutivePermutation::identity(2), 0.1), Error);
  EXPECT_THROW(build_reflector_hollow(InvolutivePermutation::identity(3), 0.0), Error);
  try {
    build_reflector_hollow(InvolutivePermutation::reversal(5), 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleEpsilon);
  }
}
