// Combinatorial side of hollow synthesis: the equal-mass direction
// partition, involutive permutations, rational approximation of a grid
// measure and its expansion into a symmetric permutation matrix.
#pragma once

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "roughscatter/errors.hpp"
#include "roughscatter/measures.hpp"

namespace roughscatter {

/// Cells J^1..J^m of [-pi/2, pi/2], each of mass 2/m under cos(phi) dphi.
struct DirectionPartition {
  int m = 1;
  std::vector<double> boundaries;

  /// Bounds of cell i (1-based).
  double lo(int i) const { return boundaries[i - 1]; }
  double hi(int i) const { return boundaries[i]; }
  /// 1-based cell containing phi.
  int cell(double phi) const { return Binning(BinningKind::kEqualLambda, m).cell(phi) + 1; }
};

inline DirectionPartition partition(int m) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "partition needs m >= 1");
  DirectionPartition p;
  p.m = m;
  p.boundaries.resize(m + 1);
  for (int i = 0; i <= m; ++i) p.boundaries[i] = Binning::edge(BinningKind::kEqualLambda, m, i);
  return p;
}

/// Permutation sigma of {1..m} with sigma o sigma = id.
class InvolutivePermutation {
 public:
  InvolutivePermutation() = default;

  /// map[i - 1] = sigma(i).
  explicit InvolutivePermutation(std::vector<int> map) : map_(std::move(map)) {
    const int m = size();
    for (int i = 1; i <= m; ++i) {
      const int s = map_[i - 1];
      if (s < 1 || s > m) throw Error(ErrorCode::kInvalidArgument, "permutation value out of range");
      if (map_[s - 1] != i) throw Error(ErrorCode::kInvalidArgument, "permutation is not an involution");
    }
  }

  static InvolutivePermutation identity(int m) {
    std::vector<int> v(m);
    std::iota(v.begin(), v.end(), 1);
    return InvolutivePermutation(std::move(v));
  }

  static InvolutivePermutation reversal(int m) {
    std::vector<int> v(m);
    for (int i = 0; i < m; ++i) v[i] = m - i;
    return InvolutivePermutation(std::move(v));
  }

  /// Cycle notation "1 5;2 4": transpositions separated by ';'.  Unlisted
  /// points are fixed.
  static InvolutivePermutation parse(const std::string& text, int m) {
    if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m must be positive");
    std::vector<int> v(m, 0);
    std::stringstream all(text);
    std::string cycle;
    while (std::getline(all, cycle, ';')) {
      std::stringstream cs(cycle);
      std::vector<int> pts;
      int x;
      while (cs >> x) pts.push_back(x);
      if (!cs.eof()) throw Error(ErrorCode::kParse, "bad permutation cycle '" + cycle + "'");
      if (pts.empty()) continue;
      if (pts.size() > 2) throw Error(ErrorCode::kInvalidArgument, "cycles of an involution have length <= 2");
      for (int p : pts) {
        if (p < 1 || p > m) throw Error(ErrorCode::kInvalidArgument, "permutation point out of range");
        if (v[p - 1] != 0) throw Error(ErrorCode::kInvalidArgument, "point listed twice");
      }
      v[pts.front() - 1] = pts.back();
      v[pts.back() - 1] = pts.front();
    }
    for (int i = 0; i < m; ++i)
      if (v[i] == 0) v[i] = i + 1;
    return InvolutivePermutation(std::move(v));
  }

  int size() const { return static_cast<int>(map_.size()); }
  int operator()(int i) const { return map_[i - 1]; }
  const std::vector<int>& map() const { return map_; }
  bool operator==(const InvolutivePermutation& o) const { return map_ == o.map_; }

  std::string to_string() const {
    std::string s;
    for (int i = 1; i <= size(); ++i) {
      if ((*this)(i) <= i) continue;
      if (!s.empty()) s += ";";
      s += std::to_string(i) + " " + std::to_string((*this)(i));
    }
    return s;
  }

 private:
  std::vector<int> map_;
};

using Rational = boost::rational<std::int64_t>;

/// Symmetric k x k table of nonnegative rationals with row sums 2/k.
struct RationalBlockInput {
  int k = 0;
  std::vector<Rational> c;

  Rational& at(int i, int j) { return c[i * k + j]; }
  const Rational& at(int i, int j) const { return c[i * k + j]; }
  double value(int i, int j) const { return boost::rational_cast<double>(at(i, j)); }
};

/// Rational table close to the cell masses of eta: off-diagonal entries are
/// rationals with denominator k^4 in [eta - k^-4, eta], the diagonal takes
/// up the remainder of each row.
inline RationalBlockInput approximate_measure(const GridMeasure& eta, double tolerance = 1e-9) {
  if (eta.binning().kind() != BinningKind::kEqualLambda) {
    throw Error(ErrorCode::kInvalidArgument, "approximation needs the equal-mass partition");
  }
  const int k = eta.bins();
  const LambdaDefect d = lambda_defect(eta);
  if (d.incoming > tolerance || d.outgoing > tolerance || symmetry_defect(eta) > tolerance) {
    throw Error(ErrorCode::kNotInLambda, "input marginals or symmetry are off");
  }
  const std::int64_t k4 = static_cast<std::int64_t>(k) * k * k * k;
  RationalBlockInput out;
  out.k = k;
  out.c.assign(static_cast<std::size_t>(k) * k, Rational(0));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < i; ++j) {
      const double scaled = eta.at(i, j) * static_cast<double>(k4);
      double n = std::floor(scaled);
      // Masses that are exact multiples of k^-4 up to rounding stay exact.
      if (std::abs(scaled - std::round(scaled)) < 1e-6) n = std::round(scaled);
      if (n < 0) n = 0;
      out.at(i, j) = out.at(j, i) = Rational(static_cast<std::int64_t>(n), k4);
    }
  }
  for (int i = 0; i < k; ++i) {
    Rational s(0);
    for (int j = 0; j < k; ++j)
      if (j != i) s += out.at(i, j);
    out.at(i, i) = Rational(2, k) - s;
    if (out.at(i, i) < 0) throw Error(ErrorCode::kNotInLambda, "negative diagonal entry");
  }
  return out;
}

/// Integer matrix a = N c with N the common denominator of c.
struct IntegerBlockMatrix {
  int k = 0;
  std::int64_t scale = 1;
  std::vector<std::int64_t> a;

  std::int64_t at(int i, int j) const { return a[i * k + j]; }
};

inline IntegerBlockMatrix to_integer_matrix(const RationalBlockInput& in) {
  IntegerBlockMatrix m;
  m.k = in.k;
  for (const Rational& r : in.c) m.scale = std::lcm(m.scale, r.denominator());
  m.a.reserve(in.c.size());
  for (const Rational& r : in.c) m.a.push_back(r.numerator() * (m.scale / r.denominator()));
  return m;
}

/// Symmetric permutation matrix D in block form with block sizes
/// n_i = sum_j a_ij and block sums a_ij, stored as the involution it
/// encodes.
struct PermutationExpansion {
  std::vector<std::int64_t> block_sizes;
  InvolutivePermutation sigma;

  /// Row-major dense D (for small sizes).
  std::vector<std::uint8_t> dense() const {
    const int n = sigma.size();
    std::vector<std::uint8_t> d(static_cast<std::size_t>(n) * n, 0);
    for (int i = 1; i <= n; ++i) d[static_cast<std::size_t>(i - 1) * n + sigma(i) - 1] = 1;
    return d;
  }
  /// 0-based block containing 1-based index r.
  int block_of(int r) const {
    std::int64_t off = 0;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) {
      off += block_sizes[b];
      if (r <= off) return static_cast<int>(b);
    }
    return -1;
  }
};

/// Builds D block row by block row: block (l, l) gets a_ll diagonal units,
/// and for j > l the next a_lj free rows of block l are matched with the
/// next a_lj free rows of block j.
inline PermutationExpansion expand_to_permutation(int k, const std::vector<std::int64_t>& a) {
  if (k < 1 || a.size() != static_cast<std::size_t>(k) * k) {
    throw Error(ErrorCode::kInvalidArgument, "matrix must be k x k");
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (a[i * k + j] < 0) throw Error(ErrorCode::kInvalidArgument, "negative entry");
      if (a[i * k + j] != a[j * k + i]) throw Error(ErrorCode::kAsymmetricInput, "matrix is not symmetric");
    }
  }
  PermutationExpansion out;
  out.block_sizes.assign(k, 0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out.block_sizes[i] += a[i * k + j];
  std::vector<std::int64_t> offset(k, 0), next(k, 0);
  for (int i = 1; i < k; ++i) offset[i] = offset[i - 1] + out.block_sizes[i - 1];
  const std::int64_t total = offset[k - 1] + out.block_sizes[k - 1];
  if (total > (std::int64_t{1} << 26)) throw Error(ErrorCode::kInvalidArgument, "expansion too large");
  std::vector<int> map(static_cast<std::size_t>(total), 0);
  for (int l = 0; l < k; ++l) {
    for (std::int64_t t = 0; t < a[l * k + l]; ++t) {
      const std::int64_t r = offset[l] + next[l]++;
      map[r] = static_cast<int>(r + 1);
    }
    for (int j = l + 1; j < k; ++j) {
      for (std::int64_t t = 0; t < a[l * k + j]; ++t) {
        const std::int64_t r = offset[l] + next[l]++;
        const std::int64_t c = offset[j] + next[j]++;
        map[r] = static_cast<int>(c + 1);
        map[c] = static_cast<int>(r + 1);
      }
    }
  }
  out.sigma = InvolutivePermutation(std::move(map));
  return out;
}

inline PermutationExpansion expand_to_permutation(const IntegerBlockMatrix& m) {
  return expand_to_permutation(m.k, m.a);
}

}  // namespace roughscatter
