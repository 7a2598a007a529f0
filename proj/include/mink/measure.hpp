#pragma once

// Minkowski's question-mark function, the Moebius IFS that generates its
// measure, Farey-tree combinatorics and finite atomic measures.
//
// Everything that must be exact (continued fractions, word images, Farey
// intervals) is done with arbitrary-precision rationals; doubles appear only
// at the evaluation boundary.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mink {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Exact rational value of a finite double.
Rational to_rational(double x);
double to_double(const Rational& x);

/// x -> (num_a x + num_b) / (den_c x + den_d)
class MoebiusMap {
 public:
  MoebiusMap(Rational num_a, Rational num_b, Rational den_c, Rational den_d);

  static MoebiusMap m1();  ///< x / (1 + x)
  static MoebiusMap m2();  ///< 1 / (2 - x)
  static MoebiusMap identity();

  const Rational& num_a() const { return a_; }
  const Rational& num_b() const { return b_; }
  const Rational& den_c() const { return c_; }
  const Rational& den_d() const { return d_; }

  Rational determinant() const { return a_ * d_ - b_ * c_; }

  Rational operator()(const Rational& x) const;
  double operator()(double x) const;

  /// (*this) o inner
  MoebiusMap compose(const MoebiusMap& inner) const;

 private:
  Rational a_, b_, c_, d_;
};

/// y -> scale y + offset
struct AffineMap {
  Rational scale;
  Rational offset;

  static AffineMap p1();  ///< y / 2
  static AffineMap p2();  ///< (y + 1) / 2
  static AffineMap identity();

  Rational operator()(const Rational& y) const { return scale * y + offset; }
  AffineMap compose(const AffineMap& inner) const;
};

/// Finite word over {1, 2}. map() is M_{s1} o M_{s2} o ... o M_{sn}.
class SymbolicWord {
 public:
  SymbolicWord() = default;
  explicit SymbolicWord(std::vector<int> letters);

  /// 1^count
  static SymbolicWord repeat(int letter, std::size_t count);
  /// Parses "1121"; throws DomainError on any other character.
  static SymbolicWord parse(const std::string& text);

  SymbolicWord operator+(const SymbolicWord& tail) const;

  const std::vector<int>& letters() const { return letters_; }
  std::size_t length() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }

  MoebiusMap map() const;
  AffineMap affine() const;

 private:
  std::vector<int> letters_;
};

/// I_{q,k} = [1/q + l_{q,k+1}, 1/q + l_{q,k}] with l_{q,k} = 1/(q(qk+q-1)).
struct FareyInterval {
  int q = 2;
  int k = 0;
  Rational left;
  Rational right;
  Rational length_l;  ///< l_{q,k}
  Rational mass;      ///< 2^{-q-k}
};

/// Exact image of [0,1] under a composite map, and its mu-measure 2^{-|w|}.
struct WordImage {
  Rational left;
  Rational right;
  Rational mass;
};

// ---------------------------------------------------------------------------
// Question-mark function

/// Canonical continued fraction [n1, n2, ...] of x in (0,1): all digits >= 1
/// and the last one >= 2.
std::vector<BigInt> continued_fraction(const Rational& x);

/// Exact dyadic value of Q at a rational point of [0,1].
Rational minkowski_q_exact(const Rational& x);

double minkowski_q(const Rational& x);

/// Q at the exact rational value of the double x. The series is cut once a
/// term drops 64 binary orders below the leading one; digits are capped at
/// 10^6.
double minkowski_q(double x);

/// mu([a,b]) = Q(b) - Q(a).
double measure_of_interval(const Rational& a, const Rational& b);
double measure_of_interval(double a, double b);

WordImage word_image_interval(const SymbolicWord& word);

FareyInterval farey_interval(int q, int k);

/// Vertices of Phi^n applied to the diagonal of the unit square: 2^n + 1
/// points (x, Q(x)) with x on the Farey partition of level n.
std::vector<std::pair<Rational, Rational>> q_graph_approx(int n);

/// Atom positions of (T*)^n delta_{1/2}: level-n nodes of the Farey tree.
std::vector<Rational> farey_tree_level(int n);

// ---------------------------------------------------------------------------
// Atomic measures

struct Atom {
  double position = 0.0;
  double log_weight = 0.0;
};

/// Finite positive measure with strictly increasing atom positions and
/// weights stored as logarithms.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<Atom> atoms);

  static DiscreteMeasure delta(double x);
  static DiscreteMeasure from_weights(const std::vector<double>& positions,
                                      const std::vector<double>& weights);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  /// log of the total mass (log-sum-exp of the log-weights).
  double total_mass_log() const;

  /// Weights rescaled so that the total mass is one.
  DiscreteMeasure normalized() const;

  /// Distribution function F(x) = m((-inf, x]).
  double cdf(double x) const;

 private:
  std::vector<Atom> atoms_;
};

/// log(sum exp(v)) without overflow; -inf for an empty range.
double log_sum_exp(const std::vector<double>& values);

/// One application of the Perron-Frobenius operator of the IFS {M1, M2}.
DiscreteMeasure perron_frobenius_step(const DiscreteMeasure& m, double rho1 = 0.5,
                                      double rho2 = 0.5);

}  // namespace mink
