#include "mink/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mink/errors.hpp"

namespace mink {

namespace mp = boost::multiprecision;

Rational to_rational(double x) {
  if (!std::isfinite(x)) throw DomainError("to_rational: non-finite value");
  if (x == 0.0) return Rational(0);
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  BigInt num(scaled);
  exponent -= 53;
  if (exponent >= 0) return Rational(num << exponent);
  return Rational(num, BigInt(1) << -exponent);
}

double to_double(const Rational& x) {
  BigInt num = mp::numerator(x);
  const BigInt den = mp::denominator(x);
  if (num == 0) return 0.0;
  const bool negative = num < 0;
  if (negative) num = -num;

  // Scale so the integer quotient carries ~64 significant bits, keep a sticky
  // bit for the remainder, then let the hardware round once.
  const long shift = 64 - (static_cast<long>(mp::msb(num)) - static_cast<long>(mp::msb(den)));
  BigInt q, r;
  if (shift >= 0) {
    mp::divide_qr(BigInt(num << shift), den, q, r);
  } else {
    mp::divide_qr(num, BigInt(den << -shift), q, r);
  }
  long extra = static_cast<long>(mp::msb(q)) - 63;
  bool sticky = r != 0;
  if (extra > 0) {
    const BigInt mask = (BigInt(1) << extra) - 1;
    if ((q & mask) != 0) sticky = true;
    q >>= extra;
  } else {
    extra = 0;
  }
  auto top = q.convert_to<std::uint64_t>();
  if (sticky) top |= 1u;
  const double value = std::ldexp(static_cast<double>(top), static_cast<int>(extra - shift));
  return negative ? -value : value;
}

// ---------------------------------------------------------------------------

MoebiusMap::MoebiusMap(Rational num_a, Rational num_b, Rational den_c, Rational den_d)
    : a_(std::move(num_a)), b_(std::move(num_b)), c_(std::move(den_c)), d_(std::move(den_d)) {
  if (determinant() == 0) throw DomainError("MoebiusMap: zero determinant");
}

MoebiusMap MoebiusMap::m1() { return {1, 0, 1, 1}; }
MoebiusMap MoebiusMap::m2() { return {0, 1, -1, 2}; }
MoebiusMap MoebiusMap::identity() { return {1, 0, 0, 1}; }

Rational MoebiusMap::operator()(const Rational& x) const {
  const Rational den = c_ * x + d_;
  if (den == 0) throw DomainError("MoebiusMap: pole");
  return (a_ * x + b_) / den;
}

double MoebiusMap::operator()(double x) const {
  const double a = to_double(a_), b = to_double(b_), c = to_double(c_), d = to_double(d_);
  return (a * x + b) / (c * x + d);
}

MoebiusMap MoebiusMap::compose(const MoebiusMap& inner) const {
  // Matrix product [[a b][c d]] * [[a' b'][c' d']].
  return {a_ * inner.a_ + b_ * inner.c_, a_ * inner.b_ + b_ * inner.d_,
          c_ * inner.a_ + d_ * inner.c_, c_ * inner.b_ + d_ * inner.d_};
}

AffineMap AffineMap::p1() { return {Rational(1, 2), Rational(0)}; }
AffineMap AffineMap::p2() { return {Rational(1, 2), Rational(1, 2)}; }
AffineMap AffineMap::identity() { return {Rational(1), Rational(0)}; }

AffineMap AffineMap::compose(const AffineMap& inner) const {
  return {scale * inner.scale, scale * inner.offset + offset};
}

SymbolicWord::SymbolicWord(std::vector<int> letters) : letters_(std::move(letters)) {
  for (int l : letters_) {
    if (l != 1 && l != 2) throw DomainError("SymbolicWord: letters must be 1 or 2");
  }
}

SymbolicWord SymbolicWord::repeat(int letter, std::size_t count) {
  return SymbolicWord(std::vector<int>(count, letter));
}

SymbolicWord SymbolicWord::parse(const std::string& text) {
  std::vector<int> letters;
  letters.reserve(text.size());
  for (char ch : text) {
    if (ch != '1' && ch != '2') throw DomainError("SymbolicWord: bad letter in '" + text + "'");
    letters.push_back(ch - '0');
  }
  return SymbolicWord(std::move(letters));
}

SymbolicWord SymbolicWord::operator+(const SymbolicWord& tail) const {
  std::vector<int> joined = letters_;
  joined.insert(joined.end(), tail.letters_.begin(), tail.letters_.end());
  return SymbolicWord(std::move(joined));
}

MoebiusMap SymbolicWord::map() const {
  MoebiusMap result = MoebiusMap::identity();
  for (int l : letters_) result = result.compose(l == 1 ? MoebiusMap::m1() : MoebiusMap::m2());
  return result;
}

AffineMap SymbolicWord::affine() const {
  AffineMap result = AffineMap::identity();
  for (int l : letters_) result = result.compose(l == 1 ? AffineMap::p1() : AffineMap::p2());
  return result;
}

// ---------------------------------------------------------------------------

std::vector<BigInt> continued_fraction(const Rational& x) {
  if (x <= 0 || x >= 1) throw DomainError("continued_fraction: x must lie in (0,1)");
  std::vector<BigInt> digits;
  BigInt p = mp::numerator(x);
  BigInt q = mp::denominator(x);
  while (p != 0) {
    BigInt n, r;
    mp::divide_qr(q, p, n, r);
    digits.push_back(n);
    q = p;
    p = r;
  }
  return digits;
}

namespace {

constexpr long kMaxExactDigitSum = 1'000'000;

// Sum of (-1)^{j+1} 2^{1-N_j} as an exact dyadic rational. With a finite
// cutoff the series stops before the first term whose exponent falls more
// than `cutoff` binary orders below the leading one.
Rational q_series(const Rational& x, long cutoff, long digit_cap) {
  if (x < 0 || x > 1) throw DomainError("minkowski_q: x outside [0,1]");
  if (x == 0) return Rational(0);
  if (x == 1) return Rational(1);

  BigInt p = mp::numerator(x);
  BigInt q = mp::denominator(x);
  long digit_sum = 0;
  long first_exponent = -1;
  BigInt sum_num = 0;  // sum = sum_num / 2^scale, accumulated lazily
  std::vector<std::pair<int, long>> terms;  // (sign, N_j)
  int sign = 1;
  while (p != 0) {
    BigInt n, r;
    mp::divide_qr(q, p, n, r);
    long digit;
    if (n > digit_cap) {
      digit = digit_cap;
      r = 0;
    } else {
      digit = n.convert_to<long>();
    }
    digit_sum += digit;
    if (cutoff == 0 && digit_sum > kMaxExactDigitSum)
      throw ResourceError("minkowski_q: continued fraction digit sum too large");
    if (first_exponent < 0) {
      first_exponent = digit_sum;
      // 2^{1-N_1} below the smallest subnormal.
      if (cutoff > 0 && first_exponent > 1100) return Rational(0);
    }
    if (cutoff > 0 && digit_sum - first_exponent > cutoff) break;
    terms.emplace_back(sign, digit_sum);
    sign = -sign;
    q = p;
    p = r;
  }
  const long scale = terms.back().second - 1;
  for (const auto& [s, n] : terms) {
    BigInt term = BigInt(1) << (scale - (n - 1));
    sum_num += s > 0 ? term : BigInt(-term);
  }
  return Rational(sum_num, BigInt(1) << scale);
}

}  // namespace

Rational minkowski_q_exact(const Rational& x) { return q_series(x, 0, kMaxExactDigitSum); }

double minkowski_q(const Rational& x) { return to_double(q_series(x, 64, 1'000'000)); }

double minkowski_q(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("minkowski_q: x outside [0,1]");
  return minkowski_q(to_rational(x));
}

double measure_of_interval(const Rational& a, const Rational& b) {
  if (a < 0 || b > 1 || a > b) throw DomainError("measure_of_interval: need 0 <= a <= b <= 1");
  return to_double(q_series(b, 64, 1'000'000) - q_series(a, 64, 1'000'000));
}

double measure_of_interval(double a, double b) {
  if (!(a >= 0.0 && b <= 1.0 && a <= b))
    throw DomainError("measure_of_interval: need 0 <= a <= b <= 1");
  return measure_of_interval(to_rational(a), to_rational(b));
}

WordImage word_image_interval(const SymbolicWord& word) {
  if (word.empty()) throw DomainError("word_image_interval: empty word");
  const MoebiusMap m = word.map();
  Rational lo = m(Rational(0));
  Rational hi = m(Rational(1));
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi, Rational(1, BigInt(1) << word.length())};
}

FareyInterval farey_interval(int q, int k) {
  if (q < 2) throw DomainError("farey_interval: q must be >= 2");
  if (k < 0) throw DomainError("farey_interval: k must be >= 0");
  auto ell = [q](int kk) { return Rational(1, BigInt(q) * (BigInt(q) * kk + q - 1)); };
  FareyInterval fi;
  fi.q = q;
  fi.k = k;
  fi.length_l = ell(k);
  fi.left = Rational(1, q) + ell(k + 1);
  fi.right = Rational(1, q) + ell(k);
  fi.mass = Rational(1, BigInt(1) << (q + k));
  return fi;
}

std::vector<std::pair<Rational, Rational>> q_graph_approx(int n) {
  if (n < 0) throw DomainError("q_graph_approx: n must be >= 0");
  if (n > 22) throw ResourceError("q_graph_approx: n > 22 exceeds the point budget");
  std::vector<std::pair<Rational, Rational>> pts{{Rational(0), Rational(0)},
                                                 {Rational(1), Rational(1)}};
  const MoebiusMap m1 = MoebiusMap::m1(), m2 = MoebiusMap::m2();
  const AffineMap p1 = AffineMap::p1(), p2 = AffineMap::p2();
  for (int level = 0; level < n; ++level) {
    std::vector<std::pair<Rational, Rational>> next;
    next.reserve(2 * pts.size() - 1);
    for (const auto& [x, y] : pts) next.emplace_back(m1(x), p1(y));
    // Phi_2 of the first vertex coincides with Phi_1 of the last: (1/2, 1/2).
    for (std::size_t i = 1; i < pts.size(); ++i) next.emplace_back(m2(pts[i].first), p2(pts[i].second));
    pts = std::move(next);
  }
  return pts;
}

std::vector<Rational> farey_tree_level(int n) {
  if (n < 0) throw DomainError("farey_tree_level: n must be >= 0");
  if (n > 22) throw ResourceError("farey_tree_level: n > 22 exceeds the atom budget");
  std::vector<Rational> nodes{Rational(1, 2)};
  const MoebiusMap m1 = MoebiusMap::m1(), m2 = MoebiusMap::m2();
  for (int level = 0; level < n; ++level) {
    std::vector<Rational> next;
    next.reserve(2 * nodes.size());
    for (const auto& x : nodes) next.push_back(m1(x));
    for (const auto& x : nodes) next.push_back(m2(x));
    nodes = std::move(next);
  }
  return nodes;
}

// ---------------------------------------------------------------------------

double log_sum_exp(const std::vector<double>& values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!std::isfinite(atoms_[i].log_weight) || !std::isfinite(atoms_[i].position))
      throw DomainError("DiscreteMeasure: non-finite atom");
    if (i > 0 && !(atoms_[i].position > atoms_[i - 1].position))
      throw DomainError("DiscreteMeasure: positions must be strictly increasing");
  }
}

DiscreteMeasure DiscreteMeasure::delta(double x) { return DiscreteMeasure({{x, 0.0}}); }

DiscreteMeasure DiscreteMeasure::from_weights(const std::vector<double>& positions,
                                              const std::vector<double>& weights) {
  if (positions.size() != weights.size())
    throw DomainError("DiscreteMeasure: positions/weights size mismatch");
  std::vector<Atom> atoms;
  atoms.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!(weights[i] > 0.0)) throw DomainError("DiscreteMeasure: weights must be positive");
    atoms.push_back({positions[i], std::log(weights[i])});
  }
  return DiscreteMeasure(std::move(atoms));
}

double DiscreteMeasure::total_mass_log() const {
  std::vector<double> lw;
  lw.reserve(atoms_.size());
  for (const auto& a : atoms_) lw.push_back(a.log_weight);
  return log_sum_exp(lw);
}

DiscreteMeasure DiscreteMeasure::normalized() const {
  const double shift = total_mass_log();
  std::vector<Atom> atoms = atoms_;
  for (auto& a : atoms) a.log_weight -= shift;
  return DiscreteMeasure(std::move(atoms));
}

double DiscreteMeasure::cdf(double x) const {
  double sum = 0.0;
  for (const auto& a : atoms_) {
    if (a.position > x) break;
    sum += std::exp(a.log_weight);
  }
  return sum;
}

DiscreteMeasure perron_frobenius_step(const DiscreteMeasure& m, double rho1, double rho2) {
  if (!(rho1 > 0.0 && rho2 > 0.0) || std::abs(rho1 + rho2 - 1.0) > 1e-14)
    throw DomainError("perron_frobenius_step: probabilities must be positive and sum to 1");
  const double l1 = std::log(rho1), l2 = std::log(rho2);
  std::vector<Atom> out;
  out.reserve(2 * m.size());
  // M1 is increasing onto [0,1/2] and M2 onto [1/2,1], so the two image
  // lists are already sorted; the only possible collision is at 1/2.
  for (const auto& a : m.atoms()) out.push_back({a.position / (1.0 + a.position), a.log_weight + l1});
  for (const auto& a : m.atoms()) {
    const Atom img{1.0 / (2.0 - a.position), a.log_weight + l2};
    if (!out.empty() && out.back().position == img.position) {
      const double hi = std::max(out.back().log_weight, img.log_weight);
      const double lo = std::min(out.back().log_weight, img.log_weight);
      out.back().log_weight = hi + std::log1p(std::exp(lo - hi));
    } else {
      out.push_back(img);
    }
  }
  return DiscreteMeasure(std::move(out));
}

}  // namespace mink
