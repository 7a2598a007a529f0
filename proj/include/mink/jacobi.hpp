#pragma once

// Jacobi matrices and the tridiagonal linear algebra built on them.
//
// A JacobiMatrix of size N stores b_0..b_{N-1} on the diagonal and
// a_1..a_{N-1} off the diagonal; a(0) is kept at zero so that a(j) == a_j.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "mink/errors.hpp"
#include "mink/measure.hpp"

namespace mink {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;

template <typename Scalar>
struct JacobiMatrix {
  VectorX<Scalar> a;  ///< a(0) = 0, a(j) = a_j
  VectorX<Scalar> b;

  JacobiMatrix() = default;
  explicit JacobiMatrix(Index n) : a(VectorX<Scalar>::Zero(n)), b(VectorX<Scalar>::Zero(n)) {}
  JacobiMatrix(VectorX<Scalar> a_in, VectorX<Scalar> b_in) : a(std::move(a_in)), b(std::move(b_in)) {
    if (a.size() != b.size()) throw DomainError("JacobiMatrix: a and b sizes differ");
    if (a.size() > 0) a(0) = Scalar(0);
  }

  Index size() const { return b.size(); }

  /// j x j leading principal block.
  JacobiMatrix leading(Index j) const {
    if (j < 0 || j > size()) throw DomainError("JacobiMatrix::leading: order out of range");
    return JacobiMatrix(a.head(j), b.head(j));
  }

  /// y = J v on the truncation.
  template <typename Derived>
  VectorX<Scalar> apply(const Eigen::MatrixBase<Derived>& v) const {
    const Index n = size();
    VectorX<Scalar> y = b.cwiseProduct(v);
    if (n > 1) {
      y.head(n - 1) += a.tail(n - 1).cwiseProduct(v.tail(n - 1));
      y.tail(n - 1) += a.tail(n - 1).cwiseProduct(v.head(n - 1));
    }
    return y;
  }

  /// True when every off-diagonal entry is strictly positive.
  bool has_positive_offdiagonal() const {
    for (Index j = 1; j < size(); ++j) {
      if (!(a(j) > Scalar(0))) return false;
    }
    return true;
  }
};

using Jacobi = JacobiMatrix<double>;

/// Gauss rule of order j: nodes ascending, weights stored as logarithms.
template <typename Scalar>
struct GaussRule {
  Index order = 0;
  VectorX<Scalar> nodes;
  VectorX<Scalar> log_weights;
};

// ---------------------------------------------------------------------------
// Reference matrices on [0,1]

/// Uniform (Lebesgue) measure on [0,1]: shifted Legendre recurrence.
template <typename Scalar = double>
JacobiMatrix<Scalar> uniform_jacobi(Index n) {
  JacobiMatrix<Scalar> J(n);
  J.b.setConstant(Scalar(1) / 2);
  for (Index j = 1; j < n; ++j) {
    const Scalar jj(static_cast<double>(j));
    J.a(j) = jj / (2 * sqrt(4 * jj * jj - 1));
  }
  return J;
}

/// Equilibrium (arcsine) measure of [0,1]: shifted Chebyshev recurrence.
template <typename Scalar = double>
JacobiMatrix<Scalar> chebyshev_jacobi(Index n) {
  using std::sqrt;
  JacobiMatrix<Scalar> J(n);
  J.b.setConstant(Scalar(1) / 2);
  for (Index j = 1; j < n; ++j) J.a(j) = Scalar(1) / 4;
  if (n > 1) J.a(1) = sqrt(Scalar(2)) / 4;
  return J;
}

// ---------------------------------------------------------------------------
// Eigenvalues

/// Eigenvalues of the j x j leading block, ascending. Implicit-shift QL on
/// the tridiagonal form, eigenvalues only.
template <typename Scalar>
VectorX<Scalar> tridiagonal_eigenvalues(const JacobiMatrix<Scalar>& J, Index j) {
  using std::abs;
  using std::hypot;
  if (j < 1 || j > J.size()) throw DomainError("tridiagonal_eigenvalues: order out of range");
  VectorX<Scalar> d = J.b.head(j);
  VectorX<Scalar> e = VectorX<Scalar>::Zero(j);
  for (Index i = 0; i + 1 < j; ++i) e(i) = J.a(i + 1);

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (Index l = 0; l < j; ++l) {
    int iter = 0;
    Index m;
    do {
      for (m = l; m + 1 < j; ++m) {
        const Scalar dd = abs(d(m)) + abs(d(m + 1));
        if (abs(e(m)) <= eps * dd) break;
      }
      if (m != l) {
        if (++iter > 60) throw SolverError("tridiagonal_eigenvalues: QL did not converge", 0.0);
        Scalar g = (d(l + 1) - d(l)) / (2 * e(l));
        Scalar r = hypot(g, Scalar(1));
        g = d(m) - d(l) + e(l) / (g + (g >= 0 ? abs(r) : -abs(r)));
        Scalar s(1), c(1), p(0);
        Index i;
        bool underflow = false;
        for (i = m - 1; i >= l; --i) {
          const Scalar f = s * e(i);
          const Scalar bb = c * e(i);
          r = hypot(f, g);
          e(i + 1) = r;
          if (r == Scalar(0)) {
            d(i + 1) -= p;
            e(m) = Scalar(0);
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d(i + 1) - p;
          r = (d(i) - g) * s + 2 * c * bb;
          p = s * r;
          d(i + 1) = g + p;
          g = c * r - bb;
          if (i == 0) break;
        }
        if (underflow) continue;
        d(l) -= p;
        e(l) = g;
        e(m) = Scalar(0);
      }
    } while (m != l);
  }
  std::sort(d.data(), d.data() + j);
  return d;
}

// ---------------------------------------------------------------------------
// Tridiagonal solve

/// Solves (c J + d I) w = rhs on the truncation with partially pivoted
/// Gaussian elimination. Throws SolverError when a pivot vanishes relative
/// to the matrix scale.
template <typename Scalar, typename Derived>
VectorX<Scalar> tridiagonal_solve(const JacobiMatrix<Scalar>& J, Scalar c, Scalar d,
                                  const Eigen::MatrixBase<Derived>& rhs) {
  using std::abs;
  const Index n = J.size();
  if (rhs.size() != n) throw DomainError("tridiagonal_solve: rhs size mismatch");
  if (n == 0) return VectorX<Scalar>();

  VectorX<Scalar> diag = c * J.b + VectorX<Scalar>::Constant(n, d);
  VectorX<Scalar> upper = VectorX<Scalar>::Zero(n);   // (i, i+1)
  VectorX<Scalar> lower = VectorX<Scalar>::Zero(n);   // (i+1, i)
  VectorX<Scalar> upper2 = VectorX<Scalar>::Zero(n);  // (i, i+2) fill from pivoting
  for (Index i = 0; i + 1 < n; ++i) upper(i) = lower(i) = c * J.a(i + 1);
  VectorX<Scalar> x = rhs;

  Scalar scale(0);
  for (Index i = 0; i < n; ++i) scale = std::max<Scalar>(scale, abs(diag(i)) + 2 * abs(upper(i)));
  if (scale == Scalar(0)) throw SolverError("tridiagonal_solve: zero matrix", std::numeric_limits<double>::infinity());
  const Scalar tiny = scale * std::numeric_limits<Scalar>::epsilon() * 16;

  Scalar min_pivot = std::numeric_limits<Scalar>::max();
  for (Index i = 0; i + 1 < n; ++i) {
    if (abs(lower(i)) > abs(diag(i))) {
      // Swap rows i and i+1.
      std::swap(diag(i), lower(i));
      Scalar t = upper(i);
      upper(i) = diag(i + 1);
      diag(i + 1) = t;
      if (i + 2 < n) {
        upper2(i) = upper(i + 1);
        upper(i + 1) = Scalar(0);
      }
      std::swap(x(i), x(i + 1));
      // after swap: row i = (lower_old, diag_{i+1}_old, upper_{i+1}_old)
      const Scalar factor = lower(i) / diag(i);
      diag(i + 1) -= factor * upper(i);
      if (i + 2 < n) upper(i + 1) -= factor * upper2(i);
      x(i + 1) -= factor * x(i);
    } else {
      if (abs(diag(i)) <= tiny) {
        throw SolverError("tridiagonal_solve: singular system", std::numeric_limits<double>::infinity());
      }
      const Scalar factor = lower(i) / diag(i);
      diag(i + 1) -= factor * upper(i);
      x(i + 1) -= factor * x(i);
    }
    min_pivot = std::min<Scalar>(min_pivot, abs(diag(i)));
  }
  min_pivot = std::min<Scalar>(min_pivot, abs(diag(n - 1)));
  if (min_pivot <= tiny) {
    throw SolverError("tridiagonal_solve: numerically singular system",
                      static_cast<double>(scale / min_pivot));
  }
  // Back substitution.
  x(n - 1) /= diag(n - 1);
  if (n > 1) x(n - 2) = (x(n - 2) - upper(n - 2) * x(n - 1)) / diag(n - 2);
  for (Index i = n - 3; i >= 0; --i) {
    x(i) = (x(i) - upper(i) * x(i + 1) - upper2(i) * x(i + 2)) / diag(i);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Lanczos

struct LanczosOptions {
  double breakdown_tolerance = 1e-14;
  bool full_reorthogonalization = true;
};

template <typename Scalar>
struct LanczosResult {
  JacobiMatrix<Scalar> jacobi;
  bool breakdown = false;  ///< fewer than the requested steps were possible
};

/// Jacobi matrix of the spectral measure of a self-adjoint operator with
/// respect to a unit start vector, truncated after `steps` Lanczos steps.
/// `apply(v)` must return A v as a VectorX<Scalar>.
template <typename Scalar, typename Apply>
LanczosResult<Scalar> lanczos_tridiagonalize(Apply&& apply, const VectorX<Scalar>& start, Index steps,
                                             const LanczosOptions& options = {}) {
  using std::abs;
  using std::sqrt;
  const Index dim = start.size();
  if (steps < 1 || steps > dim) throw DomainError("lanczos_tridiagonalize: need 1 <= steps <= dimension");
  if (abs(start.norm() - Scalar(1)) > Scalar(1e-10))
    throw DomainError("lanczos_tridiagonalize: start vector must have unit norm");

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> basis(dim, steps);
  basis.col(0) = start;
  LanczosResult<Scalar> result;
  result.jacobi = JacobiMatrix<Scalar>(steps);

  Index k = 0;
  for (; k < steps; ++k) {
    VectorX<Scalar> w = apply(basis.col(k));
    const Scalar scale = w.norm();
    const Scalar beta = w.dot(basis.col(k));
    result.jacobi.b(k) = beta;
    w -= beta * basis.col(k);
    if (k > 0) w -= result.jacobi.a(k) * basis.col(k - 1);
    if (options.full_reorthogonalization) {
      for (int pass = 0; pass < 2; ++pass) {
        const VectorX<Scalar> coeffs = basis.leftCols(k + 1).transpose() * w;
        w.noalias() -= basis.leftCols(k + 1) * coeffs;
      }
    }
    if (k + 1 == steps) break;
    const Scalar alpha = w.norm();
    if (!(alpha > Scalar(options.breakdown_tolerance) * std::max<Scalar>(scale, Scalar(1)))) {
      result.breakdown = true;
      break;
    }
    result.jacobi.a(k + 1) = alpha;
    basis.col(k + 1) = w / alpha;
  }
  if (result.breakdown) result.jacobi = result.jacobi.leading(k + 1);
  return result;
}

// ---------------------------------------------------------------------------
// Moments

/// m_k = <e_0, J^k e_0>, k = 0..m_max. Exact for the underlying measure when
/// m_max <= 2N - 1.
template <typename Scalar>
VectorX<Scalar> moments_from_jacobi(const JacobiMatrix<Scalar>& J, Index m_max) {
  if (J.size() == 0) throw DomainError("moments_from_jacobi: empty matrix");
  VectorX<Scalar> v = VectorX<Scalar>::Zero(J.size());
  v(0) = Scalar(1);
  VectorX<Scalar> moments(m_max + 1);
  for (Index m = 0; m <= m_max; ++m) {
    moments(m) = v(0);
    v = J.apply(v);
  }
  return moments;
}

// ---------------------------------------------------------------------------
// Jacobi matrices of atomic and modified measures (double precision)

struct AtomsToJacobiStats {
  std::size_t dropped_atoms = 0;  ///< atoms whose sqrt-weight underflowed
  bool truncated = false;         ///< fewer distinct atoms than requested rows
};

/// First K recurrence coefficients of a discrete measure (normalized to unit
/// mass), by Gragg-Harrod orthogonal updating: atoms are added one at a time
/// and the resulting bulge is chased down with plane rotations.
Jacobi jacobi_from_atoms(const DiscreteMeasure& m, Index K, AtomsToJacobiStats* stats = nullptr);

/// Same contract computed by fully reorthogonalized Lanczos on the diagonal
/// operator of atom positions; kept as an independent second route.
Jacobi jacobi_from_atoms_lanczos(const DiscreteMeasure& m, Index K, AtomsToJacobiStats* stats = nullptr);

enum class LinearFactorRoute {
  AtomReweighting,  ///< Gauss rule of mu reweighted by (x - c)
  Cholesky,         ///< J - cI = L L^T, J' = L^T L + cI
};

/// Recurrence coefficients of (x - c) dmu / int (x - c) dmu. The result has
/// one row fewer than the input.
Jacobi jacobi_linear_factor(const Jacobi& J, double c,
                            LinearFactorRoute route = LinearFactorRoute::AtomReweighting);

}  // namespace mink
