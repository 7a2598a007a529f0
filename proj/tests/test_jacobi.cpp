#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mink/errors.hpp"
#include "mink/jacobi.hpp"
#include "mink/quadrature.hpp"

using namespace mink;
using HP = boost::multiprecision::cpp_bin_float_50;

namespace {

Jacobi random_jacobi(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> ub(0.2, 0.8), ua(0.05, 0.3);
  Jacobi J(n);
  for (Index i = 0; i < n; ++i) J.b(i) = ub(rng);
  for (Index i = 1; i < n; ++i) J.a(i) = ua(rng);
  return J;
}

DiscreteMeasure random_atoms(std::mt19937_64& rng, std::size_t L) {
  std::vector<double> xs, ws;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < L; ++i) {
    xs.push_back((static_cast<double>(i) + 0.1 + 0.8 * u(rng)) / static_cast<double>(L));
    ws.push_back(0.1 + u(rng));
  }
  return DiscreteMeasure::from_weights(xs, ws);
}

// Lanczos in 50 digits on diag(x) started at sqrt(w).
JacobiMatrix<HP> hp_jacobi_of_atoms(const DiscreteMeasure& m, Index K) {
  const Index L = static_cast<Index>(m.size());
  VectorX<HP> x(L), s(L);
  HP total = 0;
  for (Index i = 0; i < L; ++i) {
    x(i) = m.atoms()[static_cast<std::size_t>(i)].position;
    s(i) = exp(HP(m.atoms()[static_cast<std::size_t>(i)].log_weight));
    total += s(i);
  }
  for (Index i = 0; i < L; ++i) s(i) = sqrt(s(i) / total);
  auto apply = [&](const VectorX<HP>& v) -> VectorX<HP> { return x.cwiseProduct(v); };
  return lanczos_tridiagonalize<HP>(apply, s, K).jacobi;
}

double max_abs_diff(const Jacobi& A, const Jacobi& B) {
  REQUIRE(A.size() == B.size());
  return std::max((A.a - B.a).cwiseAbs().maxCoeff(), (A.b - B.b).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("tridiagonal eigenvalues") {
  Jacobi d(1);
  d.b(0) = 0.5;
  CHECK(tridiagonal_eigenvalues(d, 1)(0) == 0.5);

  const Jacobi C = chebyshev_jacobi(40);
  const auto z2 = tridiagonal_eigenvalues(C, 2);
  CHECK(z2(0) == doctest::Approx((1 - std::sqrt(2.0) / 2) / 2).epsilon(1e-15));
  CHECK(z2(1) == doctest::Approx((1 + std::sqrt(2.0) / 2) / 2).epsilon(1e-15));
  for (Index j : {3, 7, 20, 40}) {
    const auto z = tridiagonal_eigenvalues(C, j);
    for (Index l = 1; l <= j; ++l) {
      const double theta = (1 - std::cos(M_PI * (2.0 * l - 1) / (2.0 * j))) / 2;
      CHECK(std::abs(z(l - 1) - theta) <= 1e-14);
    }
  }
  CHECK_THROWS_AS(tridiagonal_eigenvalues(C, 0), DomainError);
  CHECK_THROWS_AS(tridiagonal_eigenvalues(C, 41), DomainError);

  // Interlacing and agreement with a 50-digit QL run.
  std::mt19937_64 rng(1);
  const Jacobi J = random_jacobi(rng, 60);
  JacobiMatrix<HP> Jh(60);
  for (Index i = 0; i < 60; ++i) {
    Jh.a(i) = J.a(i);
    Jh.b(i) = J.b(i);
  }
  for (Index j = 1; j < 60; ++j) {
    const auto lo = tridiagonal_eigenvalues(J, j);
    const auto hi = tridiagonal_eigenvalues(J, j + 1);
    // Extremal zeros of neighbouring orders agree to rounding beyond j ~ 30.
    for (Index l = 0; l < j; ++l) {
      if (j <= 20) {
        CHECK(hi(l) < lo(l));
        CHECK(lo(l) < hi(l + 1));
      } else {
        CHECK(hi(l) <= lo(l) + 1e-14);
        CHECK(lo(l) <= hi(l + 1) + 1e-14);
      }
    }
  }
  const auto zd = tridiagonal_eigenvalues(J, 60);
  const auto zh = tridiagonal_eigenvalues(Jh, 60);
  for (Index l = 0; l < 60; ++l) CHECK(std::abs(zd(l) - static_cast<double>(zh(l))) <= 1e-14);
}

TEST_CASE("uniform measure eigenvalues are shifted Legendre zeros") {
  const auto z = tridiagonal_eigenvalues(uniform_jacobi(3), 3);
  CHECK(z(0) == doctest::Approx(0.5 - std::sqrt(15.0) / 10).epsilon(1e-15));
  CHECK(z(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(z(2) == doctest::Approx(0.5 + std::sqrt(15.0) / 10).epsilon(1e-15));
}

TEST_CASE("tridiagonal solve") {
  std::mt19937_64 rng(2);
  const Jacobi J = random_jacobi(rng, 50);
  VectorX<double> rhs = VectorX<double>::Random(50);
  CHECK((tridiagonal_solve(J, 0.0, 1.0, rhs) - rhs).norm() == 0.0);

  Jacobi s(1);
  s.b(0) = 0.5;
  VectorX<double> one = VectorX<double>::Ones(1);
  CHECK(tridiagonal_solve(s, 1.0, 0.0, one)(0) == 2.0);

  // Shifts that force row interchanges: cJ + dI indefinite.
  for (double d : {-0.5, -0.31, 0.7, -1.2}) {
    const VectorX<double> w = tridiagonal_solve(J, 1.0, d, rhs);
    const VectorX<double> back = J.apply(w) + d * w;
    CHECK((back - rhs).norm() <= 1e-12 * rhs.norm() * std::max(1.0, w.norm()));
  }
  // Moebius denominators for M1 and M2 on a [0,1] spectrum.
  const VectorX<double> w1 = tridiagonal_solve(J, 1.0, 1.0, rhs);
  CHECK((J.apply(w1) + w1 - rhs).norm() <= 1e-12 * rhs.norm());
  const VectorX<double> w2 = tridiagonal_solve(J, -1.0, 2.0, rhs);
  CHECK((-J.apply(w2) + 2.0 * w2 - rhs).norm() <= 1e-12 * rhs.norm());

  Jacobi zero(3);
  CHECK_THROWS_AS(tridiagonal_solve(zero, 1.0, 0.0, VectorX<double>::Ones(3)), SolverError);
  // 2x2 with eigenvalue exactly 1.
  Jacobi sing(2);
  sing.b << 0.5, 0.5;
  sing.a(1) = 0.5;
  try {
    tridiagonal_solve(sing, 1.0, -1.0, VectorX<double>::Ones(2));
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.condition_estimate() > 1e12);
  }
  CHECK_THROWS_AS(tridiagonal_solve(sing, 1.0, 0.0, VectorX<double>::Ones(3)), DomainError);
}

TEST_CASE("Lanczos") {
  std::mt19937_64 rng(3);
  const Jacobi J = random_jacobi(rng, 30);
  VectorX<double> e0 = VectorX<double>::Zero(30);
  e0(0) = 1.0;
  auto apply = [&](const VectorX<double>& v) -> VectorX<double> { return J.apply(v); };
  const auto res = lanczos_tridiagonalize<double>(apply, e0, 30);
  CHECK_FALSE(res.breakdown);
  CHECK(max_abs_diff(res.jacobi, J) <= 1e-12);

  VectorX<double> diag(2), start(2);
  diag << 0.0, 1.0;
  start << std::sqrt(0.5), std::sqrt(0.5);
  auto apply2 = [&](const VectorX<double>& v) -> VectorX<double> { return diag.cwiseProduct(v); };
  const auto two = lanczos_tridiagonalize<double>(apply2, start, 2);
  CHECK(two.jacobi.b(0) == doctest::Approx(0.5));
  CHECK(two.jacobi.a(1) == doctest::Approx(0.5));
  CHECK(two.jacobi.b(1) == doctest::Approx(0.5));

  // Moments against repeated application of a dense symmetric operator.
  const Index D = 40, K = 12;
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(D, D);
  A = (A + A.transpose()).eval() / 4.0;
  VectorX<double> v = VectorX<double>::Random(D).normalized();
  auto applyA = [&](const VectorX<double>& x) -> VectorX<double> { return A * x; };
  const Jacobi T = lanczos_tridiagonalize<double>(applyA, v, K).jacobi;
  const VectorX<double> mom = moments_from_jacobi(T, 2 * K - 1);
  VectorX<double> p = v;
  for (Index m = 0; m <= 2 * K - 1; ++m) {
    const double direct = v.dot(p);
    CHECK(std::abs(mom(m) - direct) <= 1e-10 * std::max(1.0, std::abs(direct)) + 1e-13 * std::pow(A.norm(), m));
    p = A * p;
  }

  // Breakdown: three atoms allow only three steps.
  VectorX<double> d3(5), s3 = VectorX<double>::Zero(5);
  d3 << 0.1, 0.5, 0.9, 0.3, 0.7;
  s3.head(3).setConstant(std::sqrt(1.0 / 3.0));
  auto apply3 = [&](const VectorX<double>& x) -> VectorX<double> { return d3.cwiseProduct(x); };
  const auto br = lanczos_tridiagonalize<double>(apply3, s3, 5);
  CHECK(br.breakdown);
  CHECK(br.jacobi.size() == 3);

  CHECK_THROWS_AS(lanczos_tridiagonalize<double>(apply3, VectorX<double>::Ones(5), 2), DomainError);
  CHECK_THROWS_AS(lanczos_tridiagonalize<double>(apply3, s3, 6), DomainError);
}

TEST_CASE("Jacobi matrices of atomic measures") {
  const auto half = DiscreteMeasure::from_weights({0.0, 1.0}, {0.5, 0.5});
  for (const Jacobi& J : {jacobi_from_atoms(half, 2), jacobi_from_atoms_lanczos(half, 2)}) {
    CHECK(J.b(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(J.a(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(J.b(1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  CHECK(jacobi_from_atoms(DiscreteMeasure::delta(0.5), 1).b(0) == 0.5);
  CHECK_THROWS_AS(jacobi_from_atoms(half, 3), DomainError);
  CHECK_THROWS_AS(jacobi_from_atoms_lanczos(half, 3), DomainError);

  // Both routes against the 50-digit Lanczos oracle.
  std::mt19937_64 rng(4);
  for (std::size_t L : {5u, 12u, 40u, 200u}) {
    const DiscreteMeasure m = random_atoms(rng, L);
    const Index K = std::min<Index>(static_cast<Index>(L), 30);
    const auto ref = hp_jacobi_of_atoms(m, K);
    const Jacobi gh = jacobi_from_atoms(m, K);
    const Jacobi lz = jacobi_from_atoms_lanczos(m, K);
    for (Index i = 0; i < K; ++i) {
      CHECK(std::abs(gh.b(i) - static_cast<double>(ref.b(i))) <= 1e-13);
      CHECK(std::abs(gh.a(i) - static_cast<double>(ref.a(i))) <= 1e-13);
      CHECK(std::abs(lz.b(i) - static_cast<double>(ref.b(i))) <= 1e-13);
      CHECK(std::abs(lz.a(i) - static_cast<double>(ref.a(i))) <= 1e-13);
    }
  }

  // Underflowing weights are dropped and counted.
  AtomsToJacobiStats stats;
  const DiscreteMeasure tiny({{0.1, 0.0}, {0.5, -2000.0}, {0.9, 0.0}});
  const Jacobi Jt = jacobi_from_atoms(tiny, 2, &stats);
  CHECK(stats.dropped_atoms == 1);
  CHECK(Jt.b(0) == doctest::Approx(0.5));
  CHECK(Jt.a(1) == doctest::Approx(0.4));
}

TEST_CASE("atoms and Jacobi matrices are inverse to each other") {
  std::mt19937_64 rng(5);
  for (Index n = 1; n <= 12; ++n) {
    const Jacobi J = random_jacobi(rng, n);
    const GaussRule<double> rule = gauss_rule(J, n);
    std::vector<Atom> atoms;
    for (Index i = 0; i < n; ++i) atoms.push_back({rule.nodes(i), rule.log_weights(i)});
    const DiscreteMeasure m(atoms);
    CHECK(max_abs_diff(jacobi_from_atoms(m, n), J) <= 1e-13);
    CHECK(max_abs_diff(jacobi_from_atoms_lanczos(m, n), J) <= 1e-13);
  }
}

TEST_CASE("Farey atoms approach the fixed point") {
  DiscreteMeasure m = DiscreteMeasure::delta(0.5);
  for (int i = 0; i < 12; ++i) m = perron_frobenius_step(m);
  const Jacobi J = jacobi_from_atoms(m, 8);
  CHECK(J.a(1) == doctest::Approx(0.2023029).epsilon(1e-5));
  for (Index i = 0; i < 8; ++i) CHECK(std::abs(J.b(i) - 0.5) <= 1e-13);
}

TEST_CASE("linear factor") {
  const Jacobi half = jacobi_from_atoms(DiscreteMeasure::from_weights({0.0, 1.0}, {0.5, 0.5}), 2);
  for (auto route : {LinearFactorRoute::AtomReweighting, LinearFactorRoute::Cholesky}) {
    const Jacobi r = jacobi_linear_factor(half, 0.0, route);
    REQUIRE(r.size() == 1);
    CHECK(r.b(0) == doctest::Approx(1.0).epsilon(1e-14));
  }

  std::mt19937_64 rng(6);
  for (Index n : {3, 8, 20, 40}) {
    const Jacobi J = jacobi_from_atoms(random_atoms(rng, 60), n);
    const VectorX<double> mu = moments_from_jacobi(J, 2 * n - 1);
    for (double c : {0.0, -0.2}) {
      const Jacobi R1 = jacobi_linear_factor(J, c, LinearFactorRoute::AtomReweighting);
      const Jacobi R2 = jacobi_linear_factor(J, c, LinearFactorRoute::Cholesky);
      CHECK(max_abs_diff(R1, R2) <= 1e-10);
      CHECK(R1.b(0) == doctest::Approx((mu(2) - c * mu(1)) / (mu(1) - c * mu(0))).epsilon(1e-12));
      // Moments of the normalized (x - c) mu, degree <= 2(n-1) - 1.
      const VectorX<double> rho = moments_from_jacobi(R2, 2 * (n - 1) - 1);
      const double mass = mu(1) - c * mu(0);
      for (Index k = 0; k <= 2 * (n - 1) - 1; ++k) {
        const double expect = (mu(k + 1) - c * mu(k)) / mass;
        CHECK(std::abs(rho(k) - expect) <= 1e-10 * std::abs(expect));
      }
    }
    CHECK_THROWS_AS(jacobi_linear_factor(J, 0.5, LinearFactorRoute::Cholesky), DomainError);
    CHECK_THROWS_AS(jacobi_linear_factor(J, 0.5, LinearFactorRoute::AtomReweighting), DomainError);
  }
  CHECK_THROWS_AS(jacobi_linear_factor(Jacobi(1), 0.0), DomainError);
}

TEST_CASE("moments") {
  const VectorX<double> u = moments_from_jacobi(uniform_jacobi(10), 19);
  for (Index m = 0; m <= 19; ++m) CHECK(u(m) == doctest::Approx(1.0 / (m + 1)).epsilon(1e-14));
  const VectorX<double> c = moments_from_jacobi(chebyshev_jacobi(10), 4);
  CHECK(c(0) == 1.0);
  CHECK(c(1) == doctest::Approx(0.5));
  CHECK(c(2) == doctest::Approx(3.0 / 8.0));
  CHECK_THROWS_AS(moments_from_jacobi(Jacobi(), 3), DomainError);
}

TEST_CASE("Gauss rules integrate the moments") {
  std::mt19937_64 rng(7);
  const Jacobi J = jacobi_from_atoms(random_atoms(rng, 200), 64);
  const VectorX<double> mom = moments_from_jacobi(J, 127);
  for (Index j : {1, 2, 5, 16, 33, 64}) {
    const GaussRule<double> rule = gauss_rule(J, j);
    CHECK(std::abs(log_sum_exp(std::vector<double>(rule.log_weights.data(),
                                                   rule.log_weights.data() + j))) <= 1e-12);
    for (Index m = 0; m <= 2 * j - 1; ++m) {
      double s = 0.0;
      for (Index l = 0; l < j; ++l) s += std::exp(rule.log_weights(l)) * std::pow(rule.nodes(l), m);
      CHECK(std::abs(s - mom(m)) <= 1e-10 * mom(m));
    }
  }
}
