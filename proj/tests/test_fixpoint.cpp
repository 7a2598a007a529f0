#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mink/errors.hpp"
#include "mink/fixpoint.hpp"
#include "mink/quadrature.hpp"

using namespace mink;

namespace {

Jacobi delta_half() {
  Jacobi J(1);
  J.b(0) = 0.5;
  return J;
}

double max_abs_diff(const Jacobi& A, const Jacobi& B, Index rows) {
  double d = 0.0;
  for (Index i = 0; i < rows; ++i) {
    d = std::max(d, std::abs(A.b(i) - B.b(i)));
    if (i > 0) d = std::max(d, std::abs(A.a(i) - B.a(i)));
  }
  return d;
}

const FixpointResult& table_run() {
  static const FixpointResult r = [] {
    FixpointConfig cfg;
    cfg.n_target = 64;
    cfg.route = TMapRoute::Operator;
    return fixpoint_solve(cfg);
  }();
  return r;
}

}  // namespace

TEST_CASE("configuration") {
  FixpointConfig cfg;
  cfg.n_target = 64;
  CHECK(cfg.truncation() == 80);
  CHECK(cfg.buffer_rows() == 16);
  cfg.n_target = 2048;
  CHECK(cfg.truncation() == 2276);
  CHECK(cfg.truncation() - std::max<Index>(16, cfg.truncation() / 10) >= 2048);
  CHECK(cfg.iteration_limit() == static_cast<int>(std::ceil(10 * std::pow(2048.0, 0.7))));
  cfg.buffer = 8;
  CHECK(cfg.truncation() == 2056);
  cfg.n_target = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.n_target = 4;
  cfg.eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.eps = 1e-12;
  cfg.rho1 = 0.7;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.rho1 = 0.5;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_target = 64;
  CHECK(cfg.resolved_route() == TMapRoute::Operator);
  cfg.n_target = 2048;
  CHECK(cfg.resolved_route() == TMapRoute::Spectral);
}

TEST_CASE("Moebius pushforward") {
  const Jacobi d = delta_half();
  CHECK(moebius_pushforward(d, MoebiusMap::m1(), 1).b(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(moebius_pushforward(d, MoebiusMap::m2(), 1).b(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(moebius_pushforward(d, MoebiusMap::m1(), 2), DomainError);

  // Moments of the image against the Gauss rule of the input pushed through
  // the map.
  const Jacobi J = uniform_jacobi(12);
  const GaussRule<double> rule = gauss_rule(J, 12);
  for (const MoebiusMap& map : {MoebiusMap::m1(), MoebiusMap::m2()}) {
    for (Index K : {4, 8, 12}) {
      for (const Jacobi& out : {moebius_pushforward(J, map, K), moebius_pushforward_spectral(J, map, K)}) {
        REQUIRE(out.size() == K);
        const VectorX<double> mom = moments_from_jacobi(out, 2 * K - 1);
        for (Index m = 0; m <= 2 * K - 1; ++m) {
          double s = 0.0;
          for (Index l = 0; l < 12; ++l) {
            const double z = rule.nodes(l);
            s += std::exp(rule.log_weights(l)) * std::pow(map(z), static_cast<double>(m));
          }
          CHECK(std::abs(mom(m) - s) <= 1e-10 * s);
        }
      }
    }
  }
}

TEST_CASE("averages of Jacobi matrices") {
  const Jacobi U = uniform_jacobi(20);
  const auto same = jacobi_average(U, U, 0.5, 0.5, 20);
  CHECK(max_abs_diff(same.jacobi, U, 20) <= 1e-12);

  Jacobi z(1), o(1);
  o.b(0) = 1.0;
  const auto two = jacobi_average(z, o, 0.5, 0.5, 2);
  CHECK_FALSE(two.breakdown);
  CHECK(two.jacobi.b(0) == doctest::Approx(0.5));
  CHECK(two.jacobi.a(1) == doctest::Approx(0.5));
  CHECK(jacobi_average(z, z, 0.5, 0.5, 2).breakdown);

  const Jacobi C = chebyshev_jacobi(20);
  const auto mix = jacobi_average(U, C, 0.3, 0.7, 20);
  const VectorX<double> mu = moments_from_jacobi(U, 39), mc = moments_from_jacobi(C, 39);
  const VectorX<double> mm = moments_from_jacobi(mix.jacobi, 39);
  for (Index m = 0; m <= 39; ++m) {
    const double expect = 0.3 * mu(m) + 0.7 * mc(m);
    CHECK(std::abs(mm(m) - expect) <= 1e-10 * expect);
  }
}

TEST_CASE("operator and spectral routes agree") {
  FixpointConfig op, sp;
  op.n_target = sp.n_target = 48;
  op.route = TMapRoute::Operator;
  sp.route = TMapRoute::Spectral;
  Jacobi a = uniform_jacobi(op.truncation()), b = a;
  for (int i = 0; i < 10; ++i) {
    a = t_map(a, op);
    b = t_map(b, sp);
    REQUIRE(a.size() == b.size());
    CHECK(max_abs_diff(a, b, a.size()) <= 1e-12);
  }
}

TEST_CASE("iterates from a point mass match the Farey atoms") {
  // Once 2^n exceeds the truncation only the leading n_target rows are
  // trusted; the buffer rows absorb the truncation error.
  FixpointConfig cfg;
  cfg.n_target = 16;
  cfg.buffer = 16;
  for (TMapRoute route : {TMapRoute::Operator, TMapRoute::Spectral}) {
    cfg.route = route;
    Jacobi J = delta_half();
    DiscreteMeasure m = DiscreteMeasure::delta(0.5);
    for (int n = 1; n <= 12; ++n) {
      J = t_map(J, cfg);
      m = perron_frobenius_step(m);
      REQUIRE(J.size() == std::min<Index>(Index{1} << n, 32));
      const Jacobi ref = jacobi_from_atoms(m, J.size());
      const Index rows = (Index{1} << n) <= 32 ? J.size() : cfg.n_target + 1;
      CHECK(max_abs_diff(J, ref, rows) <= 1e-10);
      CHECK(J.has_positive_offdiagonal());
      const auto z = tridiagonal_eigenvalues(J, std::min<Index>(8, J.size()));
      CHECK(z.minCoeff() >= -1e-14);
      CHECK(z.maxCoeff() <= 1.0 + 1e-14);
    }
  }
}

TEST_CASE("fixed point reproduces the tabulated coefficients") {
  const FixpointResult& r = table_run();
  CHECK(r.report.converged);
  const Jacobi& J = r.jacobi;
  const std::pair<Index, double> table[] = {
      {1, 0.202302932329981}, {10, 0.215070562228327}, {20, 0.224458577806858},
      {30, 0.221516521450380}, {40, 0.236423204888560}};
  for (const auto& [j, a] : table) CHECK(std::abs(J.a(j) - a) <= 5e-15);
  for (Index j = 0; j < 64; ++j) CHECK(std::abs(J.b(j) - 0.5) <= 5e-13);

  // Converged-rank history and delta traces.
  const auto& rank = r.report.converged_rank;
  CHECK(rank.back() >= 64);
  for (const auto& d : r.report.deltas)
    for (double v : d)
      if (!std::isnan(v)) CHECK(v >= 0.0);
  for (Index j = 1; j <= 32; ++j) {
    bool dropped = false;
    for (const auto& d : r.report.deltas)
      if (d[static_cast<std::size_t>(j - 1)] < 1e-10) dropped = true;
    CHECK(dropped);
  }
  for (std::size_t n = 1; n < r.report.total_delta.size(); ++n) CHECK(r.report.total_delta[n] >= 0.0);

  // One more application stays within the threshold.
  FixpointConfig cfg;
  cfg.n_target = 64;
  cfg.route = TMapRoute::Operator;
  const Jacobi next = t_map(J, cfg);
  double l1 = 0.0;
  for (Index j = 1; j <= 32; ++j) l1 += std::abs(next.a(j) - J.a(j));
  CHECK(l1 < 10 * cfg.eps);
  CHECK(std::abs(next.a(1) - J.a(1)) < 1e-12);
  for (Index j = 0; j < next.size(); ++j) {
    CHECK(next.b(j) >= 0.0);
    CHECK(next.b(j) <= 1.0);
  }

  // Restarting from the fixed point converges at once.
  const FixpointResult again = fixpoint_solve(cfg, J);
  CHECK(again.report.iterations == 1);
  CHECK(again.report.converged_rank.front() >= 64);
}

TEST_CASE("converged rank") {
  Jacobi A = uniform_jacobi(10), B = A;
  CHECK(converged_rank(A, B, 1e-12, 9) == 9);
  B.a(4) += 1e-6;
  CHECK(converged_rank(A, B, 1e-12, 9) == 3);
  CHECK(converged_rank(A, B, 1e-5, 9) == 9);
  B.a(1) += 1.0;
  CHECK(converged_rank(A, B, 1e-12, 9) == 0);
}

TEST_CASE("concurrent pushforwards give identical results") {
  FixpointConfig serial;
  serial.n_target = 40;
  serial.route = TMapRoute::Operator;
  FixpointConfig conc = serial;
  conc.concurrent = true;
  const FixpointResult a = fixpoint_solve(serial);
  const FixpointResult b = fixpoint_solve(conc);
  CHECK(a.report.iterations == b.report.iterations);
  CHECK(a.jacobi.a == b.jacobi.a);
  CHECK(a.jacobi.b == b.jacobi.b);
}

TEST_CASE("growing window agrees with full iteration") {
  FixpointConfig full;
  full.n_target = 256;
  full.route = TMapRoute::Spectral;
  FixpointConfig grow = full;
  grow.growing_window = true;
  const FixpointResult a = fixpoint_solve(full);
  const FixpointResult b = fixpoint_solve(grow);
  CHECK(a.report.converged);
  CHECK(b.report.converged);
  CHECK(max_abs_diff(a.jacobi, b.jacobi, 257) <= 1e-13);
}

TEST_CASE("iteration limit gives a partial result") {
  FixpointConfig cfg;
  cfg.n_target = 64;
  cfg.max_iters = 3;
  const FixpointResult r = fixpoint_solve(cfg);
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.iterations == 3);
  CHECK(r.report.converged_rank.size() == 3);
}

TEST_CASE("error statistics") {
  FixpointConfig cfg;
  cfg.n_target = 64;
  cfg.route = TMapRoute::Operator;
  const auto s = error_statistics(table_run().jacobi, cfg, 20);
  REQUIRE(s.size() == 64);
  for (double v : s) CHECK(v >= 0.0);
  CHECK(s[0] < 1e-13);
  CHECK_THROWS_AS(error_statistics(table_run().jacobi, cfg, 1), DomainError);
}

TEST_CASE("cache file round trip") {
  const Jacobi& J = table_run().jacobi;
  JacobiMetadata meta{{"n", "64"}, {"eps", "1e-12"}, {"iterations", "101"}, {"builder", kBuilderVersion}};
  std::ostringstream os;
  save_jacobi(os, J, meta);
  const std::string text = os.str();
  CHECK(text.rfind(std::string(kJacobiFormatHeader) + "\n", 0) == 0);
  CHECK(text.find("\n1\t0.20230293232998") != std::string::npos);

  std::istringstream is(text);
  const LoadedJacobi back = load_jacobi(is);
  CHECK(back.jacobi.a == J.a);
  CHECK(back.jacobi.b == J.b);
  CHECK(back.meta == meta);

  const auto dir = std::filesystem::temp_directory_path() / "mink_test_fixpoint";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "J.tsv").string();
  save_jacobi(path, J, meta);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  const LoadedJacobi disk = load_jacobi(path);
  CHECK(disk.jacobi.a == J.a);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(load_jacobi((dir / "missing.tsv").string()));
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("malformed cache files") {
  auto parse_line = [](const std::string& text) -> long {
    std::istringstream is(text);
    try {
      load_jacobi(is);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  const std::string h = std::string(kJacobiFormatHeader) + "\n";
  CHECK(parse_line("# other v1\n0\t0\t0.5\n") == 1);
  CHECK(parse_line(h + "0\t0\t0.5\n1\t0.2\n") == 3);
  CHECK(parse_line(h + "0\t0\t0.5\n2\t0.2\t0.5\n") == 3);
  CHECK(parse_line(h + "0\t0.1\t0.5\n") == 2);
  CHECK(parse_line(h + "0\t0\t0.5\n1\t-0.2\t0.5\n") == 3);
  CHECK(parse_line(h + "0\t0\t0.5\n# late\n") == 3);
  CHECK(parse_line(h + "0\t0\tabc\n") == 2);
  CHECK(parse_line(h) == 1);
  CHECK(parse_line(h + "# n=1\n0\t0\t0.5\n") == -1);
}
