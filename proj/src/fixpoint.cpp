#include "mink/fixpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "mink/quadrature.hpp"

namespace mink {

namespace {

constexpr Index kOperatorRouteMaxSize = 256;
constexpr int kHardIterationCap = 20000;

}  // namespace

Index FixpointConfig::truncation() const {
  if (buffer >= 0) return n_target + buffer;
  // Smallest N with N - max(16, N/10) >= n_target.
  const Index by_fraction = (10 * n_target + 8) / 9;
  return std::max(n_target + 16, by_fraction);
}

int FixpointConfig::iteration_limit() const {
  if (max_iters > 0) return max_iters;
  const double v = std::ceil(10.0 * std::pow(static_cast<double>(n_target), 0.7));
  return static_cast<int>(std::min<double>(kHardIterationCap, v));
}

TMapRoute FixpointConfig::resolved_route() const {
  if (route != TMapRoute::Auto) return route;
  return truncation() <= kOperatorRouteMaxSize ? TMapRoute::Operator : TMapRoute::Spectral;
}

void FixpointConfig::validate() const {
  if (n_target < 1) throw DomainError("FixpointConfig: n_target must be >= 1");
  if (!(eps > 0.0)) throw DomainError("FixpointConfig: eps must be positive");
  if (!(rho1 > 0.0 && rho2 > 0.0) || std::abs(rho1 + rho2 - 1.0) > 1e-14)
    throw DomainError("FixpointConfig: probabilities must be positive and sum to 1");
  if (max_iters < 0) throw DomainError("FixpointConfig: max_iters must be >= 0");
}

// ---------------------------------------------------------------------------

namespace {

void check_map_on_unit_interval(const MoebiusMap& map) {
  const double c = to_double(map.den_c()), d = to_double(map.den_d());
  if (!(d * (c + d) > 0.0)) throw DomainError("moebius_pushforward: map has a pole on [0,1]");
}

}  // namespace

Jacobi moebius_pushforward(const Jacobi& J, const MoebiusMap& map, Index K) {
  check_map_on_unit_interval(map);
  const Index n = J.size();
  if (K < 1 || K > n) throw DomainError("moebius_pushforward: need 1 <= K <= N");
  const double a = to_double(map.num_a()), b = to_double(map.num_b());
  const double c = to_double(map.den_c()), d = to_double(map.den_d());
  auto apply = [&](const auto& v) -> VectorX<double> {
    const VectorX<double> w = tridiagonal_solve(J, c, d, VectorX<double>(v));
    return a * J.apply(w) + b * w;
  };
  VectorX<double> start = VectorX<double>::Zero(n);
  start(0) = 1.0;
  return lanczos_tridiagonalize<double>(apply, start, K).jacobi;
}

Jacobi moebius_pushforward_spectral(const Jacobi& J, const MoebiusMap& map, Index K) {
  check_map_on_unit_interval(map);
  const Index n = J.size();
  if (K < 1 || K > n) throw DomainError("moebius_pushforward_spectral: need 1 <= K <= N");
  const GaussRule<double> rule = gauss_rule_twisted(J, n);
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) atoms.push_back({map(rule.nodes(i)), rule.log_weights(i)});
  if (atoms.size() > 1 && atoms.front().position > atoms.back().position)
    std::reverse(atoms.begin(), atoms.end());
  return jacobi_from_atoms(DiscreteMeasure(std::move(atoms)), K);
}

LanczosResult<double> jacobi_average(const Jacobi& J1, const Jacobi& J2, double rho1, double rho2,
                                     Index K) {
  if (!(rho1 > 0.0 && rho2 > 0.0) || std::abs(rho1 + rho2 - 1.0) > 1e-14)
    throw DomainError("jacobi_average: probabilities must be positive and sum to 1");
  const Index n1 = J1.size(), n2 = J2.size();
  if (K < 1 || K > n1 + n2) throw DomainError("jacobi_average: need 1 <= K <= N1 + N2");
  auto apply = [&](const auto& v) -> VectorX<double> {
    VectorX<double> out(n1 + n2);
    out.head(n1) = J1.apply(v.head(n1));
    out.tail(n2) = J2.apply(v.tail(n2));
    return out;
  };
  VectorX<double> start = VectorX<double>::Zero(n1 + n2);
  start(0) = std::sqrt(rho1);
  start(n1) = std::sqrt(rho2);
  start /= start.norm();
  return lanczos_tridiagonalize<double>(apply, start, K);
}

Jacobi t_map(const Jacobi& J, const FixpointConfig& cfg) {
  const Index n = J.size();
  if (n < 1) throw DomainError("t_map: empty matrix");
  const Index out_size = std::min(2 * n, std::max(cfg.truncation(), n));

  if (cfg.resolved_route() == TMapRoute::Spectral) {
    const GaussRule<double> rule = gauss_rule_twisted(J, n);
    std::vector<Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) atoms.push_back({rule.nodes(i), rule.log_weights(i)});
    const DiscreteMeasure image =
        perron_frobenius_step(DiscreteMeasure(std::move(atoms)), cfg.rho1, cfg.rho2);
    return jacobi_from_atoms(image, std::min<Index>(out_size, static_cast<Index>(image.size())));
  }

  const MoebiusMap m1 = MoebiusMap::m1(), m2 = MoebiusMap::m2();
  Jacobi J1, J2;
  if (cfg.concurrent) {
    auto f1 = std::async(std::launch::async, [&] { return moebius_pushforward(J, m1, n); });
    J2 = moebius_pushforward(J, m2, n);
    J1 = f1.get();
  } else {
    J1 = moebius_pushforward(J, m1, n);
    J2 = moebius_pushforward(J, m2, n);
  }
  return jacobi_average(J1, J2, cfg.rho1, cfg.rho2, out_size).jacobi;
}

Index converged_rank(const Jacobi& prev, const Jacobi& next, double eps, Index rows) {
  const Index limit = std::min({rows, prev.size() - 1, next.size() - 1});
  double sum = 0.0;
  Index rank = 0;
  for (Index j = 1; j <= limit; ++j) {
    sum += std::abs(next.a(j) - prev.a(j));
    if (sum > eps) break;
    rank = j;
  }
  return rank;
}

FixpointResult fixpoint_solve(const FixpointConfig& cfg, const Jacobi& initial) {
  cfg.validate();
  const Index N = cfg.truncation();
  if (initial.size() < 1) throw DomainError("fixpoint_solve: empty initial matrix");
  const Index trace = cfg.trace_rows > 0 ? std::min(cfg.trace_rows, N - 1) : std::min(cfg.n_target, N - 1);

  FixpointResult res;
  Jacobi J = initial.size() > N ? initial.leading(N) : initial;
  const int limit = cfg.iteration_limit();
  Index rank = 0;
  for (int it = 1; it <= limit; ++it) {
    Jacobi next;
    if (cfg.growing_window && J.size() == N) {
      const Index window = std::min(N, std::max<Index>(64, rank + 4 * cfg.buffer_rows()));
      next = J;
      const Jacobi head = t_map(J.leading(window), cfg);
      next.a.head(window) = head.a.head(window);
      next.b.head(window) = head.b.head(window);
    } else {
      next = t_map(J, cfg);
    }
    rank = converged_rank(J, next, cfg.eps, cfg.n_target);

    std::vector<double> d(static_cast<std::size_t>(trace), std::numeric_limits<double>::quiet_NaN());
    double total = 0.0;
    for (Index j = 1; j <= trace; ++j) {
      if (j < J.size() && j < next.size()) d[static_cast<std::size_t>(j - 1)] = std::abs(next.a(j) - J.a(j));
    }
    for (Index j = 1; j <= std::min({cfg.n_target, J.size() - 1, next.size() - 1}); ++j)
      total += std::abs(next.a(j) - J.a(j));
    res.report.deltas.push_back(std::move(d));
    res.report.converged_rank.push_back(rank);
    res.report.total_delta.push_back(total);
    res.report.iterations = it;
    J = std::move(next);
    if (cfg.on_iteration) cfg.on_iteration(it, rank);
    if (J.size() == N && rank >= cfg.n_target) {
      res.report.converged = true;
      break;
    }
  }
  res.jacobi = std::move(J);
  return res;
}

FixpointResult fixpoint_solve(const FixpointConfig& cfg) {
  return fixpoint_solve(cfg, uniform_jacobi(cfg.truncation()));
}

std::vector<double> error_statistics(const Jacobi& J_fixed, const FixpointConfig& cfg,
                                     int extra_iters) {
  if (extra_iters < 2) throw DomainError("error_statistics: need at least two extra iterations");
  const Index rows = std::min(cfg.n_target, J_fixed.size() - 1);
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(rows));
  Jacobi J = J_fixed;
  for (int it = 0; it < extra_iters; ++it) {
    J = t_map(J, cfg);
    for (Index j = 1; j <= rows; ++j) samples[static_cast<std::size_t>(j - 1)].push_back(J.a(j));
  }
  std::vector<double> s(static_cast<std::size_t>(rows));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double mean = 0.0;
    for (double v : samples[i]) mean += v;
    mean /= static_cast<double>(samples[i].size());
    double var = 0.0;
    for (double v : samples[i]) var += (v - mean) * (v - mean);
    s[i] = std::sqrt(var / static_cast<double>(samples[i].size() - 1));
  }
  return s;
}

// ---------------------------------------------------------------------------

void save_jacobi(std::ostream& out, const Jacobi& J, const JacobiMetadata& meta) {
  out << kJacobiFormatHeader << '\n';
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw DomainError("save_jacobi: metadata must be single-line key=value");
    out << "# " << k << '=' << v << '\n';
  }
  char buf[96];
  for (Index j = 0; j < J.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%ld\t%.17g\t%.17g\n", static_cast<long>(j), J.a(j), J.b(j));
    out << buf;
  }
}

void save_jacobi(const std::string& path, const Jacobi& J, const JacobiMetadata& meta) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("save_jacobi: cannot open " + tmp.string());
    save_jacobi(f, J, meta);
    f.flush();
    if (!f) {
      f.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("save_jacobi: write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("save_jacobi: cannot rename to " + path);
  }
}

LoadedJacobi load_jacobi(std::istream& in) {
  LoadedJacobi out;
  std::string line;
  int lineno = 0;
  std::vector<double> a, b;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kJacobiFormatHeader) throw ParseError("missing '" + std::string(kJacobiFormatHeader) + "' header", 1);
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!a.empty()) throw ParseError("comment after data rows", lineno);
      const std::string body = line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1);
      const auto eq = body.find('=');
      if (eq != std::string::npos) out.meta[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    std::istringstream fields(line);
    std::string sj, sa, sb, extra;
    if (!std::getline(fields, sj, '\t') || !std::getline(fields, sa, '\t') ||
        !std::getline(fields, sb, '\t') || std::getline(fields, extra, '\t'))
      throw ParseError("expected three tab-separated fields", lineno);
    char* end = nullptr;
    const long j = std::strtol(sj.c_str(), &end, 10);
    if (end == sj.c_str() || *end != '\0') throw ParseError("bad index '" + sj + "'", lineno);
    if (j != static_cast<long>(a.size())) throw ParseError("row index out of sequence", lineno);
    const double av = std::strtod(sa.c_str(), &end);
    if (end == sa.c_str() || *end != '\0' || !std::isfinite(av)) throw ParseError("bad a_j '" + sa + "'", lineno);
    const double bv = std::strtod(sb.c_str(), &end);
    if (end == sb.c_str() || *end != '\0' || !std::isfinite(bv)) throw ParseError("bad b_j '" + sb + "'", lineno);
    if (j == 0 && av != 0.0) throw ParseError("a_0 must be 0", lineno);
    if (j > 0 && !(av > 0.0)) throw ParseError("a_j must be positive", lineno);
    a.push_back(av);
    b.push_back(bv);
  }
  if (!header_seen) throw ParseError("empty file", 1);
  if (a.empty()) throw ParseError("no data rows", lineno);
  VectorX<double> av = Eigen::Map<VectorX<double>>(a.data(), static_cast<Index>(a.size()));
  VectorX<double> bv = Eigen::Map<VectorX<double>>(b.data(), static_cast<Index>(b.size()));
  out.jacobi = Jacobi(av, bv);
  return out;
}

LoadedJacobi load_jacobi(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_jacobi: cannot open " + path);
  return load_jacobi(f);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mink
