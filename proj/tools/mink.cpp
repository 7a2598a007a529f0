// mink: command-line driver for the question-mark measure library.
//
//   mink <command> [--flag value]...
//
// Exit codes: 0 success, 1 I/O or invalid argument, 2 partial convergence,
// 3 missing prerequisite (Jacobi cache), 4 inconsistent cache metadata.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <thread>
#include <variant>

#include "mink/analysis.hpp"
#include "mink/errors.hpp"
#include "mink/fixpoint.hpp"
#include "mink/measure.hpp"
#include "mink/quadrature.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mink;

namespace {

enum Exit { kOk = 0, kIo = 1, kPartial = 2, kMissing = 3, kInconsistent = 4 };

struct CliError : std::runtime_error {
  CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

struct Options {
  std::string command;
  std::optional<Index> n;
  std::vector<Index> j;
  std::optional<int> q;
  std::vector<int> k;
  std::optional<double> eps;
  int iters = 0;
  std::string grid;
  std::string cache;
  std::string out;
  std::string format = "tsv";
  bool compute = false;
  std::uint64_t seed = 1;
  bool series = false;
  std::vector<std::string> args;
};

// ---------------------------------------------------------------------------
// Output

using Cell = std::variant<long long, double, std::string>;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v + 0.0);
  return std::string(buf, res.ptr);
}

struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> provenance;
  json summary = json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::string tsv() const {
    std::ostringstream os;
    os << "# mink " << command << '\n';
    for (const auto& [k, v] : provenance) os << "# " << k << '=' << v << '\n';
    for (const auto& [k, v] : summary.items()) {
      os << "# summary." << k << '=';
      if (v.is_number_float()) os << format_double(v.get<double>());
      else if (v.is_string()) os << v.get<std::string>();
      else os << v.dump();
      os << '\n';
    }
    os << '#';
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "\t" : " ") << columns[c];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) os << '\t';
        std::visit(
            [&os](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) os << format_double(v);
              else os << v;
            },
            row[c]);
      }
      os << '\n';
    }
    return os.str();
  }

  std::string json_text() const {
    json j;
    j["command"] = command;
    json prov = json::object();
    for (const auto& [k, v] : provenance) prov[k] = v;
    j["provenance"] = prov;
    j["summary"] = summary;
    j["columns"] = columns;
    json rs = json::array();
    for (const auto& row : rows) {
      json r = json::array();
      for (const auto& cell : row) std::visit([&r](const auto& v) { r.push_back(v); }, cell);
      rs.push_back(r);
    }
    j["rows"] = rs;
    return j.dump(1) + "\n";
  }
};

void check_writable(const std::string& path) {
  if (path.empty()) return;
  const fs::path p(path);
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw CliError(kIo, "output directory does not exist: " + dir.string());
  if (fs::is_directory(p, ec)) throw CliError(kIo, "output path is a directory: " + path);
}

// Whole-file write through a temporary, so a failed write leaves nothing.
void write_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CliError(kIo, "cannot open " + tmp);
    f << text;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw CliError(kIo, "write failed for " + tmp);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw CliError(kIo, "cannot rename to " + path);
  }
}

void emit(const Options& o, const Report& r) {
  const std::string text = o.format == "json" ? r.json_text() : r.tsv();
  if (o.out.empty() || o.out == "-") {
    std::cout << text << std::flush;
  } else {
    write_file(o.out, text);
  }
}

// ---------------------------------------------------------------------------
// Jacobi cache

double default_eps(Index n) { return n <= 256 ? 1e-12 : 1e-9; }

std::string cache_dir() {
  if (const char* env = std::getenv("MINK_CACHE_DIR"); env && *env) return env;
  return "mink-cache";
}

std::string cache_path(const Options& o, Index n, double eps) {
  if (!o.cache.empty()) return o.cache;
  char name[96];
  std::snprintf(name, sizeof name, "jacobi-n%ld-eps%g.tsv", static_cast<long>(n), eps);
  return (fs::path(cache_dir()) / name).string();
}

// The default cache directory is created on demand; an explicit --cache must
// point into an existing directory.
void prepare_cache_location(const Options& o, const std::string& path) {
  if (o.cache.empty()) {
    std::error_code ec;
    fs::create_directories(fs::path(path).parent_path(), ec);
    if (ec) throw CliError(kIo, "cannot create cache directory " + fs::path(path).parent_path().string());
  }
  check_writable(path);
}

std::string data_hash(const Jacobi& J) {
  std::ostringstream os;
  save_jacobi(os, J, {});
  const std::string s = os.str();
  return fnv1a_hex(s.substr(s.find('\n') + 1));
}

FixpointConfig fixpoint_config(Index n, double eps, int iters) {
  FixpointConfig cfg;
  cfg.n_target = n;
  cfg.eps = eps;
  cfg.max_iters = iters;
  cfg.growing_window = n > 256;
  cfg.concurrent = true;
  cfg.validate();
  return cfg;
}

JacobiMetadata cache_metadata(const FixpointConfig& cfg, const Jacobi& J, const ConvergenceReport& rep) {
  JacobiMetadata m;
  m["builder"] = kBuilderVersion;
  m["n_target"] = std::to_string(cfg.n_target);
  m["eps"] = format_double(cfg.eps);
  m["truncation"] = std::to_string(cfg.truncation());
  m["rho1"] = format_double(cfg.rho1);
  m["rho2"] = format_double(cfg.rho2);
  m["route"] = cfg.resolved_route() == TMapRoute::Operator ? "operator" : "spectral";
  m["growing_window"] = cfg.growing_window ? "1" : "0";
  m["iterations"] = std::to_string(rep.iterations);
  m["converged"] = rep.converged ? "1" : "0";
  m["data_fnv1a"] = data_hash(J);
  return m;
}

struct Cache {
  std::string path;
  std::string file_hash;
  Jacobi jacobi;
  JacobiMetadata meta;
  Index n_target = 0;
  double eps = 0.0;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CliError(kIo, "cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Cache load_cache(const std::string& path) {
  Cache c;
  c.path = path;
  const std::string bytes = read_file(path);
  c.file_hash = fnv1a_hex(bytes);
  std::istringstream in(bytes);
  LoadedJacobi L;
  try {
    L = load_jacobi(in);
  } catch (const ParseError& e) {
    throw CliError(kInconsistent, "malformed cache " + path + ": " + e.what());
  }
  c.jacobi = std::move(L.jacobi);
  c.meta = std::move(L.meta);
  for (const char* key : {"builder", "n_target", "eps", "data_fnv1a"})
    if (!c.meta.count(key)) throw CliError(kInconsistent, path + ": missing metadata key " + key);
  if (c.meta["builder"] != kBuilderVersion)
    throw CliError(kInconsistent, path + ": written by " + c.meta["builder"] + ", expected " + kBuilderVersion);
  try {
    c.n_target = std::stol(c.meta["n_target"]);
    c.eps = std::stod(c.meta["eps"]);
  } catch (const std::exception&) {
    throw CliError(kInconsistent, path + ": unreadable n_target or eps");
  }
  if (c.n_target < 1 || c.jacobi.size() <= c.n_target)
    throw CliError(kInconsistent, path + ": row count does not match n_target");
  if (data_hash(c.jacobi) != c.meta["data_fnv1a"])
    throw CliError(kInconsistent, path + ": data rows do not match their recorded hash");
  return c;
}

// Cache for the analysis commands. `need` is the largest order used.
Cache obtain_cache(const Options& o, Index need) {
  const Index n = o.n.value_or(std::max<Index>(64, need));
  const double eps = o.eps.value_or(default_eps(n));
  const std::string path = cache_path(o, n, eps);
  if (!fs::exists(path)) {
    if (!o.compute)
      throw CliError(kMissing, "no Jacobi cache at " + path + "; run `mink jacobi --n " + std::to_string(n) +
                                   "` first or pass --compute");
    prepare_cache_location(o, path);
    const FixpointConfig cfg = fixpoint_config(n, eps, o.iters);
    const FixpointResult res = fixpoint_solve(cfg);
    save_jacobi(path, res.jacobi, cache_metadata(cfg, res.jacobi, res.report));
  }
  Cache c = load_cache(path);
  if (o.n && c.n_target != *o.n)
    throw CliError(kInconsistent, path + ": cache has n_target=" + std::to_string(c.n_target) +
                                      ", requested " + std::to_string(*o.n));
  if (o.eps && c.eps != *o.eps)
    throw CliError(kInconsistent, path + ": cache has eps=" + format_double(c.eps) + ", requested " +
                                      format_double(*o.eps));
  if (need > c.n_target)
    throw CliError(kMissing, "order " + std::to_string(need) + " exceeds the converged rows of " + path +
                                 "; build a cache with --n " + std::to_string(need));
  return c;
}

void add_cache_provenance(Report& r, const Cache& c) {
  r.provenance.emplace_back("version", kBuilderVersion);
  r.provenance.emplace_back("cache", fs::path(c.path).filename().string());
  r.provenance.emplace_back("cache_fnv1a", c.file_hash);
  r.provenance.emplace_back("n_target", std::to_string(c.n_target));
  r.provenance.emplace_back("eps", format_double(c.eps));
  r.provenance.emplace_back("converged", c.meta.count("converged") ? c.meta.at("converged") : "?");
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<Index> orders_or_powers(const Options& o, Index lo, Index cap) {
  if (!o.j.empty()) return o.j;
  std::vector<Index> js;
  const Index top = o.n.value_or(cap);
  for (Index j = lo; j <= top; j *= 2) js.push_back(j);
  return js;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_jacobi(const Options& o) {
  const Index n = o.n.value_or(64);
  const double eps = o.eps.value_or(default_eps(n));
  const std::string path = cache_path(o, n, eps);
  check_writable(o.out);
  prepare_cache_location(o, path);
  const FixpointConfig cfg = fixpoint_config(n, eps, o.iters);

  Report r;
  r.command = "jacobi";
  r.provenance.emplace_back("version", kBuilderVersion);
  r.provenance.emplace_back("cache", fs::path(path).filename().string());
  r.provenance.emplace_back("n_target", std::to_string(n));
  r.provenance.emplace_back("eps", format_double(eps));
  r.columns = {"iteration", "N_eps", "total_delta"};

  if (fs::exists(path)) {
    // A cache with matching parameters is validated by one more application
    // of T instead of being rebuilt.
    const Cache c = load_cache(path);
    if (c.n_target != n || c.eps != eps)
      throw CliError(kInconsistent, path + ": existing cache was built with other parameters");
    const Jacobi next = t_map(c.jacobi, cfg);
    const Index rank = converged_rank(c.jacobi, next, eps, n);
    double total = 0.0;
    for (Index i = 1; i <= n; ++i) total += std::abs(next.a(i) - c.jacobi.a(i));
    r.provenance.emplace_back("cache_fnv1a", c.file_hash);
    r.summary["reused_cache"] = true;
    r.summary["converged"] = rank >= n;
    r.rows.push_back({0LL, static_cast<long long>(rank), total});
    if (rank >= n) {
      emit(o, r);
      return kOk;
    }
    r.rows.clear();
    r.summary.clear();
  }

  const FixpointResult res = fixpoint_solve(cfg);
  const JacobiMetadata meta = cache_metadata(cfg, res.jacobi, res.report);
  try {
    save_jacobi(path, res.jacobi, meta);
  } catch (const std::runtime_error& e) {
    throw CliError(kIo, e.what());
  }
  r.provenance.emplace_back("cache_fnv1a", fnv1a_hex(read_file(path)));
  r.summary["reused_cache"] = false;
  r.summary["converged"] = res.report.converged;
  r.summary["iterations"] = res.report.iterations;
  r.summary["a_1"] = res.jacobi.a(1);
  for (std::size_t it = 0; it < res.report.converged_rank.size(); ++it)
    r.rows.push_back({static_cast<long long>(it + 1), static_cast<long long>(res.report.converged_rank[it]),
                      res.report.total_delta[it]});
  emit(o, r);
  return res.report.converged ? kOk : kPartial;
}

// "p/q", an integer or a decimal such as 0.3 or 2.5e-3, as an exact rational.
Rational parse_rational(const std::string& text) {
  static const std::regex frac(R"(^\s*([+-]?\d+)\s*/\s*(\d+)\s*$)");
  static const std::regex dec(R"(^\s*([+-]?)(\d*)(?:\.(\d*))?(?:[eE]([+-]?\d+))?\s*$)");
  std::smatch m;
  if (std::regex_match(text, m, frac)) {
    const BigInt den(m[2].str());
    if (den == 0) throw CliError(kIo, "zero denominator in " + text);
    return Rational(BigInt(m[1].str()), den);
  }
  if (std::regex_match(text, m, dec) && (m[2].length() + m[3].length()) > 0) {
    const BigInt digits(m[2].str() + m[3].str());
    long exp10 = -static_cast<long>(m[3].length());
    if (m[4].matched) exp10 += std::stol(m[4].str());
    if (std::abs(exp10) > 4000) throw CliError(kIo, "exponent out of range in " + text);
    Rational v(digits);
    const BigInt p = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::abs(exp10)));
    if (exp10 >= 0) v *= p;
    else v /= p;
    return m[1].str() == "-" ? Rational(-v) : v;
  }
  throw CliError(kIo, "not a number: " + text);
}

std::string rational_text(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

int cmd_q(const Options& o) {
  Report r;
  r.command = "q";
  r.provenance.emplace_back("version", kBuilderVersion);
  check_writable(o.out);
  if (o.args.empty()) {
    const int n = static_cast<int>(o.n.value_or(4));
    r.provenance.emplace_back("graph_level", std::to_string(n));
    r.columns = {"x", "Q", "x_exact", "Q_exact"};
    for (const auto& [x, y] : q_graph_approx(n))
      r.rows.push_back({to_double(x), to_double(y), rational_text(x), rational_text(y)});
  } else {
    r.columns = {"x", "Q", "Q_exact"};
    for (const std::string& a : o.args) {
      const Rational x = parse_rational(a);
      if (x < 0 || x > 1) throw CliError(kIo, "argument outside [0,1]: " + a);
      std::string exact = "-";
      double value;
      try {
        const Rational qx = minkowski_q_exact(x);
        if (boost::multiprecision::msb(boost::multiprecision::denominator(qx)) <= 256) exact = rational_text(qx);
        value = to_double(qx);
      } catch (const ResourceError&) {
        value = minkowski_q(to_double(x));
      }
      r.rows.push_back({a, value, exact});
    }
  }
  emit(o, r);
  return kOk;
}

int cmd_zeros(const Options& o) {
  const Index j = o.j.empty() ? 64 : o.j.front();
  check_writable(o.out);
  const Cache c = obtain_cache(o, j);
  const ZeroComparisonReport z = zero_comparison(c.jacobi, j);
  Report r;
  r.command = "zeros";
  add_cache_provenance(r, c);
  r.provenance.emplace_back("j", std::to_string(j));
  r.summary["U"] = z.U;
  r.summary["V"] = z.V;
  r.summary["discrepancy"] = discrepancy(z.psi);
  r.columns = {"l", "theta", "zeta", "phi", "psi"};
  for (Index l = 0; l < j; ++l)
    r.rows.push_back({static_cast<long long>(l + 1), z.theta(l), z.zeta(l), z.phi(l), z.psi(l)});
  emit(o, r);
  return kOk;
}

bool discrepancy_selfcheck(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index j = 1 + static_cast<Index>(rng() % 200);
    VectorX<double> psi(j);
    for (Index l = 0; l < j; ++l) psi(l) = u(rng);
    std::sort(psi.data(), psi.data() + j);
    if (discrepancy(psi) != discrepancy_bruteforce(psi)) return false;
  }
  return true;
}

int cmd_discrepancy(const Options& o) {
  const std::vector<Index> js = orders_or_powers(o, 16, 64);
  check_writable(o.out);
  const Cache c = obtain_cache(o, *std::max_element(js.begin(), js.end()));
  Report r;
  r.command = "discrepancy";
  add_cache_provenance(r, c);
  r.provenance.emplace_back("j", join(js));
  r.provenance.emplace_back("seed", std::to_string(o.seed));
  r.columns = {"j", "D", "inv_j"};
  std::vector<double> xs, ds;
  bool lower_ok = true, decreasing = true;
  for (Index j : js) {
    const double d = discrepancy(normalized_angles(tridiagonal_eigenvalues(c.jacobi, j)));
    lower_ok = lower_ok && d >= 1.0 / static_cast<double>(j) - 1e-12;
    if (!ds.empty() && j > static_cast<Index>(xs.back())) decreasing = decreasing && d < ds.back();
    xs.push_back(static_cast<double>(j));
    ds.push_back(d);
    r.rows.push_back({static_cast<long long>(j), d, 1.0 / static_cast<double>(j)});
  }
  if (js.size() >= 2) {
    const PowerLawFit f = power_law_fit(xs, ds);
    r.summary["A"] = f.A;
    r.summary["B"] = f.B;
    r.summary["fit_residual"] = f.residual;
  }
  r.summary["lower_bound_1_over_j"] = lower_ok;
  r.summary["decreasing"] = decreasing;
  r.summary["fast_equals_bruteforce"] = discrepancy_selfcheck(o.seed);
  emit(o, r);
  return kOk;
}

struct Grid {
  std::vector<double> xs;
};

Grid parse_grid(const std::string& spec) {
  static const std::regex g(R"(^([^:]+):([^:]+):([^:]+)$)");
  std::smatch m;
  if (!std::regex_match(spec, m, g)) throw CliError(kIo, "grid must be start:stop:step, got " + spec);
  double a, b, h;
  try {
    a = std::stod(m[1].str());
    b = std::stod(m[2].str());
    h = std::stod(m[3].str());
  } catch (const std::exception&) {
    throw CliError(kIo, "unreadable grid " + spec);
  }
  if (!(h > 0.0)) throw CliError(kIo, "grid step must be positive");
  if (!(b >= a)) throw CliError(kIo, "grid stop must not precede start");
  const double count = std::floor((b - a) / h + 1e-9);
  if (count > 1e7) throw CliError(kIo, "grid has too many points");
  Grid out;
  for (long i = 0; i <= static_cast<long>(count); ++i) out.xs.push_back(a + static_cast<double>(i) * h);
  return out;
}

int cmd_christoffel(const Options& o) {
  const Index j = o.j.empty() ? 64 : o.j.front();
  const Grid grid = parse_grid(o.grid.empty() ? "0:1:0.001" : o.grid);
  check_writable(o.out);
  const Cache c = obtain_cache(o, j);
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  const std::vector<double> ll = log_christoffel_batch(c.jacobi, grid.xs, j, threads);
  Report r;
  r.command = "christoffel";
  add_cache_provenance(r, c);
  r.provenance.emplace_back("j", std::to_string(j));
  r.provenance.emplace_back("grid", o.grid.empty() ? "0:1:0.001" : o.grid);
  r.columns = {"x", "log10_inv_lambda"};
  if (o.q) {
    r.provenance.emplace_back("q", std::to_string(*o.q));
    r.columns.push_back("log10_inv_lambda_model");
  }
  const double ln10 = std::log(10.0);
  for (std::size_t i = 0; i < grid.xs.size(); ++i) {
    std::vector<Cell> row{grid.xs[i], -ll[i] / ln10};
    if (o.q) {
      const double y = grid.xs[i] - 1.0 / *o.q;
      double model = std::nan("");
      if (y > 0.0 && y < 0.5) model = -lambda_asymptotic(*o.q, y, j).total / ln10;
      row.push_back(model);
    }
    r.rows.push_back(std::move(row));
  }
  emit(o, r);
  return kOk;
}

int cmd_hausdorff(const Options& o) {
  const Index jmax = o.j.empty() ? 8 : o.j.front();
  if (jmax < 2) throw CliError(kIo, "maximal order must be at least 2");
  check_writable(o.out);
  const Cache c = obtain_cache(o, jmax);
  Report r;
  r.command = "hausdorff";
  add_cache_provenance(r, c);
  r.provenance.emplace_back("max_order", std::to_string(jmax));
  r.columns = {"j", "dim_upper", "dim_lower", "gap"};
  bool nested = true;
  double prev_lo = -INFINITY, prev_hi = INFINITY;
  for (Index j = 2; j <= jmax; ++j) {
    const HausdorffBounds hb = hausdorff_bounds(c.jacobi, j);
    nested = nested && hb.dim_lower >= prev_lo - 1e-15 && hb.dim_upper <= prev_hi + 1e-15;
    prev_lo = hb.dim_lower;
    prev_hi = hb.dim_upper;
    r.rows.push_back({static_cast<long long>(j), hb.dim_upper, hb.dim_lower, hb.gap});
  }
  r.summary["dim_lower"] = prev_lo;
  r.summary["dim_upper"] = prev_hi;
  r.summary["brackets_nested"] = nested;
  emit(o, r);
  return kOk;
}

int cmd_regularity(const Options& o) {
  const Index jmax = o.j.empty() ? o.n.value_or(64) : o.j.front();
  check_writable(o.out);
  const Cache c = obtain_cache(o, jmax);
  const RegularityReport rep = regularity_report(c.jacobi, jmax);
  Report r;
  r.command = "regularity";
  add_cache_provenance(r, c);
  r.provenance.emplace_back("j_max", std::to_string(jmax));
  r.summary["A"] = rep.fit.A;
  r.summary["B"] = rep.fit.B;
  r.summary["fit_residual"] = rep.fit.residual;
  r.summary["fit_from"] = rep.fit_from;
  r.summary["fit_to"] = rep.fit_to;
  r.summary["delta_positive"] =
      std::all_of(rep.delta.begin(), rep.delta.end(), [](double d) { return d > 0.0; });
  r.columns = {"j", "a", "Gamma", "delta"};
  for (Index j = 1; j <= jmax; ++j)
    r.rows.push_back({static_cast<long long>(j), c.jacobi.a(j), rep.gamma[static_cast<std::size_t>(j - 1)],
                      rep.delta[static_cast<std::size_t>(j - 1)]});
  emit(o, r);
  return kOk;
}

int cmd_nevai(const Options& o) {
  const std::vector<Index> js = orders_or_powers(o, 16, 64);
  check_writable(o.out);
  const Index jmax = *std::max_element(js.begin(), js.end());
  const Cache c = obtain_cache(o, jmax);
  const NevaiDiagnostics d = nevai_diagnostics(c.jacobi, js);
  Report r;
  r.command = "nevai";
  add_cache_provenance(r, c);
  r.provenance.emplace_back("j", join(js));
  r.provenance.emplace_back("table", o.series ? "series" : "orders");
  bool envelope_ok = true, mass_ok = true, hutchinson_decreasing = true;
  for (std::size_t i = 1; i < d.envelope.size(); ++i) envelope_ok = envelope_ok && d.envelope[i] <= d.envelope[i - 1];
  for (std::size_t i = 0; i < d.per_order.size(); ++i) {
    mass_ok = mass_ok && std::abs(d.per_order[i].sigma_mass - 1.0) <= 1e-10;
    if (i > 0) hutchinson_decreasing = hutchinson_decreasing && d.per_order[i].hutchinson < d.per_order[i - 1].hutchinson;
  }
  r.summary["envelope_nonincreasing"] = envelope_ok;
  r.summary["sigma_mass_one"] = mass_ok;
  r.summary["hutchinson_decreasing"] = hutchinson_decreasing;
  if (o.series) {
    r.columns = {"x", "a", "u", "Sigma1", "Sigma2", "Sigma3"};
    for (std::size_t i = 0; i < d.envelope.size(); ++i)
      r.rows.push_back({static_cast<long long>(i + 1), c.jacobi.a(static_cast<Index>(i + 1)), d.envelope[i],
                        d.sigma1[i], d.sigma2[i], d.sigma3[i]});
  } else {
    r.columns = {"j", "s_max", "Sigma0", "hutchinson", "sigma_mass"};
    for (const auto& p : d.per_order)
      r.rows.push_back({static_cast<long long>(p.j), p.s_max, p.sigma0, p.hutchinson, p.sigma_mass});
  }
  emit(o, r);
  return kOk;
}

int cmd_asymptotics(const Options& o) {
  const Index j = o.j.empty() ? 64 : o.j.front();
  const int q = o.q.value_or(2);
  std::vector<int> ks = o.k;
  if (ks.empty()) ks = {0, 1, 2, 3, 4};
  if (q < 2) throw CliError(kIo, "q must be at least 2");
  check_writable(o.out);
  const Cache c = obtain_cache(o, j);
  const auto rows = cusp_validation(c.jacobi, j, q, ks);
  Report r;
  r.command = "asymptotics";
  add_cache_provenance(r, c);
  r.provenance.emplace_back("j", std::to_string(j));
  r.provenance.emplace_back("q", std::to_string(q));
  r.provenance.emplace_back("slack", format_double(kCuspSlack));
  r.columns = {"q", "k", "left", "right", "y", "count", "observed", "observed_mean_log", "bound_lower",
               "bound_upper", "neg_lambda", "relative_deviation", "within_band"};
  bool band = true, close = true;
  for (const auto& row : rows) {
    band = band && row.within_band;
    close = close && row.relative_deviation < 0.10;
    r.rows.push_back({static_cast<long long>(row.q), static_cast<long long>(row.k), row.left, row.right, row.y,
                      static_cast<long long>(row.count), row.observed, row.observed_mean_log, row.bound_lower,
                      row.bound_upper, row.neg_lambda, row.relative_deviation,
                      static_cast<long long>(row.within_band)});
  }
  r.summary["all_within_band"] = band;
  r.summary["relative_deviation_below_0.1"] = close;
  emit(o, r);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthogonal polynomials of the Minkowski question-mark measure"};
  app.require_subcommand(1);
  Options o;
  auto eps_opt = std::make_shared<double>();

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Sub subs[] = {
      {"jacobi", "compute (or validate) the Jacobi cache of the fixed point", cmd_jacobi},
      {"q", "question-mark function at points (p/q or decimal), or its graph polyline", cmd_q},
      {"zeros", "zeros of p_j against the Chebyshev zeros", cmd_zeros},
      {"discrepancy", "discrepancy of the normalized zero angles", cmd_discrepancy},
      {"christoffel", "log10 of 1/lambda_j on a grid", cmd_christoffel},
      {"hausdorff", "bounds on the Hausdorff dimension of the measure", cmd_hausdorff},
      {"regularity", "root asymptotics of the off-diagonal coefficients", cmd_regularity},
      {"nevai", "sigma_j against the equilibrium law and the Nevai series", cmd_nevai},
      {"asymptotics", "Gauss weights near Farey points against the asymptotic model", cmd_asymptotics},
  };

  Index n_value = 0;
  int q_value = 0;
  double eps_value = 0.0;
  std::vector<CLI::App*> apps;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--n", n_value, "target size of the Jacobi matrix");
    sub->add_option("--j,--max-order", o.j, "polynomial order(s)");
    sub->add_option("--q", q_value, "Farey denominator");
    sub->add_option("--k", o.k, "Farey interval indices");
    sub->add_option("--eps", eps_value, "convergence tolerance of the fixed point");
    sub->add_option("--iters", o.iters, "iteration limit (0: default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--grid", o.grid, "start:stop:step");
    sub->add_option("--cache", o.cache, "Jacobi cache file");
    sub->add_option("--out", o.out, "output file (default: stdout)");
    sub->add_option("--format", o.format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));
    sub->add_flag("--compute", o.compute, "build a missing cache instead of failing");
    sub->add_option("--seed", o.seed, "seed of the randomized self-checks");
    if (std::string(s.name) == "nevai") sub->add_flag("--series", o.series, "per-index series table");
    if (std::string(s.name) == "q") sub->add_option("points", o.args, "points in [0,1]");
    apps.push_back(sub);
  }
  (void)eps_opt;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kIo;
  }

  for (std::size_t i = 0; i < apps.size(); ++i) {
    if (!apps[i]->parsed()) continue;
    if (apps[i]->count("--n")) o.n = n_value;
    if (apps[i]->count("--q")) o.q = q_value;
    if (apps[i]->count("--eps")) o.eps = eps_value;
    o.command = subs[i].name;
    try {
      if (o.n && *o.n < 1) throw CliError(kIo, "--n must be positive");
      for (Index j : o.j)
        if (j < 1) throw CliError(kIo, "--j must be positive");
      if (o.eps && !(*o.eps > 0.0)) throw CliError(kIo, "--eps must be positive");
      return subs[i].run(o);
    } catch (const CliError& e) {
      std::cerr << "mink " << o.command << ": " << e.what() << '\n';
      return e.code;
    } catch (const std::exception& e) {
      std::cerr << "mink " << o.command << ": " << e.what() << '\n';
      return kIo;
    }
  }
  return kIo;
}
