#include "mink/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mink/quadrature.hpp"
#include "numeric.hpp"

namespace mink {

namespace {

constexpr double kLog2 = std::numbers::ln2;
constexpr double kPi = std::numbers::pi;

}  // namespace

PowerLawFit power_law_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DataError("power_law_fit: size mismatch");
  if (xs.size() < 2) throw DataError("power_law_fit: need at least two points");
  const std::size_t n = xs.size();
  std::vector<double> X(n), Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DataError("power_law_fit: data must be positive");
    X[i] = std::log(xs[i]);
    Y[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("power_law_fit: abscissae are all equal");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = Y[i] - (intercept + slope * X[i]);
    rss += r * r;
  }
  return {std::exp(intercept), -slope, std::sqrt(rss / static_cast<double>(n))};
}

// ---------------------------------------------------------------------------

RegularityReport regularity_report(const Jacobi& J, Index j_max) {
  if (j_max < 1 || j_max > J.size() - 1) throw DomainError("regularity_report: j_max out of range");
  RegularityReport r;
  r.gamma.resize(static_cast<std::size_t>(j_max));
  r.delta.resize(static_cast<std::size_t>(j_max));
  r.sigma3.resize(static_cast<std::size_t>(j_max));
  detail::CompensatedSum sum_log;
  for (Index j = 1; j <= j_max; ++j) {
    if (!(J.a(j) > 0.0)) throw DataError("regularity_report: non-positive a_j");
    sum_log.add(std::log(J.a(j)));
    const double mean = sum_log.value() / static_cast<double>(j);
    const std::size_t i = static_cast<std::size_t>(j - 1);
    r.gamma[i] = std::exp(mean);
    r.delta[i] = std::log(0.25) - mean;
    r.sigma3[i] = static_cast<double>(j) * r.delta[i];
  }
  r.fit_from = std::max<Index>(1, j_max / 10);
  r.fit_to = j_max;
  std::vector<double> xs, ys;
  bool positive = true;
  for (Index j = r.fit_from; j <= r.fit_to; ++j) {
    const double d = r.delta[static_cast<std::size_t>(j - 1)];
    positive = positive && d > 0.0;
    xs.push_back(static_cast<double>(j));
    ys.push_back(d);
  }
  if (positive && xs.size() >= 2) {
    r.fit = power_law_fit(xs, ys);
  } else {
    r.fit = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN()};
  }
  return r;
}

// ---------------------------------------------------------------------------

VectorX<double> chebyshev_zeros(Index j) {
  if (j < 1) throw DomainError("chebyshev_zeros: j must be >= 1");
  VectorX<double> t(j);
  for (Index l = 1; l <= j; ++l) {
    // (1 - cos a)/2 = sin^2(a/2), accurate near 0.
    const double s = std::sin(kPi * static_cast<double>(2 * l - 1) / static_cast<double>(4 * j));
    t(l - 1) = s * s;
  }
  return t;
}

VectorX<double> normalized_angles(const VectorX<double>& zeros) {
  VectorX<double> psi(zeros.size());
  for (Index i = 0; i < zeros.size(); ++i) {
    const double z = std::clamp(zeros(i), 0.0, 1.0);
    // arccos(1 - 2z) = 2 arcsin(sqrt z), better conditioned near z = 0.
    psi(i) = 2.0 * std::asin(std::sqrt(z)) / kPi;
  }
  return psi;
}

ZeroComparisonReport zero_comparison(const Jacobi& J, Index j) {
  ZeroComparisonReport r;
  r.order = j;
  r.zeta = tridiagonal_eigenvalues(J, j);
  r.theta = chebyshev_zeros(j);
  r.psi = normalized_angles(r.zeta);
  r.phi.resize(j);
  for (Index l = 1; l <= j; ++l) r.phi(l - 1) = static_cast<double>(2 * l - 1) / static_cast<double>(2 * j);
  r.U = (r.theta - r.zeta).cwiseAbs().maxCoeff();
  r.V = (r.phi - r.psi).cwiseAbs().maxCoeff();
  return r;
}

namespace {

void check_angles(const VectorX<double>& psi) {
  if (psi.size() < 1) throw DataError("discrepancy: empty input");
  for (Index i = 0; i < psi.size(); ++i) {
    if (!(psi(i) >= 0.0 && psi(i) <= 1.0)) throw DataError("discrepancy: values must lie in [0,1]");
    if (i > 0 && psi(i) < psi(i - 1)) throw DataError("discrepancy: values must be non-decreasing");
  }
}

}  // namespace

double discrepancy(const VectorX<double>& psi) {
  check_angles(psi);
  const Index j = psi.size();
  const double jd = static_cast<double>(j);
  double d1 = 0.0, d2 = 0.0;
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (Index l = 1; l <= j; ++l) {
    const double p = psi(l - 1);
    for (int i = 0; i <= 1; ++i) {
      d1 = std::max(d1, std::abs(p - static_cast<double>(l - i) / jd));
      d2 = std::max(d2, std::abs(1.0 - p - static_cast<double>(j - l + i) / jd));
    }
    const double d = p - static_cast<double>(l) / jd;
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  // max over l,k and i = +-1 of |d_l - d_k - i/j|.
  const double d3 = (dmax - dmin) + 1.0 / jd;
  return std::max({d1, d2, d3});
}

double discrepancy_bruteforce(const VectorX<double>& psi) {
  check_angles(psi);
  const Index j = psi.size();
  const double jd = static_cast<double>(j);
  double d = 0.0;
  for (Index l = 1; l <= j; ++l) {
    const double p = psi(l - 1);
    for (int i = 0; i <= 1; ++i) {
      d = std::max(d, std::abs(p - static_cast<double>(l - i) / jd));
      d = std::max(d, std::abs(1.0 - p - static_cast<double>(j - l + i) / jd));
    }
    // Same rounded offsets psi_l - l/j as the O(j) reduction, so the two
    // agree bit for bit.
    const double dl = p - static_cast<double>(l) / jd;
    for (Index k = 1; k <= j; ++k) {
      const double dk = psi(k - 1) - static_cast<double>(k) / jd;
      for (int i = -1; i <= 1; i += 2) d = std::max(d, std::abs((dl - dk) + static_cast<double>(i) / jd));
    }
  }
  return d;
}

// ---------------------------------------------------------------------------

IntervalWeightAverage avg_log_weight(const GaussRule<double>& rule, double lo, double hi) {
  IntervalWeightAverage r;
  std::vector<double> logs;
  for (Index l = 0; l < rule.nodes.size(); ++l) {
    if (rule.nodes(l) >= lo && rule.nodes(l) <= hi) logs.push_back(rule.log_weights(l));
  }
  r.count = static_cast<Index>(logs.size());
  if (logs.empty()) return r;
  detail::CompensatedSum s;
  for (double v : logs) s.add(v);
  r.mean_log_weight = s.value() / static_cast<double>(logs.size());
  r.log_total_weight = log_sum_exp(logs);
  r.log_mean_weight = r.log_total_weight - std::log(static_cast<double>(logs.size()));
  return r;
}

AsymptoticDecomposition lambda_asymptotic(int q, double y, Index j) {
  if (q < 2) throw DomainError("lambda_asymptotic: q must be >= 2");
  if (!(y > 0.0 && y < 0.5)) throw DomainError("lambda_asymptotic: y must lie in (0, 1/2)");
  if (j < 1) throw DomainError("lambda_asymptotic: j must be >= 1");
  const double qd = q;
  AsymptoticDecomposition d;
  d.q = q;
  d.y = y;
  d.j = j;
  const double x = 1.0 / qd + y;
  d.lambda1 = 0.5 * std::log(x - x * x) + kLog2;
  d.lambda2 = (-qd + 2.0 - 1.0 / qd) * kLog2 + std::log(kLog2);
  d.lambda3 = -kLog2 / (qd * qd * y) - 2.0 * std::log(qd * y);
  d.lambda4 = -std::log(static_cast<double>(j));
  d.total = d.lambda1 + d.lambda2 + d.lambda3 + d.lambda4;

  const double q2y = qd * qd * y;
  auto f = [](double t) { return t * (1.0 - t); };
  auto H = [&](double h) {
    const double v = f(h / qd);
    return v > 0.0 ? std::log(v) : std::numeric_limits<double>::quiet_NaN();
  };
  d.h_minus = (1.0 + qd * y) / (1.0 + q2y);
  d.h_plus = q2y < 1.0 ? (1.0 + qd * y) / (1.0 - q2y) : std::numeric_limits<double>::infinity();
  d.H_minus = H(d.h_minus);
  d.H_plus = std::isfinite(d.h_plus) ? H(d.h_plus) : std::numeric_limits<double>::quiet_NaN();

  const double t_lo = d.h_minus / qd;
  const double t_hi = d.h_plus / qd;
  const double common = std::log(static_cast<double>(j)) + 2.0 * std::log(qd * y);
  const double f_max = (t_lo <= 0.5 && t_hi >= 0.5) ? 0.25 : std::max(f(t_lo), std::isfinite(t_hi) ? f(t_hi) : 0.0);
  d.bound_lower = kLog2 * (1.0 / q2y + 1.0 / qd + qd - 3.0) + common - 0.5 * std::log(f_max) -
                  std::log1p(q2y);
  d.upper_available = std::isfinite(t_hi) && t_hi < 1.0;
  if (d.upper_available) {
    const double f_min = std::min(f(t_lo), f(t_hi));
    d.bound_upper = kLog2 * (1.0 / q2y + 1.0 / qd + qd - 2.0) + common - 0.5 * std::log(f_min) -
                    std::log1p(-q2y);
  } else {
    d.bound_upper = std::numeric_limits<double>::infinity();
  }
  return d;
}

std::vector<CuspRow> cusp_validation(const GaussRule<double>& rule, int q, const std::vector<int>& ks,
                                     double slack) {
  std::vector<CuspRow> rows;
  for (int k : ks) {
    const FareyInterval fi = farey_interval(q, k);
    CuspRow r;
    r.q = q;
    r.k = k;
    r.left = to_double(fi.left);
    r.right = to_double(fi.right);
    const double l_k = to_double(fi.length_l);
    const double l_k1 = to_double(farey_interval(q, k + 1).length_l);
    r.y = std::sqrt(l_k * l_k1);
    const IntervalWeightAverage avg = avg_log_weight(rule, r.left, r.right);
    r.count = avg.count;
    const AsymptoticDecomposition asym = lambda_asymptotic(q, r.y, rule.order);
    r.bound_lower = asym.bound_lower;
    r.bound_upper = asym.bound_upper;
    r.upper_available = asym.upper_available;
    r.neg_lambda = -asym.total;
    if (avg.count > 0) {
      r.observed = -avg.log_mean_weight;
      r.observed_mean_log = -avg.mean_log_weight;
      r.within_band = r.observed >= r.bound_lower - slack &&
                      (!r.upper_available || r.observed <= r.bound_upper + slack);
      r.relative_deviation = std::abs((r.neg_lambda - r.observed) / r.observed);
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<CuspRow> cusp_validation(const Jacobi& J, Index j, int q, const std::vector<int>& ks,
                                     double slack) {
  return cusp_validation(gauss_rule(J, j), q, ks, slack);
}

// ---------------------------------------------------------------------------

DiscreteMeasure sigma_weights(const Jacobi& J, Index j) {
  if (j < 2) throw DomainError("sigma_weights: j must be >= 2");
  const VectorX<double> nodes = tridiagonal_eigenvalues(J, j);
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(j));
  for (Index l = 0; l < j; ++l) {
    const double s = kernel_sweep(J, nodes(l), j).sigma_ratio;
    atoms.push_back({nodes(l), std::log(std::max(s, std::numeric_limits<double>::denorm_min()))});
  }
  return DiscreteMeasure(std::move(atoms));
}

std::vector<double> chebyshev_sigma(Index j) {
  if (j < 2) throw DomainError("chebyshev_sigma: j must be >= 2");
  std::vector<double> s(static_cast<std::size_t>(j));
  for (Index l = 1; l <= j; ++l) {
    const double v = std::sin(kPi * static_cast<double>(2 * l - 1) / static_cast<double>(2 * j));
    s[static_cast<std::size_t>(l - 1)] = 2.0 * v * v / static_cast<double>(j);
  }
  return s;
}

double sigma_e_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double u = 2.0 * x - 1.0;
  return (2.0 / kPi) * u * std::sqrt(x - x * x) + std::asin(u) / kPi + 0.5;
}

double sigma_e_cdf_integral(double x) {
  x = std::clamp(x, 0.0, 1.0);
  const double u = 2.0 * x - 1.0;
  const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
  return (-(r * r * r) / 3.0 + u * std::asin(u) + r) / (2.0 * kPi) + x / 2.0 - 0.25;
}

double cdf_l1_distance(const DiscreteMeasure& m, const std::function<double(double)>& F,
                       const std::function<double(double)>& G) {
  if (m.empty()) throw DomainError("cdf_l1_distance: empty measure");
  const double lse = m.total_mass_log();
  auto segment = [&](double u, double v, double c) {
    if (!(v > u)) return 0.0;
    const double Fu = F(u), Fv = F(v);
    if (c <= Fu) return (G(v) - G(u)) - c * (v - u);
    if (c >= Fv) return c * (v - u) - (G(v) - G(u));
    double lo = u, hi = v;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (F(mid) < c ? lo : hi) = mid;
    }
    const double xs = 0.5 * (lo + hi);
    return c * (xs - u) - (G(xs) - G(u)) + (G(v) - G(xs)) - c * (v - xs);
  };
  detail::CompensatedSum total, cum;
  double u = 0.0;
  for (const Atom& a : m.atoms()) {
    if (a.position < 0.0 || a.position > 1.0) throw DomainError("cdf_l1_distance: atom outside [0,1]");
    total.add(segment(u, a.position, std::min(1.0, cum.value())));
    cum.add(std::exp(a.log_weight - lse));
    u = a.position;
  }
  total.add(segment(u, 1.0, std::min(1.0, cum.value())));
  return total.value();
}

double hutchinson_distance_to_sigmaE(const DiscreteMeasure& m) {
  return cdf_l1_distance(m, sigma_e_cdf, sigma_e_cdf_integral);
}

// ---------------------------------------------------------------------------

NevaiDiagnostics nevai_diagnostics(const Jacobi& J, const std::vector<Index>& j_list, Index j_max) {
  NevaiDiagnostics nd;
  if (j_max <= 0) {
    for (Index j : j_list) j_max = std::max(j_max, j);
  }
  if (j_max < 1 || j_max > J.size() - 1) throw DomainError("nevai_diagnostics: j_max out of range");

  for (Index j : j_list) {
    if (j < 2 || j > J.size()) throw DomainError("nevai_diagnostics: order out of range");
    const DiscreteMeasure sig = sigma_weights(J, j);
    const std::vector<double> ref = chebyshev_sigma(j);
    NevaiPerOrder row;
    row.j = j;
    detail::CompensatedSum s0, mass;
    for (Index l = 0; l < j; ++l) {
      const double s = std::exp(sig.atoms()[static_cast<std::size_t>(l)].log_weight);
      const double diff = std::abs(ref[static_cast<std::size_t>(l)] - s);
      row.s_max = std::max(row.s_max, diff);
      s0.add(diff);
      mass.add(s);
    }
    row.sigma0 = s0.value();
    row.sigma_mass = mass.value();
    row.hutchinson = hutchinson_distance_to_sigmaE(sig);
    nd.per_order.push_back(row);
  }

  const std::size_t n = static_cast<std::size_t>(j_max);
  nd.envelope.assign(n, 0.0);
  double run = 0.0;
  for (Index x = j_max; x >= 1; --x) {
    run = std::max(run, std::abs(J.a(x) - 0.25));
    nd.envelope[static_cast<std::size_t>(x - 1)] = run;
  }
  nd.sigma1.resize(n);
  nd.sigma2.resize(n);
  nd.sigma3.resize(n);
  detail::CompensatedSum s1, s2, s3;
  for (Index l = 1; l <= j_max; ++l) {
    if (!(J.a(l) > 0.0)) throw DataError("nevai_diagnostics: non-positive a_j");
    if (l >= 2) s1.add(std::abs(J.a(l) - J.a(l - 1)));
    s2.add(std::abs(1.0 - 16.0 * J.a(l) * J.a(l)));
    s3.add(-(std::log(J.a(l)) + std::log(4.0)));
    const std::size_t i = static_cast<std::size_t>(l - 1);
    nd.sigma1[i] = s1.value();
    nd.sigma2[i] = s2.value();
    nd.sigma3[i] = s3.value();
  }
  return nd;
}

}  // namespace mink
