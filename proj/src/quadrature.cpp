#include "mink/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "numeric.hpp"

namespace mink {

KernelSweep kernel_sweep(const Jacobi& J, double x, Index j, double threshold) {
  if (j < 1 || j > J.size()) throw DomainError("kernel_sweep: order out of range");
  if (!(threshold > 1.0) || threshold > 1e250) throw DomainError("kernel_sweep: bad threshold");
  RenormalizedPolyState s;
  s.kernel_partial = 1.0;  // p_0 = 1 for a probability measure
  for (Index l = 0; l + 1 < j; ++l) {
    const double next = ((x - J.b(l)) * s.p_curr - J.a(l) * s.p_prev) / J.a(l + 1);
    s.p_prev = s.p_curr;
    s.p_curr = next;
    s.kernel_partial += next * next;
    if (s.kernel_partial > threshold) {
      const double V = std::max(std::abs(s.p_curr), std::abs(s.p_prev));
      // Dividing by V < 1 would only push the kernel further up.
      if (V > 1.0) {
        s.p_curr /= V;
        s.p_prev /= V;
        s.kernel_partial /= V * V;
        s.log_scale += std::log(V);
        ++s.renormalizations;
      }
    }
  }
  KernelSweep out;
  out.log_kernel = std::log(s.kernel_partial) + 2.0 * s.log_scale;
  out.log_lambda = -out.log_kernel;
  out.sigma_ratio = s.p_curr * s.p_curr / s.kernel_partial;
  out.renormalizations = s.renormalizations;
  return out;
}

double log_christoffel(const Jacobi& J, double x, Index j, double threshold) {
  return kernel_sweep(J, x, j, threshold).log_lambda;
}

std::vector<double> log_christoffel_batch(const Jacobi& J, const std::vector<double>& xs, Index j,
                                          unsigned threads, double threshold) {
  std::vector<double> out(xs.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = log_christoffel(J, xs[i], j, threshold);
  };
  threads = std::max(1u, threads);
  if (threads == 1 || xs.size() < 2 * threads) {
    work(0, xs.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (xs.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(xs.size(), lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(work, lo, hi);
  }
  for (auto& th : pool) th.join();
  return out;
}

GaussRule<double> gauss_rule(const Jacobi& J, Index j) {
  GaussRule<double> rule;
  rule.order = j;
  rule.nodes = tridiagonal_eigenvalues(J, j);
  rule.log_weights.resize(j);
  for (Index l = 0; l < j; ++l) rule.log_weights(l) = log_christoffel(J, rule.nodes(l), j);
  return rule;
}

double twisted_log_weight(const Jacobi& J, double z, Index j) {
  if (j < 1 || j > J.size()) throw DomainError("twisted_log_weight: order out of range");
  if (j == 1) return 0.0;
  // J_j - z I = L D L^T from the top (pivots d) and U R U^T from the bottom
  // (pivots r). A vanishing pivot is replaced by a tiny multiple of the local
  // matrix scale.
  auto guard = [&](double v, Index i) {
    if (v != 0.0) return v;
    const double scale = std::abs(J.b(i) - z) + J.a(i) + (i + 1 < j ? J.a(i + 1) : 0.0);
    return std::numeric_limits<double>::epsilon() * std::max(scale, std::numeric_limits<double>::min());
  };
  std::vector<double> d(static_cast<std::size_t>(j)), r(static_cast<std::size_t>(j));
  d[0] = guard(J.b(0) - z, 0);
  for (Index i = 1; i < j; ++i)
    d[static_cast<std::size_t>(i)] = guard(J.b(i) - z - J.a(i) * J.a(i) / d[static_cast<std::size_t>(i - 1)], i);
  r[static_cast<std::size_t>(j - 1)] = guard(J.b(j - 1) - z, j - 1);
  for (Index i = j - 2; i >= 0; --i)
    r[static_cast<std::size_t>(i)] =
        guard(J.b(i) - z - J.a(i + 1) * J.a(i + 1) / r[static_cast<std::size_t>(i + 1)], i);
  // Twist where gamma_k = d_k + r_k - (b_k - z) is smallest.
  Index k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < j; ++i) {
    const double g = std::abs(d[static_cast<std::size_t>(i)] + r[static_cast<std::size_t>(i)] - (J.b(i) - z));
    if (g < best) {
      best = g;
      k = i;
    }
  }
  // log |v_i / v_0|: forward ratios -d_i / a_{i+1} up to k, backward ratios
  // -a_{i+1} / r_{i+1} after it.
  std::vector<double> logv(static_cast<std::size_t>(j));
  logv[0] = 0.0;
  for (Index i = 0; i + 1 < j; ++i) {
    const double ratio = i < k ? d[static_cast<std::size_t>(i)] / J.a(i + 1)
                               : J.a(i + 1) / r[static_cast<std::size_t>(i + 1)];
    logv[static_cast<std::size_t>(i + 1)] = logv[static_cast<std::size_t>(i)] + std::log(std::abs(ratio));
  }
  for (double& v : logv) v *= 2.0;
  return -log_sum_exp(logv);
}

GaussRule<double> gauss_rule_twisted(const Jacobi& J, Index j) {
  GaussRule<double> rule;
  rule.order = j;
  rule.nodes = tridiagonal_eigenvalues(J, j);
  rule.log_weights.resize(j);
  for (Index l = 0; l < j; ++l) rule.log_weights(l) = twisted_log_weight(J, rule.nodes(l), j);
  return rule;
}

double integrate(const GaussRule<double>& rule, const std::function<double(double)>& f) {
  const Index n = rule.nodes.size();
  std::vector<double> values(static_cast<std::size_t>(n));
  bool positive = true;
  for (Index l = 0; l < n; ++l) {
    const double v = f(rule.nodes(l));
    if (!std::isfinite(v)) throw DomainError("integrate: integrand not finite at a node");
    values[static_cast<std::size_t>(l)] = v;
    positive = positive && v > 0.0;
  }
  detail::CompensatedSum sum;
  if (positive) {
    std::vector<double> terms(values.size());
    double top = -std::numeric_limits<double>::infinity();
    for (Index l = 0; l < n; ++l) {
      terms[static_cast<std::size_t>(l)] = rule.log_weights(l) + std::log(values[static_cast<std::size_t>(l)]);
      top = std::max(top, terms[static_cast<std::size_t>(l)]);
    }
    for (double t : terms) sum.add(std::exp(t - top));
    return std::exp(top) * sum.value();
  }
  for (Index l = 0; l < n; ++l) sum.add(std::exp(rule.log_weights(l)) * values[static_cast<std::size_t>(l)]);
  return sum.value();
}

HausdorffBounds hausdorff_bounds(const Jacobi& J, Index j) {
  if (j < 2) throw DomainError("hausdorff_bounds: order must be at least 2");
  if (J.size() < j + 1) throw DomainError("hausdorff_bounds: need at least j + 1 rows");
  HausdorffBounds hb;
  hb.order = j;

  const GaussRule<double> first = gauss_rule(J, j);
  hb.integral_first = integrate(first, [](double x) { return std::log1p(x); });

  const double m1 = J.b(0);
  const Jacobi rho = jacobi_linear_factor(J.leading(j + 1), 0.0);
  const GaussRule<double> second = gauss_rule(rho, j);
  hb.integral_second = m1 * integrate(second, [](double x) { return std::log1p(x) / x; });

  const double d1 = std::log(2.0) / (2.0 * hb.integral_first);
  const double d2 = std::log(2.0) / (2.0 * hb.integral_second);
  hb.dim_lower = std::min(d1, d2);
  hb.dim_upper = std::max(d1, d2);
  hb.gap = hb.dim_upper - hb.dim_lower;
  return hb;
}

Jacobi jacobi_linear_factor(const Jacobi& J, double c, LinearFactorRoute route) {
  const Index n = J.size();
  if (n < 2) throw DomainError("jacobi_linear_factor: need at least two rows");
  const double scale = std::max(1.0, std::abs(c));

  if (route == LinearFactorRoute::Cholesky) {
    // J - cI = L L^T with L lower bidiagonal: diagonal l_i, subdiagonal m_i.
    VectorX<double> l(n), m(n);
    double pivot = J.b(0) - c;
    // l_{n-1} does not enter the output, so the last pivot may vanish (an
    // atom at c).
    for (Index i = 0; i + 1 < n; ++i) {
      if (!(pivot > 0.0)) throw DomainError("jacobi_linear_factor: shift lies inside the support");
      l(i) = std::sqrt(pivot);
      m(i) = J.a(i + 1) / l(i);
      pivot = J.b(i + 1) - c - m(i) * m(i);
    }
    if (pivot < -1e-13 * scale) throw DomainError("jacobi_linear_factor: shift lies inside the support");
    Jacobi out(n - 1);
    for (Index i = 0; i + 1 < n; ++i) {
      out.b(i) = l(i) * l(i) + m(i) * m(i) + c;
      if (i + 2 < n) out.a(i + 1) = m(i) * l(i + 1);
    }
    return out;
  }

  const GaussRule<double> rule = gauss_rule(J, n);
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double d = rule.nodes(i) - c;
    if (d < -1e-13 * scale) throw DomainError("jacobi_linear_factor: shift lies inside the support");
    if (d <= 0.0) continue;
    atoms.push_back({rule.nodes(i), rule.log_weights(i) + std::log(d)});
  }
  if (static_cast<Index>(atoms.size()) < n - 1)
    throw DomainError("jacobi_linear_factor: shift coincides with a node");
  return jacobi_from_atoms(DiscreteMeasure(std::move(atoms)), n - 1);
}

void write_christoffel_tsv(std::ostream& out, const std::vector<double>& xs,
                           const std::vector<double>& log_lambda,
                           const std::vector<std::string>& header_comments) {
  if (xs.size() != log_lambda.size()) throw DomainError("write_christoffel_tsv: size mismatch");
  for (const auto& line : header_comments) out << "# " << line << '\n';
  out << "# x\tlog10_inv_lambda\n";
  char buf[64];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g\n", xs[i], 0.0 - log_lambda[i] / std::log(10.0));
    out << buf;
  }
}

}  // namespace mink
