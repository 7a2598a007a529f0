#pragma once

// Gauss rules whose weights span hundreds of decades. Weights come from the
// Christoffel function evaluated at the nodes, never from eigenvectors:
//   1/w_l = K_j(z_l, z_l) = sum_{i<j} p_i(z_l)^2,
// with the orthonormal polynomials advanced by a renormalized transfer
// recurrence so that K_j is only ever held as (mantissa, log scale).

#include <functional>
#include <iosfwd>
#include <vector>

#include "mink/jacobi.hpp"

namespace mink {

constexpr double kDefaultRenormThreshold = 1e100;

/// State of the transfer recurrence after some steps. The true values are
/// p = v * exp(log_scale) and K = kernel_partial * exp(2 log_scale).
struct RenormalizedPolyState {
  double p_curr = 1.0;  ///< p_l
  double p_prev = 0.0;  ///< p_{l-1}
  double log_scale = 0.0;
  double kernel_partial = 0.0;
  int renormalizations = 0;
};

struct KernelSweep {
  double log_kernel = 0.0;   ///< log K_j(x,x)
  double log_lambda = 0.0;   ///< -log K_j(x,x)
  double sigma_ratio = 0.0;  ///< p_{j-1}(x)^2 / K_j(x,x)
  int renormalizations = 0;
};

/// Single sweep over p_0..p_{j-1}(x).
KernelSweep kernel_sweep(const Jacobi& J, double x, Index j,
                         double threshold = kDefaultRenormThreshold);

/// log lambda_j(x) = -log K_j(x,x).
double log_christoffel(const Jacobi& J, double x, Index j,
                       double threshold = kDefaultRenormThreshold);

/// log_christoffel over a list of points. Work is split across `threads`
/// workers by contiguous blocks; each value is computed independently, so
/// the result does not depend on the thread count.
std::vector<double> log_christoffel_batch(const Jacobi& J, const std::vector<double>& xs, Index j,
                                          unsigned threads = 1,
                                          double threshold = kDefaultRenormThreshold);

/// Nodes from the QL eigenvalues of the leading j x j block, log-weights
/// from the Christoffel function at each node.
GaussRule<double> gauss_rule(const Jacobi& J, Index j);

/// log w for a node z of J_j from the eigenvector of J_j at z, assembled by
/// a twisted factorization: forward pivots up to the twist index, backward
/// pivots after it. Every component keeps relative accuracy, so this stays
/// valid where the forward sweep is swamped by its growing solution (e.g.
/// discrete measures with gaps between atoms).
double twisted_log_weight(const Jacobi& J, double z, Index j);

/// Gauss rule with weights from twisted_log_weight.
GaussRule<double> gauss_rule_twisted(const Jacobi& J, Index j);

/// sum_l w_l f(z_l). For f > 0 at every node the sum is formed relative to
/// the largest log term; otherwise a plain Neumaier sum. Throws DomainError
/// if f is not finite at a node.
double integrate(const GaussRule<double>& rule, const std::function<double(double)>& f);

struct HausdorffBounds {
  Index order = 0;
  double dim_lower = 0.0;
  double dim_upper = 0.0;
  double gap = 0.0;
  double integral_first = 0.0;   ///< Gauss rule of mu applied to log(1+x)
  double integral_second = 0.0;  ///< Gauss rule of x dmu applied to log(1+x)/x, times m_1
};

/// Bounds on log 2 / (2 int log(1+x) dmu) from the j-point rules of mu and
/// of x dmu. J must have at least j + 1 rows.
HausdorffBounds hausdorff_bounds(const Jacobi& J, Index j);

/// Writes "x\tlog10_inv_lambda" rows, preceded by `header_comments`
/// (each emitted as "# ..." lines).
void write_christoffel_tsv(std::ostream& out, const std::vector<double>& xs,
                           const std::vector<double>& log_lambda,
                           const std::vector<std::string>& header_comments = {});

}  // namespace mink
