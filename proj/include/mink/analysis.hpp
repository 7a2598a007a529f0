#pragma once

// Diagnostics on a computed Jacobi matrix: root asymptotics, zeros against
// the Chebyshev (equilibrium) zeros, discrepancy of normalized angles,
// averaged Gauss weights near Farey points with their asymptotic model, and
// Nevai-class indicators.

#include <functional>
#include <limits>
#include <vector>

#include "mink/jacobi.hpp"
#include "mink/measure.hpp"

namespace mink {

struct PowerLawFit {
  double A = 0.0;
  double B = 0.0;
  double residual = 0.0;  ///< RMS of log y - (log A - B log x)
};

/// Least squares for log y = log A - B log x. Throws DataError for
/// non-positive data or fewer than two distinct abscissae.
PowerLawFit power_law_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// ---------------------------------------------------------------------------
// Regularity

struct RegularityReport {
  double capacity = 0.25;
  std::vector<double> gamma;  ///< gamma[j-1] = Gamma_j = (a_1 ... a_j)^{1/j}
  std::vector<double> delta;  ///< delta[j-1] = log(1/4) - (1/j) sum log a_l
  std::vector<double> sigma3; ///< j delta_j
  PowerLawFit fit;            ///< delta_j ~ A j^{-B} over [j_max/10, j_max]
  Index fit_from = 0;
  Index fit_to = 0;
};

RegularityReport regularity_report(const Jacobi& J, Index j_max);

// ---------------------------------------------------------------------------
// Zeros

/// theta^j_l = (1 - cos(pi (2l-1) / (2j))) / 2, ascending.
VectorX<double> chebyshev_zeros(Index j);

/// psi = arccos(1 - 2 zeta) / pi, elementwise.
VectorX<double> normalized_angles(const VectorX<double>& zeros);

struct ZeroComparisonReport {
  Index order = 0;
  double U = 0.0;  ///< max |theta - zeta|
  double V = 0.0;  ///< max |phi - psi|
  VectorX<double> theta, zeta, phi, psi;
};

ZeroComparisonReport zero_comparison(const Jacobi& J, Index j);

/// Discrepancy of the angles psi_1 < ... < psi_j from the uniform law,
/// computed in O(j). Throws DataError for non-monotone or out-of-range input.
double discrepancy(const VectorX<double>& psi);

/// The same quantity by direct enumeration of all index pairs, O(j^2).
double discrepancy_bruteforce(const VectorX<double>& psi);

// ---------------------------------------------------------------------------
// Weights on intervals and the Farey-point asymptotics

struct IntervalWeightAverage {
  Index count = 0;
  double mean_log_weight = std::numeric_limits<double>::quiet_NaN();  ///< mean of log w_l
  double log_mean_weight = std::numeric_limits<double>::quiet_NaN();  ///< log of mean of w_l
  double log_total_weight = std::numeric_limits<double>::quiet_NaN(); ///< log of sum of w_l
};

/// Averages over nodes with lo <= zeta_l <= hi. Empty: count 0, NaN values.
IntervalWeightAverage avg_log_weight(const GaussRule<double>& rule, double lo, double hi);

struct AsymptoticDecomposition {
  int q = 2;
  double y = 0.0;
  Index j = 0;
  double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0, lambda4 = 0.0;
  double total = 0.0;  ///< Lambda_j(q;y), a model for log lambda_j(1/q + y)
  double h_plus = 0.0;   ///< (1 + qy) / (1 - q^2 y), infinite when q^2 y >= 1
  double h_minus = 0.0;  ///< (1 + qy) / (1 + q^2 y)
  double H_plus = 0.0, H_minus = 0.0;  ///< log[(h/q)(1 - h/q)], NaN when undefined
  /// Bounds on -log w over the I_{q,k} that contains 1/q + y. The term in
  /// t(1-t) is bounded by its extreme values over t in [h-/q, h+/q]; when
  /// that range lies below 1/2 this is the H- (upper) / H+ (lower) pairing.
  double bound_lower = 0.0;
  double bound_upper = std::numeric_limits<double>::infinity();
  bool upper_available = false;
};

AsymptoticDecomposition lambda_asymptotic(int q, double y, Index j);

struct CuspRow {
  int q = 2;
  int k = 0;
  double left = 0.0, right = 0.0;
  double y = 0.0;  ///< geometric mean of l_{q,k+1} and l_{q,k}
  Index count = 0;
  double observed = std::numeric_limits<double>::quiet_NaN();  ///< -log of the mean weight
  double observed_mean_log = std::numeric_limits<double>::quiet_NaN();  ///< -(mean of log w)
  double bound_lower = 0.0, bound_upper = 0.0;
  bool upper_available = false;
  double neg_lambda = 0.0;  ///< -Lambda_j(q;y)
  bool within_band = false; ///< observed in [lower - slack, upper + slack]
  double relative_deviation = std::numeric_limits<double>::quiet_NaN();
};

constexpr double kCuspSlack = 2.0;

std::vector<CuspRow> cusp_validation(const GaussRule<double>& rule, int q, const std::vector<int>& ks,
                                     double slack = kCuspSlack);
std::vector<CuspRow> cusp_validation(const Jacobi& J, Index j, int q, const std::vector<int>& ks,
                                     double slack = kCuspSlack);

// ---------------------------------------------------------------------------
// sigma_j and the equilibrium measure

/// sigma_j: atoms at the zeros of p_j with masses p_{j-1}^2 / K_j.
DiscreteMeasure sigma_weights(const Jacobi& J, Index j);

/// 2 sin^2((2l-1) pi / (2j)) / j, l = 1..j, for j >= 2.
std::vector<double> chebyshev_sigma(Index j);

/// Distribution function of the density (8/pi) sqrt(x(1-x)) on [0,1].
double sigma_e_cdf(double x);
/// int_0^x sigma_e_cdf.
double sigma_e_cdf_integral(double x);

/// int_0^1 |F_m - F| for a discrete m and a continuous non-decreasing
/// distribution F on [0,1] with antiderivative G (G(0) = 0).
double cdf_l1_distance(const DiscreteMeasure& m, const std::function<double(double)>& F,
                       const std::function<double(double)>& G);

double hutchinson_distance_to_sigmaE(const DiscreteMeasure& m);

// ---------------------------------------------------------------------------
// Nevai diagnostics

struct NevaiPerOrder {
  Index j = 0;
  double s_max = 0.0;       ///< max_l |S^j_l(nu_E) - S^j_l(mu)|
  double sigma0 = 0.0;      ///< sum_l |S^j_l(nu_E) - S^j_l(mu)|
  double hutchinson = 0.0;  ///< d(sigma_j(mu), sigma_E)
  double sigma_mass = 0.0;  ///< sum_l S^j_l(mu)
};

struct NevaiDiagnostics {
  std::vector<NevaiPerOrder> per_order;
  /// Index x = 1..j_max (entry x-1).
  std::vector<double> envelope;  ///< u(x) = max{|a_l - 1/4| : x <= l <= j_max}
  std::vector<double> sigma1;    ///< sum_{l=2}^{j} |a_l - a_{l-1}|
  std::vector<double> sigma2;    ///< sum_{l=1}^{j} |1 - 16 a_l^2|
  std::vector<double> sigma3;    ///< -sum_{l=1}^{j} (log a_l + log 4)
};

/// Series and envelope run over l = 1..j_max; j_max defaults to the largest
/// entry of j_list.
NevaiDiagnostics nevai_diagnostics(const Jacobi& J, const std::vector<Index>& j_list, Index j_max = 0);

}  // namespace mink
