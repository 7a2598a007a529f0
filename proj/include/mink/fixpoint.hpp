#pragma once

// The map T on Jacobi matrices, J(eta) -> J(T* eta), and its fixed point.
//
// Two realizations of T are provided:
//  - Operator: Lanczos on the operators M_i(J) = (aJ + bI)(cJ + dI)^{-1}
//    started at e_0, then Lanczos on diag(J1, J2) for the average. Cost
//    O(N^3) per step.
//  - Spectral: the spectral measure of the truncated J with respect to e_0
//    is its own Gauss rule (weights from the twisted factorization, which
//    also holds up on discrete inputs), so T is applied to those atoms
//    directly and the 2N image atoms are turned back into a Jacobi matrix by orthogonal
//    updating. Same result in exact arithmetic, cost O(N^2) per step.

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mink/jacobi.hpp"
#include "mink/measure.hpp"

namespace mink {

enum class TMapRoute { Auto, Operator, Spectral };

struct FixpointConfig {
  Index n_target = 64;
  /// Extra truncation rows; negative selects max(16, N/10) with N the total.
  Index buffer = -1;
  double eps = 1e-12;
  /// Zero selects min(20000, ceil(10 * n_target^0.7)).
  int max_iters = 0;
  double rho1 = 0.5;
  double rho2 = 0.5;
  TMapRoute route = TMapRoute::Auto;
  /// Run the two pushforwards of one step on separate threads.
  bool concurrent = false;
  /// Iterate only on a leading window of the matrix that grows with the
  /// converged rank (converged rank + four buffers, at least 64 rows).
  bool growing_window = false;
  /// Rows of the per-iteration delta trace kept in the report (0: n_target).
  Index trace_rows = 0;
  /// Called after every iteration with (iteration, N_eps).
  std::function<void(int, Index)> on_iteration;

  Index truncation() const;
  Index buffer_rows() const { return truncation() - n_target; }
  int iteration_limit() const;
  TMapRoute resolved_route() const;
  void validate() const;
};

struct ConvergenceReport {
  int iterations = 0;
  bool converged = false;
  /// N_eps(n), one entry per iteration n = 1, 2, ...
  std::vector<Index> converged_rank;
  /// Sum over j of |a^n_j - a^{n-1}_j| over the trusted rows.
  std::vector<double> total_delta;
  /// deltas[n-1][j-1] = |a^n_j - a^{n-1}_j| for j = 1..trace rows.
  std::vector<std::vector<double>> deltas;
};

struct FixpointResult {
  Jacobi jacobi;
  ConvergenceReport report;
};

/// Jacobi matrix of eta o map^{-1}, where J = J(eta), via Lanczos on
/// (aJ + bI)(cJ + dI)^{-1} started at e_0. K <= N.
Jacobi moebius_pushforward(const Jacobi& J, const MoebiusMap& map, Index K);

/// Same contract through the Gauss rule of J.
Jacobi moebius_pushforward_spectral(const Jacobi& J, const MoebiusMap& map, Index K);

/// Jacobi matrix of rho1 mu1 + rho2 mu2 via Lanczos on diag(J1, J2) started
/// at (sqrt(rho1) e_0, sqrt(rho2) e_0).
LanczosResult<double> jacobi_average(const Jacobi& J1, const Jacobi& J2, double rho1, double rho2,
                                     Index K);

/// One application of T. The output has min(2 size(J), truncation) rows.
Jacobi t_map(const Jacobi& J, const FixpointConfig& cfg);

/// N_eps between successive iterates: largest N with
/// sum_{j<=N} |a_j - a'_j| <= eps, counted over at most `rows` rows.
Index converged_rank(const Jacobi& prev, const Jacobi& next, double eps, Index rows);

/// Iterates T from `initial` until N_eps >= n_target or the iteration limit.
/// If `initial` has fewer rows than the truncation (e.g. a delta measure)
/// the matrix grows by doubling until it reaches the truncation size.
FixpointResult fixpoint_solve(const FixpointConfig& cfg, const Jacobi& initial);

/// Uniform-measure start of the full truncation size.
FixpointResult fixpoint_solve(const FixpointConfig& cfg);

/// Sample standard deviation of a_j over `extra_iters` further applications
/// of T, for j = 1..n_target. Not divided by sqrt(extra_iters - 1).
std::vector<double> error_statistics(const Jacobi& J_fixed, const FixpointConfig& cfg,
                                     int extra_iters);

// ---------------------------------------------------------------------------
// Cache file

inline constexpr const char* kJacobiFormatHeader = "# minkowski-jacobi v1";
inline constexpr const char* kBuilderVersion = "mink 1.0.0";

/// Ordered key/value metadata stored as "# key=value" lines.
using JacobiMetadata = std::map<std::string, std::string>;

void save_jacobi(std::ostream& out, const Jacobi& J, const JacobiMetadata& meta);
/// Writes to `path` through a temporary file, so a failure leaves no
/// partial file behind. Throws std::runtime_error on I/O failure.
void save_jacobi(const std::string& path, const Jacobi& J, const JacobiMetadata& meta);

struct LoadedJacobi {
  Jacobi jacobi;
  JacobiMetadata meta;
};

LoadedJacobi load_jacobi(std::istream& in);
LoadedJacobi load_jacobi(const std::string& path);

/// FNV-1a 64-bit hash of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mink
