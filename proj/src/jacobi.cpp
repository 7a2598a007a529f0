#include "mink/jacobi.hpp"

#include <cmath>
#include <vector>

namespace mink {

namespace {

struct NormalizedAtoms {
  std::vector<double> x;
  std::vector<double> w;
};

NormalizedAtoms normalized_atoms(const DiscreteMeasure& m, AtomsToJacobiStats* stats) {
  if (m.empty()) throw DomainError("jacobi_from_atoms: empty measure");
  const double lse = m.total_mass_log();
  NormalizedAtoms out;
  out.x.reserve(m.size());
  out.w.reserve(m.size());
  std::size_t dropped = 0;
  for (const Atom& a : m.atoms()) {
    const double w = std::exp(a.log_weight - lse);
    // sqrt(w) must stay a normal number for the rotations below.
    if (!(std::sqrt(w) > 0.0) || !std::isnormal(std::sqrt(w))) {
      ++dropped;
      continue;
    }
    out.x.push_back(a.position);
    out.w.push_back(w);
  }
  if (stats) stats->dropped_atoms = dropped;
  if (out.x.empty()) throw DataError("jacobi_from_atoms: every atom weight underflowed");
  return out;
}

}  // namespace

Jacobi jacobi_from_atoms(const DiscreteMeasure& m, Index K, AtomsToJacobiStats* stats) {
  if (K < 1) throw DomainError("jacobi_from_atoms: K must be positive");
  if (static_cast<std::size_t>(K) > m.size()) throw DomainError("jacobi_from_atoms: K exceeds the atom count");
  AtomsToJacobiStats local;
  const NormalizedAtoms atoms = normalized_atoms(m, &local);
  const std::size_t n = atoms.x.size();

  // d[i] diagonal, e[i] couples rows i and i+1. The matrix is kept at its
  // full size: truncating while atoms are still being added would corrupt
  // the leading rows.
  std::vector<double> d(n, 0.0), e(n, 0.0);
  d[0] = atoms.x[0];
  double W = atoms.w[0];
  std::size_t L = 1;

  for (std::size_t t = 1; t < n; ++t) {
    const double x = atoms.x[t];
    const double w = atoms.w[t];
    const double tot = W + w;
    // Shift rows down by one; the new atom becomes row 0.
    for (std::size_t i = L; i > 0; --i) d[i] = d[i - 1];
    for (std::size_t i = L - 1; i > 0; --i) e[i] = e[i - 1];
    // Now d[1..L] and e[1..L-1] hold the old matrix.
    const double d0 = d[1];
    const double e1 = (L > 1) ? e[1] : 0.0;
    d[0] = (w * x + W * d0) / tot;
    d[1] = (W * x + w * d0) / tot;
    e[0] = std::sqrt(w * W) * (d0 - x) / tot;
    double bulge = std::sqrt(W / tot) * e1;
    if (L > 1) e[1] = std::sqrt(w / tot) * e1;
    ++L;

    for (std::size_t k = 1; k + 1 < L && bulge != 0.0; ++k) {
      const double gamma = e[k - 1];
      const double r = std::hypot(gamma, bulge);
      const double c = gamma / r;
      const double s = bulge / r;
      e[k - 1] = r;
      const double dk = d[k], dk1 = d[k + 1], ek = e[k];
      d[k] = c * c * dk + 2.0 * c * s * ek + s * s * dk1;
      d[k + 1] = s * s * dk - 2.0 * c * s * ek + c * c * dk1;
      e[k] = c * s * (dk1 - dk) + (c * c - s * s) * ek;
      if (k + 2 < L) {
        bulge = s * e[k + 1];
        e[k + 1] = c * e[k + 1];
      } else {
        bulge = 0.0;
      }
    }
    W = tot;
  }

  const Index rows = std::min<Index>(K, static_cast<Index>(L));
  local.truncated = rows < K;
  Jacobi J(rows);
  for (Index i = 0; i < rows; ++i) {
    J.b(i) = d[static_cast<std::size_t>(i)];
    if (i > 0) J.a(i) = std::abs(e[static_cast<std::size_t>(i - 1)]);
  }
  if (stats) *stats = local;
  return J;
}

Jacobi jacobi_from_atoms_lanczos(const DiscreteMeasure& m, Index K, AtomsToJacobiStats* stats) {
  if (K < 1) throw DomainError("jacobi_from_atoms_lanczos: K must be positive");
  if (static_cast<std::size_t>(K) > m.size())
    throw DomainError("jacobi_from_atoms_lanczos: K exceeds the atom count");
  AtomsToJacobiStats local;
  const NormalizedAtoms atoms = normalized_atoms(m, &local);
  const Index n = static_cast<Index>(atoms.x.size());
  VectorX<double> pos(n), start(n);
  for (Index i = 0; i < n; ++i) {
    pos(i) = atoms.x[static_cast<std::size_t>(i)];
    start(i) = std::sqrt(atoms.w[static_cast<std::size_t>(i)]);
  }
  start /= start.norm();
  const Index steps = std::min(K, n);
  auto res = lanczos_tridiagonalize<double>(
      [&](const auto& v) -> VectorX<double> { return pos.cwiseProduct(v); }, start, steps);
  local.truncated = res.jacobi.size() < K;
  if (stats) *stats = local;
  return res.jacobi;
}

}  // namespace mink
