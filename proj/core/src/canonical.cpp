#include "qfc/canonical.hpp"

#include <algorithm>
#include <functional>

#include "qfc/errors.hpp"

namespace qfc {

CanonicalQR canonical_qr(const ComplexMatrix& a, const Tolerance& tol) {
  require_square(a, "canonical_qr");
  const Index n = a.rows();

  ComplexMatrix accepted(n, n);
  ComplexMatrix r = ComplexMatrix::Zero(n, n);
  std::vector<Index> column_ranks(static_cast<std::size_t>(n));
  Index rank = 0;

  for (Index j = 0; j < n; ++j) {
    ComplexVector v = a.col(j);
    // Two MGS sweeps; coefficients accumulate across sweeps.
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < rank; ++i) {
        const Complex c = accepted.col(i).dot(v);
        r(i, j) += c;
        v -= c * accepted.col(i);
      }
    }
    const double norm = v.norm();
    if (norm > tol.rank) {
      accepted.col(rank) = v / norm;
      // First nonzero entry of row `rank`: real and positive by construction.
      r(rank, j) = norm;
      ++rank;
    }
    column_ranks[static_cast<std::size_t>(j)] = rank;
  }

  CanonicalQR out;
  out.q = orthonormal_completion(accepted.leftCols(rank), tol.rank);
  out.r = std::move(r);
  out.column_ranks = std::move(column_ranks);
  return out;
}

ComplexMatrix canonical_form(const ComplexMatrix& a, const Tolerance& tol) {
  return canonical_qr(a, tol).r;
}

EquivalenceCheck compare_canonical_forms(const ComplexMatrix& a, const ComplexMatrix& b,
                                         const Tolerance& tol) {
  require_square(a, "compare_canonical_forms");
  require_same_shape(a, b, "compare_canonical_forms");
  EquivalenceCheck out;
  out.distance = max_abs(canonical_form(a, tol) - canonical_form(b, tol));
  out.equivalent = out.distance <= tol.eq;
  out.borderline = !out.equivalent && out.distance <= 10.0 * tol.eq;
  return out;
}

bool unitarily_equivalent(const ComplexMatrix& a, const ComplexMatrix& b,
                          const Tolerance& tol) {
  return compare_canonical_forms(a, b, tol).equivalent;
}

std::optional<SimulationWitness> can_simulate(const Measurement& target,
                                              const Measurement& base,
                                              const Tolerance& tol) {
  if (target.dim() != base.dim()) {
    throw DimensionError("can_simulate: operator dimensions differ");
  }
  const std::size_t m = std::max(target.outcomes(), base.outcomes());
  const Measurement nt = target.padded(m);
  const Measurement nb = base.padded(m);

  std::vector<CanonicalQR> tq, bq;
  tq.reserve(m);
  bq.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    tq.push_back(canonical_qr(nt[k], tol));
    bq.push_back(canonical_qr(nb[k], tol));
  }

  std::vector<std::vector<bool>> compatible(m, std::vector<bool>(m));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      compatible[k][j] = max_abs(tq[k].r - bq[j].r) <= tol.eq;
    }
  }

  // Kuhn's augmenting paths. Outcome k tries j = k first, so the identity
  // matching is returned whenever it is valid.
  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(m, kFree);  // owner[j] = k
  std::function<bool(std::size_t, std::vector<bool>&)> augment =
      [&](std::size_t k, std::vector<bool>& seen) {
        for (std::size_t step = 0; step < m; ++step) {
          const std::size_t j = (k + step) % m;
          if (!compatible[k][j] || seen[j]) continue;
          seen[j] = true;
          if (owner[j] == kFree || augment(owner[j], seen)) {
            owner[j] = k;
            return true;
          }
        }
        return false;
      };
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<bool> seen(m, false);
    if (!augment(k, seen)) return std::nullopt;
  }

  SimulationWitness w;
  w.permutation.assign(m, 0);
  for (std::size_t j = 0; j < m; ++j) w.permutation[owner[j]] = j;
  w.controls.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    w.controls.push_back(tq[k].q * bq[w.permutation[k]].q.adjoint());
  }
  return w;
}

}  // namespace qfc
