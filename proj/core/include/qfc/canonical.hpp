#pragma once

// QR decomposition in canonical form with respect to left multiplication by
// unitaries, and the measurement-simulability test built on it.

#include <cstddef>
#include <optional>
#include <vector>

#include "qfc/matops.hpp"
#include "qfc/quantum.hpp"

namespace qfc {

/// A = Q R with Q unitary and R upper triangular such that
///  - r_ij = 0 whenever i > column_ranks[j], column_ranks[j] being the rank
///    of the first j+1 columns of A;
///  - the first nonzero entry of every nonzero row of R is real positive.
/// R depends only on the orbit {U A : U unitary}.
struct CanonicalQR {
  ComplexMatrix q;
  ComplexMatrix r;
  std::vector<Index> column_ranks;
};

/// Modified Gram-Schmidt over the columns of a square A. A column whose
/// residual norm is <= tol.rank adds no Q column; Q is completed to a
/// unitary afterwards. Throws DimensionError for non-square input.
CanonicalQR canonical_qr(const ComplexMatrix& a, const Tolerance& tol = {});

/// The canonical R factor F(A).
ComplexMatrix canonical_form(const ComplexMatrix& a, const Tolerance& tol = {});

struct EquivalenceCheck {
  bool equivalent = false;
  /// Distance in (eq, 10 eq]: reported as not equivalent, flagged here.
  bool borderline = false;
  double distance = 0.0;
};

EquivalenceCheck compare_canonical_forms(const ComplexMatrix& a,
                                         const ComplexMatrix& b,
                                         const Tolerance& tol = {});

/// True iff B = U A for some unitary U.
bool unitarily_equivalent(const ComplexMatrix& a, const ComplexMatrix& b,
                          const Tolerance& tol = {});

/// A reordering j(.) with F(N_k) = F(M_j(k)), and the controls realizing it.
struct SimulationWitness {
  std::vector<std::size_t> permutation;  // permutation[k] = j(k)
  std::vector<ComplexMatrix> controls;   // controls[k] * M_j(k) = N_k
};

/// Whether feedback on `base` can enact `target` outcome-by-outcome. The
/// shorter list is padded with zero operators. Returns nullopt when no
/// matching of canonical factors exists.
std::optional<SimulationWitness> can_simulate(const Measurement& target,
                                              const Measurement& base,
                                              const Tolerance& tol = {});

}  // namespace qfc
