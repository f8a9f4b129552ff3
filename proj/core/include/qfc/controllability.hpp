#pragma once

// Decision procedures: Lie-algebra rank condition, sampled propagators,
// asymptotic density-to-pure controllability and pure-state stabilizability.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfc/matops.hpp"
#include "qfc/quantum.hpp"

namespace qfc {

/// H(t) = H0 + sum_j u_j(t) H_j with controls held constant over each
/// sampling interval of length sample_time.
struct HamiltonianControlSystem {
  ComplexMatrix drift;
  std::vector<ComplexMatrix> controls;
  double sample_time = 1.0;

  /// Throws DimensionError / SymmetryError / PreconditionError.
  void validate(const Tolerance& tol = {}) const;
  Index dim() const { return drift.rows(); }
};

struct LieRank {
  int dimension = 0;
  bool controllable = false;  // dimension == N^2 - 1
};

/// Real dimension of the Lie algebra generated by the traceless parts of
/// {-i H0, -i H1, ...}. Closure by commutators with orthonormalization
/// under Re tr(A^dag B), capped at N^4 insertions.
LieRank lie_algebra_rank(const HamiltonianControlSystem& sys,
                         const Tolerance& tol = {});

/// exp(-i (H0 + sum_j u_j H_j) dt)
ComplexMatrix sampled_propagator(const HamiltonianControlSystem& sys,
                                 std::span<const double> u);

/// exp(-i H t) for Hermitian H, through its spectral decomposition.
ComplexMatrix hermitian_propagator(const ComplexMatrix& h, double t);

/// True when a is q I for some complex q, within tol.
bool is_scalar_matrix(const ComplexMatrix& a, double tol);

struct DpcVerdict {
  bool verdict = false;
  std::optional<std::size_t> witness;  // least k with F(M_k) not scalar
};

/// Asymptotic DPC holds iff some canonical factor is not a scalar matrix.
DpcVerdict is_asymptotically_dpc(const Measurement& m, const Tolerance& tol = {});

/// Canonical factors of W^dag M_k W.
std::vector<ComplexMatrix> canonical_factors_in_basis(const Measurement& m,
                                                      const ComplexMatrix& w,
                                                      const Tolerance& tol = {});

/// Whether some canonical factor fails to commute with diag(1, 0, ..., 0)
/// by more than tol.eq. This is the stabilizability test for e_1 in the
/// current basis.
bool first_basis_vector_stabilizable(std::span<const ComplexMatrix> factors,
                                     const Tolerance& tol = {});

/// Stabilizability of |target><target| under unitary feedback: rotate the
/// basis so that target is e_1 and test the canonical factors there.
bool stabilizable_pure_state(const Measurement& m, const PureState& target,
                             const Tolerance& tol = {});

struct BasisChange {
  ComplexMatrix w;  // new basis vectors as columns
  std::string note;
};

/// A unitary W such that e_1 is stabilizable for {W^dag M_k W}; the state
/// W e_1 is then stabilizable in the original basis. Throws NotDpcError when
/// the measurement is not asymptotically DPC.
BasisChange dpc_basis_construction(const Measurement& m, const Tolerance& tol = {});

struct ControllabilityReport {
  std::optional<int> lie_dim;
  bool unitary_controllable = true;
  bool asymptotically_dpc = false;
  std::optional<std::size_t> dpc_witness_k;
  std::optional<ComplexMatrix> stabilizable_target_basis;
  bool finite_time_ddc = false;
  std::string notes;
};

/// Aggregates every verdict. Without `sys`, unitary controllability of the
/// control layer is assumed and lie_dim is left empty.
ControllabilityReport classify(const Measurement& m, const Tolerance& tol = {},
                               const HamiltonianControlSystem* sys = nullptr);

}  // namespace qfc
