#include "qfc/controllability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "qfc/canonical.hpp"
#include "qfc/errors.hpp"
#include "qfc/synthesis.hpp"

namespace qfc {

void HamiltonianControlSystem::validate(const Tolerance& tol) const {
  require_square(drift, "HamiltonianControlSystem drift");
  if (!(sample_time > 0.0)) throw PreconditionError("HamiltonianControlSystem: sample time must be > 0");
  if (!is_hermitian(drift, tol)) throw SymmetryError("HamiltonianControlSystem: drift not Hermitian");
  for (const auto& h : controls) {
    require_same_shape(h, drift, "HamiltonianControlSystem control");
    if (!is_hermitian(h, tol)) throw SymmetryError("HamiltonianControlSystem: control not Hermitian");
  }
}

namespace {

double real_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  // Re tr(a^dag b)
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

ComplexMatrix traceless(const ComplexMatrix& x) {
  const Index n = x.rows();
  return x - (x.trace() / static_cast<double>(n)) * ComplexMatrix::Identity(n, n);
}

}  // namespace

LieRank lie_algebra_rank(const HamiltonianControlSystem& sys, const Tolerance& tol) {
  sys.validate(tol);
  const Index n = sys.dim();
  const auto full = static_cast<std::size_t>(n * n - 1);
  const auto cap = static_cast<std::size_t>(n * n * n * n);
  const Complex minus_i(0.0, -1.0);

  std::vector<ComplexMatrix> basis;
  auto try_add = [&](ComplexMatrix x) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) x -= real_inner(b, x) * b;
    }
    const double norm = x.norm();
    if (norm > tol.rank) {
      basis.push_back(x / norm);
      return true;
    }
    return false;
  };

  try_add(traceless(minus_i * sys.drift));
  for (const auto& h : sys.controls) {
    if (basis.size() >= full) break;
    try_add(traceless(minus_i * h));
  }

  // Every new element is bracketed with all earlier ones, which covers all
  // pairs of the final basis.
  std::size_t insertions = 0;
  for (std::size_t k = 0; k < basis.size() && basis.size() < full; ++k) {
    for (std::size_t i = 0; i < k && basis.size() < full && insertions < cap; ++i) {
      ++insertions;
      try_add(commutator(basis[i], basis[k]));
    }
  }

  LieRank out;
  out.dimension = static_cast<int>(basis.size());
  out.controllable = basis.size() == full;
  return out;
}

ComplexMatrix hermitian_propagator(const ComplexMatrix& h, double t) {
  const HermitianEigen eig = eig_hermitian(h);
  ComplexVector phases(eig.eigenvalues.size());
  for (Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::exp(Complex(0.0, -eig.eigenvalues(i) * t));
  }
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

ComplexMatrix sampled_propagator(const HamiltonianControlSystem& sys,
                                 std::span<const double> u) {
  sys.validate();
  if (u.size() != sys.controls.size()) {
    throw DimensionError("sampled_propagator: expected " + std::to_string(sys.controls.size()) +
                         " control values, got " + std::to_string(u.size()));
  }
  ComplexMatrix h = sys.drift;
  for (std::size_t j = 0; j < u.size(); ++j) h += u[j] * sys.controls[j];
  return hermitian_propagator(h, sys.sample_time);
}

bool is_scalar_matrix(const ComplexMatrix& a, double tol) {
  require_square(a, "is_scalar_matrix");
  const Index n = a.rows();
  const Complex q = a.trace() / static_cast<double>(n);
  return max_abs(a - q * ComplexMatrix::Identity(n, n)) <= tol;
}

DpcVerdict is_asymptotically_dpc(const Measurement& m, const Tolerance& tol) {
  DpcVerdict out;
  for (std::size_t k = 0; k < m.outcomes(); ++k) {
    if (!is_scalar_matrix(canonical_form(m[k], tol), tol.eq)) {
      out.verdict = true;
      out.witness = k;
      break;
    }
  }
  return out;
}

std::vector<ComplexMatrix> canonical_factors_in_basis(const Measurement& m,
                                                      const ComplexMatrix& w,
                                                      const Tolerance& tol) {
  if (w.rows() != m.dim()) throw DimensionError("canonical_factors_in_basis: dimension mismatch");
  std::vector<ComplexMatrix> out;
  out.reserve(m.outcomes());
  for (const auto& op : m.operators()) out.push_back(canonical_form(w.adjoint() * op * w, tol));
  return out;
}

bool first_basis_vector_stabilizable(std::span<const ComplexMatrix> factors,
                                     const Tolerance& tol) {
  for (const auto& r : factors) {
    ComplexMatrix rho_s = ComplexMatrix::Zero(r.rows(), r.cols());
    rho_s(0, 0) = 1.0;
    if (max_abs(commutator(rho_s, r)) > tol.eq) return true;
  }
  return false;
}

bool stabilizable_pure_state(const Measurement& m, const PureState& target,
                             const Tolerance& tol) {
  if (target.dim() != m.dim()) throw DimensionError("stabilizable_pure_state: dimension mismatch");
  const ComplexMatrix w = unitary_mapping(ComplexVector::Unit(m.dim(), 0), target.vector());
  return first_basis_vector_stabilizable(canonical_factors_in_basis(m, w, tol), tol);
}

namespace {

/// Basis whose first two vectors are e_j, e_l, remaining ones in order.
ComplexMatrix leading_pair_basis(Index n, Index j, Index l) {
  ComplexMatrix w = ComplexMatrix::Zero(n, n);
  w(j, 0) = 1.0;
  w(l, 1) = 1.0;
  Index col = 2;
  for (Index i = 0; i < n; ++i) {
    if (i != j && i != l) w(i, col++) = 1.0;
  }
  return w;
}

ComplexMatrix hadamard_block(Index n) {
  ComplexMatrix v = ComplexMatrix::Identity(n, n);
  const double s = 1.0 / std::sqrt(2.0);
  v(0, 0) = s;
  v(0, 1) = s;
  v(1, 0) = s;
  v(1, 1) = -s;
  return v;
}

}  // namespace

BasisChange dpc_basis_construction(const Measurement& m, const Tolerance& tol) {
  const DpcVerdict dpc = is_asymptotically_dpc(m, tol);
  if (!dpc.verdict) {
    throw NotDpcError("dpc_basis_construction: every canonical factor is scalar");
  }
  const Index n = m.dim();
  std::vector<ComplexMatrix> factors;
  for (const auto& op : m.operators()) factors.push_back(canonical_form(op, tol));

  auto verified = [&](const ComplexMatrix& w) {
    return first_basis_vector_stabilizable(canonical_factors_in_basis(m, w, tol), tol);
  };
  auto describe = [](const char* kase, std::size_t k, Index j, Index l) {
    std::ostringstream os;
    os << kase << ": outcome " << k + 1 << ", basis vectors (" << j + 1 << ", " << l + 1
       << ") moved to the front";
    return os.str();
  };

  // Case A: an off-diagonal entry r_jl != 0.
  for (std::size_t k = 0; k < factors.size(); ++k) {
    for (Index j = 0; j < n; ++j) {
      for (Index l = j + 1; l < n; ++l) {
        if (std::abs(factors[k](j, l)) <= tol.eq) continue;
        ComplexMatrix w = leading_pair_basis(n, j, l);
        if (verified(w)) return {std::move(w), describe("case A", k, j, l)};
      }
    }
  }

  // Case B: distinct diagonal entries a != d, rotated by a Hadamard block.
  // Largest gap first, then lowest k, then lowest (j, l).
  std::vector<std::tuple<double, std::size_t, Index, Index>> candidates;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    for (Index j = 0; j < n; ++j) {
      for (Index l = j + 1; l < n; ++l) {
        const double gap = std::abs(factors[k](j, j) - factors[k](l, l));
        if (gap > tol.eq) candidates.emplace_back(-gap, k, j, l);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  for (const auto& [neg_gap, k, j, l] : candidates) {
    ComplexMatrix w = leading_pair_basis(n, j, l) * hadamard_block(n);
    if (verified(w)) return {std::move(w), describe("case B", k, j, l) + " with a Hadamard rotation"};
  }

  // e_1 is stabilizable iff some M_k with M_k e_1 != 0 does not have e_1 as an
  // eigenvector of M_k^dag M_k (or M_k e_1 = 0 with M_k != 0). An equal mix of
  // two eigenvectors with distinct eigenvalues always qualifies.
  const std::size_t k = *dpc.witness;
  const HermitianEigen eig = eig_hermitian(m[k].adjoint() * m[k], tol);
  const ComplexVector mix = (eig.eigenvectors.col(0) + eig.eigenvectors.col(n - 1)) / std::sqrt(2.0);
  ComplexMatrix w = unitary_mapping(ComplexVector::Unit(n, 0), mix);
  if (!verified(w)) throw Error("dpc_basis_construction: no stabilizing basis found");
  std::ostringstream os;
  os << "eigenvector mix: outcome " << k + 1 << ", extreme eigenvectors of M^dag M";
  return {std::move(w), os.str()};
}

ControllabilityReport classify(const Measurement& m, const Tolerance& tol,
                               const HamiltonianControlSystem* sys) {
  ControllabilityReport report;
  std::ostringstream notes;

  if (sys != nullptr) {
    if (sys->dim() != m.dim()) throw DimensionError("classify: system and measurement dimensions differ");
    const LieRank lie = lie_algebra_rank(*sys, tol);
    report.lie_dim = lie.dimension;
    report.unitary_controllable = lie.controllable;
    notes << "LARC: Lie algebra dimension " << lie.dimension << " of " << m.dim() * m.dim() - 1
          << ". ";
  } else {
    report.unitary_controllable = true;
    notes << "Full unitary control assumed (no Hamiltonian model supplied). ";
  }

  const DpcVerdict dpc = is_asymptotically_dpc(m, tol);
  report.asymptotically_dpc = dpc.verdict;
  report.dpc_witness_k = dpc.witness;
  if (dpc.verdict) {
    BasisChange basis = dpc_basis_construction(m, tol);
    report.stabilizable_target_basis = std::move(basis.w);
    notes << "Asymptotic DPC/DDC: yes, witness outcome " << *dpc.witness + 1 << " ("
          << basis.note << "). ";
  } else {
    notes << "Asymptotic DPC: no, every canonical factor is scalar (average of unitary effects). ";
  }

  const GroupedDiagonalization diag = diagonalize_grouped(m, tol);
  report.finite_time_ddc = diag.form.has_value();
  if (report.finite_time_ddc) {
    notes << "Finite-time DDC: yes, diagonalized operators singular in the required pattern";
    if (m.outcomes() > 2) notes << " after grouping outcomes into two classes";
    notes << ". ";
  } else if (m.outcomes() == 2) {
    notes << "Finite-time DDC: no, diagonalized operators do not fit the required singular pattern. ";
  } else {
    notes << "Finite-time DDC: no two-class grouping of the outcomes fits the required singular pattern. ";
  }
  notes << "Kraus-map controllability: unknown.";
  report.notes = notes.str();
  return report;
}

}  // namespace qfc
