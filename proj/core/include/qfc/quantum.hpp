#pragma once

// States, generalized measurements, and the conditional / averaged dynamics
// they induce.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qfc/matops.hpp"

namespace qfc {

/// Unit vector in C^N.
class PureState {
 public:
  /// Throws ValidationError when |v| differs from 1 by more than tol.eq.
  explicit PureState(ComplexVector v, const Tolerance& tol = {});

  /// Rescales a nonzero vector to unit norm.
  static PureState normalized(const ComplexVector& v);
  static PureState basis(Index n, Index i);

  const ComplexVector& vector() const { return vec_; }
  Index dim() const { return vec_.size(); }
  ComplexMatrix projector() const { return vec_ * vec_.adjoint(); }

 private:
  ComplexVector vec_;
};

/// Trace-one positive semidefinite Hermitian matrix.
class DensityMatrix {
 public:
  /// Validates Hermiticity, unit trace and the eigenvalue floor.
  explicit DensityMatrix(ComplexMatrix m, const Tolerance& tol = {});
  explicit DensityMatrix(const PureState& psi);

  static DensityMatrix maximally_mixed(Index n);

  /// Re-Hermitizes and trace-normalizes the output of a dynamical step.
  /// `drift` receives max(|tr - 1|, max|raw - raw^dag|) before correction.
  /// Throws ValidationError if the drift exceeds 10 * tol.eq.
  static DensityMatrix stabilized(const ComplexMatrix& raw, const Tolerance& tol,
                                  double* drift = nullptr);

  const ComplexMatrix& matrix() const { return mat_; }
  Index dim() const { return mat_.rows(); }

 private:
  struct Unchecked {};
  DensityMatrix(ComplexMatrix m, Unchecked) : mat_(std::move(m)) {}

  ComplexMatrix mat_;
};

/// max |sum_k M_k^dag M_k - I|
double completeness_residual(std::span<const ComplexMatrix> operators);

/// Ordered Kraus operators {M_k}; index k names the physical outcome.
class Measurement {
 public:
  /// Throws DimensionError for mismatched or non-square operators and
  /// ValidationError when the completeness residual exceeds tol.eq.
  Measurement(std::vector<ComplexMatrix> operators, std::string label = {},
              const Tolerance& tol = {});

  const std::vector<ComplexMatrix>& operators() const { return ops_; }
  const ComplexMatrix& operator[](std::size_t k) const { return ops_[k]; }
  std::size_t outcomes() const { return ops_.size(); }
  Index dim() const { return ops_.front().rows(); }
  const std::string& label() const { return label_; }

  /// The same measurement with zero operators appended up to `count`.
  Measurement padded(std::size_t count) const;

 private:
  std::vector<ComplexMatrix> ops_;
  std::string label_;
};

using OutcomeDistribution = std::vector<double>;

/// P(k) = tr(M_k rho M_k^dag)
OutcomeDistribution outcome_probabilities(const DensityMatrix& rho,
                                          const Measurement& m);

/// M_k rho M_k^dag / P(k). Throws DegenerateConditioningError when
/// P(k) <= tol.rank.
DensityMatrix conditional_state(const DensityMatrix& rho, const Measurement& m,
                                std::size_t k, const Tolerance& tol = {});

/// sum_k M_k rho M_k^dag
DensityMatrix apply_cptp(const DensityMatrix& rho, const Measurement& m,
                         const Tolerance& tol = {});

/// U rho U^dag. Throws ValidationError for non-unitary U.
DensityMatrix apply_unitary(const DensityMatrix& rho, const ComplexMatrix& u,
                            const Tolerance& tol = {});

bool is_unital(const Measurement& m, const Tolerance& tol = {});

/// max |sum_k M_k M_k^dag - I|
double unitality_residual(const Measurement& m);

/// N^2 x N^2 block matrix whose (i, j) block is sum_k M_k E_ij M_k^dag.
ComplexMatrix choi_matrix(const Measurement& m);

/// Same CPTP map, decided by Choi-matrix equality within tol.eq.
bool maps_equal(const Measurement& a, const Measurement& b,
                const Tolerance& tol = {});

/// tr(rho^2)
double purity(const DensityMatrix& rho);

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Random state with exactly `rank` nonzero eigenvalues. Throws
/// PreconditionError unless 1 <= rank <= n.
DensityMatrix random_density(Index n, Index rank, std::uint64_t seed);

PureState random_pure_state(Index n, std::uint64_t seed);

/// Generic Kraus operators: blocks of a Haar isometry C^N -> C^(N*outcomes).
Measurement random_measurement(Index n, std::size_t outcomes, std::uint64_t seed);

/// M_k = sqrt(p_k) V_k with random weights p and Haar unitaries V_k, the
/// measurements whose average is a probabilistic mixture of unitaries.
Measurement random_unitary_mixture(Index n, std::size_t outcomes,
                                   std::uint64_t seed);

namespace builtin {

/// (1/2){I, sigma_x, sigma_y, sigma_z}: the completely depolarizing qubit OSR.
Measurement example1_depolarizing();

/// {sqrt(p) diag(1,-1), sqrt(1-p) I}
Measurement example3_unitary_pair(double p);

/// {[[0,a],[0,0]], diag(1, sqrt(1-a^2))}
Measurement example3_nonunital(double a);

/// {sqrt(0.8) I, sqrt(0.2) I}; the first operator is full rank.
Measurement example2_full_rank();

/// {|e_i><e_i|} for i = 1..n
Measurement projective_computational(Index n);

/// {diag(alphas), diag(betas)}
Measurement diagonal_two_outcome(const std::vector<Complex>& alphas,
                                 const std::vector<Complex>& betas);

}  // namespace builtin

}  // namespace qfc
