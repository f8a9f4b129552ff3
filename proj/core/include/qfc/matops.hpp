#pragma once

// Dense complex linear algebra shared by every module.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace qfc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerical thresholds standing in for every exact "= 0" test.
struct Tolerance {
  double eq = 1e-10;     ///< entrywise absolute tolerance for equalities
  double psd = -1e-10;   ///< eigenvalue floor for positivity checks
  double rank = 1e-10;   ///< residual-norm threshold for rank decisions

  /// Throws ValidationError unless eq, rank lie in (0, 1) and psd in (-1, 0].
  void validate() const;

  /// All three thresholds derived from a single magnitude.
  static Tolerance uniform(double magnitude);
};

struct HermitianEigen {
  RealVector eigenvalues;      // descending
  ComplexMatrix eigenvectors;  // columns, orthonormal
};

/// max_ij |a_ij|
double max_abs(const ComplexMatrix& a);

void require_square(const ComplexMatrix& a, std::string_view what);
void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b,
                        std::string_view what);

bool is_unitary(const ComplexMatrix& a, const Tolerance& tol = {});
bool is_hermitian(const ComplexMatrix& a, const Tolerance& tol = {});

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
/// Throws SymmetryError when `a` is not Hermitian within tol.eq.
HermitianEigen eig_hermitian(const ComplexMatrix& a, const Tolerance& tol = {});

/// (1/2) sum |eig(a - b)| for Hermitian a, b.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

/// ab - ba
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

/// Kronecker product a (x) b.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Derives a well-mixed child seed (splitmix64 finalizer over both inputs).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

/// Matrix of independent standard complex Gaussians (E|z|^2 = 1).
ComplexMatrix complex_gaussian(Index rows, Index cols, std::mt19937_64& rng);

/// Haar-distributed n x n unitary, deterministic in `seed`. Sampled as the
/// Q factor of the canonical QR of a complex Gaussian matrix.
ComplexMatrix haar_random_unitary(Index n, std::uint64_t seed);

/// Extends the orthonormal columns of `basis` (n x k) to an n x n unitary
/// whose first k columns are `basis`. Completion vectors come from the
/// standard basis in index order.
ComplexMatrix orthonormal_completion(const ComplexMatrix& basis,
                                     double rank_tol = 1e-10);

/// A unitary U with U * from == to, for unit vectors of equal length.
/// Built as a Householder reflection followed by a phase on `to`, so U fixes
/// the orthogonal complement of span{from, to}. Identity when from == to.
ComplexMatrix unitary_mapping(const ComplexVector& from, const ComplexVector& to);

/// Permutation matrix swapping basis vectors i and j.
ComplexMatrix transposition(Index n, Index i, Index j);

namespace pauli {
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
}  // namespace pauli

}  // namespace qfc
