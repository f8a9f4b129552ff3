#include "qfc/matops.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "qfc/canonical.hpp"
#include "qfc/errors.hpp"

namespace qfc {

void Tolerance::validate() const {
  if (!(eq > 0.0 && eq < 1.0)) throw ValidationError("eq tolerance must lie in (0, 1)");
  if (!(rank > 0.0 && rank < 1.0)) throw ValidationError("rank tolerance must lie in (0, 1)");
  if (!(psd <= 0.0 && psd > -1.0)) throw ValidationError("psd floor must lie in (-1, 0]");
}

Tolerance Tolerance::uniform(double magnitude) {
  Tolerance t{magnitude, -magnitude, magnitude};
  t.validate();
  return t;
}

double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

void require_square(const ComplexMatrix& a, std::string_view what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionError(std::string(what) + ": expected a nonempty square matrix, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b,
                        std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()));
  }
}

bool is_unitary(const ComplexMatrix& a, const Tolerance& tol) {
  require_square(a, "is_unitary");
  const ComplexMatrix gram = a.adjoint() * a;
  return max_abs(gram - ComplexMatrix::Identity(a.rows(), a.cols())) <= tol.eq;
}

bool is_hermitian(const ComplexMatrix& a, const Tolerance& tol) {
  require_square(a, "is_hermitian");
  return max_abs(a - a.adjoint()) <= tol.eq;
}

HermitianEigen eig_hermitian(const ComplexMatrix& a, const Tolerance& tol) {
  require_square(a, "eig_hermitian");
  if (!is_hermitian(a, tol)) throw SymmetryError("eig_hermitian: matrix is not Hermitian");
  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("eig_hermitian: solver did not converge");
  // Eigen sorts ascending.
  HermitianEigen out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "trace_distance");
  require_square(a, "trace_distance");
  const ComplexMatrix diff = 0.5 * ((a - b) + (a - b).adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(diff, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_square(a, "commutator");
  require_same_shape(a, b, "commutator");
  return a * b - b * a;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  auto finalize = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return finalize(finalize(base + 0x9e3779b97f4a7c15ULL) ^ (index + 0x632be59bd9b4e019ULL));
}

ComplexMatrix complex_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix z(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = Complex(re, im);
    }
  }
  return z;
}

ComplexMatrix haar_random_unitary(Index n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("haar_random_unitary: n must be >= 1");
  std::mt19937_64 rng(seed);
  // A Gaussian matrix is full rank with probability one; the positive
  // diagonal of the canonical R makes Q exactly Haar distributed.
  return canonical_qr(complex_gaussian(n, n, rng)).q;
}

ComplexMatrix orthonormal_completion(const ComplexMatrix& basis, double rank_tol) {
  const Index n = basis.rows();
  ComplexMatrix q = ComplexMatrix::Zero(n, n);
  Index filled = basis.cols();
  q.leftCols(filled) = basis;
  for (Index e = 0; e < n && filled < n; ++e) {
    ComplexVector v = ComplexVector::Unit(n, e);
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < filled; ++i) v -= q.col(i) * q.col(i).dot(v);
    }
    const double norm = v.norm();
    // Any standard vector outside the span has residual >= 1/sqrt(n).
    if (norm > std::max(rank_tol, 0.5 / std::sqrt(static_cast<double>(n)))) {
      q.col(filled++) = v / norm;
    }
  }
  return q;
}

ComplexMatrix unitary_mapping(const ComplexVector& from, const ComplexVector& to) {
  if (from.size() != to.size()) throw DimensionError("unitary_mapping: length mismatch");
  const Index n = from.size();
  const Complex overlap = to.dot(from);  // <to|from>
  const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0);
  // Householder reflection sending `from` to phase * to.
  const ComplexVector v = from - phase * to;
  ComplexMatrix h = ComplexMatrix::Identity(n, n);
  const double vv = v.squaredNorm();
  if (vv > 1e-28) h -= (2.0 / vv) * v * v.adjoint();
  // Remove the phase along `to`.
  ComplexMatrix fix = ComplexMatrix::Identity(n, n);
  fix += (std::conj(phase) - 1.0) * to * to.adjoint();
  return fix * h;
}

ComplexMatrix transposition(Index n, Index i, Index j) {
  ComplexMatrix p = ComplexMatrix::Identity(n, n);
  if (i != j) {
    p(i, i) = p(j, j) = 0.0;
    p(i, j) = p(j, i) = 1.0;
  }
  return p;
}

namespace pauli {

ComplexMatrix x() {
  ComplexMatrix s(2, 2);
  s << 0.0, 1.0, 1.0, 0.0;
  return s;
}

ComplexMatrix y() {
  ComplexMatrix s(2, 2);
  s << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return s;
}

ComplexMatrix z() {
  ComplexMatrix s(2, 2);
  s << 1.0, 0.0, 0.0, -1.0;
  return s;
}

}  // namespace pauli

}  // namespace qfc
