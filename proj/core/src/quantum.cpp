#include "qfc/quantum.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qfc/errors.hpp"

namespace qfc {

// ---------------------------------------------------------------------------
// PureState

PureState::PureState(ComplexVector v, const Tolerance& tol) : vec_(std::move(v)) {
  if (vec_.size() == 0) throw DimensionError("PureState: empty vector");
  if (std::abs(vec_.norm() - 1.0) > tol.eq) {
    throw ValidationError("PureState: vector norm " + std::to_string(vec_.norm()) + " != 1");
  }
}

PureState PureState::normalized(const ComplexVector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw ValidationError("PureState: cannot normalize the zero vector");
  return PureState(v / norm);
}

PureState PureState::basis(Index n, Index i) {
  if (i < 0 || i >= n) throw DimensionError("PureState::basis: index out of range");
  return PureState(ComplexVector::Unit(n, i));
}

// ---------------------------------------------------------------------------
// DensityMatrix

namespace {

void check_density(const ComplexMatrix& m, const Tolerance& tol) {
  require_square(m, "DensityMatrix");
  if (!is_hermitian(m, tol)) throw ValidationError("DensityMatrix: not Hermitian");
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol.eq) {
    throw ValidationError("DensityMatrix: trace " + std::to_string(tr) + " != 1");
  }
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig < tol.psd) {
    throw ValidationError("DensityMatrix: eigenvalue " + std::to_string(min_eig) +
                          " below the positivity floor");
  }
}

}  // namespace

DensityMatrix::DensityMatrix(ComplexMatrix m, const Tolerance& tol) : mat_(std::move(m)) {
  check_density(mat_, tol);
}

DensityMatrix::DensityMatrix(const PureState& psi) : mat_(psi.projector()) {}

DensityMatrix DensityMatrix::maximally_mixed(Index n) {
  if (n < 1) throw DimensionError("maximally_mixed: n must be >= 1");
  return DensityMatrix(ComplexMatrix::Identity(n, n) / static_cast<double>(n), Unchecked{});
}

DensityMatrix DensityMatrix::stabilized(const ComplexMatrix& raw, const Tolerance& tol,
                                        double* drift) {
  require_square(raw, "DensityMatrix::stabilized");
  const Complex tr = raw.trace();
  const double d = std::max(std::abs(tr - 1.0), max_abs(raw - raw.adjoint()));
  if (drift != nullptr) *drift = d;
  if (d > 10.0 * tol.eq) {
    throw ValidationError("dynamical step drifted by " + std::to_string(d) +
                          " (limit 10 * eq tolerance)");
  }
  ComplexMatrix fixed = 0.5 * (raw + raw.adjoint());
  fixed /= fixed.trace().real();
  return DensityMatrix(std::move(fixed), tol);
}

// ---------------------------------------------------------------------------
// Measurement

double completeness_residual(std::span<const ComplexMatrix> operators) {
  if (operators.empty()) return 1.0;
  const Index n = operators.front().cols();
  ComplexMatrix sum = ComplexMatrix::Zero(n, n);
  for (const auto& op : operators) sum += op.adjoint() * op;
  return max_abs(sum - ComplexMatrix::Identity(n, n));
}

Measurement::Measurement(std::vector<ComplexMatrix> operators, std::string label,
                         const Tolerance& tol)
    : ops_(std::move(operators)), label_(std::move(label)) {
  if (ops_.empty()) throw DimensionError("Measurement: no operators");
  for (const auto& op : ops_) {
    require_square(op, "Measurement operator");
    require_same_shape(op, ops_.front(), "Measurement operator");
  }
  const double residual = completeness_residual(ops_);
  if (residual > tol.eq) {
    throw ValidationError("Measurement: completeness violated, max|sum M^dag M - I| = " +
                          std::to_string(residual));
  }
}

Measurement Measurement::padded(std::size_t count) const {
  if (count <= ops_.size()) return *this;
  auto ops = ops_;
  ops.resize(count, ComplexMatrix::Zero(dim(), dim()));
  return Measurement(std::move(ops), label_);
}

// ---------------------------------------------------------------------------
// Dynamics

namespace {

void require_compatible(const DensityMatrix& rho, const Measurement& m, const char* what) {
  if (rho.dim() != m.dim()) {
    throw DimensionError(std::string(what) + ": state dimension " + std::to_string(rho.dim()) +
                         " vs measurement dimension " + std::to_string(m.dim()));
  }
}

}  // namespace

OutcomeDistribution outcome_probabilities(const DensityMatrix& rho, const Measurement& m) {
  require_compatible(rho, m, "outcome_probabilities");
  OutcomeDistribution probs;
  probs.reserve(m.outcomes());
  for (const auto& op : m.operators()) {
    probs.push_back((op * rho.matrix() * op.adjoint()).trace().real());
  }
  return probs;
}

DensityMatrix conditional_state(const DensityMatrix& rho, const Measurement& m, std::size_t k,
                                const Tolerance& tol) {
  require_compatible(rho, m, "conditional_state");
  if (k >= m.outcomes()) throw DimensionError("conditional_state: outcome index out of range");
  const ComplexMatrix raw = m[k] * rho.matrix() * m[k].adjoint();
  const double p = raw.trace().real();
  if (p <= tol.rank) {
    throw DegenerateConditioningError("conditional_state: outcome " + std::to_string(k) +
                                      " has probability " + std::to_string(p));
  }
  // Rounding in raw is absolute, so after division it scales with 1/p.
  Tolerance local = tol;
  local.eq += 1e-14 / p;
  local.psd -= 1e-14 / p;
  ComplexMatrix cond = 0.5 * (raw + raw.adjoint()) / p;
  return DensityMatrix(std::move(cond), local);
}

DensityMatrix apply_cptp(const DensityMatrix& rho, const Measurement& m, const Tolerance& tol) {
  require_compatible(rho, m, "apply_cptp");
  ComplexMatrix out = ComplexMatrix::Zero(rho.dim(), rho.dim());
  for (const auto& op : m.operators()) out += op * rho.matrix() * op.adjoint();
  return DensityMatrix::stabilized(out, tol);
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const ComplexMatrix& u,
                            const Tolerance& tol) {
  require_square(u, "apply_unitary");
  if (u.rows() != rho.dim()) throw DimensionError("apply_unitary: dimension mismatch");
  if (!is_unitary(u, tol)) throw ValidationError("apply_unitary: control is not unitary");
  return DensityMatrix::stabilized(u * rho.matrix() * u.adjoint(), tol);
}

double unitality_residual(const Measurement& m) {
  ComplexMatrix sum = ComplexMatrix::Zero(m.dim(), m.dim());
  for (const auto& op : m.operators()) sum += op * op.adjoint();
  return max_abs(sum - ComplexMatrix::Identity(m.dim(), m.dim()));
}

bool is_unital(const Measurement& m, const Tolerance& tol) {
  return unitality_residual(m) <= tol.eq;
}

ComplexMatrix choi_matrix(const Measurement& m) {
  const Index n = m.dim();
  ComplexMatrix choi = ComplexMatrix::Zero(n * n, n * n);
  for (const auto& op : m.operators()) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        // M E_ij M^dag = (M e_i)(M e_j)^dag
        choi.block(i * n, j * n, n, n) += op.col(i) * op.col(j).adjoint();
      }
    }
  }
  return choi;
}

bool maps_equal(const Measurement& a, const Measurement& b, const Tolerance& tol) {
  if (a.dim() != b.dim()) throw DimensionError("maps_equal: dimension mismatch");
  return max_abs(choi_matrix(a) - choi_matrix(b)) <= tol.eq;
}

double purity(const DensityMatrix& rho) {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return rho.matrix().squaredNorm();
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}

// ---------------------------------------------------------------------------
// Random inputs

DensityMatrix random_density(Index n, Index rank, std::uint64_t seed) {
  if (n < 1 || rank < 1 || rank > n) {
    throw PreconditionError("random_density: need 1 <= rank <= n");
  }
  std::mt19937_64 rng(mix_seed(seed, 1));
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  RealVector lambda = RealVector::Zero(n);
  for (Index i = 0; i < rank; ++i) lambda(i) = weight(rng);
  lambda /= lambda.sum();
  const ComplexMatrix v = haar_random_unitary(n, mix_seed(seed, 2));
  return DensityMatrix::stabilized(v * lambda.cast<Complex>().asDiagonal() * v.adjoint(),
                                   Tolerance{});
}

PureState random_pure_state(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 3));
  return PureState::normalized(complex_gaussian(n, 1, rng).col(0));
}

Measurement random_measurement(Index n, std::size_t outcomes, std::uint64_t seed) {
  if (outcomes == 0) throw PreconditionError("random_measurement: need at least one outcome");
  const Index big = n * static_cast<Index>(outcomes);
  const ComplexMatrix isometry = haar_random_unitary(big, mix_seed(seed, 4)).leftCols(n);
  std::vector<ComplexMatrix> ops;
  ops.reserve(outcomes);
  for (std::size_t k = 0; k < outcomes; ++k) {
    ops.push_back(isometry.middleRows(static_cast<Index>(k) * n, n));
  }
  return Measurement(std::move(ops), "random(" + std::to_string(seed) + ")");
}

Measurement random_unitary_mixture(Index n, std::size_t outcomes, std::uint64_t seed) {
  if (outcomes == 0) throw PreconditionError("random_unitary_mixture: need an outcome");
  std::mt19937_64 rng(mix_seed(seed, 5));
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<double> p(outcomes);
  for (auto& x : p) x = weight(rng);
  double total = 0.0;
  for (double x : p) total += x;
  std::vector<ComplexMatrix> ops;
  ops.reserve(outcomes);
  for (std::size_t k = 0; k < outcomes; ++k) {
    ops.push_back(std::sqrt(p[k] / total) * haar_random_unitary(n, mix_seed(seed, 100 + k)));
  }
  return Measurement(std::move(ops), "unitary-mixture(" + std::to_string(seed) + ")");
}

// ---------------------------------------------------------------------------
// Built-in measurements

namespace builtin {

Measurement example1_depolarizing() {
  const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
  return Measurement({0.5 * id, 0.5 * pauli::x(), 0.5 * pauli::y(), 0.5 * pauli::z()},
                     "example1-depolarizing");
}

Measurement example3_unitary_pair(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("example3_unitary_pair: p in [0, 1]");
  return Measurement({std::sqrt(p) * pauli::z(),
                      std::sqrt(1.0 - p) * ComplexMatrix::Identity(2, 2)},
                     "example3-unitary-pair(" + std::to_string(p) + ")");
}

Measurement example3_nonunital(double a) {
  if (!(a > 0.0 && a <= 1.0)) throw PreconditionError("example3_nonunital: a in (0, 1]");
  ComplexMatrix n1 = ComplexMatrix::Zero(2, 2);
  n1(0, 1) = a;
  ComplexMatrix n2 = ComplexMatrix::Zero(2, 2);
  n2(0, 0) = 1.0;
  n2(1, 1) = std::sqrt(1.0 - a * a);
  return Measurement({n1, n2}, "example3-nonunital(" + std::to_string(a) + ")");
}

Measurement example2_full_rank() {
  const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
  return Measurement({std::sqrt(0.8) * id, std::sqrt(0.2) * id}, "example2-full-rank");
}

Measurement projective_computational(Index n) {
  if (n < 1) throw PreconditionError("projective_computational: n >= 1");
  std::vector<ComplexMatrix> ops;
  for (Index i = 0; i < n; ++i) {
    ComplexMatrix p = ComplexMatrix::Zero(n, n);
    p(i, i) = 1.0;
    ops.push_back(std::move(p));
  }
  return Measurement(std::move(ops), "projective-computational(" + std::to_string(n) + ")");
}

Measurement diagonal_two_outcome(const std::vector<Complex>& alphas,
                                 const std::vector<Complex>& betas) {
  if (alphas.size() != betas.size() || alphas.empty()) {
    throw DimensionError("diagonal_two_outcome: diagonals must have equal nonzero length");
  }
  const auto n = static_cast<Index>(alphas.size());
  ComplexVector a(n), b(n);
  for (Index i = 0; i < n; ++i) {
    a(i) = alphas[static_cast<std::size_t>(i)];
    b(i) = betas[static_cast<std::size_t>(i)];
  }
  return Measurement({ComplexMatrix(a.asDiagonal()), ComplexMatrix(b.asDiagonal())},
                     "diagonal-two-outcome");
}

}  // namespace builtin

}  // namespace qfc
