#pragma once

// Test-only reference computations. Each one takes a different route from
// the library code it checks.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "qfc/matops.hpp"
#include "qfc/quantum.hpp"

namespace qfc::oracle {

/// Real rank of matrices viewed as vectors in R^(2 n^2), by SVD.
inline int real_span_rank(const std::vector<ComplexMatrix>& mats, double tol = 1e-9) {
  if (mats.empty()) return 0;
  const Index n2 = mats.front().size();
  Eigen::MatrixXd stacked(2 * n2, static_cast<Index>(mats.size()));
  for (std::size_t c = 0; c < mats.size(); ++c) {
    const ComplexMatrix& m = mats[c];
    for (Index i = 0; i < n2; ++i) {
      stacked(i, static_cast<Index>(c)) = m.data()[i].real();
      stacked(n2 + i, static_cast<Index>(c)) = m.data()[i].imag();
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Index i = 0; i < s.size(); ++i) rank += s(i) > tol * std::max(1.0, s(0)) ? 1 : 0;
  return rank;
}

/// Dimension of the Lie algebra generated by the traceless parts of
/// {-i H}, by bracketing every word up to `depth` levels and taking the
/// rank of the whole pile.
inline int brute_force_lie_dimension(const std::vector<ComplexMatrix>& hamiltonians, int depth) {
  const Index n = hamiltonians.front().rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  std::vector<ComplexMatrix> level;
  for (const auto& h : hamiltonians) {
    ComplexMatrix x = Complex(0, -1) * h;
    x -= (x.trace() / static_cast<double>(n)) * id;
    level.push_back(x);
  }
  std::vector<ComplexMatrix> all = level;
  const std::vector<ComplexMatrix> gens = level;
  for (int d = 1; d < depth; ++d) {
    std::vector<ComplexMatrix> next;
    for (const auto& g : gens) {
      for (const auto& x : level) {
        ComplexMatrix c = g * x - x * g;
        if (c.norm() > 1e-12) next.push_back(c / c.norm());
      }
    }
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
    if (level.size() > 400) level.resize(400);
  }
  return real_span_rank(all);
}

/// exp(A) by a Taylor series with scaling and squaring.
inline ComplexMatrix taylor_expm(const ComplexMatrix& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.25) {
    norm /= 2.0;
    ++squarings;
  }
  const ComplexMatrix x = a / std::pow(2.0, squarings);
  ComplexMatrix term = ComplexMatrix::Identity(a.rows(), a.cols());
  ComplexMatrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// R factor with positive diagonal from Householder QR (full-rank inputs).
inline ComplexMatrix positive_householder_r(const ComplexMatrix& a) {
  Eigen::HouseholderQR<ComplexMatrix> qr(a);
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < r.rows(); ++i) {
    const Complex d = r(i, i);
    if (std::abs(d) > 0) r.row(i) *= std::conj(d) / std::abs(d);
  }
  return r;
}

/// (1/2) * sum of singular values of a - b.
inline double svd_trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::JacobiSVD<ComplexMatrix> svd(a - b);
  return 0.5 * svd.singularValues().sum();
}

/// One averaged feedback step written out term by term.
inline ComplexMatrix feedback_step(const ComplexMatrix& rho, const Measurement& m,
                                   const std::vector<ComplexMatrix>& controls) {
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  for (std::size_t k = 0; k < m.outcomes(); ++k) {
    const ComplexMatrix a = controls[k] * m[k];
    out += a * rho * a.adjoint();
  }
  return out;
}

/// Replays every step of a plan with feedback_step.
inline ComplexMatrix replay(const ComplexMatrix& rho0, const Measurement& m,
                            const std::vector<std::vector<ComplexMatrix>>& steps) {
  ComplexMatrix rho = rho0;
  for (const auto& s : steps) rho = feedback_step(rho, m, s);
  return rho;
}

inline std::vector<double> sorted_spectrum(const ComplexMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (h + h.adjoint()));
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + h.rows());
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

/// x is majorized by y (both sorted descending, equal sums).
inline bool majorized_by(const std::vector<double>& x, const std::vector<double>& y,
                         double tol) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    if (sx > sy + tol) return false;
  }
  return std::abs(sx - sy) <= tol;
}

/// Rank-r matrix: a Gaussian matrix times a random rank-r projector.
inline ComplexMatrix rank_deficient(Index n, Index r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ComplexMatrix b = complex_gaussian(n, n, rng);
  const ComplexMatrix v = haar_random_unitary(n, seed ^ 0x5eedULL).leftCols(r);
  return b * (v * v.adjoint());
}

inline ComplexMatrix gaussian(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return complex_gaussian(n, n, rng);
}

inline ComplexMatrix random_hermitian(Index n, std::uint64_t seed) {
  const ComplexMatrix g = gaussian(n, seed);
  return 0.5 * (g + g.adjoint());
}

}  // namespace qfc::oracle

namespace qfc::oracle {

/// e_target is stabilizable iff some nonzero M_k either annihilates the
/// target or does not have it as an eigenvector of M_k^dag M_k.
inline bool stabilizable_by_eigenvectors(const Measurement& m, const ComplexVector& target,
                                         double tol = 1e-9) {
  for (const auto& mk : m.operators()) {
    if (mk.cwiseAbs().maxCoeff() <= tol) continue;
    const ComplexVector image = mk * target;
    if (image.norm() <= tol) return true;
    const ComplexVector g = mk.adjoint() * image;
    const Complex lambda = target.dot(g);
    if ((g - lambda * target).norm() > tol) return true;
  }
  return false;
}

/// Scales `ops` so that sum A^dag A <= I/2, then appends the positive square
/// root of the remainder as the last Kraus operator.
inline Measurement completed_measurement(std::vector<ComplexMatrix> ops) {
  const Index n = ops.front().rows();
  ComplexMatrix g = ComplexMatrix::Zero(n, n);
  for (const auto& a : ops) g += a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g);
  const double scale = std::sqrt(0.5 / es.eigenvalues().maxCoeff());
  g.setZero();
  for (auto& a : ops) {
    a *= scale;
    g += a.adjoint() * a;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> rest(ComplexMatrix::Identity(n, n) - g);
  ops.push_back(rest.operatorSqrt());
  return Measurement(std::move(ops));
}

}  // namespace qfc::oracle

#include "qfc/synthesis.hpp"

namespace qfc::oracle {

/// A random measurement already in the diagonal two-outcome pattern.
inline DiagonalTwoOutcome random_ddc_form(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto phase = [&] { return std::polar(1.0, 2.0 * 3.141592653589793 * uni(rng)); };
  std::vector<Complex> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
  a[0] = 0.0;
  b[0] = phase();
  a[1] = phase();
  b[1] = 0.0;
  for (std::size_t i = 2; i < a.size(); ++i) {
    const double theta = 0.5 * 3.141592653589793 * uni(rng);
    a[i] = std::cos(theta) * phase();
    b[i] = std::sin(theta) * phase();
  }
  return DiagonalTwoOutcome(std::move(a), std::move(b));
}

/// {V d1 W, V' d2 W} for Haar V, V', W.
inline Measurement disguise(const DiagonalTwoOutcome& d, std::uint64_t seed) {
  const Measurement m = d.measurement();
  const Index n = d.dim();
  const ComplexMatrix w = haar_random_unitary(n, seed * 3 + 1);
  return Measurement({haar_random_unitary(n, seed * 3 + 2) * m[0] * w,
                      haar_random_unitary(n, seed * 3 + 3) * m[1] * w});
}

}  // namespace qfc::oracle
