#include "qfc/synthesis.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

#include "qfc/canonical.hpp"
#include "qfc/controllability.hpp"
#include "qfc/errors.hpp"

namespace qfc {

void FeedbackPlan::validate(std::size_t outcomes, const Tolerance& tol) const {
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (steps[t].size() != outcomes) {
      throw ValidationError("FeedbackPlan: step " + std::to_string(t) + " has " +
                            std::to_string(steps[t].size()) + " controls, expected " +
                            std::to_string(outcomes));
    }
    for (const auto& u : steps[t]) {
      if (!is_unitary(u, tol)) {
        throw ValidationError("FeedbackPlan: non-unitary control at step " + std::to_string(t));
      }
    }
  }
}

FeedbackPlan FeedbackPlan::then(const FeedbackPlan& next) const {
  FeedbackPlan out = *this;
  out.steps.insert(out.steps.end(), next.steps.begin(), next.steps.end());
  return out;
}

// ---------------------------------------------------------------------------

DiagonalTwoOutcome::DiagonalTwoOutcome(std::vector<Complex> alphas, std::vector<Complex> betas,
                                       const Tolerance& tol)
    : alphas_(std::move(alphas)), betas_(std::move(betas)) {
  if (alphas_.size() != betas_.size() || alphas_.size() < 2) {
    throw DimensionError("DiagonalTwoOutcome: need two diagonals of equal length >= 2");
  }
  if (std::abs(alphas_[0]) > tol.eq || std::abs(betas_[1]) > tol.eq) {
    throw ValidationError("DiagonalTwoOutcome: need alpha_1 = 0 and beta_2 = 0");
  }
  if (std::abs(std::abs(alphas_[1]) - 1.0) > tol.eq ||
      std::abs(std::abs(betas_[0]) - 1.0) > tol.eq) {
    throw ValidationError("DiagonalTwoOutcome: need |alpha_2| = |beta_1| = 1");
  }
  for (std::size_t i = 2; i < alphas_.size(); ++i) {
    if (std::abs(std::norm(alphas_[i]) + std::norm(betas_[i]) - 1.0) > tol.eq) {
      throw ValidationError("DiagonalTwoOutcome: |alpha_i|^2 + |beta_i|^2 != 1 at i = " +
                            std::to_string(i + 1));
    }
  }
  alphas_[0] = 0.0;
  betas_[1] = 0.0;
}

Measurement DiagonalTwoOutcome::measurement() const {
  return builtin::diagonal_two_outcome(alphas_, betas_);
}

// ---------------------------------------------------------------------------

namespace {

/// A unitary u such that u * x is diagonal with a nonnegative diagonal, for
/// x with mutually orthogonal columns: each nonzero column is sent onto its
/// own axis and the zero columns' axes are filled by a completion.
ComplexMatrix axis_alignment(const ComplexMatrix& x, const Tolerance& tol) {
  const Index n = x.rows();
  std::vector<Index> nonzero;
  ComplexMatrix accepted(n, n);
  Index count = 0;
  for (Index i = 0; i < n; ++i) {
    ComplexVector c = x.col(i);
    for (Index r = 0; r < count; ++r) c -= accepted.col(r) * accepted.col(r).dot(c);
    const double norm = c.norm();
    if (norm > tol.rank) {
      accepted.col(count++) = c / norm;
      nonzero.push_back(i);
    }
  }
  const ComplexMatrix completed = orthonormal_completion(accepted.leftCols(count), tol.rank);
  ComplexMatrix basis(n, n);
  Index next_free = count;
  for (Index i = 0, r = 0; i < n; ++i) {
    if (r < count && nonzero[static_cast<std::size_t>(r)] == i) {
      basis.col(i) = completed.col(r++);
    } else {
      basis.col(i) = completed.col(next_free++);
    }
  }
  return basis.adjoint();
}

/// Permutation (as an order of old indices) putting the index p with
/// alpha = 0, |beta| = 1 first and q with beta = 0, |alpha| = 1 second.
std::optional<std::vector<Index>> pattern_order(const std::vector<Complex>& alphas,
                                                const std::vector<Complex>& betas,
                                                const Tolerance& tol) {
  auto find = [&](const std::vector<Complex>& zero, const std::vector<Complex>& unit) -> Index {
    for (std::size_t i = 0; i < zero.size(); ++i) {
      if (std::abs(zero[i]) <= tol.rank && std::abs(std::abs(unit[i]) - 1.0) <= tol.eq) {
        return static_cast<Index>(i);
      }
    }
    return -1;
  };
  const Index p = find(alphas, betas);
  const Index q = find(betas, alphas);
  if (p < 0 || q < 0) return std::nullopt;
  std::vector<Index> order{p, q};
  for (Index i = 0; i < static_cast<Index>(alphas.size()); ++i) {
    if (i != p && i != q) order.push_back(i);
  }
  return order;
}

/// perm * e_order[r] = e_r
ComplexMatrix order_matrix(const std::vector<Index>& order) {
  const auto n = static_cast<Index>(order.size());
  ComplexMatrix perm = ComplexMatrix::Zero(n, n);
  for (Index r = 0; r < n; ++r) perm(r, order[static_cast<std::size_t>(r)]) = 1.0;
  return perm;
}

template <class T>
std::vector<T> reorder(const std::vector<T>& v, const std::vector<Index>& order) {
  std::vector<T> out;
  for (Index i : order) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

TwoOutcomeDiagonalization diagonalize_two_outcome(const Measurement& m, const Tolerance& tol) {
  if (m.outcomes() != 2) {
    throw PreconditionError("diagonalize_two_outcome: expected 2 outcomes, got " +
                            std::to_string(m.outcomes()));
  }
  const double residual = completeness_residual(m.operators());
  if (residual > tol.eq) {
    throw ValidationError("diagonalize_two_outcome: completeness residual " +
                          std::to_string(residual));
  }
  const Index n = m.dim();

  // u1 M_1 u0 = Sigma from the SVD M_1 = W Sigma V^dag.
  Eigen::JacobiSVD<ComplexMatrix> svd(m[0], Eigen::ComputeFullU | Eigen::ComputeFullV);
  ComplexMatrix u0 = svd.matrixV();
  ComplexMatrix u1 = svd.matrixU().adjoint();

  // Columns of M_2 u0 are orthogonal by completeness.
  ComplexMatrix u2 = axis_alignment(m[1] * u0, tol);

  const ComplexMatrix d1 = u1 * m[0] * u0;
  const ComplexMatrix d2 = u2 * m[1] * u0;
  const double off = std::max(max_abs(d1 - ComplexMatrix(d1.diagonal().asDiagonal())),
                              max_abs(d2 - ComplexMatrix(d2.diagonal().asDiagonal())));
  if (off > std::sqrt(tol.eq)) {
    throw Error("diagonalize_two_outcome: off-diagonal residual " + std::to_string(off));
  }

  TwoOutcomeDiagonalization out;
  for (Index i = 0; i < n; ++i) {
    out.diag1.push_back(d1(i, i));
    out.diag2.push_back(d2(i, i));
  }

  const auto order = pattern_order(out.diag1, out.diag2, tol);
  if (!order) {
    out.u0 = std::move(u0);
    out.u1 = std::move(u1);
    out.u2 = std::move(u2);
    return out;
  }
  const ComplexMatrix perm = order_matrix(*order);
  out.u0 = u0 * perm.transpose();
  out.u1 = perm * u1;
  out.u2 = perm * u2;
  out.diag1 = reorder(out.diag1, *order);
  out.diag2 = reorder(out.diag2, *order);
  out.form.emplace(out.diag1, out.diag2, tol);
  return out;
}

GroupedDiagonalization diagonalize_grouped(const Measurement& m, const Tolerance& tol) {
  const std::size_t k_count = m.outcomes();
  const Index n = m.dim();
  GroupedDiagonalization out;
  if (k_count == 2) {
    TwoOutcomeDiagonalization two = diagonalize_two_outcome(m, tol);
    out.u0 = std::move(two.u0);
    out.left = {std::move(two.u1), std::move(two.u2)};
    out.diagonals = {std::move(two.diag1), std::move(two.diag2)};
    if (two.form) {
      out.group = {0, 1};
      out.form = std::move(two.form);
    }
    return out;
  }

  // Commuting effects share an eigenbasis; a generic combination finds it.
  ComplexMatrix mix = ComplexMatrix::Zero(n, n);
  for (std::size_t k = 0; k < k_count; ++k) {
    mix += std::sqrt(static_cast<double>(k) + 2.0) * m[k].adjoint() * m[k];
  }
  out.u0 = eig_hermitian(0.5 * (mix + mix.adjoint()), Tolerance::uniform(1e-8)).eigenvectors;
  for (std::size_t k = 0; k < k_count; ++k) {
    const ComplexMatrix gram = out.u0.adjoint() * m[k].adjoint() * m[k] * out.u0;
    if (max_abs(gram - ComplexMatrix(gram.diagonal().asDiagonal())) > std::sqrt(tol.eq)) {
      out.left.clear();
      out.diagonals.clear();
      return out;
    }
    out.left.push_back(axis_alignment(m[k] * out.u0, tol));
    const ComplexMatrix d = out.left.back() * m[k] * out.u0;
    std::vector<Complex> diag;
    for (Index i = 0; i < n; ++i) diag.push_back(d(i, i));
    out.diagonals.push_back(std::move(diag));
  }
  if (k_count < 2 || k_count > 16) return out;

  for (std::uint32_t mask = 0; mask < (1u << k_count); ++mask) {
    std::vector<Complex> sums[2] = {std::vector<Complex>(static_cast<std::size_t>(n), 0.0),
                                    std::vector<Complex>(static_cast<std::size_t>(n), 0.0)};
    for (std::size_t k = 0; k < k_count; ++k) {
      auto& target = sums[(mask >> k) & 1u];
      for (std::size_t j = 0; j < target.size(); ++j) {
        target[j] += std::norm(out.diagonals[k][j]);
      }
    }
    for (auto& v : sums) {
      for (auto& x : v) x = std::sqrt(x.real());
    }
    const auto order = pattern_order(sums[0], sums[1], tol);
    if (!order) continue;
    const ComplexMatrix perm = order_matrix(*order);
    out.u0 = out.u0 * perm.transpose();
    for (auto& u : out.left) u = perm * u;
    for (auto& d : out.diagonals) d = reorder(d, *order);
    for (std::size_t k = 0; k < k_count; ++k) out.group.push_back((mask >> k) & 1u);
    out.form.emplace(reorder(sums[0], *order), reorder(sums[1], *order), tol);
    return out;
  }
  return out;
}

FeedbackPlan lift_plan(const FeedbackPlan& frame_plan, const TwoOutcomeDiagonalization& diag) {
  FeedbackPlan out;
  out.measurement_label = frame_plan.measurement_label;
  out.basis_pre_rotation = diag.u0;
  const ComplexMatrix* feedback[2] = {&diag.u1, &diag.u2};
  for (const auto& step : frame_plan.steps) {
    if (step.size() != 2) throw DimensionError("lift_plan: expected two controls per step");
    std::vector<ComplexMatrix> lifted;
    for (std::size_t k = 0; k < 2; ++k) lifted.push_back(diag.u0 * step[k] * *feedback[k]);
    out.steps.push_back(std::move(lifted));
  }
  return out;
}

FeedbackPlan lift_plan(const FeedbackPlan& frame_plan, const GroupedDiagonalization& diag) {
  if (!diag.form) throw PreconditionError("lift_plan: measurement has no two-group diagonal form");
  FeedbackPlan out;
  out.measurement_label = frame_plan.measurement_label;
  out.basis_pre_rotation = diag.u0;
  for (const auto& step : frame_plan.steps) {
    if (step.size() != 2) throw DimensionError("lift_plan: expected two controls per step");
    std::vector<ComplexMatrix> lifted;
    for (std::size_t k = 0; k < diag.left.size(); ++k) {
      lifted.push_back(diag.u0 * step[diag.group[k]] * diag.left[k]);
    }
    out.steps.push_back(std::move(lifted));
  }
  return out;
}

// ---------------------------------------------------------------------------

FeedbackPlan ppc_one_step(const PureState& psi0, const PureState& psif, const Measurement& m,
                          const Tolerance& tol) {
  if (psi0.dim() != m.dim() || psif.dim() != m.dim()) {
    throw DimensionError("ppc_one_step: dimension mismatch");
  }
  std::vector<ComplexMatrix> controls;
  for (const auto& op : m.operators()) {
    const ComplexVector branch = op * psi0.vector();
    const double norm = branch.norm();
    if (norm * norm > tol.rank) {
      controls.push_back(unitary_mapping(branch / norm, psif.vector()));
    } else {
      controls.push_back(ComplexMatrix::Identity(m.dim(), m.dim()));
    }
  }
  FeedbackPlan plan;
  plan.measurement_label = m.label();
  plan.steps.push_back(std::move(controls));
  return plan;
}

FeedbackPlan purification_sequence(const DiagonalTwoOutcome& d, const PureState& w) {
  const Index n = d.dim();
  if (w.dim() != n) throw DimensionError("purification_sequence: dimension mismatch");
  FeedbackPlan plan;
  plan.measurement_label = "diagonal-two-outcome";
  if (n < 2) return plan;
  // Step i moves the content of e_{N-i} into the slot each operator clears.
  for (Index i = 0; i + 3 <= n; ++i) {
    const Index top = n - 1 - i;
    plan.steps.push_back({transposition(n, 0, top), transposition(n, 1, top)});
  }
  plan.steps.push_back({unitary_mapping(ComplexVector::Unit(n, 1), w.vector()),
                        unitary_mapping(ComplexVector::Unit(n, 0), w.vector())});
  return plan;
}

Index support_extent(const DensityMatrix& rho, double tol) {
  for (Index s = rho.dim() - 1; s >= 0; --s) {
    if (std::abs(rho.matrix()(s, s)) > tol) return s + 1;
  }
  return 0;
}

namespace {

/// sqrt(ratio) e_2 + sqrt(1 - ratio) e_1
ComplexVector split_vector(Index n, double ratio) {
  ratio = std::clamp(ratio, 0.0, 1.0);
  ComplexVector z = ComplexVector::Zero(n);
  z(1) = std::sqrt(ratio);
  z(0) = std::sqrt(1.0 - ratio);
  return z;
}

std::vector<double> checked_weights(std::span<const double> gammas, Index n,
                                    const Tolerance& tol) {
  if (static_cast<Index>(gammas.size()) != n) {
    throw DimensionError("preparation_sequence: expected " + std::to_string(n) + " weights");
  }
  std::vector<double> g(gammas.begin(), gammas.end());
  for (double& x : g) {
    if (x < -tol.eq) throw PreconditionError("preparation_sequence: negative weight");
    x = std::max(x, 0.0);
  }
  const double total = std::accumulate(g.begin(), g.end(), 0.0);
  if (std::abs(total - 1.0) > tol.eq) {
    throw PreconditionError("preparation_sequence: weights sum to " + std::to_string(total));
  }
  for (double& x : g) x /= total;
  return g;
}

}  // namespace

FeedbackPlan preparation_sequence(const DiagonalTwoOutcome& d, const PureState& psi0,
                                  std::span<const double> gammas, const ComplexMatrix& vs,
                                  const Tolerance& tol) {
  const Index n = d.dim();
  if (psi0.dim() != n || vs.rows() != n || vs.cols() != n) {
    throw DimensionError("preparation_sequence: dimension mismatch");
  }
  if (!is_unitary(vs, tol)) throw PreconditionError("preparation_sequence: vs not orthonormal");
  const std::vector<double> g = checked_weights(gammas, n, tol);
  const Measurement m = d.measurement();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);

  // Weight still held by the |z> component once gammas[0..i) are deposited.
  auto remaining = [&](std::size_t i) {
    return 1.0 - std::accumulate(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
  };
  auto z = [&](std::size_t i) {  // |z_{i+1}> in 1-based numbering
    const double rest = remaining(i);
    return split_vector(n, rest <= tol.rank ? 0.0 : g[i] / rest);
  };

  FeedbackPlan plan;
  plan.measurement_label = m.label();

  // Step 0: every surviving branch of psi0 onto z_1.
  plan.steps.push_back(ppc_one_step(psi0, PureState::normalized(z(0)), m, tol).steps.front());

  // Steps 1..N-2: outcome 1 deposits gammas[i-1] at e_{N-i+1}, outcome 2
  // re-splits the e_1 remainder into z_{i+1}.
  for (Index i = 1; i + 2 <= n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    plan.steps.push_back({transposition(n, 1, n - i),
                          unitary_mapping(ComplexVector::Unit(n, 0), z(si))});
  }

  // Step N-1 lets the measurement split z_{N-1} onto e_2 and e_1.
  plan.steps.push_back({id, id});

  // Step N: U e_i = v_{N-i+1}.
  ComplexMatrix u(n, n);
  for (Index i = 0; i < n; ++i) u.col(i) = vs.col(n - 1 - i);
  plan.steps.push_back({u, u});
  return plan;
}

FeedbackPlan ddc_sequence(const DiagonalTwoOutcome& d, const DensityMatrix& rho0,
                          const DensityMatrix& rhof, const Tolerance& tol) {
  const Index n = d.dim();
  if (rho0.dim() != n || rhof.dim() != n) throw DimensionError("ddc_sequence: dimension mismatch");
  const HermitianEigen eig = eig_hermitian(rhof.matrix(), tol);
  std::vector<double> gammas(eig.eigenvalues.data(), eig.eigenvalues.data() + n);
  double total = 0.0;
  for (double& x : gammas) total += (x = std::max(x, 0.0));
  for (double& x : gammas) x /= total;

  const PureState z1 = PureState::normalized(split_vector(n, gammas[0]));
  FeedbackPlan plan = purification_sequence(d, z1);
  FeedbackPlan prep = preparation_sequence(d, z1, gammas, eig.eigenvectors, tol);
  // Purification already ends in |z_1>, which is the state preparation
  // reaches after its first step.
  prep.steps.erase(prep.steps.begin());
  plan = plan.then(prep);
  plan.measurement_label = prep.measurement_label;
  return plan;
}

// ---------------------------------------------------------------------------

void RandomizedStep::validate(const Tolerance& tol) const {
  if (unitaries.size() != probabilities.size() || unitaries.empty()) {
    throw ValidationError("RandomizedStep: need one probability per unitary");
  }
  double total = 0.0;
  for (double p : probabilities) {
    if (p < 0.0) throw ValidationError("RandomizedStep: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > tol.eq) throw ValidationError("RandomizedStep: probabilities do not sum to 1");
  for (const auto& u : unitaries) {
    if (!is_unitary(u, tol)) throw ValidationError("RandomizedStep: non-unitary choice");
  }
}

ComplexMatrix RandomizedStep::average(const ComplexMatrix& rho) const {
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  for (std::size_t j = 0; j < unitaries.size(); ++j) {
    out += probabilities[j] * unitaries[j] * rho * unitaries[j].adjoint();
  }
  return out;
}

RandomizedStep randomized_final_step(const PureState& psi, std::span<const double> gammas,
                                     std::span<const PureState> phis, const Tolerance& tol) {
  if (gammas.size() != phis.size() || phis.empty()) {
    throw DimensionError("randomized_final_step: need one weight per target vector");
  }
  RandomizedStep step;
  double total = 0.0;
  for (double g : gammas) {
    if (g < -tol.eq) throw PreconditionError("randomized_final_step: negative weight");
    total += std::max(g, 0.0);
  }
  if (std::abs(total - 1.0) > tol.eq) {
    throw PreconditionError("randomized_final_step: weights sum to " + std::to_string(total));
  }
  for (std::size_t j = 0; j < phis.size(); ++j) {
    if (phis[j].dim() != psi.dim()) throw DimensionError("randomized_final_step: dimension mismatch");
    step.unitaries.push_back(unitary_mapping(psi.vector(), phis[j].vector()));
    step.probabilities.push_back(std::max(gammas[j], 0.0) / total);
  }
  return step;
}

FeedbackPlan example1_inversion_controls(const Measurement& m, const ComplexMatrix& ubar,
                                         const Tolerance& tol) {
  require_square(ubar, "example1_inversion_controls");
  if (ubar.rows() != m.dim()) throw DimensionError("example1_inversion_controls: dimension mismatch");
  if (!is_unitary(ubar, tol)) throw ValidationError("example1_inversion_controls: target not unitary");
  std::vector<ComplexMatrix> controls;
  for (std::size_t k = 0; k < m.outcomes(); ++k) {
    const ComplexMatrix r = canonical_form(m[k], tol);
    if (!is_scalar_matrix(r, tol.eq)) {
      throw PreconditionError("example1_inversion_controls: operator " + std::to_string(k + 1) +
                              " is not a scalar multiple of a unitary");
    }
    const double q = r(0, 0).real();
    if (q <= tol.rank) {
      controls.push_back(ubar);
    } else {
      controls.push_back(ubar * (m[k] / q).adjoint());
    }
  }
  FeedbackPlan plan;
  plan.measurement_label = m.label();
  plan.steps.push_back(std::move(controls));
  return plan;
}

}  // namespace qfc
