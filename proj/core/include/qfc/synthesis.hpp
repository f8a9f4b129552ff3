#pragma once

// Constructive feedback control sequences.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfc/matops.hpp"
#include "qfc/quantum.hpp"

namespace qfc {

/// Per-step, per-outcome unitary controls U_k(t).
struct FeedbackPlan {
  std::vector<std::vector<ComplexMatrix>> steps;  // steps[t][k]
  std::string measurement_label;
  /// Frame U0 in which the measurement is diagonal, when the plan came from
  /// a diagonalized two-outcome measurement. Informational only: the stored
  /// controls already act in the physical frame.
  std::optional<ComplexMatrix> basis_pre_rotation;

  std::size_t length() const { return steps.size(); }

  /// Throws ValidationError unless every control is unitary and every step
  /// has `outcomes` entries.
  void validate(std::size_t outcomes, const Tolerance& tol = {}) const;

  /// This plan followed by `next`.
  FeedbackPlan then(const FeedbackPlan& next) const;
};

/// Two diagonal Kraus operators of the form
///   M_1 = diag(0, a_2, a_3, ..., a_N),  M_2 = diag(b_1, 0, b_3, ..., b_N)
/// with |a_2| = |b_1| = 1 and |a_i|^2 + |b_i|^2 = 1.
class DiagonalTwoOutcome {
 public:
  DiagonalTwoOutcome(std::vector<Complex> alphas, std::vector<Complex> betas,
                     const Tolerance& tol = {});

  const std::vector<Complex>& alphas() const { return alphas_; }
  const std::vector<Complex>& betas() const { return betas_; }
  Index dim() const { return static_cast<Index>(alphas_.size()); }
  Measurement measurement() const;

 private:
  std::vector<Complex> alphas_;
  std::vector<Complex> betas_;
};

/// Simultaneous diagonalization: u1 * M_1 * u0 and u2 * M_2 * u0 are
/// diagonal. `form` is set when the diagonals could be permuted into the
/// DiagonalTwoOutcome pattern (the permutation is already folded into the
/// unitaries); otherwise only the raw diagonals are reported.
struct TwoOutcomeDiagonalization {
  ComplexMatrix u0, u1, u2;
  std::vector<Complex> diag1, diag2;
  std::optional<DiagonalTwoOutcome> form;
};

/// Throws PreconditionError unless m has exactly two outcomes.
TwoOutcomeDiagonalization diagonalize_two_outcome(const Measurement& m,
                                                  const Tolerance& tol = {});

/// Outcomes that share a diagonalizing frame (u_k M_k u0 diagonal for every
/// k) split into two groups whose root-sum-square diagonals fit the
/// DiagonalTwoOutcome pattern. Every outcome of a group gets that group's
/// frame control. Two-outcome measurements go through
/// diagonalize_two_outcome; groups are searched for up to 16 outcomes, the
/// least bitmask (bit k set = outcome k in the second group) winning.
struct GroupedDiagonalization {
  ComplexMatrix u0;
  std::vector<ComplexMatrix> left;               // u_k, empty when no shared frame
  std::vector<std::vector<Complex>> diagonals;   // diag(u_k M_k u0)
  std::vector<std::size_t> group;                // set together with form
  std::optional<DiagonalTwoOutcome> form;
};
GroupedDiagonalization diagonalize_grouped(const Measurement& m, const Tolerance& tol = {});

/// Rewrites controls V_k computed for the diagonal frame into controls for
/// the original measurement: U_k = u0 V_k u_k.
FeedbackPlan lift_plan(const FeedbackPlan& frame_plan,
                       const TwoOutcomeDiagonalization& diag);
/// U_k = u0 V_group(k) u_k. Throws PreconditionError without a form.
FeedbackPlan lift_plan(const FeedbackPlan& frame_plan, const GroupedDiagonalization& diag);

/// One step taking |psi0> to |psif> under any measurement.
FeedbackPlan ppc_one_step(const PureState& psi0, const PureState& psif,
                          const Measurement& m, const Tolerance& tol = {});

/// N - 1 steps purifying any input onto |w><w|. Steps 0..N-3 shuffle the
/// support down one basis vector at a time; the last step rotates e_2
/// (outcome 1) and e_1 (outcome 2) onto w.
FeedbackPlan purification_sequence(const DiagonalTwoOutcome& d, const PureState& w);

/// Largest s such that rho has a diagonal entry above tol at basis index s
/// (1-based); 0 for the zero matrix. After step k of a purification plan
/// this is at most N - k - 1.
Index support_extent(const DensityMatrix& rho, double tol);

/// N + 1 steps taking pure psi0 to sum_i gammas[i] |v_i><v_i|, vs holding
/// the orthonormal v_i as columns.
FeedbackPlan preparation_sequence(const DiagonalTwoOutcome& d, const PureState& psi0,
                                  std::span<const double> gammas,
                                  const ComplexMatrix& vs,
                                  const Tolerance& tol = {});

/// Purification onto |z_1> followed by the preparation tail: 2N - 1 steps
/// from any rho0 to rhof.
FeedbackPlan ddc_sequence(const DiagonalTwoOutcome& d, const DensityMatrix& rho0,
                          const DensityMatrix& rhof, const Tolerance& tol = {});

/// An unmeasured control drawn at random: unitary j with probability p_j.
struct RandomizedStep {
  std::vector<ComplexMatrix> unitaries;
  std::vector<double> probabilities;

  void validate(const Tolerance& tol = {}) const;
  /// sum_j p_j U_j rho U_j^dag
  ComplexMatrix average(const ComplexMatrix& rho) const;
};

/// U_j maps psi to phis[j]; drawn with probability gammas[j].
RandomizedStep randomized_final_step(const PureState& psi,
                                     std::span<const double> gammas,
                                     std::span<const PureState> phis,
                                     const Tolerance& tol = {});

/// For M_k = q_k V_k (V_k unitary), U_k = ubar V_k^dag so that the averaged
/// map is rho -> ubar rho ubar^dag. Throws PreconditionError otherwise.
FeedbackPlan example1_inversion_controls(const Measurement& m,
                                         const ComplexMatrix& ubar,
                                         const Tolerance& tol = {});

}  // namespace qfc
