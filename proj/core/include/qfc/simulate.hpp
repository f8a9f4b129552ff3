#pragma once

// Feedback dynamics: averaged evolution, sampled trajectories, the greedy
// stabilizing law, and spectral convergence diagnostics.

#include <cstddef>
#include <cstdint>
#include <concepts>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qfc/matops.hpp"
#include "qfc/quantum.hpp"
#include "qfc/synthesis.hpp"

namespace qfc {

struct FixedPlanLaw {
  FeedbackPlan plan;
};

struct StationaryLaw {
  std::vector<ComplexMatrix> controls;  // one per outcome
};

/// On outcome k with conditioned state sigma, rotate the principal
/// eigenvector of sigma onto the target.
struct GreedyLaw {
  PureState target;
};

/// A fixed plan followed by one unmeasured randomized step.
struct RandomizedTailLaw {
  FeedbackPlan plan;
  RandomizedStep tail;
};

class FeedbackLaw {
 public:
  using Kind = std::variant<FixedPlanLaw, StationaryLaw, GreedyLaw, RandomizedTailLaw>;

  template <class Law>
    requires std::constructible_from<Kind, Law&&>
  FeedbackLaw(Law&& law) : kind_(std::forward<Law>(law)) {}  // NOLINT(google-explicit-constructor)

  static FeedbackLaw fixed_plan(FeedbackPlan plan) { return FixedPlanLaw{std::move(plan)}; }
  static FeedbackLaw stationary(std::vector<ComplexMatrix> controls) {
    return StationaryLaw{std::move(controls)};
  }
  static FeedbackLaw identity(const Measurement& m);

  const Kind& kind() const { return kind_; }

  /// Number of steps the law can drive, or nullopt when unbounded.
  std::optional<std::size_t> horizon() const;

  /// Throws ValidationError for non-unitary controls or an outcome-count
  /// mismatch with m.
  void validate(const Measurement& m, const Tolerance& tol = {}) const;

 private:
  Kind kind_;
};

/// Builds the greedy law after checking stabilizability of the target.
/// Throws InfeasibleTargetError when the target fails the test.
FeedbackLaw greedy_stabilizing_law(const Measurement& m, const PureState& target,
                                   const Tolerance& tol = {});

/// Deterministic unitary used by the greedy law for a conditioned state.
ComplexMatrix greedy_control(const DensityMatrix& conditioned, const PureState& target,
                             const Tolerance& tol = {});

struct AveragedRun {
  std::vector<DensityMatrix> states;  // rho(0), ..., rho(steps)
  double max_drift = 0.0;             // largest pre-correction drift
};

/// rho(t+1) = sum_k U_k(t) M_k rho(t) M_k^dag U_k(t)^dag. Throws
/// PlanExhaustedError when the law has fewer than `steps` steps.
AveragedRun run_averaged(const DensityMatrix& rho0, const Measurement& m,
                         const FeedbackLaw& law, std::size_t steps,
                         const Tolerance& tol = {});

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<std::size_t> outcomes;           // per step
  std::vector<DensityMatrix> states;           // post-control, per step
  std::vector<OutcomeDistribution> probabilities;  // per step
};

/// One Born-sampled realization; bitwise deterministic in `seed`.
TrajectoryRecord run_trajectory(const DensityMatrix& rho0, const Measurement& m,
                                const FeedbackLaw& law, std::size_t steps,
                                std::uint64_t seed, const Tolerance& tol = {});

/// Seed of trajectory `index` within an ensemble.
std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t index);

/// `count` independent trajectories, fanned out over `threads` workers
/// (0 = hardware concurrency). Output order and content do not depend on
/// scheduling.
std::vector<TrajectoryRecord> run_ensemble(const DensityMatrix& rho0,
                                           const Measurement& m,
                                           const FeedbackLaw& law, std::size_t steps,
                                           std::uint64_t base_seed, std::size_t count,
                                           unsigned threads = 0,
                                           const Tolerance& tol = {});

/// Mean state after `step` + 1 steps over an ensemble.
ComplexMatrix ensemble_mean(std::span<const TrajectoryRecord> records, std::size_t step);

/// Matrix of rho -> sum_k U_k M_k rho M_k^dag U_k^dag acting on
/// column-stacked vec(rho).
ComplexMatrix feedback_superoperator(const Measurement& m,
                                     std::span<const ComplexMatrix> controls);

/// Eigenvalue moduli of a superoperator, descending.
RealVector superoperator_moduli(const ComplexMatrix& superop);

struct ConvergenceReport {
  std::vector<double> distances;
  std::vector<double> superop_moduli;
  std::optional<double> estimated_rate;   // second-largest modulus
  std::optional<double> empirical_rate;   // late-phase distance ratio
};

ConvergenceReport convergence_report(std::span<const DensityMatrix> states,
                                     const DensityMatrix& target,
                                     const ComplexMatrix* superop = nullptr);

}  // namespace qfc
