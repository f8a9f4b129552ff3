#include "qfc/simulate.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "qfc/controllability.hpp"
#include "qfc/errors.hpp"

namespace qfc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_controls(std::span<const ComplexMatrix> controls, const Measurement& m,
                    const Tolerance& tol) {
  if (controls.size() != m.outcomes()) {
    throw ValidationError("feedback law has " + std::to_string(controls.size()) +
                          " controls for a measurement with " + std::to_string(m.outcomes()) +
                          " outcomes");
  }
  for (const auto& u : controls) {
    if (u.rows() != m.dim() || !is_unitary(u, tol)) {
      throw ValidationError("feedback law control is not a unitary of the measurement dimension");
    }
  }
}

}  // namespace

FeedbackLaw FeedbackLaw::identity(const Measurement& m) {
  return stationary(std::vector<ComplexMatrix>(m.outcomes(),
                                               ComplexMatrix::Identity(m.dim(), m.dim())));
}

std::optional<std::size_t> FeedbackLaw::horizon() const {
  return std::visit(Overloaded{
                        [](const FixedPlanLaw& l) -> std::optional<std::size_t> { return l.plan.length(); },
                        [](const RandomizedTailLaw& l) -> std::optional<std::size_t> {
                          return l.plan.length() + 1;
                        },
                        [](const auto&) -> std::optional<std::size_t> { return std::nullopt; },
                    },
                    kind_);
}

void FeedbackLaw::validate(const Measurement& m, const Tolerance& tol) const {
  std::visit(Overloaded{
                 [&](const FixedPlanLaw& l) { l.plan.validate(m.outcomes(), tol); },
                 [&](const StationaryLaw& l) { check_controls(l.controls, m, tol); },
                 [&](const GreedyLaw& l) {
                   if (l.target.dim() != m.dim()) throw ValidationError("greedy target dimension mismatch");
                 },
                 [&](const RandomizedTailLaw& l) {
                   l.plan.validate(m.outcomes(), tol);
                   l.tail.validate(tol);
                   if (l.tail.unitaries.front().rows() != m.dim()) {
                     throw ValidationError("randomized tail dimension mismatch");
                   }
                 },
             },
             kind_);
}

FeedbackLaw greedy_stabilizing_law(const Measurement& m, const PureState& target,
                                   const Tolerance& tol) {
  if (!stabilizable_pure_state(m, target, tol)) {
    throw InfeasibleTargetError("greedy_stabilizing_law: target is not stabilizable, "
                                "every canonical factor commutes with its projector");
  }
  return GreedyLaw{target};
}

ComplexMatrix greedy_control(const DensityMatrix& conditioned, const PureState& target,
                             const Tolerance& tol) {
  const HermitianEigen eig = eig_hermitian(conditioned.matrix(), tol);
  ComplexVector v = eig.eigenvectors.col(0);
  const Complex overlap = target.vector().dot(v);
  if (std::abs(overlap) > 0.0) v *= std::conj(overlap) / std::abs(overlap);
  return unitary_mapping(v, target.vector());
}

// ---------------------------------------------------------------------------

namespace {

struct Stepper {
  const Measurement& m;
  const FeedbackLaw& law;
  const Tolerance& tol;

  bool tail_step(std::size_t t) const {
    const auto* l = std::get_if<RandomizedTailLaw>(&law.kind());
    return l != nullptr && t == l->plan.length();
  }

  const RandomizedStep& tail() const { return std::get<RandomizedTailLaw>(law.kind()).tail; }

  /// Control applied at step t after outcome k left the state `conditioned`.
  ComplexMatrix control(std::size_t t, std::size_t k, const DensityMatrix& conditioned) const {
    return std::visit(Overloaded{
                          [&](const FixedPlanLaw& l) { return l.plan.steps[t][k]; },
                          [&](const StationaryLaw& l) { return l.controls[k]; },
                          [&](const GreedyLaw& l) { return greedy_control(conditioned, l.target, tol); },
                          [&](const RandomizedTailLaw& l) { return l.plan.steps[t][k]; },
                      },
                      law.kind());
  }

  ComplexMatrix averaged(std::size_t t, const DensityMatrix& rho) const {
    if (tail_step(t)) return tail().average(rho.matrix());
    const Index n = rho.dim();
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    const bool state_dependent = std::holds_alternative<GreedyLaw>(law.kind());
    for (std::size_t k = 0; k < m.outcomes(); ++k) {
      const ComplexMatrix branch = m[k] * rho.matrix() * m[k].adjoint();
      if (!state_dependent) {
        const ComplexMatrix u = control(t, k, rho);
        out += u * branch * u.adjoint();
        continue;
      }
      const double p = branch.trace().real();
      if (p <= tol.rank) {
        out += branch;
        continue;
      }
      const ComplexMatrix u = control(t, k, conditional_state(rho, m, k, tol));
      out += u * branch * u.adjoint();
    }
    return out;
  }
};

void require_horizon(const FeedbackLaw& law, std::size_t steps) {
  if (const auto h = law.horizon(); h && *h < steps) {
    throw PlanExhaustedError("feedback law covers " + std::to_string(*h) + " steps, " +
                             std::to_string(steps) + " requested");
  }
}

void require_state(const DensityMatrix& rho0, const Measurement& m) {
  if (rho0.dim() != m.dim()) throw DimensionError("initial state and measurement dimensions differ");
}

/// Index drawn from `probs` by inverse CDF at u in [0, 1).
std::size_t sample_index(const std::vector<double>& probs, double u) {
  double total = 0.0;
  for (double p : probs) total += std::max(p, 0.0);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    last_positive = k;
    cumulative += probs[k] / total;
    if (u < cumulative) return k;
  }
  return last_positive;
}

}  // namespace

AveragedRun run_averaged(const DensityMatrix& rho0, const Measurement& m, const FeedbackLaw& law,
                         std::size_t steps, const Tolerance& tol) {
  require_state(rho0, m);
  require_horizon(law, steps);
  law.validate(m, tol);
  const Stepper stepper{m, law, tol};
  AveragedRun run;
  run.states.reserve(steps + 1);
  run.states.push_back(rho0);
  for (std::size_t t = 0; t < steps; ++t) {
    double drift = 0.0;
    run.states.push_back(
        DensityMatrix::stabilized(stepper.averaged(t, run.states.back()), tol, &drift));
    run.max_drift = std::max(run.max_drift, drift);
  }
  return run;
}

TrajectoryRecord run_trajectory(const DensityMatrix& rho0, const Measurement& m,
                                const FeedbackLaw& law, std::size_t steps, std::uint64_t seed,
                                const Tolerance& tol) {
  require_state(rho0, m);
  require_horizon(law, steps);
  law.validate(m, tol);
  const Stepper stepper{m, law, tol};
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  TrajectoryRecord rec;
  rec.seed = seed;
  DensityMatrix rho = rho0;
  for (std::size_t t = 0; t < steps; ++t) {
    if (stepper.tail_step(t)) {
      const RandomizedStep& tail = stepper.tail();
      const std::size_t j = sample_index(tail.probabilities, uniform());
      const ComplexMatrix& u = tail.unitaries[j];
      rho = DensityMatrix::stabilized(u * rho.matrix() * u.adjoint(), tol);
      rec.outcomes.push_back(j);
      rec.probabilities.push_back(tail.probabilities);
      rec.states.push_back(rho);
      continue;
    }
    OutcomeDistribution probs = outcome_probabilities(rho, m);
    if (std::all_of(probs.begin(), probs.end(), [](double p) { return p <= 0.0; })) {
      throw Error("run_trajectory: all outcome probabilities vanish");
    }
    const std::size_t k = sample_index(probs, uniform());
    const DensityMatrix conditioned = conditional_state(rho, m, k, tol);
    const ComplexMatrix u = stepper.control(t, k, conditioned);
    rho = DensityMatrix::stabilized(u * conditioned.matrix() * u.adjoint(), tol);
    rec.outcomes.push_back(k);
    rec.probabilities.push_back(std::move(probs));
    rec.states.push_back(rho);
  }
  return rec;
}

std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t index) {
  return mix_seed(base_seed, index);
}

std::vector<TrajectoryRecord> run_ensemble(const DensityMatrix& rho0, const Measurement& m,
                                           const FeedbackLaw& law, std::size_t steps,
                                           std::uint64_t base_seed, std::size_t count,
                                           unsigned threads, const Tolerance& tol) {
  require_horizon(law, steps);
  law.validate(m, tol);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));

  std::vector<TrajectoryRecord> out(count);
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < count; i += threads) {
        out[i] = run_trajectory(rho0, m, law, steps, trajectory_seed(base_seed, i), tol);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ComplexMatrix ensemble_mean(std::span<const TrajectoryRecord> records, std::size_t step) {
  if (records.empty()) throw PreconditionError("ensemble_mean: empty ensemble");
  ComplexMatrix sum;
  for (const auto& rec : records) {
    if (step >= rec.states.size()) throw DimensionError("ensemble_mean: step out of range");
    const ComplexMatrix& s = rec.states[step].matrix();
    if (sum.size() == 0) {
      sum = s;
    } else {
      sum += s;
    }
  }
  return sum / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------

ComplexMatrix feedback_superoperator(const Measurement& m, std::span<const ComplexMatrix> controls) {
  if (controls.size() != m.outcomes()) {
    throw DimensionError("feedback_superoperator: one control per outcome required");
  }
  const Index n = m.dim();
  ComplexMatrix s = ComplexMatrix::Zero(n * n, n * n);
  for (std::size_t k = 0; k < m.outcomes(); ++k) {
    const ComplexMatrix a = controls[k] * m[k];
    // vec(A X A^dag) = (conj(A) (x) A) vec(X) for column stacking.
    s += kron(a.conjugate(), a);
  }
  return s;
}

RealVector superoperator_moduli(const ComplexMatrix& superop) {
  require_square(superop, "superoperator_moduli");
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(superop, false);
  if (solver.info() != Eigen::Success) throw Error("superoperator_moduli: eigen solver failed");
  RealVector moduli = solver.eigenvalues().cwiseAbs();
  std::sort(moduli.data(), moduli.data() + moduli.size(), std::greater<>());
  return moduli;
}

ConvergenceReport convergence_report(std::span<const DensityMatrix> states,
                                     const DensityMatrix& target, const ComplexMatrix* superop) {
  ConvergenceReport report;
  report.distances.reserve(states.size());
  for (const auto& s : states) report.distances.push_back(trace_distance(s, target));

  if (superop != nullptr) {
    const RealVector moduli = superoperator_moduli(*superop);
    report.superop_moduli.assign(moduli.data(), moduli.data() + moduli.size());
    report.estimated_rate = moduli.size() > 1 ? moduli(1) : 0.0;
  }

  // Ratio around the last distance still above the numerical floor.
  constexpr double kFloor = 1e-12;
  const auto& d = report.distances;
  std::optional<std::size_t> last;
  for (std::size_t t = 0; t < d.size(); ++t) {
    if (d[t] > kFloor) last = t;
  }
  if (last) {
    if (*last + 1 < d.size()) {
      report.empirical_rate = d[*last + 1] / d[*last];
    } else if (*last >= 1 && d[*last - 1] > kFloor) {
      report.empirical_rate = d[*last] / d[*last - 1];
    }
  }
  return report;
}

}  // namespace qfc
