#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "qfc/controllability.hpp"
#include "qfc/errors.hpp"
#include "qfc/synthesis.hpp"

namespace qfc {
namespace {

DiagonalTwoOutcome projective_form(Index n) {
  std::vector<Complex> a(static_cast<std::size_t>(n), 0.0), b(static_cast<std::size_t>(n), 0.0);
  b[0] = 1.0;
  a[1] = 1.0;
  for (std::size_t i = 2; i < a.size(); ++i) a[i] = 1.0;
  return DiagonalTwoOutcome(a, b);
}

ComplexMatrix diag_of(std::initializer_list<double> v) {
  ComplexVector d(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

void expect_all_unitary(const FeedbackPlan& plan) {
  for (const auto& step : plan.steps)
    for (const auto& u : step) EXPECT_TRUE(is_unitary(u, Tolerance::uniform(1e-10)));
}

TEST(DiagonalTwoOutcome, Validation) {
  EXPECT_NO_THROW(DiagonalTwoOutcome({0.0, 1.0}, {1.0, 0.0}));
  EXPECT_THROW(DiagonalTwoOutcome({0.5, 1.0}, {1.0, 0.0}), ValidationError);
  EXPECT_THROW(DiagonalTwoOutcome({0.0, 0.9}, {1.0, 0.0}), ValidationError);
  EXPECT_THROW(DiagonalTwoOutcome({0.0, 1.0, 0.5}, {1.0, 0.0, 0.5}), ValidationError);
  EXPECT_THROW(DiagonalTwoOutcome({0.0, 1.0}, {1.0, 0.0, 0.0}), DimensionError);
}

TEST(PpcOneStep, TrivialMeasurement) {
  const Measurement m({ComplexMatrix::Identity(2, 2)});
  const FeedbackPlan plan = ppc_one_step(PureState::basis(2, 0), PureState::basis(2, 1), m);
  ASSERT_EQ(plan.length(), 1u);
  EXPECT_LE((plan.steps[0][0] * ComplexVector::Unit(2, 0) - ComplexVector::Unit(2, 1)).norm(), 1e-14);
}

TEST(PpcOneStep, ProjectiveQubit) {
  const Measurement m = builtin::projective_computational(2);
  const PureState plus = PureState::normalized(ComplexVector::Ones(2));
  const FeedbackPlan plan = ppc_one_step(plus, PureState::basis(2, 0), m);
  const ComplexMatrix out = oracle::replay(DensityMatrix(plus).matrix(), m, plan.steps);
  EXPECT_LE(max_abs(out - diag_of({1, 0})), 1e-14);
}

TEST(PpcOneStep, DepolarizingAndRandom) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Index n = s < 10 ? 2 : 2 + static_cast<Index>(s % 6);
    const Measurement m = s < 10 ? builtin::example1_depolarizing() : random_measurement(n, 3, s);
    const PureState a = random_pure_state(n, s);
    const PureState b = random_pure_state(n, s + 77);
    const FeedbackPlan plan = ppc_one_step(a, b, m);
    expect_all_unitary(plan);
    const ComplexMatrix out = oracle::replay(DensityMatrix(a).matrix(), m, plan.steps);
    EXPECT_LE(oracle::svd_trace_distance(out, b.projector()), 1e-10);
  }
}

TEST(DiagonalizeTwoOutcome, AlreadyDiagonal) {
  const Measurement m({diag_of({0, 1}), diag_of({1, 0})});
  const auto d = diagonalize_two_outcome(m);
  ASSERT_TRUE(d.form.has_value());
  EXPECT_LE(max_abs(d.u0 - ComplexMatrix::Identity(2, 2)), 1e-14);
  EXPECT_LE(max_abs(d.u1 - ComplexMatrix::Identity(2, 2)), 1e-14);
  EXPECT_LE(max_abs(d.u2 - ComplexMatrix::Identity(2, 2)), 1e-14);
  EXPECT_NEAR(std::abs(d.form->alphas()[0]), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(d.form->alphas()[1]), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(d.form->betas()[0]), 1.0, 1e-14);
}

TEST(DiagonalizeTwoOutcome, RecoversDisguisedForm) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Index n = 2 + static_cast<Index>(s % 7);
    const DiagonalTwoOutcome truth = oracle::random_ddc_form(n, s);
    const Measurement m = oracle::disguise(truth, s);
    const auto d = diagonalize_two_outcome(m);
    ASSERT_TRUE(d.form.has_value()) << "seed " << s;
    const Measurement frame = d.form->measurement();
    EXPECT_LE(max_abs(d.u1 * m[0] * d.u0 - frame[0]), 1e-9);
    EXPECT_LE(max_abs(d.u2 * m[1] * d.u0 - frame[1]), 1e-9);
    // Diagonal moduli agree with the planted ones up to ordering.
    std::vector<double> got, want;
    for (Index i = 0; i < n; ++i) {
      got.push_back(std::abs(d.form->alphas()[static_cast<std::size_t>(i)]));
      want.push_back(std::abs(truth.alphas()[static_cast<std::size_t>(i)]));
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(DiagonalizeTwoOutcome, UnitaryPairHasNoForm) {
  const auto d = diagonalize_two_outcome(builtin::example3_unitary_pair(0.5));
  EXPECT_FALSE(d.form.has_value());
  EXPECT_THROW(diagonalize_two_outcome(builtin::example1_depolarizing()), PreconditionError);
}

TEST(PurificationSequence, QubitProjective) {
  const DiagonalTwoOutcome d = projective_form(2);
  const FeedbackPlan plan = purification_sequence(d, PureState::basis(2, 0));
  ASSERT_EQ(plan.length(), 1u);
  const ComplexMatrix out = oracle::replay(0.5 * ComplexMatrix::Identity(2, 2), d.measurement(), plan.steps);
  EXPECT_LE(max_abs(out - diag_of({1, 0})), 1e-14);
}

TEST(PurificationSequence, SupportCertificateAndPurity) {
  for (Index n = 2; n <= 8; ++n) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const DiagonalTwoOutcome d = oracle::random_ddc_form(n, s + 10 * static_cast<std::uint64_t>(n));
      const Measurement m = d.measurement();
      const PureState w = random_pure_state(n, s);
      const FeedbackPlan plan = purification_sequence(d, w);
      ASSERT_EQ(plan.length(), static_cast<std::size_t>(n - 1));
      expect_all_unitary(plan);
      ComplexMatrix rho = random_density(n, n, s).matrix();
      for (std::size_t k = 0; k < plan.length(); ++k) {
        // rho(k) lives on e_1..e_{N-k}.
        EXPECT_LE(support_extent(DensityMatrix(rho, Tolerance::uniform(1e-9)), 1e-10),
                  n - static_cast<Index>(k));
        for (Index i = n - static_cast<Index>(k); i < n; ++i)
          EXPECT_LE(rho.row(i).cwiseAbs().maxCoeff(), 1e-10);
        rho = oracle::feedback_step(rho, m, plan.steps[k]);
      }
      EXPECT_NEAR(rho.squaredNorm(), 1.0, 1e-10);
      EXPECT_LE(oracle::svd_trace_distance(rho, w.projector()), 1e-10);
    }
  }
}

TEST(PurificationSequence, FourLevelSuperposition) {
  const DiagonalTwoOutcome d = oracle::random_ddc_form(4, 99);
  ComplexVector w = ComplexVector::Zero(4);
  w(0) = w(2) = 1.0 / std::sqrt(2.0);
  const FeedbackPlan plan = purification_sequence(d, PureState(w));
  ASSERT_EQ(plan.length(), 3u);
  const ComplexMatrix rho0 = random_density(4, 4, 5).matrix();
  const ComplexMatrix after1 = oracle::feedback_step(rho0, d.measurement(), plan.steps[0]);
  EXPECT_LE(std::abs(after1(3, 3)), 1e-10);
  const ComplexMatrix out = oracle::replay(rho0, d.measurement(), plan.steps);
  EXPECT_NEAR(out.squaredNorm(), 1.0, 1e-10);
}

TEST(PreparationSequence, PureTarget) {
  const DiagonalTwoOutcome d = projective_form(2);
  const std::vector<double> g{1.0, 0.0};
  const FeedbackPlan plan =
      preparation_sequence(d, PureState::basis(2, 1), g, ComplexMatrix::Identity(2, 2));
  EXPECT_EQ(plan.length(), 3u);
  const ComplexMatrix out = oracle::replay(diag_of({0, 1}), d.measurement(), plan.steps);
  EXPECT_LE(max_abs(out - diag_of({1, 0})), 1e-14);
}

TEST(PreparationSequence, QubitMixture) {
  const DiagonalTwoOutcome d = projective_form(2);
  const std::vector<double> g{0.7, 0.3};
  const FeedbackPlan plan =
      preparation_sequence(d, PureState::basis(2, 0), g, ComplexMatrix::Identity(2, 2));
  const ComplexMatrix out = oracle::replay(diag_of({1, 0}), d.measurement(), plan.steps);
  EXPECT_LE(max_abs(out - diag_of({0.7, 0.3})), 1e-14);
}

TEST(PreparationSequence, RandomTargets) {
  for (Index n = 2; n <= 8; ++n) {
    for (std::uint64_t s = 0; s < 4; ++s) {
      const DiagonalTwoOutcome d = oracle::random_ddc_form(n, s + 7);
      const DensityMatrix target = random_density(n, 1 + static_cast<Index>(s) % n, s + 100);
      const HermitianEigen e = eig_hermitian(target.matrix());
      std::vector<double> g(e.eigenvalues.data(), e.eigenvalues.data() + n);
      for (double& x : g) x = std::max(x, 0.0);
      const double total = std::accumulate(g.begin(), g.end(), 0.0);
      for (double& x : g) x /= total;
      const PureState psi0 = random_pure_state(n, s);
      const FeedbackPlan plan = preparation_sequence(d, psi0, g, e.eigenvectors);
      ASSERT_EQ(plan.length(), static_cast<std::size_t>(n + 1));
      expect_all_unitary(plan);
      const ComplexMatrix out = oracle::replay(psi0.projector(), d.measurement(), plan.steps);
      EXPECT_LE(oracle::svd_trace_distance(out, target.matrix()), 1e-9);
      const auto spec = oracle::sorted_spectrum(out);
      std::vector<double> sorted_g = g;
      std::sort(sorted_g.begin(), sorted_g.end(), std::greater<>());
      for (std::size_t i = 0; i < spec.size(); ++i) EXPECT_NEAR(spec[i], sorted_g[i], 1e-9);
    }
  }
}

TEST(PreparationSequence, DegenerateWeightsExhaustEarly) {
  const DiagonalTwoOutcome d = oracle::random_ddc_form(4, 3);
  const std::vector<double> g{0.5, 0.5, 0.0, 0.0};
  const ComplexMatrix vs = haar_random_unitary(4, 8);
  const FeedbackPlan plan = preparation_sequence(d, PureState::basis(4, 2), g, vs);
  const ComplexMatrix out = oracle::replay(diag_of({0, 0, 1, 0}), d.measurement(), plan.steps);
  const ComplexMatrix want = 0.5 * (vs.col(0) * vs.col(0).adjoint() + vs.col(1) * vs.col(1).adjoint());
  EXPECT_LE(oracle::svd_trace_distance(out, want), 1e-10);
}

TEST(PreparationSequence, RejectsBadWeights) {
  const DiagonalTwoOutcome d = projective_form(2);
  const std::vector<double> bad{0.7, 0.7};
  EXPECT_THROW(preparation_sequence(d, PureState::basis(2, 0), bad, ComplexMatrix::Identity(2, 2)),
               PreconditionError);
}

TEST(DdcSequence, MixedToMixed) {
  const DiagonalTwoOutcome d = projective_form(3);
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(3);
  const FeedbackPlan plan = ddc_sequence(d, mixed, mixed);
  EXPECT_LE(plan.length(), 6u);
  const ComplexMatrix out = oracle::replay(mixed.matrix(), d.measurement(), plan.steps);
  EXPECT_LE(oracle::svd_trace_distance(out, mixed.matrix()), 1e-10);
}

TEST(DdcSequence, PlusToMixedQubit) {
  const DiagonalTwoOutcome d = projective_form(2);
  const DensityMatrix plus(PureState::normalized(ComplexVector::Ones(2)));
  const FeedbackPlan plan = ddc_sequence(d, plus, DensityMatrix::maximally_mixed(2));
  EXPECT_LE(plan.length(), 4u);
  const ComplexMatrix out = oracle::replay(plus.matrix(), d.measurement(), plan.steps);
  EXPECT_LE(oracle::svd_trace_distance(out, 0.5 * ComplexMatrix::Identity(2, 2)), 1e-10);
}

TEST(DdcSequence, LengthBoundAndReplay) {
  for (Index n = 2; n <= 8; ++n) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const DiagonalTwoOutcome d = oracle::random_ddc_form(n, s);
      const DensityMatrix rho0 = random_density(n, 1 + static_cast<Index>(s) % n, 2 * s);
      const DensityMatrix rhof = random_density(n, 1 + static_cast<Index>(s + 1) % n, 2 * s + 1);
      const FeedbackPlan plan = ddc_sequence(d, rho0, rhof);
      EXPECT_LE(plan.length(), static_cast<std::size_t>(2 * n));
      EXPECT_NO_THROW(plan.validate(2));
      const ComplexMatrix out = oracle::replay(rho0.matrix(), d.measurement(), plan.steps);
      EXPECT_LE(oracle::svd_trace_distance(out, rhof.matrix()), 1e-9);
    }
  }
}

TEST(LiftPlan, ReplaysInPhysicalFrame) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Index n = 2 + static_cast<Index>(s % 5);
    const Measurement m = oracle::disguise(oracle::random_ddc_form(n, s), s + 50);
    const auto diag = diagonalize_two_outcome(m);
    ASSERT_TRUE(diag.form.has_value());
    const DensityMatrix rho0 = random_density(n, n, s);
    const DensityMatrix rhof = random_density(n, 2, s + 1);
    const auto frame = [&](const DensityMatrix& r) {
      return DensityMatrix(diag.u0.adjoint() * r.matrix() * diag.u0, Tolerance::uniform(1e-9));
    };
    const FeedbackPlan plan = lift_plan(ddc_sequence(*diag.form, frame(rho0), frame(rhof)), diag);
    ASSERT_TRUE(plan.basis_pre_rotation.has_value());
    expect_all_unitary(plan);
    const ComplexMatrix out = oracle::replay(rho0.matrix(), m, plan.steps);
    EXPECT_LE(oracle::svd_trace_distance(out, rhof.matrix()), 1e-9);
  }
}

TEST(RandomizedFinalStep, Examples) {
  const PureState e1 = PureState::basis(2, 0);
  const std::vector<double> one{1.0};
  const std::vector<PureState> same{e1};
  const RandomizedStep id = randomized_final_step(e1, one, same);
  EXPECT_LE(max_abs(id.unitaries[0] - ComplexMatrix::Identity(2, 2)), 1e-14);

  const std::vector<double> half{0.5, 0.5};
  const std::vector<PureState> basis{e1, PureState::basis(2, 1)};
  const RandomizedStep mix = randomized_final_step(e1, half, basis);
  EXPECT_NO_THROW(mix.validate());
  EXPECT_LE(max_abs(mix.average(e1.projector()) - 0.5 * ComplexMatrix::Identity(2, 2)), 1e-14);

  ComplexVector tilted(2);
  tilted << std::cos(std::numbers::pi / 4), std::sin(std::numbers::pi / 4);
  const std::vector<double> w{0.3, 0.7};
  const std::vector<PureState> pair{e1, PureState(tilted)};
  const RandomizedStep angle = randomized_final_step(e1, w, pair);
  ComplexMatrix want(2, 2);
  want << 0.3 + 0.35, 0.35, 0.35, 0.35;
  EXPECT_LE(max_abs(angle.average(e1.projector()) - want), 1e-14);
}

TEST(Example1InversionControls, Cases) {
  const Measurement dep = builtin::example1_depolarizing();
  const FeedbackPlan same = example1_inversion_controls(dep, ComplexMatrix::Identity(2, 2));
  const FeedbackPlan flip = example1_inversion_controls(dep, pauli::x());
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ComplexMatrix rho = random_density(2, 2, s).matrix();
    EXPECT_LE(max_abs(oracle::replay(rho, dep, same.steps) - rho), 1e-12);
    EXPECT_LE(max_abs(oracle::replay(rho, dep, flip.steps) - pauli::x() * rho * pauli::x()), 1e-12);
  }
  EXPECT_THROW(example1_inversion_controls(builtin::example3_nonunital(0.6), pauli::x()),
               PreconditionError);
}

TEST(ScalarFactorObstruction, SpectrumMajorizedAfterAnyStep) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Index n = 2 + static_cast<Index>(s % 4);
    const Measurement m = random_unitary_mixture(n, 3, s);
    ASSERT_FALSE(is_asymptotically_dpc(m).verdict);
    const ComplexMatrix rho = random_density(n, n, s + 1).matrix();
    std::vector<ComplexMatrix> u;
    for (std::uint64_t k = 0; k < 3; ++k) u.push_back(haar_random_unitary(n, mix_seed(s, k)));
    const ComplexMatrix out = oracle::feedback_step(rho, m, u);
    EXPECT_TRUE(oracle::majorized_by(oracle::sorted_spectrum(out), oracle::sorted_spectrum(rho), 1e-10));
    EXPECT_LE(out.squaredNorm(), rho.squaredNorm() + 1e-10);
  }
}

TEST(FeedbackPlan, ValidateAndThen) {
  FeedbackPlan a;
  a.steps.push_back({ComplexMatrix::Identity(2, 2), pauli::x()});
  FeedbackPlan b;
  b.steps.push_back({pauli::z(), pauli::y()});
  EXPECT_EQ(a.then(b).length(), 2u);
  EXPECT_NO_THROW(a.then(b).validate(2));
  EXPECT_THROW(a.validate(3), ValidationError);
  FeedbackPlan bad;
  bad.steps.push_back({2.0 * pauli::x()});
  EXPECT_THROW(bad.validate(1), ValidationError);
}

}  // namespace
}  // namespace qfc

namespace qfc {
namespace {

TEST(DiagonalizeGrouped, ProjectiveThreeOutcomes) {
  const Measurement m = builtin::projective_computational(3);
  const GroupedDiagonalization g = diagonalize_grouped(m);
  ASSERT_TRUE(g.form.has_value());
  ASSERT_EQ(g.group.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const ComplexMatrix d = g.left[k] * m[k] * g.u0;
    EXPECT_LE(max_abs(d - ComplexMatrix(d.diagonal().asDiagonal())), 1e-12);
  }
}

TEST(DiagonalizeGrouped, GroupedPlanReplaysOnFineMeasurement) {
  for (Index n = 3; n <= 6; ++n) {
    for (std::uint64_t s = 0; s < 4; ++s) {
      const Measurement m = builtin::projective_computational(n);
      const GroupedDiagonalization g = diagonalize_grouped(m);
      ASSERT_TRUE(g.form.has_value());
      const DensityMatrix rho0 = random_density(n, n, s);
      const DensityMatrix rhof = random_density(n, 1 + static_cast<Index>(s) % n, s + 9);
      const auto frame = [&](const DensityMatrix& r) {
        return DensityMatrix(g.u0.adjoint() * r.matrix() * g.u0, Tolerance::uniform(1e-9));
      };
      const FeedbackPlan plan = lift_plan(ddc_sequence(*g.form, frame(rho0), frame(rhof)), g);
      EXPECT_LE(plan.length(), static_cast<std::size_t>(2 * n));
      EXPECT_NO_THROW(plan.validate(m.outcomes()));
      const ComplexMatrix out = oracle::replay(rho0.matrix(), m, plan.steps);
      EXPECT_LE(oracle::svd_trace_distance(out, rhof.matrix()), 1e-9);
    }
  }
}

TEST(DiagonalizeGrouped, NonCommutingEffectsHaveNoFrame) {
  const GroupedDiagonalization g = diagonalize_grouped(random_measurement(3, 3, 2));
  EXPECT_FALSE(g.form.has_value());
  EXPECT_TRUE(g.left.empty());
}

TEST(DiagonalizeGrouped, MixtureOfUnitariesHasNoForm) {
  EXPECT_FALSE(diagonalize_grouped(builtin::example1_depolarizing()).form.has_value());
}

}  // namespace
}  // namespace qfc
