#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qfc/canonical.hpp"
#include "qfc/controllability.hpp"
#include "qfc/errors.hpp"
#include "qfc/io.hpp"
#include "qfc/quantum.hpp"
#include "qfc/simulate.hpp"
#include "qfc/synthesis.hpp"

namespace qfc::cli {
namespace {

using io::json;

/// Carries an exit code out of a command body.
struct Exit {
  int code;
  std::string message;
  json payload = nullptr;
};

struct Options {
  std::string measurement;
  std::string rho0 = "mixed";
  std::string rhof;
  std::string target;
  std::string plan;
  std::string law = "identity";
  std::string system;
  std::string demo;
  std::string out_dir;
  std::string format = "json";
  std::size_t steps = 10;
  std::uint64_t seed = 0;
  std::size_t ensemble = 0;
  unsigned threads = 0;
  double tol = 0.0;
  bool states = false;
};

Tolerance tolerance_of(const Options& o) {
  if (o.tol == 0.0) return {};
  Tolerance t = Tolerance::uniform(o.tol);
  t.validate();
  return t;
}

/// Writes `text` to <out>/<name> when --out is set, otherwise to `out`.
void emit(const Options& o, std::ostream& out, const std::string& name, const std::string& text) {
  if (o.out_dir.empty()) {
    out << text;
    return;
  }
  std::filesystem::create_directories(o.out_dir);
  io::write_text_file((std::filesystem::path(o.out_dir) / name).string(), text);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::optional<HamiltonianControlSystem> load_system(const std::string& path) {
  if (path.empty()) return std::nullopt;
  const json j = io::read_json_file(path);
  HamiltonianControlSystem sys;
  try {
    sys.drift = io::matrix_from_json(j.at("drift"));
    for (const auto& h : j.at("controls")) sys.controls.push_back(io::matrix_from_json(h));
    sys.sample_time = j.value("sample_time", 1.0);
  } catch (const json::exception& e) {
    throw ParseError(std::string("control system: ") + e.what());
  }
  return sys;
}

// --- classify --------------------------------------------------------------

int cmd_classify(const Options& o, std::ostream& out) {
  const Tolerance tol = tolerance_of(o);
  const Measurement m = io::load_measurement(o.measurement, tol);
  const auto sys = load_system(o.system);
  const ControllabilityReport report = classify(m, tol, sys ? &*sys : nullptr);
  emit(o, out, "report.json", dump(io::report_to_json(report)));
  return kExitOk;
}

// --- canonical -------------------------------------------------------------

int cmd_canonical(const Options& o, std::ostream& out) {
  const Tolerance tol = tolerance_of(o);
  const Measurement m = io::load_measurement(o.measurement, tol);
  json ops = json::array();
  for (std::size_t k = 0; k < m.outcomes(); ++k) {
    const CanonicalQR f = canonical_qr(m[k], tol);
    ops.push_back({{"outcome", k + 1},
                   {"r", io::matrix_to_json(f.r)},
                   {"q", io::matrix_to_json(f.q)},
                   {"column_ranks", f.column_ranks},
                   {"scalar", is_scalar_matrix(f.r, tol.eq)}});
  }
  json result = {{"label", m.label()}, {"canonical_factors", std::move(ops)}};
  if (!o.target.empty()) {
    const Measurement target = io::load_measurement(o.target, tol);
    if (target.dim() != m.dim()) throw DimensionError("target and base measurement dimensions differ");
    const auto witness = can_simulate(target, m, tol);
    if (witness) {
      std::vector<std::size_t> one_based;
      json controls = json::array();
      for (std::size_t k = 0; k < witness->permutation.size(); ++k) {
        one_based.push_back(witness->permutation[k] + 1);
        controls.push_back(io::matrix_to_json(witness->controls[k]));
      }
      result["simulation"] = {{"possible", true}, {"permutation", one_based}, {"controls", controls}};
    } else {
      result["simulation"] = {{"possible", false}};
    }
  }
  emit(o, out, "canonical.json", dump(result));
  return kExitOk;
}

// --- synthesize ------------------------------------------------------------

int cmd_synthesize(const Options& o, std::ostream& out, std::ostream& err) {
  const Tolerance tol = tolerance_of(o);
  const Measurement m = io::load_measurement(o.measurement, tol);
  if (o.rhof.empty()) throw ParseError("synthesize needs --rhof");
  const DensityMatrix rho0 = io::load_state(o.rho0, m.dim(), tol);
  const DensityMatrix rhof = io::load_state(o.rhof, m.dim(), tol);

  const ControllabilityReport report = classify(m, tol);
  if (!report.finite_time_ddc) {
    throw Exit{kExitSynthesis, "measurement does not admit finite-time density-to-density control",
               io::report_to_json(report)};
  }
  const GroupedDiagonalization diag = diagonalize_grouped(m, tol);
  const Tolerance frame_tol = Tolerance::uniform(std::max(tol.eq, 1e-9));
  const auto to_frame = [&](const DensityMatrix& r) {
    return DensityMatrix(diag.u0.adjoint() * r.matrix() * diag.u0, frame_tol);
  };
  FeedbackPlan plan = lift_plan(ddc_sequence(*diag.form, to_frame(rho0), to_frame(rhof), tol), diag);
  plan.measurement_label = m.label();

  const AveragedRun replay = run_averaged(rho0, m, FeedbackLaw::fixed_plan(plan), plan.length(), tol);
  const double distance = trace_distance(replay.states.back(), rhof);
  err << "plan: " << plan.length() << " steps, replay trace distance " << std::scientific
      << std::setprecision(3) << distance << "\n";
  emit(o, out, "plan.json", dump(io::plan_to_json(plan)));
  return kExitOk;
}

// --- simulate --------------------------------------------------------------

/// Runs `f`, turning simulation preconditions into exit code 4.
template <class F>
auto simulation_guard(F&& f) {
  try {
    return f();
  } catch (const InfeasibleTargetError& e) {
    throw Exit{kExitSimulation, e.what()};
  } catch (const PlanExhaustedError& e) {
    throw Exit{kExitSimulation, e.what()};
  } catch (const ValidationError& e) {
    throw Exit{kExitSimulation, e.what()};
  }
}

void write_averaged_csv(std::ostream& out, const AveragedRun& run, const DensityMatrix& target) {
  out << "trajectory_id,step,outcome,purity,trace_distance_to_target\n";
  std::ostringstream line;
  line.precision(17);
  for (std::size_t t = 1; t < run.states.size(); ++t) {
    line.str({});
    line << "averaged," << t << ",," << purity(run.states[t]) << ','
         << trace_distance(run.states[t], target) << '\n';
    out << line.str();
  }
}

int cmd_simulate(const Options& o, std::ostream& out) {
  if (o.states && o.out_dir.empty()) throw ParseError("--states needs --out");
  const Tolerance tol = tolerance_of(o);
  const Measurement m = io::load_measurement(o.measurement, tol);
  const DensityMatrix rho0 = io::load_state(o.rho0, m.dim(), tol);

  std::optional<PureState> greedy_target;
  if (o.law == "greedy") {
    if (o.target.empty()) throw ParseError("--law greedy needs --target");
    const DensityMatrix t = io::load_state(o.target, m.dim(), tol);
    const HermitianEigen e = eig_hermitian(t.matrix(), tol);
    if (std::abs(e.eigenvalues(0) - 1.0) > std::sqrt(tol.eq)) {
      throw ParseError("--target must be a pure state for the greedy law");
    }
    greedy_target = PureState::normalized(e.eigenvectors.col(0));
  }

  std::optional<FeedbackLaw> law;
  if (o.law == "identity") {
    law = FeedbackLaw::identity(m);
  } else if (o.law == "plan") {
    if (o.plan.empty()) throw ParseError("--law plan needs --plan");
    law = FeedbackLaw::fixed_plan(io::plan_from_json(io::read_json_file(o.plan)));
  } else if (o.law == "greedy") {
    law = simulation_guard([&] { return greedy_stabilizing_law(m, *greedy_target, tol); });
  } else {
    throw ParseError("unknown --law '" + o.law + "' (expected plan, greedy or identity)");
  }

  const AveragedRun run = simulation_guard([&] { return run_averaged(rho0, m, *law, o.steps, tol); });

  DensityMatrix target = run.states.back();
  if (!o.rhof.empty()) {
    target = io::load_state(o.rhof, m.dim(), tol);
  } else if (greedy_target) {
    target = DensityMatrix(*greedy_target);
  }

  std::optional<ComplexMatrix> superop;
  if (const auto* s = std::get_if<StationaryLaw>(&law->kind())) {
    superop = feedback_superoperator(m, s->controls);
  }
  const ConvergenceReport conv = convergence_report(run.states, target, superop ? &*superop : nullptr);

  json summary = {{"measurement", m.label()},
                  {"law", o.law},
                  {"steps", o.steps},
                  {"seed", o.seed},
                  {"max_drift", run.max_drift},
                  {"final_state", io::state_to_json(run.states.back())},
                  {"convergence", io::convergence_to_json(conv)}};

  std::vector<TrajectoryRecord> records;
  if (o.ensemble > 0) {
    records = simulation_guard(
        [&] { return run_ensemble(rho0, m, *law, o.steps, o.seed, o.ensemble, o.threads, tol); });
    json freq = json::array();
    if (o.steps > 0) {
      std::vector<double> counts(m.outcomes(), 0.0);
      for (const auto& r : records) counts[r.outcomes.front()] += 1.0;
      for (double c : counts) freq.push_back(c / static_cast<double>(records.size()));
    }
    json ensemble = {{"size", o.ensemble}, {"first_step_outcome_frequencies", freq}};
    if (o.steps > 0) {
      const ComplexMatrix mean = ensemble_mean(records, o.steps - 1);
      ensemble["mean_trace_distance_to_averaged"] = trace_distance(mean, run.states.back().matrix());
    }
    summary["ensemble"] = std::move(ensemble);
  }

  std::ostringstream csv;
  if (o.ensemble > 0) {
    io::write_trajectory_csv(csv, records, target);
  } else {
    write_averaged_csv(csv, run, target);
  }

  if (o.out_dir.empty()) {
    out << (o.format == "csv" ? csv.str() : dump(summary));
  } else {
    emit(o, out, "report.json", dump(summary));
    emit(o, out, "trajectories.csv", csv.str());
  }
  if (o.states) {
    json states = json::object();
    json averaged = json::array();
    for (const auto& s : run.states) averaged.push_back(io::state_to_json(s));
    states["averaged"] = std::move(averaged);
    json trajectories = json::array();
    for (const auto& r : records) {
      json list = json::array();
      for (const auto& s : r.states) list.push_back(io::state_to_json(s));
      trajectories.push_back({{"seed", r.seed}, {"states", std::move(list)}});
    }
    states["trajectories"] = std::move(trajectories);
    emit(o, out, "states.json", dump(states));
  }
  return kExitOk;
}

// --- demo ------------------------------------------------------------------

class DemoLog {
 public:
  explicit DemoLog(std::ostream& out) : out_(out) { out_ << std::scientific << std::setprecision(3); }

  void check(bool ok, const std::string& what) {
    out_ << (ok ? "  [ok]   " : "  [FAIL] ") << what << "\n";
    ok_ = ok_ && ok;
  }
  std::ostream& line() { return out_; }
  int exit_code() const { return ok_ ? kExitOk : kExitInternal; }

 private:
  std::ostream& out_;
  bool ok_ = true;
};

int demo_example1(const Options& o, std::ostream& out) {
  DemoLog log(out);
  const Measurement m = builtin::example1_depolarizing();
  const DensityMatrix rho0 = random_density(2, 2, o.seed);
  log.line() << "Example 1: completely depolarizing qubit, Kraus operators (1/2){I, X, Y, Z}\n";

  const AveragedRun free = run_averaged(rho0, m, FeedbackLaw::identity(m), 1);
  const double d_mixed = trace_distance(free.states.back(), DensityMatrix::maximally_mixed(2));
  log.line() << "Without feedback, one step from a seeded state:\n";
  log.line() << "  trace distance to I/2 = " << d_mixed << "\n";
  log.check(d_mixed <= 1e-10, "unconditional dynamics lands on I/2");

  log.line() << "With outcome-dependent controls U_k = Ubar (M_k/q_k)^dag:\n";
  log.line() << "  seed  distance to Ubar rho Ubar^dag\n";
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ComplexMatrix ubar = haar_random_unitary(2, mix_seed(o.seed, s));
    const FeedbackLaw law = FeedbackLaw::fixed_plan(example1_inversion_controls(m, ubar));
    const AveragedRun run = run_averaged(rho0, m, law, 1);
    const double d = trace_distance(run.states.back(), apply_unitary(rho0, ubar));
    worst = std::max(worst, d);
    log.line() << "  " << std::setw(4) << s << "  " << d << "\n";
  }
  log.check(worst <= 1e-10, "feedback recovers the unitary orbit for 20 seeded targets");
  return log.exit_code();
}

int demo_example2(const Options& o, std::ostream& out) {
  DemoLog log(out);
  const Measurement m = builtin::example2_full_rank();
  log.line() << "Example 2: two outcomes, M_1 = sqrt(0.8) I is full rank\n";
  const DensityMatrix rho0 = random_density(2, 2, o.seed);
  FeedbackPlan plan;
  for (std::uint64_t t = 0; t < 20; ++t) {
    plan.steps.push_back({haar_random_unitary(2, mix_seed(o.seed, 2 * t)),
                          haar_random_unitary(2, mix_seed(o.seed, 2 * t + 1))});
  }
  const AveragedRun run = run_averaged(rho0, m, FeedbackLaw::fixed_plan(plan), 20);
  log.line() << "  step  min eigenvalue\n";
  double lowest = 1.0;
  for (std::size_t t = 0; t < run.states.size(); ++t) {
    const double e = eig_hermitian(run.states[t].matrix()).eigenvalues.minCoeff();
    lowest = std::min(lowest, e);
    log.line() << "  " << std::setw(4) << t << "  " << e << "\n";
  }
  log.check(lowest > 0.0, "state stays full rank for 20 steps of seeded feedback");
  return log.exit_code();
}

int demo_example3(const Options& o, std::ostream& out) {
  DemoLog log(out);
  const Measurement mm = builtin::example3_unitary_pair(0.5);
  const Measurement nn = builtin::example3_nonunital(0.6);
  log.line() << "Example 3: {M1, M2} = {sqrt(p) Z, sqrt(1-p) I}, p = 0.5, versus\n"
             << "           {N1, N2} = {[[0,a],[0,0]], diag(1, sqrt(1-a^2))}, a = 0.6\n";
  log.line() << "  seed  unitality residual under stationary controls on {M1, M2}\n";
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    ComplexMatrix sum = ComplexMatrix::Zero(2, 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const ComplexMatrix a = haar_random_unitary(2, mix_seed(o.seed, 2 * s + k)) * mm[k];
      sum += a * a.adjoint();
    }
    const double r = max_abs(sum - ComplexMatrix::Identity(2, 2));
    worst = std::max(worst, r);
    log.line() << "  " << std::setw(4) << s << "  " << r << "\n";
  }
  log.check(worst <= 1e-10, "feedback on {M1, M2} always yields a unital map");
  const double rn = unitality_residual(nn);
  log.line() << "  unitality residual of {N1, N2}: " << rn << "\n";
  log.check(rn > 0.1, "{N1, N2} is not unital");
  const bool refused = !can_simulate(nn, mm).has_value();
  log.line() << "  canonical factors: F(M1) = " << canonical_form(mm[0])(0, 0).real()
             << " I, F(N1)(1,2) = " << canonical_form(nn[0])(0, 1).real() << "\n";
  log.check(refused, "{N1, N2} cannot be simulated by feedback on {M1, M2}");
  return log.exit_code();
}

int cmd_demo(const Options& o, std::ostream& out) {
  if (o.demo == "example1") return demo_example1(o, out);
  if (o.demo == "example2") return demo_example2(o, out);
  if (o.demo == "example3") return demo_example3(o, out);
  throw ParseError("unknown demo '" + o.demo + "' (expected example1, example2 or example3)");
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--tol", o.tol, "Uniform tolerance for equality, rank and positivity tests")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out_dir, "Directory for output files (default: stdout)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Feedback control of quantum measurements: classify, synthesize, simulate"};
  app.name("qfc");
  app.require_subcommand(1, 1);

  const std::string measurement_help =
      "Measurement JSON file or built-in name (example1-depolarizing, example2-full-rank, "
      "example3-unitary-pair(p), example3-nonunital(a), projective-computational(N), "
      "diagonal-two-outcome([..],[..]))";
  const std::string state_help = "State JSON file or built-in (mixed, plus, e<i>)";

  auto* classify_cmd = app.add_subcommand("classify", "Controllability report for a measurement");
  classify_cmd->add_option("--measurement", o.measurement, measurement_help)->required();
  classify_cmd->add_option("--system", o.system,
                           "Control system JSON {drift, controls, sample_time} for the Lie rank test");
  add_common(classify_cmd, o);

  auto* canonical_cmd = app.add_subcommand("canonical", "Canonical QR factors of each Kraus operator");
  canonical_cmd->add_option("--measurement", o.measurement, measurement_help)->required();
  canonical_cmd->add_option("--target", o.target,
                            "Second measurement: test whether feedback on --measurement enacts it");
  add_common(canonical_cmd, o);

  auto* synth_cmd = app.add_subcommand("synthesize", "Finite-time control plan from rho0 to rhof");
  synth_cmd->add_option("--measurement", o.measurement, measurement_help)->required();
  synth_cmd->add_option("--rho0", o.rho0, state_help);
  synth_cmd->add_option("--rhof", o.rhof, state_help)->required();
  add_common(synth_cmd, o);

  auto* sim_cmd = app.add_subcommand("simulate", "Averaged run and optional trajectory ensemble");
  sim_cmd->add_option("--measurement", o.measurement, measurement_help)->required();
  sim_cmd->add_option("--rho0", o.rho0, state_help);
  sim_cmd->add_option("--rhof", o.rhof, "Reference state for distances");
  sim_cmd->add_option("--law", o.law, "Feedback law: plan, greedy or identity")
      ->check(CLI::IsMember({"plan", "greedy", "identity"}));
  sim_cmd->add_option("--plan", o.plan, "Plan JSON written by synthesize");
  sim_cmd->add_option("--target", o.target, "Pure target state for the greedy law");
  sim_cmd->add_option("--steps", o.steps, "Number of feedback steps");
  sim_cmd->add_option("--seed", o.seed, "Base seed of the trajectory ensemble");
  sim_cmd->add_option("--ensemble", o.ensemble, "Number of sampled trajectories (0: averaged only)");
  sim_cmd->add_option("--threads", o.threads, "Worker threads for the ensemble (0: all cores)");
  sim_cmd->add_option("--format", o.format, "Stdout format when --out is absent")
      ->check(CLI::IsMember({"json", "csv"}));
  sim_cmd->add_flag("--states", o.states, "Also write states.json with every state");
  add_common(sim_cmd, o);

  auto* demo_cmd = app.add_subcommand("demo", "Run one of the worked examples");
  demo_cmd->add_option("name", o.demo, "example1, example2 or example3")->required();
  demo_cmd->add_option("--seed", o.seed, "Seed for the random states and controls");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    const int code = app.exit(e, out, msg);
    err << msg.str();
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (classify_cmd->parsed()) return cmd_classify(o, out);
    if (canonical_cmd->parsed()) return cmd_canonical(o, out);
    if (synth_cmd->parsed()) return cmd_synthesize(o, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(o, out);
    if (demo_cmd->parsed()) return cmd_demo(o, out);
    return kExitInput;
  } catch (const Exit& e) {
    err << "error: " << e.message << "\n";
    if (!e.payload.is_null()) out << dump({{"error", e.message}, {"report", e.payload}});
    return e.code;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SymmetryError& e) {
    err << "symmetry error: " << e.what() << "\n";
    return kExitInput;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return synth_cmd->parsed() ? kExitSynthesis : sim_cmd->parsed() ? kExitSimulation : kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace qfc::cli
