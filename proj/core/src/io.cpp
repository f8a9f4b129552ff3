#include "qfc/io.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "qfc/errors.hpp"

namespace qfc::io {

namespace {

Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ParseError("expected a number or a [re, im] pair, got " + j.dump());
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

std::vector<Complex> complex_list(const json& j) {
  if (!j.is_array()) throw ParseError("expected a list of complex numbers");
  std::vector<Complex> out;
  for (const auto& x : j) out.push_back(complex_from_json(x));
  return out;
}

/// Splits "name(args)" into name and args; args empty when absent.
std::pair<std::string, std::string> split_call(std::string_view text) {
  const auto open = text.find('(');
  if (open == std::string_view::npos) return {std::string(text), {}};
  if (text.back() != ')') throw ParseError("unbalanced parentheses in '" + std::string(text) + "'");
  return {std::string(text.substr(0, open)),
          std::string(text.substr(open + 1, text.size() - open - 2))};
}

double parse_number(const std::string& s, const std::string& name) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad numeric argument '" + s + "' for " + name);
  }
}

}  // namespace

json matrix_to_json(const ComplexMatrix& a) {
  json data = json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) data.push_back(complex_to_json(a(i, j)));
  }
  return {{"rows", a.rows()}, {"cols", a.cols()}, {"data", std::move(data)}};
}

ComplexMatrix matrix_from_json(const json& j) {
  return guarded("matrix", [&] {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const json& data = j.at("data");
    if (rows < 1 || cols < 1) throw ParseError("matrix: rows and cols must be >= 1");
    if (!data.is_array() || static_cast<Index>(data.size()) != rows * cols) {
      throw ParseError("matrix: expected " + std::to_string(rows * cols) + " entries");
    }
    ComplexMatrix a(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index c = 0; c < cols; ++c) {
        a(i, c) = complex_from_json(data[static_cast<std::size_t>(i * cols + c)]);
      }
    }
    return a;
  });
}

json measurement_to_json(const Measurement& m) {
  json ops = json::array();
  for (const auto& op : m.operators()) ops.push_back(matrix_to_json(op));
  return {{"label", m.label()}, {"operators", std::move(ops)}};
}

Measurement measurement_from_json(const json& j, const Tolerance& tol) {
  return guarded("measurement", [&] {
    std::vector<ComplexMatrix> ops;
    for (const auto& op : j.at("operators")) ops.push_back(matrix_from_json(op));
    return Measurement(std::move(ops), j.value("label", std::string{}), tol);
  });
}

Measurement builtin_measurement(std::string_view name) {
  const auto [head, args] = split_call(name);
  if (head == "example1-depolarizing" && args.empty()) return builtin::example1_depolarizing();
  if (head == "example2-full-rank" && args.empty()) return builtin::example2_full_rank();
  if (head == "example3-unitary-pair") {
    return builtin::example3_unitary_pair(args.empty() ? 0.5 : parse_number(args, head));
  }
  if (head == "example3-nonunital") {
    return builtin::example3_nonunital(args.empty() ? 0.6 : parse_number(args, head));
  }
  if (head == "projective-computational") {
    const double n = args.empty() ? 2.0 : parse_number(args, head);
    if (n < 1 || n != static_cast<double>(static_cast<Index>(n))) {
      throw ParseError("projective-computational: dimension must be a positive integer");
    }
    return builtin::projective_computational(static_cast<Index>(n));
  }
  if (head == "diagonal-two-outcome") {
    const json lists = guarded("diagonal-two-outcome", [&] { return json::parse("[" + args + "]"); });
    if (lists.size() != 2) throw ParseError("diagonal-two-outcome: expected (alphas, betas)");
    return builtin::diagonal_two_outcome(complex_list(lists[0]), complex_list(lists[1]));
  }
  throw ParseError("unknown built-in measurement '" + std::string(name) + "'");
}

Measurement load_measurement(const std::string& name_or_path, const Tolerance& tol) {
  if (std::filesystem::is_regular_file(name_or_path)) {
    return measurement_from_json(read_json_file(name_or_path), tol);
  }
  return builtin_measurement(name_or_path);
}

DensityMatrix load_state(const std::string& name_or_path, Index dim, const Tolerance& tol) {
  if (name_or_path == "mixed") return DensityMatrix::maximally_mixed(dim);
  if (name_or_path == "plus") {
    return DensityMatrix(PureState::normalized(ComplexVector::Ones(dim)));
  }
  if (name_or_path.size() > 1 && name_or_path[0] == 'e' &&
      name_or_path.find_first_not_of("0123456789", 1) == std::string::npos) {
    const auto i = static_cast<Index>(std::stoll(name_or_path.substr(1)));
    if (i < 1 || i > dim) throw ParseError("basis state '" + name_or_path + "' out of range");
    return DensityMatrix(PureState::basis(dim, i - 1));
  }
  if (!std::filesystem::is_regular_file(name_or_path)) {
    throw ParseError("state '" + name_or_path + "' is neither a built-in name nor a file");
  }
  const json j = read_json_file(name_or_path);
  DensityMatrix rho = guarded("state", [&] {
    if (j.contains("vector")) {
      const std::vector<Complex> v = complex_list(j.at("vector"));
      ComplexVector psi(static_cast<Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) psi(static_cast<Index>(i)) = v[i];
      return DensityMatrix(PureState(psi, tol));
    }
    return DensityMatrix(matrix_from_json(j), tol);
  });
  if (rho.dim() != dim) throw DimensionError("state dimension does not match the measurement");
  return rho;
}

json state_to_json(const DensityMatrix& rho) { return matrix_to_json(rho.matrix()); }

json plan_to_json(const FeedbackPlan& plan) {
  json steps = json::array();
  for (const auto& step : plan.steps) {
    json controls = json::array();
    for (const auto& u : step) controls.push_back(matrix_to_json(u));
    steps.push_back(std::move(controls));
  }
  return {{"measurement_label", plan.measurement_label},
          {"basis_pre_rotation",
           plan.basis_pre_rotation ? matrix_to_json(*plan.basis_pre_rotation) : json(nullptr)},
          {"steps", std::move(steps)}};
}

FeedbackPlan plan_from_json(const json& j) {
  return guarded("plan", [&] {
    FeedbackPlan plan;
    plan.measurement_label = j.value("measurement_label", std::string{});
    if (j.contains("basis_pre_rotation") && !j.at("basis_pre_rotation").is_null()) {
      plan.basis_pre_rotation = matrix_from_json(j.at("basis_pre_rotation"));
    }
    for (const auto& step : j.at("steps")) {
      std::vector<ComplexMatrix> controls;
      for (const auto& u : step) controls.push_back(matrix_from_json(u));
      plan.steps.push_back(std::move(controls));
    }
    return plan;
  });
}

json report_to_json(const ControllabilityReport& report) {
  json j;
  j["lie_dim"] = report.lie_dim ? json(*report.lie_dim) : json(nullptr);
  j["unitary_controllable"] = report.unitary_controllable;
  j["asymptotically_dpc"] = report.asymptotically_dpc;
  // 1-based outcome number, matching M_1, M_2, ...
  j["dpc_witness_k"] = report.dpc_witness_k ? json(*report.dpc_witness_k + 1) : json(nullptr);
  j["stabilizable_target_basis"] = report.stabilizable_target_basis
                                       ? matrix_to_json(*report.stabilizable_target_basis)
                                       : json(nullptr);
  j["finite_time_ddc"] = report.finite_time_ddc;
  j["kraus_map_controllable"] = "unknown";
  j["notes"] = report.notes;
  return j;
}

json convergence_to_json(const ConvergenceReport& report) {
  return {{"distances", report.distances},
          {"superop_moduli", report.superop_moduli},
          {"estimated_rate", report.estimated_rate ? json(*report.estimated_rate) : json(nullptr)},
          {"empirical_rate", report.empirical_rate ? json(*report.empirical_rate) : json(nullptr)}};
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records,
                          const DensityMatrix& target) {
  out << "trajectory_id,step,outcome,purity,trace_distance_to_target\n";
  std::ostringstream line;
  line.precision(17);
  for (std::size_t id = 0; id < records.size(); ++id) {
    const auto& rec = records[id];
    for (std::size_t t = 0; t < rec.states.size(); ++t) {
      line.str({});
      line << id << ',' << t + 1 << ',' << rec.outcomes[t] + 1 << ',' << purity(rec.states[t])
           << ',' << trace_distance(rec.states[t], target) << '\n';
      out << line.str();
    }
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

}  // namespace qfc::io
