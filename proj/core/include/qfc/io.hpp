#pragma once

// JSON and CSV interchange formats.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qfc/controllability.hpp"
#include "qfc/quantum.hpp"
#include "qfc/simulate.hpp"
#include "qfc/synthesis.hpp"

namespace qfc::io {

using nlohmann::json;

/// {"rows": n, "cols": m, "data": [[re, im], ...]} row-major.
json matrix_to_json(const ComplexMatrix& a);
ComplexMatrix matrix_from_json(const json& j);

/// {"label": str, "operators": [matrix, ...]}
json measurement_to_json(const Measurement& m);
Measurement measurement_from_json(const json& j, const Tolerance& tol = {});

/// Parses a built-in name such as "projective-computational(3)" or
/// "example3-nonunital(0.6)". Throws ParseError for unknown names.
Measurement builtin_measurement(std::string_view name);

/// Built-in name or path to a measurement JSON file.
Measurement load_measurement(const std::string& name_or_path, const Tolerance& tol = {});

/// A state file holds a matrix object, or {"vector": [[re, im], ...]} for
/// a pure state. Built-in names: "mixed", "plus", "e<i>" (1-based).
DensityMatrix load_state(const std::string& name_or_path, Index dim,
                         const Tolerance& tol = {});
json state_to_json(const DensityMatrix& rho);

json plan_to_json(const FeedbackPlan& plan);
FeedbackPlan plan_from_json(const json& j);

json report_to_json(const ControllabilityReport& report);
json convergence_to_json(const ConvergenceReport& report);

/// trajectory_id,step,outcome,purity,trace_distance_to_target
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records,
                          const DensityMatrix& target);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace qfc::io
