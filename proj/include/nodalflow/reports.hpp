#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "nodalflow/dtn2d.hpp"
#include "nodalflow/oned_flow.hpp"
#include "nodalflow/rect_flow.hpp"

// JSON bindings live next to the types' namespaces so nlohmann picks them up
// by argument-dependent lookup.
namespace nodalflow::rect_flow {
void to_json(nlohmann::json& j, const ModeIndex& mode);
void from_json(const nlohmann::json& j, ModeIndex& mode);
void to_json(nlohmann::json& j, const Crossing& crossing);
void from_json(const nlohmann::json& j, Crossing& crossing);
void to_json(nlohmann::json& j, const DeficiencyReport& report);
void from_json(const nlohmann::json& j, DeficiencyReport& report);
}  // namespace nodalflow::rect_flow

namespace nodalflow::dtn2d {
void to_json(nlohmann::json& j, const FormulaEntry& entry);
void to_json(nlohmann::json& j, const FormulaReport& report);
}  // namespace nodalflow::dtn2d

namespace nodalflow::reports {

// Curve table: header `atan_sigma,gamma_<m>_<n>,...`, one row per sigma
// sample with the sigma axis emitted as arctan(sigma), and a final sentinel
// row labeled `inf` carrying the decoupled limits.
std::string curves_csv(const std::vector<rect_flow::TaggedCurve>& curves);

// 1D variant with columns `gamma_<branch>`.
std::string curves_csv(const std::vector<oned_flow::FlowCurve>& curves);

// Checks the arithmetic identities every emitted report satisfies:
// deficiency = kstar − nodal_count, morse_index = deficiency + multiplicity
// − 1, contributing count = morse_index, crossings only at contributing
// modes. Throws a consistency error on violation.
void validate(const rect_flow::DeficiencyReport& report);

// Writes content to `path` via a temp file in the same directory plus
// rename, so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace nodalflow::reports
