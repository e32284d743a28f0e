#include "nodalflow/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nodalflow/errors.hpp"

namespace nodalflow::rect_flow {

void to_json(nlohmann::json& j, const ModeIndex& mode) {
  j = nlohmann::json{{"m", mode.m}, {"n", mode.n}};
}

void from_json(const nlohmann::json& j, ModeIndex& mode) {
  j.at("m").get_to(mode.m);
  j.at("n").get_to(mode.n);
}

void to_json(nlohmann::json& j, const Crossing& crossing) {
  j = nlohmann::json{{"mode", crossing.mode}, {"sigma0", crossing.sigma0}};
}

void from_json(const nlohmann::json& j, Crossing& crossing) {
  j.at("mode").get_to(crossing.mode);
  j.at("sigma0").get_to(crossing.sigma0);
}

void to_json(nlohmann::json& j, const DeficiencyReport& report) {
  j = nlohmann::json{{"type", "deficiency_report"},
                     {"lambda_star", report.lambda_star},
                     {"kstar", report.kstar},
                     {"multiplicity", report.multiplicity},
                     {"nodal_count", report.nodal_count},
                     {"deficiency", report.deficiency},
                     {"morse_index", report.morse_index},
                     {"contributing_points", report.contributing_points},
                     {"crossings", report.crossings},
                     {"epsilon", report.epsilon}};
}

void from_json(const nlohmann::json& j, DeficiencyReport& report) {
  j.at("lambda_star").get_to(report.lambda_star);
  j.at("kstar").get_to(report.kstar);
  j.at("multiplicity").get_to(report.multiplicity);
  j.at("nodal_count").get_to(report.nodal_count);
  j.at("deficiency").get_to(report.deficiency);
  j.at("morse_index").get_to(report.morse_index);
  j.at("contributing_points").get_to(report.contributing_points);
  j.at("crossings").get_to(report.crossings);
  j.at("epsilon").get_to(report.epsilon);
}

}  // namespace nodalflow::rect_flow

namespace nodalflow::dtn2d {

void to_json(nlohmann::json& j, const FormulaEntry& entry) {
  j = nlohmann::json{{"nx", entry.grid.nx},
                     {"ny", entry.grid.ny},
                     {"hx", entry.grid.hx},
                     {"hy", entry.grid.hy},
                     {"schur_morse", entry.schur_morse},
                     {"crossing_count", entry.crossing_count},
                     {"lattice_morse", entry.lattice_morse},
                     {"near_zero", entry.near_zero},
                     {"agree", entry.agree}};
}

void to_json(nlohmann::json& j, const FormulaReport& report) {
  j = nlohmann::json{{"type", "dtn_verification"},
                     {"lambda_star", report.lambda_star},
                     {"epsilon", report.epsilon},
                     {"deficiency", report.deficiency},
                     {"multiplicity", report.multiplicity},
                     {"lattice_morse", report.lattice_morse},
                     {"grids", report.entries},
                     {"finest_ok", report.finest_ok}};
}

}  // namespace nodalflow::dtn2d

namespace nodalflow::reports {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

template <typename Curve, typename Label>
std::string csv_table(const std::vector<Curve>& curves, Label label) {
  if (curves.empty()) fail(errc::argument, "no curves to write");
  const auto& samples = curves.front().sigma_samples;
  for (const auto& c : curves)
    if (c.sigma_samples != samples)
      fail(errc::argument, "curves sampled on different sigma grids");

  std::string out = "atan_sigma";
  for (const auto& c : curves) out += "," + label(c);
  out += "\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += fmt(std::atan(samples[i]));
    for (const auto& c : curves) out += "," + fmt(c.values[i]);
    out += "\n";
  }
  out += "inf";
  for (const auto& c : curves) out += "," + fmt(c.limit);
  out += "\n";
  return out;
}

}  // namespace

std::string curves_csv(const std::vector<rect_flow::TaggedCurve>& curves) {
  return csv_table(curves, [](const rect_flow::TaggedCurve& c) {
    return "gamma_" + std::to_string(c.mode.m) + "_" +
           std::to_string(c.mode.n);
  });
}

std::string curves_csv(const std::vector<oned_flow::FlowCurve>& curves) {
  return csv_table(curves, [](const oned_flow::FlowCurve& c) {
    return "gamma_" + std::to_string(c.branch);
  });
}

void validate(const rect_flow::DeficiencyReport& report) {
  if (report.deficiency != report.kstar - report.nodal_count)
    fail(errc::consistency, "deficiency does not equal kstar - nodal_count");
  if (report.morse_index !=
      report.deficiency + report.multiplicity - 1)
    fail(errc::consistency,
         "morse_index does not equal deficiency + multiplicity - 1");
  if (static_cast<int>(report.contributing_points.size()) !=
      report.morse_index)
    fail(errc::consistency, "contributing point count differs from morse_index");
  if (report.deficiency < 0)
    fail(errc::consistency, "deficiency must be nonnegative");
  if (!(report.epsilon > 0.0))
    fail(errc::consistency, "epsilon must be positive");
  for (const auto& crossing : report.crossings) {
    const bool listed =
        std::find(report.contributing_points.begin(),
                  report.contributing_points.end(),
                  crossing.mode) != report.contributing_points.end();
    if (!listed)
      fail(errc::consistency, "crossing recorded at a non-contributing mode");
    if (!(crossing.sigma0 >= 0.0) || !std::isfinite(crossing.sigma0))
      fail(errc::consistency, "crossing location must be finite and nonnegative");
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path())
    std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) fail(errc::argument, "cannot open " + temp.string());
    out << content;
    if (!out.flush()) fail(errc::argument, "cannot write " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, target, ec);
  if (ec) fail(errc::argument, "cannot move output into place: " + ec.message());
}

}  // namespace nodalflow::reports
