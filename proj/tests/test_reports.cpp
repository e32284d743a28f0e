#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nodalflow/errors.hpp"
#include "nodalflow/reports.hpp"

using namespace nodalflow;
using rect_flow::Crossing;
using rect_flow::DeficiencyReport;
using rect_flow::ModeIndex;
using rect_flow::TaggedCurve;

namespace {

DeficiencyReport sample_report() {
  DeficiencyReport r;
  r.lambda_star = 12.111;
  r.kstar = 6;
  r.multiplicity = 1;
  r.nodal_count = 3;
  r.deficiency = 3;
  r.morse_index = 3;
  r.contributing_points = {{1, 2}, {2, 2}, {1, 3}};
  r.crossings = {{{1, 2}, 0.8}, {{2, 2}, 2.9}, {{1, 3}, 11.0}};
  r.epsilon = 0.45;
  return r;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

int count_fields(const std::string& line) {
  return 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
}

}  // namespace

TEST_CASE("report survives a JSON round trip unchanged") {
  const auto original = sample_report();
  const nlohmann::json j = original;
  CHECK(j.at("type") == "deficiency_report");
  for (const char* key :
       {"lambda_star", "kstar", "multiplicity", "nodal_count", "deficiency",
        "morse_index", "contributing_points", "crossings", "epsilon"})
    CHECK(j.contains(key));

  const auto back = j.get<DeficiencyReport>();
  CHECK(back.kstar == original.kstar);
  CHECK(back.multiplicity == original.multiplicity);
  CHECK(back.nodal_count == original.nodal_count);
  CHECK(back.deficiency == original.deficiency);
  CHECK(back.morse_index == original.morse_index);
  CHECK(back.lambda_star == original.lambda_star);
  CHECK(back.epsilon == original.epsilon);
  REQUIRE(back.contributing_points.size() == 3);
  CHECK(back.contributing_points[2] == ModeIndex{1, 3});
  REQUIRE(back.crossings.size() == 3);
  CHECK(back.crossings[1].mode == ModeIndex{2, 2});
  CHECK(back.crossings[1].sigma0 == original.crossings[1].sigma0);

  // a second serialization is bit-identical
  const nlohmann::json j2 = back;
  CHECK(j.dump() == j2.dump());
}

TEST_CASE("grid comparison serializes with one row per grid") {
  dtn2d::FormulaReport report;
  report.lambda_star = 10.0;
  report.epsilon = 0.5;
  report.deficiency = 2;
  report.multiplicity = 2;
  report.lattice_morse = 3;
  report.finest_ok = true;
  dtn2d::FormulaEntry entry;
  entry.grid = {31, 32, 0.1, 0.09};
  entry.schur_morse = 3;
  entry.crossing_count = 3;
  entry.lattice_morse = 3;
  entry.agree = true;
  report.entries = {entry, entry};

  const nlohmann::json j = report;
  CHECK(j.at("type") == "dtn_verification");
  REQUIRE(j.at("grids").size() == 2);
  CHECK(j.at("grids")[0].at("nx") == 31);
  CHECK(j.at("grids")[0].at("schur_morse") == 3);
  CHECK(j.at("grids")[0].at("agree") == true);
  CHECK(j.at("finest_ok") == true);
}

TEST_CASE("validation accepts consistent reports and names the broken field") {
  reports::validate(sample_report());

  auto bad = sample_report();
  bad.deficiency = 2;
  CHECK_THROWS_AS(reports::validate(bad), Error);

  bad = sample_report();
  bad.morse_index = 4;
  CHECK_THROWS_AS(reports::validate(bad), Error);

  bad = sample_report();
  bad.contributing_points.pop_back();
  CHECK_THROWS_AS(reports::validate(bad), Error);

  bad = sample_report();
  bad.crossings[0].mode = {9, 9};
  CHECK_THROWS_AS(reports::validate(bad), Error);

  bad = sample_report();
  bad.crossings[0].sigma0 = -1.0;
  CHECK_THROWS_AS(reports::validate(bad), Error);

  bad = sample_report();
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(reports::validate(bad), Error);
}

TEST_CASE("curve tables carry the arctan axis and a limits sentinel") {
  TaggedCurve a;
  a.mode = {1, 1};
  a.sigma_samples = {0.0, 1.0, 1e3};
  a.values = {2.0, 2.5, 4.9};
  a.limit = 5.0;
  TaggedCurve b = a;
  b.mode = {2, 1};
  b.values = {5.0, 5.5, 7.9};
  b.limit = 8.0;

  const auto lines = split_lines(reports::curves_csv({a, b}));
  REQUIRE(lines.size() == 5);  // header + three samples + sentinel
  CHECK(lines[0] == "atan_sigma,gamma_1_1,gamma_2_1");
  for (const auto& line : lines) CHECK(count_fields(line) == 3);
  CHECK(lines[1].substr(0, 2) == "0,");
  CHECK(lines[4].substr(0, 4) == "inf,");
  // the sigma axis is arctan-compressed
  double atan_val = 0.0;
  std::sscanf(lines[2].c_str(), "%lf", &atan_val);
  CHECK(atan_val == doctest::Approx(std::atan(1.0)).epsilon(1e-14));
  CHECK(lines[4] == "inf,5,8");

  oned_flow::FlowCurve c;
  c.branch = 2;
  c.sigma_samples = {0.0, 1.0};
  c.values = {4.0, 4.2};
  c.limit = 4.5;
  const auto lines1 = split_lines(reports::curves_csv(
      std::vector<oned_flow::FlowCurve>{c}));
  CHECK(lines1[0] == "atan_sigma,gamma_2");

  TaggedCurve mismatched = b;
  mismatched.sigma_samples = {0.0, 2.0, 1e3};
  CHECK_THROWS_AS(reports::curves_csv({a, mismatched}), Error);
  CHECK_THROWS_AS(reports::curves_csv(std::vector<TaggedCurve>{}), Error);
}

TEST_CASE("file writes are whole-file renames") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "nodalflow_reports_test" / "nested";
  fs::remove_all(dir.parent_path());

  const fs::path target = dir / "out.csv";
  reports::write_file_atomic(target.string(), "a,b\n1,2\n");
  std::ifstream in(target);
  std::stringstream content;
  content << in.rdbuf();
  CHECK(content.str() == "a,b\n1,2\n");
  CHECK_FALSE(fs::exists(target.string() + ".tmp"));

  reports::write_file_atomic(target.string(), "fresh\n");
  std::ifstream in2(target);
  std::stringstream content2;
  content2 << in2.rdbuf();
  CHECK(content2.str() == "fresh\n");
  fs::remove_all(dir.parent_path());
}
