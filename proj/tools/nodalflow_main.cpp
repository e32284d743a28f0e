// nodalflow command-line tool: spectral flows of delta couplings on nodal
// sets, deficiency reports, two-sided interface verification, and lattice
// diagrams. See README.md for the file formats.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nodalflow/dtn2d.hpp"
#include "nodalflow/errors.hpp"
#include "nodalflow/oned_flow.hpp"
#include "nodalflow/rect_flow.hpp"
#include "nodalflow/reports.hpp"
#include "nodalflow/tolerances.hpp"

namespace {

using nlohmann::json;
using namespace nodalflow;

constexpr double kPi = 3.141592653589793238462643383279502884;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case errc::argument:
      return 2;
    case errc::truncation:
    case errc::gap:
      return 4;
    default:
      return 3;
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::argument, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(errc::argument, std::string("config parse failure: ") + e.what());
  }
  return j;
}

// Two-column CSV (coordinate, value), resampled onto 512 uniform samples by
// linear interpolation with endpoint clamping. "zero" or "" means no
// potential.
std::vector<double> load_potential(const std::string& source, double length) {
  if (source.empty() || source == "zero") return {};
  std::ifstream in(source);
  if (!in) fail(errc::argument, "cannot open potential file " + source);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    double x, v;
    if (ss >> x >> v) rows.emplace_back(x, v);
  }
  if (rows.size() < 2)
    fail(errc::argument, "potential file needs at least two numeric rows: " +
                             source);
  std::sort(rows.begin(), rows.end());

  const int count = 512;
  std::vector<double> samples(count);
  for (int i = 0; i < count; ++i) {
    const double x = length * i / (count - 1);
    if (x <= rows.front().first) {
      samples[i] = rows.front().second;
      continue;
    }
    if (x >= rows.back().first) {
      samples[i] = rows.back().second;
      continue;
    }
    const auto hi = std::lower_bound(
        rows.begin(), rows.end(), std::make_pair(x, -1e300));
    const auto lo = hi - 1;
    const double t = (x - lo->first) / (hi->first - lo->first);
    samples[i] = lo->second + t * (hi->second - lo->second);
  }
  return samples;
}

template <typename T>
void merge(const json& cfg, const char* key, const CLI::Option* opt, T& value) {
  if (opt != nullptr && opt->count() > 0) return;  // flags beat config
  if (cfg.contains(key)) {
    try {
      value = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(errc::argument,
           std::string("config field '") + key + "': " + e.what());
    }
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ----------------------------------------------------------------- flow1d --

struct Flow1DOpts {
  std::string config, potential = "zero", out = "out";
  double length = kPi, sigma_max = default_sigma_max;
  int k = 0, grid = 399, samples = default_sigma_samples;
};

int run_flow1d(Flow1DOpts o) {
  if (o.k < 1) fail(errc::argument, "flow1d needs a branch index k >= 1");
  if (o.length <= 0.0) fail(errc::argument, "length must be positive");

  oned_flow::Problem1D p{o.length, load_potential(o.potential, o.length), {}};
  p.partition = oned_flow::nodal_zeros(p, o.k, o.grid);
  const int grid = oned_flow::pick_grid_count(o.length, p.partition, o.grid);
  const auto sigmas = oned_flow::sigma_grid(o.sigma_max, o.samples);

  std::vector<oned_flow::FlowCurve> curves;
  for (int b = 1; b <= o.k; ++b)
    curves.push_back(oned_flow::branch_flow(p, b, sigmas, grid));
  const auto sturm = oned_flow::sturm_verify(p, o.k, grid);
  const bool verified = sturm.limits_ok && sturm.node_count == o.k - 1;

  json constant = json::array();
  for (const auto& c : curves)
    constant.push_back(std::abs(c.values.front() - c.limit) <=
                       tol.match * std::max(1.0, std::abs(c.limit)));
  const json summary = {
      {"type", "flow1d_summary"},
      {"length", o.length},
      {"k", o.k},
      {"grid", grid},
      {"sigma_max", o.sigma_max},
      {"samples", o.samples},
      {"partition", p.partition},
      {"limits", sturm.limits},
      {"constant", constant},
      {"sturm",
       {{"node_count", sturm.node_count},
        {"lambda", sturm.lambda},
        {"limits_ok", sturm.limits_ok}}},
      {"verified", verified}};

  reports::write_file_atomic(o.out + "/curves.csv",
                             reports::curves_csv(curves));
  reports::write_file_atomic(o.out + "/summary.json", dump(summary));
  if (!verified)
    std::cerr << "flow1d: nodal-count or limit verification failed\n";
  return verified ? 0 : 3;
}

// ------------------------------------------------------- rectangle common --

struct RectOpts {
  std::string config, q = "zero", r = "zero", out = "out";
  double alpha = 1.0, sigma_max = default_sigma_max, epsilon = 0.0;
  int grid = 0, samples = default_sigma_samples;
  std::vector<int> star;
  std::vector<int> grids{31, 63};
  bool axis_swap = false;
};

rect_flow::ModeIndex internal_star(const RectOpts& o) {
  if (o.star.size() != 2)
    fail(errc::argument, "star mode must be two integers m,n");
  rect_flow::ModeIndex star{o.star[0], o.star[1]};
  if (o.axis_swap) std::swap(star.m, star.n);
  return star;
}

// With --axis-swap the user describes [0,π] × [0,απ]; internally the long
// axis is always x, so the axes (and potentials, and mode labels) swap.
rect_flow::RectProblem internal_problem(const RectOpts& o) {
  if (o.alpha <= 0.0) fail(errc::argument, "alpha must be positive");
  rect_flow::RectProblem p;
  p.alpha = o.alpha;
  if (o.axis_swap) {
    p.q_samples = load_potential(o.r, o.alpha * kPi);
    p.r_samples = load_potential(o.q, kPi);
  } else {
    p.q_samples = load_potential(o.q, o.alpha * kPi);
    p.r_samples = load_potential(o.r, kPi);
  }
  return p;
}

rect_flow::ModeIndex user_mode(rect_flow::ModeIndex mode, bool swap) {
  if (swap) std::swap(mode.m, mode.n);
  return mode;
}

json meta_json(const RectOpts& o) {
  return {{"alpha", o.alpha},       {"axis_swap", o.axis_swap},
          {"sigma_max", o.sigma_max}, {"samples", o.samples},
          {"grid", o.grid},         {"q", o.q},
          {"r", o.r}};
}

// --------------------------------------------------------------------- rect

int run_rect(const RectOpts& o) {
  const auto star = internal_star(o);
  const auto p = internal_problem(o);

  auto report =
      rect_flow::deficiency_report(p, star, o.sigma_max, o.epsilon, o.grid);
  const auto f = rect_flow::factors_for_star(p, star, o.grid);
  const double eps_default = rect_flow::epsilon_default(f, star);
  auto curves =
      rect_flow::flow_curves(p, f, star, oned_flow::sigma_grid(o.sigma_max,
                                                               o.samples),
                             report.lambda_star + 0.5 * eps_default);

  for (auto& mode : report.contributing_points)
    mode = user_mode(mode, o.axis_swap);
  for (auto& crossing : report.crossings)
    crossing.mode = user_mode(crossing.mode, o.axis_swap);
  for (auto& curve : curves) curve.mode = user_mode(curve.mode, o.axis_swap);
  reports::validate(report);

  json j = report;
  j["meta"] = meta_json(o);
  if (o.epsilon > 0.0 && o.epsilon > 2.0 * eps_default)
    j["warnings"] = {"epsilon override outside (0, 2*default]; counts may be "
                     "eps-dependent"};
  reports::write_file_atomic(o.out + "/curves.csv",
                             reports::curves_csv(curves));
  reports::write_file_atomic(o.out + "/report.json", dump(j));
  std::cout << "deficiency " << report.deficiency << ", morse index "
            << report.morse_index << ", " << report.crossings.size()
            << " crossing(s); wrote " << o.out << "/report.json\n";
  return 0;
}

// --------------------------------------------------------------- verify-dtn

int run_verify_dtn(const RectOpts& o) {
  const auto star = internal_star(o);
  const auto p = internal_problem(o);
  std::vector<std::pair<int, int>> grids;
  for (int g : o.grids) grids.emplace_back(g, g);

  const auto report = dtn2d::verify_formula(p, star, grids, o.epsilon);

  json j = report;
  j["meta"] = meta_json(o);
  j["meta"]["star"] = user_mode(star, o.axis_swap);
  if (o.epsilon > 0.0) {
    const auto f = rect_flow::factors_for_star(p, star, 0);
    const double eps_default = rect_flow::epsilon_default(f, star);
    if (o.epsilon > 2.0 * eps_default)
      j["warnings"] = {"epsilon override outside (0, 2*default]; counts may "
                       "be eps-dependent"};
  }
  reports::write_file_atomic(o.out + "/verify.json", dump(j));

  for (const auto& entry : report.entries) {
    std::printf("grid %dx%d: schur %d, crossings %d, lattice %d -> %s\n",
                entry.grid.nx, entry.grid.ny, entry.schur_morse,
                entry.crossing_count, entry.lattice_morse,
                entry.agree ? "agree" : "DISAGREE");
  }
  if (!report.finest_ok) {
    std::cerr << "verify-dtn: counts disagree on the finest grid\n";
    return 3;
  }
  return 0;
}

// ------------------------------------------------------------------ lattice

int run_lattice(const RectOpts& o) {
  const auto star = internal_star(o);
  const auto p = internal_problem(o);
  const auto f = rect_flow::factors_for_star(p, star, o.grid);
  const double lambda_star = rect_flow::lambda_mn(f, star);
  const double tolm = tol.match * std::max(1.0, std::abs(lambda_star));

  // Display bounds: one ring of above-window modes past the largest
  // in-window index on each axis.
  int m_max = 1, n_max = 1;
  while (m_max < f.truncation &&
         f.x_values[m_max - 1] + f.y_values[0] <= lambda_star + tolm)
    ++m_max;
  while (n_max < f.truncation &&
         f.x_values[0] + f.y_values[n_max - 1] <= lambda_star + tolm)
    ++n_max;

  // Rendered in user orientation: with --axis-swap the user's m axis is the
  // internal n axis, so the diagram dimensions trade places.
  const int rows = o.axis_swap ? m_max : n_max;
  const int cols = o.axis_swap ? n_max : m_max;
  std::vector<std::string> grid_rows(rows, std::string(cols, '.'));
  using Mark = std::pair<double, rect_flow::ModeIndex>;  // (λ_mn, user label)
  std::vector<Mark> below_v, contributing_v, on_ellipse_v;
  for (int m = 1; m <= m_max; ++m) {
    for (int n = 1; n <= n_max; ++n) {
      const double s = rect_flow::lambda_mn(f, {m, n});
      if (s > lambda_star + tolm) continue;
      const bool contrib = rect_flow::contributes(f, {m, n}, star);
      const bool tie = std::abs(s - lambda_star) <= tolm;
      char symbol = 'o';
      const Mark mark{s, user_mode({m, n}, o.axis_swap)};
      if (contrib && tie) {
        symbol = '@';
        on_ellipse_v.push_back(mark);
      } else if (contrib) {
        symbol = '*';
        contributing_v.push_back(mark);
      } else {
        below_v.push_back(mark);
      }
      if (o.axis_swap)
        grid_rows[m - 1][n - 1] = symbol;
      else
        grid_rows[n - 1][m - 1] = symbol;
    }
  }
  // Same ordering as contributing_points in the rect report: by eigenvalue,
  // then by user-label (m, n).
  const auto by_level = [](const Mark& a, const Mark& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second.m != b.second.m) return a.second.m < b.second.m;
    return a.second.n < b.second.n;
  };
  json below = json::array(), contributing = json::array(),
       on_ellipse = json::array();
  for (auto [bucket, target] :
       {std::pair{&below_v, &below}, {&contributing_v, &contributing},
        {&on_ellipse_v, &on_ellipse}}) {
    std::sort(bucket->begin(), bucket->end(), by_level);
    for (const auto& mark : *bucket) target->push_back(mark.second);
  }

  std::string diagram;
  for (int row = rows; row >= 1; --row) {
    char head[16];
    std::snprintf(head, sizeof head, "%3d  ", row);
    diagram += head;
    for (int col = 1; col <= cols; ++col) {
      diagram += grid_rows[row - 1][col - 1];
      diagram += ' ';
    }
    diagram += '\n';
  }
  diagram += "  n  ";
  for (int col = 1; col <= cols; ++col) {
    diagram += std::to_string(col % 10);
    diagram += ' ';
  }
  diagram += " (m)\n";
  diagram +=
      "legend: * contributing, @ contributing at the star level, o below "
      "(not contributing), . above window\n";

  const json j = {{"type", "lattice"},
                  {"lambda_star", lambda_star},
                  {"window", lambda_star + tolm},
                  {"star", user_mode(star, o.axis_swap)},
                  {"contributing", contributing},
                  {"on_ellipse", on_ellipse},
                  {"below", below}};
  std::cout << diagram;
  reports::write_file_atomic(o.out + "/lattice.txt", diagram);
  reports::write_file_atomic(o.out + "/lattice.json", dump(j));
  return 0;
}

// ------------------------------------------------------------------- report

int run_report(const std::string& path, const std::string& out) {
  json j;
  rect_flow::DeficiencyReport report;
  try {
    j = load_json_file(path);
    report = j.get<rect_flow::DeficiencyReport>();
  } catch (const json::exception& e) {
    fail(errc::argument, std::string("report parse failure: ") + e.what());
  }
  reports::validate(report);
  const std::string canonical = dump(json(report));
  std::cout << canonical;
  if (!out.empty()) reports::write_file_atomic(out, canonical);
  return 0;
}

void add_rect_options(CLI::App* cmd, RectOpts& o, bool with_grids,
                      bool with_samples) {
  cmd->add_option("--config", o.config, "JSON config file; flags override");
  cmd->add_option("--alpha", o.alpha, "aspect ratio of the long axis");
  cmd->add_option("-q,--qpot", o.q, "x potential: CSV path or 'zero'");
  cmd->add_option("-r,--rpot", o.r, "y potential: CSV path or 'zero'");
  cmd->add_option("--star", o.star, "star mode m,n")->delimiter(',');
  cmd->add_flag("--axis-swap", o.axis_swap,
                "interpret the domain as [0,pi] x [0,alpha*pi]");
  cmd->add_option("--sigma-max", o.sigma_max, "largest coupling sampled");
  cmd->add_option("--epsilon", o.epsilon, "level offset override (>0)");
  cmd->add_option("--grid", o.grid, "nominal 1D factor grid size");
  if (with_samples)
    cmd->add_option("--samples", o.samples, "sigma samples per curve");
  if (with_grids)
    cmd->add_option("--grids", o.grids, "nominal 2D grid sizes")
        ->delimiter(',');
  cmd->add_option("--out", o.out, "output directory");
}

void merge_rect_config(const CLI::App* cmd, RectOpts& o) {
  if (o.config.empty()) return;
  const json cfg = load_json_file(o.config);
  merge(cfg, "alpha", cmd->get_option("--alpha"), o.alpha);
  merge(cfg, "q", cmd->get_option("--qpot"), o.q);
  merge(cfg, "r", cmd->get_option("--rpot"), o.r);
  merge(cfg, "star", cmd->get_option("--star"), o.star);
  merge(cfg, "axis_swap", cmd->get_option("--axis-swap"), o.axis_swap);
  merge(cfg, "sigma_max", cmd->get_option("--sigma-max"), o.sigma_max);
  merge(cfg, "epsilon", cmd->get_option("--epsilon"), o.epsilon);
  merge(cfg, "grid", cmd->get_option("--grid"), o.grid);
  if (cmd->get_option_no_throw("--samples") != nullptr)
    merge(cfg, "samples", cmd->get_option("--samples"), o.samples);
  if (cmd->get_option_no_throw("--grids") != nullptr)
    merge(cfg, "grids", cmd->get_option("--grids"), o.grids);
  merge(cfg, "out", cmd->get_option("--out"), o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral flow of delta couplings on nodal sets"};
  app.require_subcommand(1);

  Flow1DOpts f1;
  auto* flow1d = app.add_subcommand(
      "flow1d", "interval flow curves with a nodal partition");
  flow1d->add_option("--config", f1.config, "JSON config file");
  flow1d->add_option("--length", f1.length, "interval length");
  flow1d->add_option("--potential", f1.potential, "CSV path or 'zero'");
  flow1d->add_option("-k,--star-k", f1.k, "branch whose zeros partition");
  flow1d->add_option("--sigma-max", f1.sigma_max, "largest coupling sampled");
  flow1d->add_option("--grid", f1.grid, "nominal grid size");
  flow1d->add_option("--samples", f1.samples, "sigma samples per curve");
  flow1d->add_option("--out", f1.out, "output directory");

  RectOpts rect_o, dtn_o, lattice_o;
  auto* rect = app.add_subcommand("rect", "rectangle deficiency report");
  add_rect_options(rect, rect_o, false, true);
  auto* dtn = app.add_subcommand(
      "verify-dtn", "interface Morse index vs counting vs lattice");
  add_rect_options(dtn, dtn_o, true, false);
  auto* lattice =
      app.add_subcommand("lattice", "contributing-mode lattice diagram");
  add_rect_options(lattice, lattice_o, false, false);

  std::string report_path, report_out;
  auto* report = app.add_subcommand("report", "validate a deficiency report");
  report->add_option("file", report_path, "report JSON path")->required();
  report->add_option("--out", report_out, "re-emit canonical JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*flow1d) {
      if (!f1.config.empty()) {
        const json cfg = load_json_file(f1.config);
        merge(cfg, "length", flow1d->get_option("--length"), f1.length);
        merge(cfg, "potential", flow1d->get_option("--potential"),
              f1.potential);
        merge(cfg, "k", flow1d->get_option("--star-k"), f1.k);
        merge(cfg, "sigma_max", flow1d->get_option("--sigma-max"),
              f1.sigma_max);
        merge(cfg, "grid", flow1d->get_option("--grid"), f1.grid);
        merge(cfg, "samples", flow1d->get_option("--samples"), f1.samples);
        merge(cfg, "out", flow1d->get_option("--out"), f1.out);
      }
      return run_flow1d(f1);
    }
    if (*rect) {
      merge_rect_config(rect, rect_o);
      return run_rect(rect_o);
    }
    if (*dtn) {
      merge_rect_config(dtn, dtn_o);
      return run_verify_dtn(dtn_o);
    }
    if (*lattice) {
      merge_rect_config(lattice, lattice_o);
      return run_lattice(lattice_o);
    }
    if (*report) return run_report(report_path, report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.hint() >= 0)
      std::cerr << "suggested parameter: " << e.hint() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
