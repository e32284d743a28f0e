#include "nodalflow/dtn2d.hpp"

#include <lapacke.h>

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nodalflow/errors.hpp"
#include "nodalflow/tolerances.hpp"
#include "tridiag_detail.hpp"

namespace nodalflow::dtn2d {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

struct AxisLines {
  std::vector<double> zeros;
  std::vector<int> indices;      // snapped 0-based interior indices
  std::vector<double> errors;
};

std::vector<double> axis_zeros(const SpectralFactors& f, int branch,
                               bool x_axis) {
  const auto& vec = x_axis ? f.x_vectors[branch - 1] : f.y_vectors[branch - 1];
  const double len = x_axis ? f.x_problem.length : f.y_problem.length;
  return oned_flow::zeros_from_vector(vec, len);
}

AxisLines snap_lines(const std::vector<double>& zeros, double length, int n) {
  AxisLines lines;
  lines.zeros = zeros;
  const double h = length / (n + 1);
  for (double z : zeros) {
    const long idx = std::lround(z / h) - 1;
    if (idx < 0 || idx >= n)
      fail(errc::discretization, "nodal line snaps outside the interior grid");
    if (std::find(lines.indices.begin(), lines.indices.end(),
                  static_cast<int>(idx)) != lines.indices.end())
      fail(errc::indistinguishable_partition,
           "two nodal lines share a grid line; refine the grid");
    lines.indices.push_back(static_cast<int>(idx));
    lines.errors.push_back(std::abs((idx + 1) * h - z));
  }
  std::sort(lines.indices.begin(), lines.indices.end());
  return lines;
}

int fit_axis(double length, const std::vector<double>& zeros, int nominal) {
  if (nominal < 16) fail(errc::argument, "grid counts below 16 are rejected");
  if (zeros.empty()) return nominal;
  const int span = std::max(8, nominal / 8);
  int best = nominal;
  double best_worst = std::numeric_limits<double>::infinity();
  for (int n = nominal; n <= nominal + span; ++n) {
    const double h = length / (n + 1);
    double worst = 0.0;
    std::vector<long> used;
    for (double z : zeros) {
      const long idx = std::lround(z / h);
      if (idx < 1 || idx > n ||
          std::find(used.begin(), used.end(), idx) != used.end()) {
        worst = std::numeric_limits<double>::infinity();
        break;
      }
      used.push_back(idx);
      worst = std::max(worst, std::abs(z / h - static_cast<double>(idx)));
    }
    if (worst < best_worst) {
      best_worst = worst;
      best = n;
      if (worst <= 0.02) break;
    }
  }
  return best;
}

std::vector<int> subcell_signs(const std::vector<double>& vec, double length,
                               const std::vector<double>& zeros) {
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), zeros.begin(), zeros.end());
  edges.push_back(length);
  const int n = static_cast<int>(vec.size());
  const double h = length / (n + 1);
  std::vector<int> signs;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double mid = 0.5 * (edges[s] + edges[s + 1]);
    const long j = std::clamp<long>(std::lround(mid / h) - 1, 0, n - 1);
    signs.push_back(vec[j] >= 0.0 ? 1 : -1);
    if (s > 0 && signs[s] == signs[s - 1])
      fail(errc::degeneracy,
           "factor eigenvector does not alternate across its zeros");
  }
  return signs;
}

double max_sample(const std::vector<double>& samples) {
  double m = 0.0;
  for (double v : samples) m = std::max(m, v);
  return m;
}

}  // namespace

Grid2D fit_grid(const SpectralFactors& f, ModeIndex star, int nominal_nx,
                int nominal_ny) {
  if (star.m < 1 || star.n < 1 || star.m > f.truncation ||
      star.n > f.truncation)
    fail(errc::argument, "star mode outside the factor truncation");
  Grid2D grid;
  grid.nx = fit_axis(f.x_problem.length, axis_zeros(f, star.m, true),
                     nominal_nx);
  grid.ny = fit_axis(f.y_problem.length, axis_zeros(f, star.n, false),
                     nominal_ny);
  grid.hx = f.x_problem.length / (grid.nx + 1);
  grid.hy = f.y_problem.length / (grid.ny + 1);
  return grid;
}

double lambda_star_grid(const RectProblem& p, ModeIndex star,
                        const Grid2D& grid) {
  const oned_flow::Problem1D xp{p.alpha * kPi, p.q_samples, {}};
  const oned_flow::Problem1D yp{kPi, p.r_samples, {}};
  const double lx = oned_flow::eigenvalue_1d(
      oned_flow::build_operator(xp, 0.0, grid.nx), star.m);
  const double ly = oned_flow::eigenvalue_1d(
      oned_flow::build_operator(yp, 0.0, grid.ny), star.n);
  return lx + ly;
}

NodalGrid nodal_decomposition(const SpectralFactors& f, ModeIndex star,
                              const Grid2D& grid) {
  NodalGrid nodal;
  const auto x_zeros = axis_zeros(f, star.m, true);
  const auto y_zeros = axis_zeros(f, star.n, false);
  if (static_cast<int>(x_zeros.size()) != star.m - 1 ||
      static_cast<int>(y_zeros.size()) != star.n - 1)
    fail(errc::degeneracy, "factor eigenvector has an unexpected zero count");

  const auto x_lines = snap_lines(x_zeros, f.x_problem.length, grid.nx);
  const auto y_lines = snap_lines(y_zeros, f.y_problem.length, grid.ny);
  nodal.x_line_cols = x_lines.indices;
  nodal.y_line_rows = y_lines.indices;
  nodal.snap_errors = x_lines.errors;
  nodal.snap_errors.insert(nodal.snap_errors.end(), y_lines.errors.begin(),
                           y_lines.errors.end());

  const int nx = grid.nx, ny = grid.ny;
  nodal.on_interface.assign(static_cast<std::size_t>(nx) * ny, 0);
  for (int j = 0; j < ny; ++j)
    for (int c : nodal.x_line_cols) nodal.on_interface[j * nx + c] = 1;
  for (int r : nodal.y_line_rows)
    for (int i = 0; i < nx; ++i) nodal.on_interface[r * nx + i] = 1;
  for (int k = 0; k < nx * ny; ++k)
    if (nodal.on_interface[k]) nodal.interface_nodes.push_back(k);

  // Flood fill of the off-interface grid graph; the snapped nodal set must
  // cut the rectangle into exactly m*·n* boxes.
  std::vector<char> seen(nodal.on_interface.begin(), nodal.on_interface.end());
  std::vector<int> stack;
  for (int start = 0; start < nx * ny; ++start) {
    if (seen[start]) continue;
    ++nodal.component_count;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      const int i = k % nx, j = k / nx;
      const int neighbors[4] = {i > 0 ? k - 1 : -1, i + 1 < nx ? k + 1 : -1,
                                j > 0 ? k - nx : -1, j + 1 < ny ? k + nx : -1};
      for (int nb : neighbors)
        if (nb >= 0 && !seen[nb]) {
          seen[nb] = 1;
          stack.push_back(nb);
        }
    }
  }
  nodal.cells_x = star.m;
  nodal.cells_y = star.n;
  if (nodal.component_count != star.m * star.n)
    fail(errc::decomposition,
         "snapped nodal set does not cut the grid into the expected "
         "subdomains; refine the grid",
         star.m * star.n);

  const auto sx = subcell_signs(f.x_vectors[star.m - 1], f.x_problem.length,
                                x_zeros);
  const auto sy = subcell_signs(f.y_vectors[star.n - 1], f.y_problem.length,
                                y_zeros);
  nodal.cell_sign.resize(static_cast<std::size_t>(star.m) * star.n);
  for (int cj = 0; cj < star.n; ++cj)
    for (int ci = 0; ci < star.m; ++ci)
      nodal.cell_sign[cj * star.m + ci] = sx[ci] * sy[cj];
  return nodal;
}

Eigen::SparseMatrix<double> assemble_shifted(const Grid2D& grid,
                                             const RectProblem& p,
                                             double shift, double sigma,
                                             const NodalGrid& nodal) {
  if (!(sigma >= 0.0))
    fail(errc::argument, "coupling strength must be nonnegative");
  const int nx = grid.nx, ny = grid.ny;
  const int total = nx * ny;
  const double ax = 1.0 / (grid.hx * grid.hx);
  const double ay = 1.0 / (grid.hy * grid.hy);
  const bool decouple = std::isinf(sigma);
  const double placeholder = 4.0 * ax + 4.0 * ay +
                             std::max(0.0, max_sample(p.q_samples)) +
                             std::max(0.0, max_sample(p.r_samples)) +
                             std::abs(shift) + 1.0;

  const oned_flow::Problem1D xp{p.alpha * kPi, p.q_samples, {}};
  const oned_flow::Problem1D yp{kPi, p.r_samples, {}};

  std::vector<char> on_col(nx, 0), on_row(ny, 0);
  for (int c : nodal.x_line_cols) on_col[c] = 1;
  for (int r : nodal.y_line_rows) on_row[r] = 1;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(total) * 5);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      const bool gamma = nodal.on_interface[k] != 0;
      if (decouple && gamma) {
        trips.emplace_back(k, k, placeholder);
        continue;
      }
      double diag = 2.0 * ax + 2.0 * ay +
                    oned_flow::potential_at(xp, (i + 1) * grid.hx) +
                    oned_flow::potential_at(yp, (j + 1) * grid.hy) - shift;
      if (gamma && sigma > 0.0) {
        const bool vert = on_col[i], horiz = on_row[j];
        const double h_eff =
            vert && horiz ? 2.0 * grid.hx * grid.hy / (grid.hx + grid.hy)
                          : (vert ? grid.hx : grid.hy);
        diag += sigma / h_eff;
      }
      trips.emplace_back(k, k, diag);
      const int neighbors[4] = {i > 0 ? k - 1 : -1, i + 1 < nx ? k + 1 : -1,
                                j > 0 ? k - nx : -1, j + 1 < ny ? k + nx : -1};
      const double coeff[4] = {-ax, -ax, -ay, -ay};
      for (int t = 0; t < 4; ++t) {
        const int nb = neighbors[t];
        if (nb < 0) continue;
        if (decouple && nodal.on_interface[nb]) continue;
        trips.emplace_back(k, nb, coeff[t]);
      }
    }
  }
  Eigen::SparseMatrix<double> a(total, total);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

SchurSystem schur_dtn(const Grid2D& grid, const RectProblem& p, ModeIndex star,
                      double epsilon, const NodalGrid& nodal) {
  if (!(epsilon > 0.0)) fail(errc::argument, "epsilon must be positive");
  SchurSystem system;
  system.grid = grid;
  system.shift = lambda_star_grid(p, star, grid) + epsilon;
  const auto a = assemble_shifted(grid, p, system.shift, 0.0, nodal);

  const int total = grid.nx * grid.ny;
  const int n_gamma = static_cast<int>(nodal.interface_nodes.size());
  if (n_gamma == 0) {  // ground star: no nodal set, empty interface map
    system.interface_matrix.resize(0, 0);
    return system;
  }
  std::vector<int> to_gamma(total, -1), to_inner(total, -1);
  for (int g = 0; g < n_gamma; ++g) to_gamma[nodal.interface_nodes[g]] = g;
  int n_inner = 0;
  for (int k = 0; k < total; ++k)
    if (to_gamma[k] < 0) to_inner[k] = n_inner++;

  std::vector<Eigen::Triplet<double>> ii_trips, ig_trips;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n_gamma, n_gamma);
  for (int outer = 0; outer < a.outerSize(); ++outer) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, outer); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (to_gamma[r] >= 0 && to_gamma[c] >= 0)
        s(to_gamma[r], to_gamma[c]) += it.value();
      else if (to_gamma[r] < 0 && to_gamma[c] < 0)
        ii_trips.emplace_back(to_inner[r], to_inner[c], it.value());
      else if (to_gamma[c] >= 0)
        ig_trips.emplace_back(to_inner[r], to_gamma[c], it.value());
    }
  }
  Eigen::SparseMatrix<double> a_ii(n_inner, n_inner);
  a_ii.setFromTriplets(ii_trips.begin(), ii_trips.end());
  Eigen::SparseMatrix<double> a_ig(n_inner, n_gamma);
  a_ig.setFromTriplets(ig_trips.begin(), ig_trips.end());

  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(a_ii);
  if (solver.info() != Eigen::Success)
    fail(errc::shift_collision,
         "interior operator is singular at this shift; pick a different "
         "epsilon");
  for (int g = 0; g < n_gamma; ++g) {
    const Eigen::VectorXd rhs = a_ig.col(g);
    const Eigen::VectorXd x = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      fail(errc::shift_collision, "interior solve failed at this shift");
    s.col(g) -= a_ig.transpose() * x;
  }
  if (!s.allFinite())
    fail(errc::shift_collision, "interface complement is not finite");

  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    fail(errc::consistency, "interface complement lost symmetry");
  system.interface_matrix = 0.5 * (s + s.transpose());
  return system;
}

MorseReport morse_index(const SchurSystem& system) {
  if (system.interface_matrix.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(system.interface_matrix,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    fail(errc::decomposition, "interface eigendecomposition failed");
  MorseReport report;
  report.eigenvalues.assign(es.eigenvalues().data(),
                            es.eigenvalues().data() + es.eigenvalues().size());
  double norm = 0.0;
  for (double v : report.eigenvalues) norm = std::max(norm, std::abs(v));
  const double cut = tol.inertia_rel * norm;
  for (double v : report.eigenvalues) {
    if (v < -cut) ++report.negative_count;
    if (std::abs(v) <= cut) ++report.near_zero_count;
  }
  return report;
}

std::pair<int, int> count_below_banded(const Eigen::SparseMatrix<double>& a,
                                       int bandwidth, double level_lo,
                                       double level_hi) {
  const int n = static_cast<int>(a.rows());
  const int kd = bandwidth;
  const int ldab = kd + 1;
  std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
  for (int outer = 0; outer < a.outerSize(); ++outer) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, outer); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (r < c) continue;  // lower triangle
      if (r - c > kd)
        fail(errc::argument, "matrix entry outside the declared bandwidth");
      ab[static_cast<std::size_t>(r - c) + static_cast<std::size_t>(c) * ldab] =
          it.value();
    }
  }
  std::vector<double> d(n), e(std::max(n - 1, 0));
  const lapack_int info = LAPACKE_dsbtrd(
      LAPACK_COL_MAJOR, 'N', 'L', n, kd, ab.data(), ldab, d.data(), e.data(),
      nullptr, 1);
  if (info != 0)
    fail(errc::decomposition, "band-to-tridiagonal reduction failed", info);
  const double pivmin = detail::sturm_pivmin(e);
  return {detail::sturm_count_below(d, e, level_lo, pivmin),
          detail::sturm_count_below(d, e, level_hi, pivmin)};
}

int count_below_banded(const Eigen::SparseMatrix<double>& a, int bandwidth,
                       double level) {
  return count_below_banded(a, bandwidth, level, level).first;
}

int counting_crossings(const Grid2D& grid, const RectProblem& p,
                       ModeIndex star, double epsilon,
                       const NodalGrid& nodal) {
  if (!(epsilon > 0.0)) fail(errc::argument, "epsilon must be positive");
  const double level = lambda_star_grid(p, star, grid) + epsilon;
  const double margin = tol.count_margin * std::max(1.0, std::abs(level));
  int counts[2] = {0, 0};
  const double sigmas[2] = {0.0, std::numeric_limits<double>::infinity()};
  for (int t = 0; t < 2; ++t) {
    const auto a = assemble_shifted(grid, p, level, sigmas[t], nodal);
    const auto [lo, hi] = count_below_banded(a, grid.nx, -margin, margin);
    if (lo != hi)
      fail(errc::ambiguous_count,
           "an eigenvalue sits within the count margin of the level; pick a "
           "different epsilon");
    counts[t] = lo;
  }
  return counts[0] - counts[1];
}

FormulaReport verify_formula(const RectProblem& p, ModeIndex star,
                             const std::vector<std::pair<int, int>>& grids,
                             double epsilon_override) {
  if (grids.size() < 2)
    fail(errc::argument, "need at least two grid resolutions to compare");
  const auto f = rect_flow::factors_for_star(p, star, 0);

  FormulaReport report;
  report.lambda_star = rect_flow::lambda_mn(f, star);
  report.deficiency = rect_flow::deficiency(f, star);
  report.multiplicity = rect_flow::kstar(f, star).multiplicity;
  report.lattice_morse = rect_flow::morse_index_lattice(f, star);
  const double eps_default = rect_flow::epsilon_default(f, star);
  report.epsilon = epsilon_override > 0.0 ? epsilon_override : eps_default;

  const int expected = report.deficiency + report.multiplicity - 1;
  std::size_t finest = 0;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    FormulaEntry entry;
    entry.grid = fit_grid(f, star, grids[i].first, grids[i].second);
    const auto nodal = nodal_decomposition(f, star, entry.grid);
    const auto system =
        schur_dtn(entry.grid, p, star, report.epsilon, nodal);
    const auto morse = morse_index(system);
    entry.schur_morse = morse.negative_count;
    entry.near_zero = morse.near_zero_count;
    entry.crossing_count =
        counting_crossings(entry.grid, p, star, report.epsilon, nodal);
    entry.lattice_morse = report.lattice_morse;
    entry.agree = entry.schur_morse == entry.crossing_count &&
                  entry.crossing_count == entry.lattice_morse &&
                  entry.lattice_morse == expected;
    report.entries.push_back(entry);
    const long cells = static_cast<long>(entry.grid.nx) * entry.grid.ny;
    const long best = static_cast<long>(report.entries[finest].grid.nx) *
                      report.entries[finest].grid.ny;
    if (cells > best) finest = report.entries.size() - 1;
  }
  report.finest_ok = report.entries[finest].agree;
  return report;
}

}  // namespace nodalflow::dtn2d
