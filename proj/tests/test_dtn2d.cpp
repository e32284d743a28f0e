#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "nodalflow/dtn2d.hpp"
#include "nodalflow/errors.hpp"

using namespace nodalflow;
using namespace nodalflow::dtn2d;
using rect_flow::ModeIndex;
using rect_flow::RectProblem;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("grid fitting lands nodal lines on grid lines") {
  RectProblem p{1.0, {}, {}};
  const auto f13 = rect_flow::factors_for_star(p, {1, 3}, 399);
  const auto g13 = fit_grid(f13, {1, 3}, 31, 31);
  CHECK(g13.nx == 31);
  CHECK((g13.ny + 1) % 3 == 0);
  CHECK(g13.ny >= 31);
  CHECK(g13.hx == doctest::Approx(kPi / (g13.nx + 1)).epsilon(1e-14));

  const auto f12 = rect_flow::factors_for_star(p, {1, 2}, 399);
  const auto g12 = fit_grid(f12, {1, 2}, 31, 31);
  CHECK(g12.nx == 31);
  CHECK(g12.ny == 31);  // midpoint already sits on a grid line

  RectProblem r{0.9, {}, {}};
  const auto f31 = rect_flow::factors_for_star(r, {3, 1}, 399);
  const auto g31 = fit_grid(f31, {3, 1}, 31, 31);
  CHECK((g31.nx + 1) % 3 == 0);
  CHECK(g31.ny == 31);

  CHECK_THROWS_AS(fit_grid(f12, {1, 2}, 8, 31), Error);
}

TEST_CASE("grid star value matches the discrete closed form") {
  RectProblem p{1.0, {}, {}};
  const Grid2D grid{31, 31, kPi / 32, kPi / 32};
  const double h = kPi / 32;
  const double exact = 4.0 / (h * h) * std::pow(std::sin(0.5 * h), 2) +
                       4.0 / (h * h) * std::pow(std::sin(h), 2);
  CHECK(lambda_star_grid(p, {1, 2}, grid) ==
        doctest::Approx(exact).epsilon(1e-11));
}

TEST_CASE("nodal decomposition cuts the grid into signed boxes") {
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {2, 2}, 399);
  const Grid2D grid = fit_grid(f, {2, 2}, 31, 31);
  REQUIRE(grid.nx == 31);
  REQUIRE(grid.ny == 31);
  const auto nodal = nodal_decomposition(f, {2, 2}, grid);
  REQUIRE(nodal.x_line_cols.size() == 1);
  REQUIRE(nodal.y_line_rows.size() == 1);
  CHECK(nodal.x_line_cols[0] == 15);
  CHECK(nodal.y_line_rows[0] == 15);
  CHECK(nodal.interface_nodes.size() == 31u + 31u - 1u);
  CHECK(nodal.component_count == 4);
  CHECK(nodal.cells_x == 2);
  CHECK(nodal.cells_y == 2);
  REQUIRE(nodal.cell_sign.size() == 4);
  CHECK(nodal.cell_sign[0] * nodal.cell_sign[1] == -1);
  CHECK(nodal.cell_sign[0] * nodal.cell_sign[2] == -1);
  CHECK(nodal.cell_sign[0] * nodal.cell_sign[3] == 1);
  for (double err : nodal.snap_errors) CHECK(err < 0.02 * grid.hx);
}

TEST_CASE("stencil diagonal, coupling boost, and decoupled rows") {
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {2, 2}, 399);
  const Grid2D grid = fit_grid(f, {2, 2}, 31, 63);
  const auto nodal = nodal_decomposition(f, {2, 2}, grid);
  const double ax = 1.0 / (grid.hx * grid.hx);
  const double ay = 1.0 / (grid.hy * grid.hy);

  const auto a0 = assemble_shifted(grid, p, 1.5, 0.0, nodal);
  // plain interior node (0,0): flattened index 0
  CHECK(a0.coeff(0, 0) == doctest::Approx(2 * ax + 2 * ay - 1.5).epsilon(1e-14));
  CHECK(a0.coeff(0, 1) == doctest::Approx(-ax).epsilon(1e-14));
  CHECK(a0.coeff(0, grid.nx) == doctest::Approx(-ay).epsilon(1e-14));
  const Eigen::SparseMatrix<double> asym =
      Eigen::SparseMatrix<double>(a0.transpose()) - a0;
  CHECK(asym.norm() == 0.0);

  const auto a9 = assemble_shifted(grid, p, 1.5, 9.0, nodal);
  const int col = nodal.x_line_cols[0], row = nodal.y_line_rows[0];
  const int vert = 3 * grid.nx + col;   // on the vertical line only
  const int horiz = row * grid.nx + 3;  // on the horizontal line only
  const int cross = row * grid.nx + col;
  CHECK(a9.coeff(vert, vert) - a0.coeff(vert, vert) ==
        doctest::Approx(9.0 / grid.hx).epsilon(1e-12));
  CHECK(a9.coeff(horiz, horiz) - a0.coeff(horiz, horiz) ==
        doctest::Approx(9.0 / grid.hy).epsilon(1e-12));
  const double h_eff = 2.0 * grid.hx * grid.hy / (grid.hx + grid.hy);
  CHECK(a9.coeff(cross, cross) - a0.coeff(cross, cross) ==
        doctest::Approx(9.0 / h_eff).epsilon(1e-12));

  const auto ainf = assemble_shifted(grid, p, 1.5, kInf, nodal);
  CHECK(ainf.coeff(vert, vert - 1) == 0.0);
  CHECK(ainf.coeff(vert - 1, vert) == 0.0);
  CHECK(ainf.coeff(vert, vert) > 4 * ax + 4 * ay);

  CHECK_THROWS_AS(assemble_shifted(grid, p, 0.0, -1.0, nodal), Error);
}

TEST_CASE("decoupled operator holds the star value with full multiplicity") {
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {1, 2}, 399);
  const Grid2D grid = fit_grid(f, {1, 2}, 31, 31);
  const auto nodal = nodal_decomposition(f, {1, 2}, grid);
  const double level = lambda_star_grid(p, {1, 2}, grid);
  const auto a = assemble_shifted(grid, p, level, kInf, nodal);
  const double delta = 1e-6 * level;
  const auto [below, above] = count_below_banded(a, grid.nx, -delta, delta);
  CHECK(below == 0);
  CHECK(above == 2);
}

TEST_CASE("interface signature of a hand-built diagonal matrix") {
  SchurSystem sys;
  sys.interface_matrix = Eigen::MatrixXd::Zero(3, 3);
  sys.interface_matrix.diagonal() << -1.0, 2.0, -3.0;
  const auto report = morse_index(sys);
  CHECK(report.negative_count == 2);
  CHECK(report.near_zero_count == 0);
  REQUIRE(report.eigenvalues.size() == 3);
  CHECK(report.eigenvalues[0] == doctest::Approx(-3.0));
  CHECK(report.eigenvalues[2] == doctest::Approx(2.0));

  SchurSystem tiny;
  tiny.interface_matrix = Eigen::MatrixXd::Zero(2, 2);
  tiny.interface_matrix.diagonal() << 1.0, 1e-12;
  const auto near = morse_index(tiny);
  CHECK(near.negative_count == 0);
  CHECK(near.near_zero_count == 1);
}

TEST_CASE("ground star has an empty interface and zero index") {
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {1, 1}, 199);
  const Grid2D grid = fit_grid(f, {1, 1}, 16, 16);
  const auto nodal = nodal_decomposition(f, {1, 1}, grid);
  CHECK(nodal.interface_nodes.empty());
  CHECK(nodal.component_count == 1);
  const auto sys = schur_dtn(grid, p, {1, 1}, 0.5, nodal);
  CHECK(sys.interface_matrix.size() == 0);
  CHECK(morse_index(sys).negative_count == 0);
  CHECK(counting_crossings(grid, p, {1, 1}, 0.5, nodal) == 0);
}

TEST_CASE("interface inertia equals the lattice count, square (1,3)") {
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {1, 3}, 399);
  const double eps = rect_flow::epsilon_default(f, {1, 3});
  const Grid2D grid = fit_grid(f, {1, 3}, 31, 31);
  const auto nodal = nodal_decomposition(f, {1, 3}, grid);
  const auto sys = schur_dtn(grid, p, {1, 3}, eps, nodal);
  const auto morse = morse_index(sys);
  CHECK(morse.negative_count == 3);
  CHECK(morse.near_zero_count == 0);
  CHECK(counting_crossings(grid, p, {1, 3}, eps, nodal) == 3);
}

TEST_CASE("interface inertia equals the lattice count, 0.9 rectangle (3,1)") {
  RectProblem p{0.9, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {3, 1}, 399);
  const double eps = rect_flow::epsilon_default(f, {3, 1});
  const Grid2D grid = fit_grid(f, {3, 1}, 31, 31);
  const auto nodal = nodal_decomposition(f, {3, 1}, grid);
  CHECK(morse_index(schur_dtn(grid, p, {3, 1}, eps, nodal)).negative_count == 3);
  CHECK(counting_crossings(grid, p, {3, 1}, eps, nodal) == 3);
}

TEST_CASE("square (1,2): every route yields one negative direction") {
  // With a two-fold star eigenvalue and zero deficiency the interface map
  // carries deficiency + multiplicity - 1 = 1 negative eigenvalue; all three
  // routes must agree on that count on every grid.
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {1, 2}, 399);
  const double eps = rect_flow::epsilon_default(f, {1, 2});
  const Grid2D grid = fit_grid(f, {1, 2}, 31, 31);
  const auto nodal = nodal_decomposition(f, {1, 2}, grid);
  CHECK(rect_flow::morse_index_lattice(f, {1, 2}) == 1);
  CHECK(morse_index(schur_dtn(grid, p, {1, 2}, eps, nodal)).negative_count == 1);
  CHECK(counting_crossings(grid, p, {1, 2}, eps, nodal) == 1);

  const auto report = verify_formula(p, {1, 2}, {{31, 31}, {63, 63}});
  CHECK(report.finest_ok);
  for (const auto& e : report.entries) {
    CHECK(e.agree);
    CHECK(e.schur_morse == 1);
    CHECK(e.crossing_count == 1);
  }
}

TEST_CASE("eigenvalue counts shrink monotonically along the coupling") {
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {1, 3}, 399);
  const double eps = rect_flow::epsilon_default(f, {1, 3});
  const Grid2D grid = fit_grid(f, {1, 3}, 24, 24);
  const auto nodal = nodal_decomposition(f, {1, 3}, grid);
  const double level = lambda_star_grid(p, {1, 3}, grid) + eps;
  int prev = std::numeric_limits<int>::max();
  for (double sigma : {0.0, 1.0, 10.0, 100.0, kInf}) {
    const auto a = assemble_shifted(grid, p, level, sigma, nodal);
    const int count = count_below_banded(a, grid.nx, 0.0);
    CHECK(count <= prev);
    prev = count;
  }
}

TEST_CASE("a level that hits an eigenvalue is refused, not miscounted") {
  RectProblem p{1.0, {}, {}};
  const auto f = rect_flow::factors_for_star(p, {1, 2}, 399);
  const Grid2D grid = fit_grid(f, {1, 2}, 31, 31);
  const auto nodal = nodal_decomposition(f, {1, 2}, grid);
  // place the level exactly on the (2,2) eigenvalue of this grid
  const oned_flow::Problem1D xp{kPi, {}, {}};
  const auto op = oned_flow::build_operator(xp, 0.0, grid.nx);
  const double eps_bad =
      oned_flow::eigenvalue_1d(op, 2) - oned_flow::eigenvalue_1d(op, 1);
  CHECK_THROWS_AS(counting_crossings(grid, p, {1, 2}, eps_bad, nodal), Error);
}

TEST_CASE("three-route comparison across grids, deficiency-free star") {
  RectProblem p{1.0, {}, {}};
  const auto report = verify_formula(p, {2, 2}, {{16, 16}, {24, 24}});
  REQUIRE(report.entries.size() == 2);
  CHECK(report.finest_ok);
  CHECK(report.deficiency == 0);
  CHECK(report.multiplicity == 1);
  CHECK(report.lattice_morse == 0);
  for (const auto& e : report.entries) {
    CHECK(e.agree);
    CHECK(e.schur_morse == 0);
    CHECK(e.crossing_count == 0);
    CHECK(e.near_zero == 0);
  }
  CHECK_THROWS_AS(verify_formula(p, {2, 2}, {{16, 16}}), Error);

  const auto widened = verify_formula(p, {2, 2}, {{16, 16}, {20, 20}}, 0.33);
  CHECK(widened.epsilon == 0.33);
  CHECK(widened.finest_ok);
}
