#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nodalflow/oned_flow.hpp"

namespace nodalflow::rect_flow {

// Separable problem -Δ + q(x) + r(y) on [0, alpha·π] × [0, π] with Dirichlet
// outer boundary. Its eigenvalues are sums λ_mn = λ^x_m + λ^y_n of the two
// 1D factor spectra, indexed by lattice points (m, n).
struct RectProblem {
  double alpha = 1.0;
  std::vector<double> q_samples;  // uniform samples of q on [0, alpha·π]
  std::vector<double> r_samples;  // uniform samples of r on [0, π]
};

struct ModeIndex {
  int m = 1;
  int n = 1;
  friend bool operator==(ModeIndex a, ModeIndex b) {
    return a.m == b.m && a.n == b.n;
  }
};

// First `truncation` Dirichlet eigenvalues and eigenvectors of each factor,
// plus the factor problems themselves so flows can be re-evaluated later.
struct SpectralFactors {
  std::vector<double> x_values, y_values;
  std::vector<std::vector<double>> x_vectors, y_vectors;
  int truncation = 0;
  int grid_count = 0;
  oned_flow::Problem1D x_problem, y_problem;  // partitions empty
};

struct KStar {
  int kstar = 0;
  int multiplicity = 0;
};

struct Crossing {
  ModeIndex mode;
  double sigma0 = 0.0;
};

// Aggregate answer for one star mode. The arithmetic identities
// deficiency = kstar − nodal_count and morse_index = deficiency +
// multiplicity − 1 hold for every report this library emits.
struct DeficiencyReport {
  double lambda_star = 0.0;
  int kstar = 0;
  int multiplicity = 0;
  int nodal_count = 0;
  int deficiency = 0;
  int morse_index = 0;
  std::vector<ModeIndex> contributing_points;
  std::vector<Crossing> crossings;
  double epsilon = 0.0;
};

// Everything derived from the star eigenfunction's nodal set: the interior
// zeros per axis, factor problems carrying those zeros as partitions, grids
// chosen so the zeros land on nodes, factor spectra recomputed on those
// grids, the decoupled (fully Dirichlet) factor spectra, and the sign of the
// factor eigenvectors on each subinterval (the checkerboard pattern of the
// star eigenfunction).
struct StarDecomposition {
  ModeIndex star;
  std::vector<double> x_zeros, y_zeros;
  oned_flow::Problem1D x_problem, y_problem;  // partitions = zeros
  int x_grid = 0, y_grid = 0;
  std::vector<double> x_values, y_values;  // factor spectra on x_grid/y_grid
  std::vector<double> x_limits, y_limits;  // decoupled factor spectra
  std::vector<int> x_signs, y_signs;       // ±1 per subinterval
  double lambda_star = 0.0;                // star-grid value of λ*
};

// One rectangle flow curve γ_mn(σ) = λ^x_m(σ) + λ^y_n(σ). `values` samples
// the curve on sigma_samples; `evaluate` re-solves both factor problems at an
// arbitrary σ (used by crossing searches, which never interpolate samples).
struct TaggedCurve {
  ModeIndex mode;
  std::vector<double> sigma_samples;
  std::vector<double> values;
  double limit = 0.0;
  std::function<double(double)> evaluate;
};

struct TheoremEntry {
  ModeIndex mode;
  double lambda0 = 0.0;   // γ_mn(0)
  bool predicate = false;  // λ_mn ≤ λ* and (m > m* or n > n*)
  bool crossed = false;    // numeric crossing of λ* + ε found
  double sigma0 = 0.0;     // crossing location when crossed
  bool agree = false;
};

struct TheoremReport {
  double lambda_star = 0.0;
  double epsilon = 0.0;
  double sigma_max = 0.0;
  std::vector<TheoremEntry> entries;
  bool all_agree = false;
};

SpectralFactors factor_spectra(const RectProblem& p, int truncation,
                               int grid_count);

// Factors with the truncation grown automatically until the study window
// around the star value is comfortably inside the computed spectra.
SpectralFactors factors_for_star(const RectProblem& p, ModeIndex star,
                                 int grid_count, int truncation_start = 12);

double lambda_mn(const SpectralFactors& f, ModeIndex mode);

// Index of the star value in the full rectangle spectrum: kstar counts
// strictly smaller sums plus one, multiplicity counts sums tied with λ*
// (within tol.match relative).
KStar kstar(const SpectralFactors& f, ModeIndex star);

inline int nodal_count(ModeIndex mode) { return mode.m * mode.n; }

// Lattice predicate for a negative interface eigenvalue: λ_mn ≤ λ* + tol and
// (m > m* or n > n*).
bool contributes(const SpectralFactors& f, ModeIndex mode, ModeIndex star);

// kstar − nodal_count, cross-checked internally against the strict lattice
// count #{λ_mn < λ*, m > m* or n > n*}; a mismatch throws a consistency
// error, which signals a tolerance or truncation problem.
int deficiency(const SpectralFactors& f, ModeIndex star);

// Number of contributing lattice points; equals deficiency + multiplicity − 1.
int morse_index_lattice(const SpectralFactors& f, ModeIndex star);

// Contributing modes sorted by (λ_mn, m, n).
std::vector<ModeIndex> contributing_modes(const SpectralFactors& f,
                                          ModeIndex star);

// Largest ε with a safety factor: min(gap to the second decoupled value,
// gap to the next rectangle eigenvalue above λ*) / 4. Crossing counts are
// ε-independent on (0, 2·returned].
double epsilon_default(const SpectralFactors& f, ModeIndex star);

StarDecomposition decompose(const SpectralFactors& f, ModeIndex star);

// One curve per mode with γ_mn(0) ≤ window, each the sum of its two 1D
// branch flows on the decomposition grids.
std::vector<TaggedCurve> flow_curves(const RectProblem& p,
                                     const SpectralFactors& f, ModeIndex star,
                                     const std::vector<double>& sigma_samples,
                                     double window);

// First σ₀ with curve(σ₀) = level, by bracketing in σ and bisecting in
// arctan(σ) to tol.root; empty when the curve never reaches the level
// (constant curves included).
std::optional<double> crossing_sigma(const TaggedCurve& curve, double level);

// Checks the lattice predicate against the numeric crossings for every mode
// with λ_mn ≤ λ* + tol. Disagreements are reported, not thrown.
TheoremReport verify_theorem(const RectProblem& p, ModeIndex star,
                             double sigma_max);

// Full pipeline for one star mode: counting quantities from the factor
// spectra, ε (default or override), and a crossing location for every
// contributing mode. epsilon_override ≤ 0 means use the default; grid_count
// ≤ 0 picks the library default.
DeficiencyReport deficiency_report(const RectProblem& p, ModeIndex star,
                                   double sigma_max = default_sigma_max,
                                   double epsilon_override = 0.0,
                                   int grid_count = 0);

// Library default nominal 1D factor grid (refined near partitions by
// oned_flow::pick_grid_count).
inline constexpr int default_factor_grid = 799;

}  // namespace nodalflow::rect_flow
