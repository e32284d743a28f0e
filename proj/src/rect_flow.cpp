#include "nodalflow/rect_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nodalflow/errors.hpp"
#include "nodalflow/tolerances.hpp"

namespace nodalflow::rect_flow {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double match_tol(double lambda_star) {
  return tol.match * std::max(1.0, std::abs(lambda_star));
}

void require_mode(const SpectralFactors& f, ModeIndex mode) {
  if (mode.m < 1 || mode.n < 1)
    fail(errc::argument, "mode indices must be positive");
  if (mode.m > f.truncation || mode.n > f.truncation)
    fail(errc::truncation, "mode index beyond the computed factor spectra",
         std::max(mode.m, mode.n));
}

// The study window must sit strictly inside the enumerable part of the sum
// spectrum, otherwise counts near lambda* could silently miss lattice points.
void require_window(const SpectralFactors& f, double upper) {
  const double x_edge = f.x_values.back() + f.y_values.front();
  const double y_edge = f.x_values.front() + f.y_values.back();
  if (upper >= std::min(x_edge, y_edge)) {
    const long needed = 2L * f.truncation;
    fail(errc::truncation, "factor truncation too small for the study window",
         needed);
  }
}

// Smallest sum strictly above lambda* + tolm, or +inf if the truncation
// window holds none (callers check the window first).
double next_level_above(const SpectralFactors& f, double lambda_star) {
  const double tolm = match_tol(lambda_star);
  double next = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= f.truncation; ++m) {
    const double base = f.x_values[m - 1];
    if (base + f.y_values.front() > next) break;
    for (int n = 1; n <= f.truncation; ++n) {
      const double s = base + f.y_values[n - 1];
      if (s > lambda_star + tolm) {
        next = std::min(next, s);
        break;
      }
    }
  }
  return next;
}

std::vector<int> subinterval_signs(const std::vector<double>& vec,
                                   double length,
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
  }
  for (std::size_t s = 1; s < signs.size(); ++s)
    if (signs[s] == signs[s - 1])
      fail(errc::degeneracy,
           "factor eigenvector does not alternate across its zeros");
  return signs;
}

std::vector<TaggedCurve> build_curves(const StarDecomposition& dec,
                                      const std::vector<double>& sigma_samples,
                                      double window, int truncation) {
  const double slack = tol.match * std::max(1.0, std::abs(window));
  int max_m = 0, max_n = 0;
  std::vector<ModeIndex> modes;
  for (int m = 1; m <= truncation; ++m) {
    if (dec.x_values[m - 1] + dec.y_values.front() > window + slack) break;
    for (int n = 1; n <= truncation; ++n) {
      const double s = dec.x_values[m - 1] + dec.y_values[n - 1];
      if (s > window + slack) break;
      modes.push_back({m, n});
      max_m = std::max(max_m, m);
      max_n = std::max(max_n, n);
    }
  }
  if (modes.empty()) fail(errc::argument, "window holds no modes");

  std::vector<oned_flow::FlowCurve> x_flows(max_m), y_flows(max_n);
  for (int m = 1; m <= max_m; ++m)
    x_flows[m - 1] =
        oned_flow::branch_flow(dec.x_problem, m, sigma_samples, dec.x_grid);
  for (int n = 1; n <= max_n; ++n)
    y_flows[n - 1] =
        oned_flow::branch_flow(dec.y_problem, n, sigma_samples, dec.y_grid);

  std::vector<TaggedCurve> curves;
  curves.reserve(modes.size());
  for (ModeIndex mode : modes) {
    TaggedCurve c;
    c.mode = mode;
    c.sigma_samples = sigma_samples;
    const auto& xf = x_flows[mode.m - 1];
    const auto& yf = y_flows[mode.n - 1];
    c.values.resize(sigma_samples.size());
    for (std::size_t i = 0; i < sigma_samples.size(); ++i)
      c.values[i] = xf.values[i] + yf.values[i];
    c.limit = xf.limit + yf.limit;
    c.evaluate = [xp = dec.x_problem, yp = dec.y_problem, xg = dec.x_grid,
                  yg = dec.y_grid, m = mode.m, n = mode.n](double sigma) {
      return oned_flow::eigenvalue_1d(
                 oned_flow::build_operator(xp, sigma, xg), m) +
             oned_flow::eigenvalue_1d(
                 oned_flow::build_operator(yp, sigma, yg), n);
    };
    curves.push_back(std::move(c));
  }
  std::sort(curves.begin(), curves.end(),
            [](const TaggedCurve& a, const TaggedCurve& b) {
              if (a.values.front() != b.values.front())
                return a.values.front() < b.values.front();
              if (a.mode.m != b.mode.m) return a.mode.m < b.mode.m;
              return a.mode.n < b.mode.n;
            });
  return curves;
}

const TaggedCurve& curve_for(const std::vector<TaggedCurve>& curves,
                             ModeIndex mode) {
  for (const auto& c : curves)
    if (c.mode == mode) return c;
  fail(errc::consistency, "mode missing from the computed curve window");
}

}  // namespace

SpectralFactors factor_spectra(const RectProblem& p, int truncation,
                               int grid_count) {
  if (p.alpha <= 0.0) fail(errc::argument, "aspect ratio must be positive");
  if (truncation < 2) fail(errc::argument, "truncation must be at least two");
  if (p.q_samples.size() == 1 || p.r_samples.size() == 1)
    fail(errc::argument, "potential sample lists need at least two entries");
  if (grid_count <= 0) grid_count = default_factor_grid;

  SpectralFactors f;
  f.truncation = truncation;
  f.grid_count = grid_count;
  f.x_problem = {p.alpha * kPi, p.q_samples, {}};
  f.y_problem = {kPi, p.r_samples, {}};

  for (int axis = 0; axis < 2; ++axis) {
    const auto& prob = axis == 0 ? f.x_problem : f.y_problem;
    auto& values = axis == 0 ? f.x_values : f.y_values;
    auto& vectors = axis == 0 ? f.x_vectors : f.y_vectors;
    const auto op = oned_flow::build_operator(prob, 0.0, grid_count);
    auto pairs = oned_flow::eigens_1d(op, truncation);
    for (auto& pair : pairs) {
      values.push_back(pair.value);
      vectors.push_back(std::move(pair.vector));
    }
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] <= values[i - 1])
        fail(errc::decomposition, "factor spectrum is not strictly increasing");
  }
  return f;
}

SpectralFactors factors_for_star(const RectProblem& p, ModeIndex star,
                                 int grid_count, int truncation_start) {
  int truncation = std::max({truncation_start, 2 * std::max(star.m, star.n),
                             star.m + 2, star.n + 2});
  for (;; truncation *= 2) {
    if (truncation > 256)
      fail(errc::truncation, "study window needs an impractical truncation",
           truncation);
    SpectralFactors f = factor_spectra(p, truncation, grid_count);
    const double lambda_star = lambda_mn(f, star);
    const double next = next_level_above(f, lambda_star);
    if (!std::isfinite(next)) continue;
    const double upper = lambda_star + 4.0 * (next - lambda_star);
    const double x_edge = f.x_values.back() + f.y_values.front();
    const double y_edge = f.x_values.front() + f.y_values.back();
    if (upper < std::min(x_edge, y_edge)) return f;
  }
}

double lambda_mn(const SpectralFactors& f, ModeIndex mode) {
  require_mode(f, mode);
  return f.x_values[mode.m - 1] + f.y_values[mode.n - 1];
}

KStar kstar(const SpectralFactors& f, ModeIndex star) {
  const double lambda_star = lambda_mn(f, star);
  const double tolm = match_tol(lambda_star);
  require_window(f, lambda_star + tolm);

  KStar result;
  for (int m = 1; m <= f.truncation; ++m) {
    const double base = f.x_values[m - 1];
    if (base + f.y_values.front() > lambda_star + tolm) break;
    for (int n = 1; n <= f.truncation; ++n) {
      const double s = base + f.y_values[n - 1];
      if (s > lambda_star + tolm) break;
      if (s < lambda_star - tolm)
        ++result.kstar;
      else
        ++result.multiplicity;
    }
  }
  ++result.kstar;
  return result;
}

bool contributes(const SpectralFactors& f, ModeIndex mode, ModeIndex star) {
  require_mode(f, mode);
  const double lambda_star = lambda_mn(f, star);
  const double s = lambda_mn(f, mode);
  return s <= lambda_star + match_tol(lambda_star) &&
         (mode.m > star.m || mode.n > star.n);
}

int deficiency(const SpectralFactors& f, ModeIndex star) {
  const KStar ks = kstar(f, star);
  const int def = ks.kstar - nodal_count(star);
  const double lambda_star = lambda_mn(f, star);
  const double tolm = match_tol(lambda_star);

  // Courant-index deficiency must agree with the direct lattice count of
  // strictly-below modes outside the star rectangle.
  int lattice = 0;
  for (int m = 1; m <= f.truncation; ++m) {
    const double base = f.x_values[m - 1];
    if (base + f.y_values.front() >= lambda_star - tolm) break;
    for (int n = 1; n <= f.truncation; ++n) {
      const double s = base + f.y_values[n - 1];
      if (s >= lambda_star - tolm) break;
      if (m > star.m || n > star.n) ++lattice;
    }
  }
  if (lattice != def)
    fail(errc::consistency,
         "index deficiency and lattice deficiency disagree; tolerance or "
         "truncation is off");
  return def;
}

int morse_index_lattice(const SpectralFactors& f, ModeIndex star) {
  return static_cast<int>(contributing_modes(f, star).size());
}

std::vector<ModeIndex> contributing_modes(const SpectralFactors& f,
                                          ModeIndex star) {
  const double lambda_star = lambda_mn(f, star);
  const double tolm = match_tol(lambda_star);
  require_window(f, lambda_star + tolm);

  std::vector<ModeIndex> modes;
  for (int m = 1; m <= f.truncation; ++m) {
    if (f.x_values[m - 1] + f.y_values.front() > lambda_star + tolm) break;
    for (int n = 1; n <= f.truncation; ++n) {
      if (f.x_values[m - 1] + f.y_values[n - 1] > lambda_star + tolm) break;
      if (m > star.m || n > star.n) modes.push_back({m, n});
    }
  }
  std::sort(modes.begin(), modes.end(), [&](ModeIndex a, ModeIndex b) {
    const double la = lambda_mn(f, a), lb = lambda_mn(f, b);
    if (la != lb) return la < lb;
    if (a.m != b.m) return a.m < b.m;
    return a.n < b.n;
  });
  return modes;
}

double epsilon_default(const SpectralFactors& f, ModeIndex star) {
  const double lambda_star = lambda_mn(f, star);
  require_window(f, lambda_star + match_tol(lambda_star));

  // Gap to the next rectangle eigenvalue above the star value.
  const double next = next_level_above(f, lambda_star);
  if (!std::isfinite(next))
    fail(errc::truncation, "no eigenvalue above the star value in the window",
         2L * f.truncation);
  const double g_next = next - lambda_star;

  // Gap to the second eigenvalue of the decoupled operator, from the factor
  // subinterval spectra induced by the star eigenfunction's zeros.
  oned_flow::Problem1D xp = f.x_problem;
  xp.partition =
      oned_flow::zeros_from_vector(f.x_vectors[star.m - 1], xp.length);
  oned_flow::Problem1D yp = f.y_problem;
  yp.partition =
      oned_flow::zeros_from_vector(f.y_vectors[star.n - 1], yp.length);
  const auto x_dec =
      oned_flow::linfty_spectrum(xp, star.m + 2, f.grid_count);
  const auto y_dec =
      oned_flow::linfty_spectrum(yp, star.n + 2, f.grid_count);
  const double thresh = 1e-4 * std::max(1.0, std::abs(lambda_star));
  double second = std::numeric_limits<double>::infinity();
  for (double a : x_dec)
    for (double b : y_dec)
      if (a + b > lambda_star + thresh) second = std::min(second, a + b);
  if (!std::isfinite(second))
    fail(errc::gap, "decoupled spectrum has no value above the star value");
  const double g_inf = second - lambda_star;

  const double eps = std::min(g_inf, g_next) / 4.0;
  if (!(eps > 0.0))
    fail(errc::gap, "spectral gap above the star value is not positive");
  return eps;
}

StarDecomposition decompose(const SpectralFactors& f, ModeIndex star) {
  require_mode(f, star);
  StarDecomposition dec;
  dec.star = star;

  dec.x_zeros =
      oned_flow::zeros_from_vector(f.x_vectors[star.m - 1], f.x_problem.length);
  dec.y_zeros =
      oned_flow::zeros_from_vector(f.y_vectors[star.n - 1], f.y_problem.length);
  if (static_cast<int>(dec.x_zeros.size()) != star.m - 1 ||
      static_cast<int>(dec.y_zeros.size()) != star.n - 1)
    fail(errc::degeneracy, "factor eigenvector has an unexpected zero count");

  dec.x_problem = f.x_problem;
  dec.x_problem.partition = dec.x_zeros;
  dec.y_problem = f.y_problem;
  dec.y_problem.partition = dec.y_zeros;

  dec.x_grid = oned_flow::pick_grid_count(dec.x_problem.length, dec.x_zeros,
                                          f.grid_count);
  dec.y_grid = oned_flow::pick_grid_count(dec.y_problem.length, dec.y_zeros,
                                          f.grid_count);

  // Recompute the factor spectra on the final grids so curve baselines and
  // crossing levels share one discretization.
  dec.x_values = oned_flow::eigenvalues_1d(
      oned_flow::build_operator(dec.x_problem, 0.0, dec.x_grid), f.truncation);
  dec.y_values = oned_flow::eigenvalues_1d(
      oned_flow::build_operator(dec.y_problem, 0.0, dec.y_grid), f.truncation);
  dec.x_limits =
      oned_flow::linfty_spectrum(dec.x_problem, f.truncation, dec.x_grid);
  dec.y_limits =
      oned_flow::linfty_spectrum(dec.y_problem, f.truncation, dec.y_grid);

  dec.x_signs = subinterval_signs(f.x_vectors[star.m - 1],
                                  f.x_problem.length, dec.x_zeros);
  dec.y_signs = subinterval_signs(f.y_vectors[star.n - 1],
                                  f.y_problem.length, dec.y_zeros);
  dec.lambda_star = dec.x_values[star.m - 1] + dec.y_values[star.n - 1];
  return dec;
}

std::vector<TaggedCurve> flow_curves(const RectProblem&,
                                     const SpectralFactors& f, ModeIndex star,
                                     const std::vector<double>& sigma_samples,
                                     double window) {
  require_window(f, window);
  const auto dec = decompose(f, star);
  return build_curves(dec, sigma_samples, window, f.truncation);
}

std::optional<double> crossing_sigma(const TaggedCurve& curve, double level) {
  const double start = curve.evaluate ? curve.evaluate(0.0)
                                      : curve.values.front();
  if (!(start <= level) || !(curve.limit > level)) return std::nullopt;
  if (start == level) return 0.0;

  // Bracket in sigma, then bisect in arctan(sigma), never touching the
  // sampled values.
  double lo = 0.0, hi = 1.0;
  while (curve.evaluate(hi) < level) {
    lo = hi;
    hi *= 8.0;
    if (hi > 1e12)
      fail(errc::consistency,
           "curve limit exceeds the level but no crossing was bracketed");
  }
  double t_lo = std::atan(lo), t_hi = std::atan(hi);
  while (t_hi - t_lo > tol.root) {
    const double t_mid = 0.5 * (t_lo + t_hi);
    if (curve.evaluate(std::tan(t_mid)) >= level)
      t_hi = t_mid;
    else
      t_lo = t_mid;
  }
  return std::tan(0.5 * (t_lo + t_hi));
}

TheoremReport verify_theorem(const RectProblem& p, ModeIndex star,
                             double sigma_max) {
  const auto f = factors_for_star(p, star, 0);
  const double lambda_star = lambda_mn(f, star);
  const double tolm = match_tol(lambda_star);
  const double eps = epsilon_default(f, star);
  const auto dec = decompose(f, star);
  const auto curves = build_curves(dec, oned_flow::sigma_grid(sigma_max),
                                   lambda_star + 0.5 * eps, f.truncation);

  TheoremReport report;
  report.lambda_star = lambda_star;
  report.epsilon = eps;
  report.sigma_max = sigma_max;
  report.all_agree = true;
  const double level = dec.lambda_star + eps;

  for (int m = 1; m <= f.truncation; ++m) {
    if (f.x_values[m - 1] + f.y_values.front() > lambda_star + tolm) break;
    for (int n = 1; n <= f.truncation; ++n) {
      const ModeIndex mode{m, n};
      if (lambda_mn(f, mode) > lambda_star + tolm) break;
      TheoremEntry entry;
      entry.mode = mode;
      entry.predicate = contributes(f, mode, star);
      const auto& curve = curve_for(curves, mode);
      entry.lambda0 = curve.values.front();
      const auto sigma0 = crossing_sigma(curve, level);
      entry.crossed = sigma0.has_value();
      entry.sigma0 = sigma0.value_or(0.0);
      entry.agree = entry.predicate == entry.crossed;
      report.all_agree = report.all_agree && entry.agree;
      report.entries.push_back(entry);
    }
  }
  // same ordering as contributing_modes: by eigenvalue, then by index
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const TheoremEntry& a, const TheoremEntry& b) {
                     if (a.lambda0 != b.lambda0) return a.lambda0 < b.lambda0;
                     if (a.mode.m != b.mode.m) return a.mode.m < b.mode.m;
                     return a.mode.n < b.mode.n;
                   });
  return report;
}

DeficiencyReport deficiency_report(const RectProblem& p, ModeIndex star,
                                   double sigma_max, double epsilon_override,
                                   int grid_count) {
  const auto f = factors_for_star(p, star, grid_count);
  DeficiencyReport report;
  report.lambda_star = lambda_mn(f, star);
  const KStar ks = kstar(f, star);
  report.kstar = ks.kstar;
  report.multiplicity = ks.multiplicity;
  report.nodal_count = nodal_count(star);
  report.deficiency = deficiency(f, star);
  report.morse_index = morse_index_lattice(f, star);
  report.contributing_points = contributing_modes(f, star);
  const double eps_default = epsilon_default(f, star);
  report.epsilon = epsilon_override > 0.0 ? epsilon_override : eps_default;

  const auto dec = decompose(f, star);
  const auto curves =
      build_curves(dec, oned_flow::sigma_grid(sigma_max),
                   dec.lambda_star + 0.5 * eps_default, f.truncation);
  const double level = dec.lambda_star + report.epsilon;
  for (ModeIndex mode : report.contributing_points) {
    const auto sigma0 = crossing_sigma(curve_for(curves, mode), level);
    if (!sigma0)
      fail(errc::consistency,
           "a contributing mode has no numeric crossing; discretization is "
           "inconsistent");
    report.crossings.push_back({mode, *sigma0});
  }
  return report;
}

}  // namespace nodalflow::rect_flow
