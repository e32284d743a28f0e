#pragma once

namespace nodalflow {

// Numerical policy shared across modules. These values are part of the tested
// contract: the suites pin behavior at exactly these thresholds, so change
// them only together with the tests.
struct Tolerances {
  double root = 1e-12;         // bisection width, in kappa or arctan(sigma)
  double match = 1e-6;         // relative tolerance for spectral coincidences
  double gap = 1e-6;           // relative simplicity gap for derivative checks
  double pole_guard = 1e-9;    // exclusion radius around secular poles
  double inertia_rel = 1e-8;   // x ||M||: zero threshold for inertia counts
  double zero_rel = 1e-9;      // x max|v|: grid value treated as a nodal zero
  double monotone_rel = 1e-8;  // allowed relative backslide in flow curves
  double count_margin = 1e-7;  // relative guard band around counting thresholds
};

inline constexpr Tolerances tol{};

// Default flow-parameter choices; the CLI records them in output metadata.
inline constexpr double default_sigma_max = 1e3;
inline constexpr int default_sigma_samples = 33;

}  // namespace nodalflow
