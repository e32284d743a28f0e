#pragma once

// Internal tridiagonal kernels shared by the 1D and 2D translation layers:
// Sturm sign counts, bisection on the count, and a pivoted LDU factorization
// driving inverse iteration. Kept independent of Eigen so the two eigenvalue
// routes in the test suite do not share code.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <vector>

namespace nodalflow::detail {

// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x,
// via the stationary qd recurrence with pivot flushing.
inline int sturm_count_below(const std::vector<double>& d,
                             const std::vector<double>& e, double x,
                             double pivmin) {
  int count = 0;
  double q = 1.0;
  const int n = static_cast<int>(d.size());
  for (int i = 0; i < n; ++i) {
    const double sq = (i == 0) ? 0.0 : e[i - 1] * e[i - 1] / q;
    q = d[i] - x - sq;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

inline double sturm_pivmin(const std::vector<double>& e) {
  double emax2 = std::numeric_limits<double>::min();
  for (double v : e) emax2 = std::max(emax2, v * v);
  return std::numeric_limits<double>::min() * std::max(1.0, emax2);
}

// Gershgorin enclosure of the whole spectrum.
inline void gershgorin_bounds(const std::vector<double>& d,
                              const std::vector<double>& e, double& lo,
                              double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  const int n = static_cast<int>(d.size());
  for (int i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) +
                     (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double pad = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  lo -= pad;
  hi += pad;
}

// k-th smallest eigenvalue (1-based) by bisection on the Sturm count.
inline double sturm_bisect_kth(const std::vector<double>& d,
                               const std::vector<double>& e, int k) {
  double lo, hi;
  gershgorin_bounds(d, e, lo, hi);
  const double pivmin = sturm_pivmin(e);
  while (hi - lo > 1e-14 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count_below(d, e, mid, pivmin) >= k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Partial-pivoted LDU factors of (T - shift). Layout mirrors the classic
// gttrf scheme: dl/dd/du are the factored bands, du2 the second
// superdiagonal fill-in, ipiv records row interchanges.
struct ShiftedTridiagLU {
  std::vector<double> dl, dd, du, du2;
  std::vector<int> ipiv;
};

inline ShiftedTridiagLU factor_shifted(const std::vector<double>& d,
                                       const std::vector<double>& e,
                                       double shift) {
  const int n = static_cast<int>(d.size());
  ShiftedTridiagLU f;
  f.dl.assign(std::max(n - 1, 0), 0.0);
  f.dd.resize(n);
  f.du.assign(std::max(n - 1, 0), 0.0);
  f.du2.assign(std::max(n - 2, 0), 0.0);
  f.ipiv.resize(n);
  for (int i = 0; i < n; ++i) f.dd[i] = d[i] - shift;
  for (int i = 0; i + 1 < n; ++i) {
    f.dl[i] = e[i];
    f.du[i] = e[i];
  }
  for (int i = 0; i < n; ++i) f.ipiv[i] = i;
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(f.dd[i]) >= std::abs(f.dl[i])) {
      if (f.dd[i] == 0.0) f.dd[i] = std::numeric_limits<double>::min();
      const double fac = f.dl[i] / f.dd[i];
      f.dl[i] = fac;
      f.dd[i + 1] -= fac * f.du[i];
      if (i + 2 < n) f.du2[i] = 0.0;
    } else {
      const double fac = f.dd[i] / f.dl[i];
      f.dd[i] = f.dl[i];
      f.dl[i] = fac;
      const double tmp = f.du[i];
      f.du[i] = f.dd[i + 1];
      f.dd[i + 1] = tmp - fac * f.dd[i + 1];
      if (i + 2 < n) {
        f.du2[i] = f.du[i + 1];
        f.du[i + 1] = -fac * f.du[i + 1];
      }
      f.ipiv[i] = i + 1;
    }
  }
  if (n > 0 && f.dd[n - 1] == 0.0)
    f.dd[n - 1] = std::numeric_limits<double>::min();
  return f;
}

inline void solve_shifted(const ShiftedTridiagLU& f, std::vector<double>& b) {
  const int n = static_cast<int>(f.dd.size());
  for (int i = 0; i + 1 < n; ++i) {
    if (f.ipiv[i] != i) std::swap(b[i], b[i + 1]);
    b[i + 1] -= f.dl[i] * b[i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    if (i + 1 < n) s -= f.du[i] * b[i + 1];
    if (i + 2 < n) s -= f.du2[i] * b[i + 2];
    b[i] = s / f.dd[i];
  }
}

// Inverse iteration for the eigenvector at an already-converged eigenvalue.
// Deterministic start, renormalization each sweep, and Gram-Schmidt against
// previously found vectors of a near-degenerate cluster.
inline std::vector<double> inverse_iteration(
    const std::vector<double>& d, const std::vector<double>& e, double lambda,
    const std::vector<std::vector<double>>& cluster_mates) {
  const int n = static_cast<int>(d.size());
  double scale = 0.0;
  for (double v : d) scale = std::max(scale, std::abs(v));
  for (double v : e) scale = std::max(scale, std::abs(v));
  const double eps = std::numeric_limits<double>::epsilon();
  const auto f = factor_shifted(d, e, lambda + 10.0 * eps * std::max(1.0, scale));

  std::minstd_rand rng(2026);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);

  auto orthogonalize = [&] {
    for (const auto& w : cluster_mates) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += v[i] * w[i];
      double ww = 0.0;
      for (int i = 0; i < n; ++i) ww += w[i] * w[i];
      if (ww > 0.0)
        for (int i = 0; i < n; ++i) v[i] -= (dot / ww) * w[i];
    }
  };

  double growth = 0.0;
  for (int sweep = 0; sweep < 8; ++sweep) {
    orthogonalize();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      for (double& x : v) x = dist(rng);
      continue;
    }
    for (double& x : v) x /= norm;
    solve_shifted(f, v);
    growth = 0.0;
    for (double x : v) growth += x * x;
    growth = std::sqrt(growth);
    if (growth > 1.0 / (100.0 * n * eps) && sweep >= 1) break;
  }
  orthogonalize();
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return v;
}

}  // namespace nodalflow::detail
