#include "nodalflow/oned_flow.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nodalflow/parallel.hpp"
#include "tridiag_detail.hpp"

namespace nodalflow::oned_flow {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_infinite(double sigma) { return std::isinf(sigma) && sigma > 0.0; }

double max_potential(const Problem1D& p) {
  double m = 0.0;
  for (double v : p.potential) m = std::max(m, v);
  return m;
}

std::vector<double> eigenvalues_tridiag(const std::vector<double>& d,
                                        const std::vector<double>& e,
                                        int count) {
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
  Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(e.data(), e.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    fail(errc::decomposition, "tridiagonal eigenvalue iteration failed");
  const int take = std::min<int>(count, static_cast<int>(d.size()));
  std::vector<double> out(take);
  for (int i = 0; i < take; ++i) out[i] = solver.eigenvalues()[i];
  return out;
}

}  // namespace

double potential_at(const Problem1D& p, double x) {
  const auto& s = p.potential;
  if (s.empty()) return 0.0;
  if (s.size() == 1) return s.front();
  const double t =
      std::clamp(x / p.length, 0.0, 1.0) * static_cast<double>(s.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), s.size() - 2);
  const double frac = t - static_cast<double>(i);
  return s[i] + frac * (s[i + 1] - s[i]);
}

DiscreteOperator1D build_operator(const Problem1D& p, double sigma,
                                  int grid_count) {
  if (p.length <= 0.0) fail(errc::argument, "interval length must be positive");
  if (grid_count < 2) fail(errc::argument, "need at least two grid nodes");
  if (sigma < 0.0) fail(errc::argument, "coupling strength must be nonnegative");

  DiscreteOperator1D op;
  op.grid_count = grid_count;
  op.spacing = p.length / (grid_count + 1);
  op.sigma = sigma;
  const double h = op.spacing;
  const double inv_h2 = 1.0 / (h * h);

  op.diagonal.resize(grid_count);
  op.offdiagonal.assign(grid_count - 1, -inv_h2);
  for (int j = 0; j < grid_count; ++j)
    op.diagonal[j] = 2.0 * inv_h2 + potential_at(p, (j + 1) * h);

  for (double z : p.partition) {
    const long idx = std::lround(z / h) - 1;
    if (idx < 0 || idx >= grid_count)
      fail(errc::discretization,
           "partition point snaps outside the interior grid");
    const int j = static_cast<int>(idx);
    if (std::find(op.partition_indices.begin(), op.partition_indices.end(),
                  j) != op.partition_indices.end())
      fail(errc::indistinguishable_partition,
           "two partition points share a grid node; refine the grid");
    op.partition_indices.push_back(j);
    op.snap_errors.push_back(std::abs((j + 1) * h - z));
  }
  std::sort(op.partition_indices.begin(), op.partition_indices.end());

  if (is_infinite(sigma)) {
    // Decouple at the partition nodes: zero the adjacent couplings and park
    // the row's eigenvalue above the Gershgorin range of the rest, so the
    // placeholder rows sort after every physical eigenvalue of interest.
    const double placeholder = 4.0 * inv_h2 + std::max(0.0, max_potential(p)) + 1.0;
    for (int j : op.partition_indices) {
      op.diagonal[j] = placeholder;
      if (j > 0) op.offdiagonal[j - 1] = 0.0;
      if (j + 1 < grid_count) op.offdiagonal[j] = 0.0;
    }
  } else if (sigma > 0.0) {
    for (int j : op.partition_indices) op.diagonal[j] += sigma / h;
  }
  return op;
}

double operator_norm(const DiscreteOperator1D& op) {
  double m = 0.0;
  for (int i = 0; i < op.grid_count; ++i) {
    double row = std::abs(op.diagonal[i]);
    if (i > 0) row += std::abs(op.offdiagonal[i - 1]);
    if (i + 1 < op.grid_count) row += std::abs(op.offdiagonal[i]);
    m = std::max(m, row);
  }
  return m;
}

std::vector<double> eigenvalues_1d(const DiscreteOperator1D& op, int count) {
  if (count < 1) fail(errc::argument, "eigenvalue count must be positive");
  return eigenvalues_tridiag(op.diagonal, op.offdiagonal, count);
}

double eigenvalue_1d(const DiscreteOperator1D& op, int branch) {
  if (branch < 1 || branch > op.grid_count)
    fail(errc::argument, "eigenvalue index out of range");
  return detail::sturm_bisect_kth(op.diagonal, op.offdiagonal, branch);
}

std::vector<EigenPair1D> eigens_1d(const DiscreteOperator1D& op, int count) {
  const auto values = eigenvalues_1d(op, count);
  std::vector<EigenPair1D> pairs(values.size());

  // Vectors of a near-degenerate cluster are orthogonalized against each
  // other; with simple spectra the mate list stays empty.
  std::vector<std::vector<double>> mates;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double scale = std::max(1.0, std::abs(values[i]));
    if (i > 0 && values[i] - values[i - 1] > 1e-7 * scale) mates.clear();
    auto v = detail::inverse_iteration(op.diagonal, op.offdiagonal, values[i],
                                       mates);
    mates.push_back(v);

    double sum2 = 0.0;
    for (double x : v) sum2 += x * x;
    const double norm = std::sqrt(op.spacing * sum2);
    if (norm == 0.0) fail(errc::decomposition, "inverse iteration collapsed");
    double peak = 0.0;
    for (double x : v) if (std::abs(x) > std::abs(peak)) peak = x;
    const double flip = (peak < 0.0) ? -1.0 : 1.0;
    for (double& x : v) x = flip * x / norm;

    pairs[i].value = values[i];
    pairs[i].vector = std::move(v);
  }
  return pairs;
}

double residual_norm(const DiscreteOperator1D& op, const EigenPair1D& pair) {
  const auto& v = pair.vector;
  const int n = op.grid_count;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = (op.diagonal[i] - pair.value) * v[i];
    if (i > 0) r += op.offdiagonal[i - 1] * v[i - 1];
    if (i + 1 < n) r += op.offdiagonal[i] * v[i + 1];
    sum += r * r;
  }
  return std::sqrt(sum);
}

std::vector<double> linfty_spectrum(const Problem1D& p, int count,
                                    int grid_count) {
  if (count < 1) fail(errc::argument, "eigenvalue count must be positive");
  std::vector<double> edges;
  edges.reserve(p.partition.size() + 2);
  edges.push_back(0.0);
  edges.insert(edges.end(), p.partition.begin(), p.partition.end());
  edges.push_back(p.length);
  if (!std::is_sorted(edges.begin(), edges.end()))
    fail(errc::argument, "partition points must be increasing and interior");

  const double h_ref = p.length / (grid_count + 1);
  std::vector<double> merged;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double a = edges[s];
    const double len = edges[s + 1] - a;
    if (len <= 0.0) fail(errc::argument, "empty partition subinterval");
    // Match the subinterval spacing to the reference grid so the leading
    // finite-difference error agrees with operators built at grid_count.
    const int n = std::max<int>(16, static_cast<int>(std::llround(len / h_ref)) - 1);
    const double h = len / (n + 1);
    std::vector<double> d(n), e(n - 1, -1.0 / (h * h));
    for (int j = 0; j < n; ++j)
      d[j] = 2.0 / (h * h) + potential_at(p, a + (j + 1) * h);
    auto vals = eigenvalues_tridiag(d, e, std::min(count, n));
    merged.insert(merged.end(), vals.begin(), vals.end());
  }
  std::sort(merged.begin(), merged.end());
  if (static_cast<int>(merged.size()) < count)
    fail(errc::truncation, "not enough decoupled eigenvalues available",
         count);
  merged.resize(count);
  return merged;
}

double secular_sigma(const SecularModel& m, double kappa) {
  const double l = m.length;
  if (m.zeros_count == 1) return -2.0 * kappa / std::tan(kappa * l / 2.0);
  if (m.zeros_count != 2)
    fail(errc::argument, "closed forms cover one or two partition points");
  if (m.branch_symmetry == BranchSymmetry::symmetric)
    return kappa * (std::tan(kappa * l / 6.0) - 1.0 / std::tan(kappa * l / 3.0));
  return -kappa * (1.0 / std::tan(kappa * l / 3.0) + 1.0 / std::tan(kappa * l / 6.0));
}

double secular_branch_lambda(const SecularModel& m, int branch, double sigma) {
  if (sigma < 0.0) fail(errc::argument, "coupling strength must be nonnegative");
  const double l = m.length;
  SecularModel eval = m;
  double lo, hi;
  if (m.zeros_count == 1) {
    if (branch != 1) fail(errc::argument, "only the first branch flows here");
    lo = kPi / l;
    hi = 2.0 * kPi / l;
  } else if (m.zeros_count == 2) {
    if (branch == 1) {
      eval.branch_symmetry = BranchSymmetry::symmetric;
      lo = kPi / l;
    } else if (branch == 2) {
      eval.branch_symmetry = BranchSymmetry::antisymmetric;
      lo = 2.0 * kPi / l;
    } else {
      fail(errc::argument, "two-point closed form has two flowing branches");
    }
    hi = 3.0 * kPi / l;
  } else {
    fail(errc::argument, "closed forms cover one or two partition points");
  }

  hi -= tol.pole_guard;  // the right endpoint is a pole of the relation
  if (secular_sigma(eval, hi) < sigma)
    fail(errc::pole, "coupling strength too close to the decoupling pole");
  while (hi - lo > tol.root) {
    const double mid = 0.5 * (lo + hi);
    if (secular_sigma(eval, mid) >= sigma)
      hi = mid;
    else
      lo = mid;
  }
  const double kappa = 0.5 * (lo + hi);
  return kappa * kappa;
}

FlowCurve branch_flow(const Problem1D& p, int branch,
                      const std::vector<double>& sigma_samples,
                      int grid_count) {
  if (branch < 1) fail(errc::argument, "branch index must be positive");
  FlowCurve curve;
  curve.branch = branch;
  curve.sigma_samples = sigma_samples;
  curve.values.resize(sigma_samples.size());
  parallel_for(sigma_samples.size(), [&](std::size_t i) {
    const auto op = build_operator(p, sigma_samples[i], grid_count);
    curve.values[i] = eigenvalue_1d(op, branch);
  });
  for (std::size_t i = 1; i < curve.values.size(); ++i) {
    const double slack =
        tol.monotone_rel * std::max(1.0, std::abs(curve.values[i - 1]));
    if (curve.values[i] < curve.values[i - 1] - slack)
      fail(errc::consistency, "eigenvalue branch decreased along the flow");
  }
  curve.limit = linfty_spectrum(p, branch, grid_count)[branch - 1];
  return curve;
}

double derivative_identity_check(const Problem1D& p, int branch, double sigma,
                                 int grid_count, double dsigma) {
  if (dsigma <= 0.0) fail(errc::argument, "step must be positive");
  auto value_at = [&](double s) {
    return eigenvalue_1d(build_operator(p, s, grid_count), branch);
  };
  double fd;
  if (sigma >= dsigma) {
    fd = (value_at(sigma + dsigma) - value_at(sigma - dsigma)) / (2.0 * dsigma);
  } else {
    // One-sided second-order stencil keeps the samples nonnegative.
    fd = (-3.0 * value_at(sigma) + 4.0 * value_at(sigma + dsigma) -
          value_at(sigma + 2.0 * dsigma)) /
         (2.0 * dsigma);
  }

  const auto op = build_operator(p, sigma, grid_count);
  const auto pairs = eigens_1d(op, branch);
  const auto& v = pairs[branch - 1].vector;
  double predicted = 0.0;
  for (int j : op.partition_indices) predicted += v[j] * v[j];
  // Floor the denominator at 1: slopes here are O(1) quantities, and on a
  // constant branch both sides vanish, where a pure ratio would be 0/0 noise.
  return std::abs(fd - predicted) / std::max(1.0, std::abs(predicted));
}

SturmReport sturm_verify(const Problem1D& p, int k, int grid_count) {
  if (k < 1) fail(errc::argument, "branch index must be positive");
  SturmReport report;

  Problem1D free = p;
  free.partition.clear();
  const auto op = build_operator(free, 0.0, grid_count);
  const auto pairs = eigens_1d(op, k);
  report.lambda = pairs[k - 1].value;
  report.node_count = static_cast<int>(
      zeros_from_vector(pairs[k - 1].vector, p.length).size());

  report.limits = linfty_spectrum(p, k + 1, grid_count);
  report.limits_ok = true;
  for (int i = 0; i < k; ++i) {
    if (std::abs(report.limits[i] - report.lambda) >
        5e-3 * std::max(1.0, std::abs(report.lambda)))
      report.limits_ok = false;
  }
  if (report.limits[k] < 1.05 * report.lambda) report.limits_ok = false;
  return report;
}

std::vector<double> nodal_zeros(const Problem1D& p, int k, int grid_count) {
  Problem1D free = p;
  free.partition.clear();
  const auto op = build_operator(free, 0.0, grid_count);
  const auto pairs = eigens_1d(op, k);
  return zeros_from_vector(pairs[k - 1].vector, p.length);
}

std::vector<double> zeros_from_vector(const std::vector<double>& v,
                                      double length) {
  const int n = static_cast<int>(v.size());
  const double h = length / (n + 1);
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  const double cut = tol.zero_rel * peak;

  std::vector<double> zeros;
  bool previous_was_node = false;
  for (int j = 0; j < n; ++j) {
    if (std::abs(v[j]) <= cut) {
      if (!previous_was_node) zeros.push_back((j + 1) * h);
      previous_was_node = true;
      continue;
    }
    if (previous_was_node) {
      previous_was_node = false;
      continue;  // the sign change around an on-node zero is already counted
    }
    if (j + 1 < n && std::abs(v[j + 1]) > cut && v[j] * v[j + 1] < 0.0) {
      const double x = (j + 1) * h + h * v[j] / (v[j] - v[j + 1]);
      zeros.push_back(x);
    }
  }
  return zeros;
}

std::vector<double> sigma_grid(double sigma_max, int count) {
  if (count < 2 || sigma_max <= 0.0)
    fail(errc::argument, "need at least two nonnegative samples");
  const double t_max = std::atan(sigma_max);
  std::vector<double> grid(count);
  grid[0] = 0.0;
  for (int i = 1; i + 1 < count; ++i)
    grid[i] = std::tan(t_max * static_cast<double>(i) / (count - 1));
  grid[count - 1] = sigma_max;
  return grid;
}

int pick_grid_count(double length, const std::vector<double>& partition,
                    int nominal) {
  if (nominal < 2) fail(errc::argument, "grid count must be at least two");
  if (partition.empty()) return nominal;

  const int span = std::max(24, nominal / 8);
  int best = nominal;
  double best_worst = std::numeric_limits<double>::infinity();
  for (int n = nominal; n <= nominal + span; ++n) {
    const double h = length / (n + 1);
    double worst = 0.0;
    std::vector<long> used;
    for (double z : partition) {
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

}  // namespace nodalflow::oned_flow
