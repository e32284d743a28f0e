#pragma once

#include <vector>

#include "nodalflow/errors.hpp"
#include "nodalflow/tolerances.hpp"

namespace nodalflow::oned_flow {

// Dirichlet interval problem -u'' + q(x) u on [0, length], with a delta
// coupling of common strength sigma at every partition point. sigma = 0 is
// the plain operator; sigma = +infinity imposes Dirichlet conditions at the
// partition points and decouples the subintervals.
struct Problem1D {
  double length = 0.0;
  // Uniform samples of q on [0, length] including both endpoints; empty means
  // q == 0, otherwise at least two samples (piecewise-linear in between).
  std::vector<double> potential;
  // Strictly increasing interior points.
  std::vector<double> partition;
};

// Symmetric tridiagonal finite differences on the interior nodes
// x_j = (j+1) h, h = length/(grid_count+1). Off-diagonal entries are -1/h^2
// and the diagonal is 2/h^2 + q(x_j); a partition node carries an extra
// sigma/h when sigma is finite, or becomes a decoupled Dirichlet row (with a
// placeholder diagonal above the Gershgorin range) when sigma = infinity.
struct DiscreteOperator1D {
  int grid_count = 0;
  double spacing = 0.0;
  double sigma = 0.0;
  std::vector<double> diagonal;
  std::vector<double> offdiagonal;     // size grid_count - 1
  std::vector<int> partition_indices;  // snapped node index per partition point
  std::vector<double> snap_errors;     // |x_index - Z_i|, each <= spacing/2
};

struct EigenPair1D {
  double value = 0.0;
  std::vector<double> vector;  // normalized so spacing * sum v_j^2 = 1
};

enum class BranchSymmetry { symmetric, antisymmetric };

// Closed-form dispersion relations for q == 0 with one or two equidistributed
// partition points. With kappa = sqrt(lambda):
//   one point   (Z = {l/2}):        sigma = -2 kappa cot(kappa l / 2)
//   two points, symmetric family:   sigma = kappa (tan(kappa l/6) - cot(kappa l/3))
//   two points, antisymmetric:      sigma = -kappa (cot(kappa l/3) + cot(kappa l/6))
struct SecularModel {
  double length = 0.0;
  int zeros_count = 1;  // 1 or 2
  BranchSymmetry branch_symmetry = BranchSymmetry::symmetric;  // used by secular_sigma
};

// One eigenvalue branch sampled along sigma. Values are nondecreasing within
// tol.monotone_rel and approach `limit`, the branch-th eigenvalue of the fully
// decoupled (sigma = infinity) problem.
struct FlowCurve {
  int branch = 0;
  std::vector<double> sigma_samples;
  std::vector<double> values;
  double limit = 0.0;
};

struct SturmReport {
  int node_count = 0;   // sign changes of the k-th eigenvector at sigma = 0
  bool limits_ok = false;
  double lambda = 0.0;  // k-th eigenvalue at sigma = 0
  std::vector<double> limits;  // first k+1 decoupled eigenvalues
};

// Piecewise-linear evaluation of the sampled potential (0 if no samples).
double potential_at(const Problem1D& p, double x);

DiscreteOperator1D build_operator(const Problem1D& p, double sigma, int grid_count);

// Infinity norm of the assembled matrix, for residual comparisons.
double operator_norm(const DiscreteOperator1D& op);

// The `count` lowest eigenvalues, ascending (full-spectrum tridiagonal QL).
std::vector<double> eigenvalues_1d(const DiscreteOperator1D& op, int count);

// The branch-th eigenvalue alone, by Sturm-count bisection. Agrees with
// eigenvalues_1d to roundoff; kept separate because sigma-bisections evaluate
// single branches thousands of times.
double eigenvalue_1d(const DiscreteOperator1D& op, int branch);

// Eigenpairs 1..count with inverse-iteration eigenvectors, normalized to
// spacing * sum v^2 = 1 and sign-fixed (largest component positive).
std::vector<EigenPair1D> eigens_1d(const DiscreteOperator1D& op, int count);

// ||(A - value) v||_2 for a computed pair, with v as stored.
double residual_norm(const DiscreteOperator1D& op, const EigenPair1D& pair);

// Merged, sorted Dirichlet spectra of the partition subintervals. Each
// subinterval is discretized with spacing matched to length/(grid_count+1)
// (never fewer than 16 nodes), so comparisons against eigenvalues computed at
// that grid share their leading finite-difference error.
std::vector<double> linfty_spectrum(const Problem1D& p, int count, int grid_count);

double secular_sigma(const SecularModel& m, double kappa);

// Inverse of the secular relation on one monotone branch: the lambda with
// secular_sigma(sqrt(lambda)) = sigma, found by bisection to tol.root in kappa.
// For zeros_count == 2, branch 1 is the symmetric family and branch 2 the
// antisymmetric one, regardless of the model's branch_symmetry field.
double secular_branch_lambda(const SecularModel& m, int branch, double sigma);

FlowCurve branch_flow(const Problem1D& p, int branch,
                      const std::vector<double>& sigma_samples, int grid_count);

// Relative mismatch between the centered difference of the branch value in
// sigma and the predicted slope sum_i u(Z_i)^2. At sigma < dsigma a one-sided
// second-order stencil is used so sigma stays nonnegative.
double derivative_identity_check(const Problem1D& p, int branch, double sigma,
                                 int grid_count, double dsigma = 1e-3);

// Verifies the nodal-count and limit stratification of branch k, with
// p.partition supplied as the interior zeros of the k-th eigenfunction:
// the first k decoupled eigenvalues all equal lambda_k (within 5e-3 relative)
// and the (k+1)-th exceeds it by at least 5 percent.
SturmReport sturm_verify(const Problem1D& p, int k, int grid_count);

// Interior zeros of the k-th eigenfunction at sigma = 0, by sign changes of
// the grid vector with linear interpolation; a grid value below
// tol.zero_rel * max|v| counts as a zero at that node.
std::vector<double> nodal_zeros(const Problem1D& p, int k, int grid_count);
std::vector<double> zeros_from_vector(const std::vector<double>& v, double length);

// Sigma sample grid, uniform in arctan(sigma) from 0 to arctan(sigma_max).
std::vector<double> sigma_grid(double sigma_max = default_sigma_max,
                               int count = default_sigma_samples);

// Smallest grid count >= nominal whose nodes come close to every partition
// point (worst fractional offset <= 0.02 if attainable in the search window,
// otherwise the argmin). Keeps snapped operators faithful to the partition.
int pick_grid_count(double length, const std::vector<double>& partition, int nominal);

}  // namespace nodalflow::oned_flow
