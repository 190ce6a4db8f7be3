#pragma once

#include <Eigen/Dense>

#include "sysid/errors.hpp"

namespace sysid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Throws InvalidInputError if any entry of A is NaN or infinite.
void check_finite(const Matrix& A, const char* name);

struct SvdResult {
    Matrix U;                 ///< orthonormal columns
    Vector singular_values;   ///< non-increasing, all >= 0
    Matrix V;                 ///< orthonormal columns, A ~= U * diag(s) * V^T
};

/// Thin SVD with a deterministic sign convention: the largest-magnitude
/// entry of every left singular vector is made positive (ties broken by
/// lowest row index), and the right vector is flipped with it.
SvdResult svd(const Matrix& A);

/// Largest singular value of A.
double spectral_norm(const Matrix& A);

/// Minimum eigenvalue of a symmetric matrix. A must be symmetric to
/// within 1e-12 relative asymmetry; it is symmetrized before solving.
double min_eigenvalue_sym(const Matrix& A);

/// Right pseudo-inverse U^T (U U^T)^{-1} of a full-row-rank U (rows <= cols).
/// Solves the SPD system by Cholesky; if that factorization fails, falls
/// back to an SVD pseudo-inverse with singular-value cutoff sigma_max*1e-12,
/// throwing RankDeficiencyError when the smallest singular value is below
/// the cutoff.
Matrix right_pseudo_inverse(const Matrix& U);

/// Spectral radius via the Gelfand estimate ||A^(2^k)||^(1/2^k), computed
/// by repeated squaring with per-step norm scaling (log-space accumulator,
/// no overflow). Stops when two successive estimates agree to 1e-8
/// relative, at most k = 24 squarings.
double spectral_radius(const Matrix& A);

}  // namespace sysid
