#pragma once

#include <filesystem>

#include "sysid/lti.hpp"

namespace sysid {

/// State-space realization recovered from Markov parameters.
struct Realization {
    Matrix A_hat;  ///< n x n
    Matrix B_hat;  ///< n x m
    Matrix C_hat;  ///< p x n
    Matrix D_hat;  ///< p x m
    Index order = 0;
    /// All singular values of H_minus, kept for diagnostics/export.
    Vector hankel_singular_values;
    /// Set when the (n+1)-th singular value exceeds half the n-th: the
    /// spectral gap is too weak to pin the order unambiguously.
    bool order_warning = false;

    SystemModel to_system() const;
};

/// H-infinity error split for a length-T FIR estimate of a stable plant.
struct FirTruncationReport {
    double ols_error_hinf = 0.0;  ///< max over the grid of sigma_max(sum_k (G(k)-G_hat_k) e^{-j w k})
    double tail_bound = 0.0;      ///< sum_{k>=T} ||C A^{k-1} B||
    double total_bound = 0.0;     ///< ols_error_hinf + tail_bound
    Index grid_points = 0;
};

/// Outcome of checking the Ho-Kalman robustness inequalities against a
/// known truth.
struct RobustnessReport {
    bool precondition_ok = false;    ///< hankel_error <= sigma_min(H_minus)/4
    double hankel_error = 0.0;       ///< ||H - H_hat|| supplied by the caller
    double sigma_min_H_minus = 0.0;  ///< n-th singular value of the true H_minus
    double bc_bound = 0.0;           ///< 5 sqrt(n ||H - H_hat||)
    double b_gap = 0.0;              ///< ||B_hat - S B||
    double c_gap = 0.0;              ///< ||C_hat - C S^T||
    double a_bound = 0.0;            ///< 50 sqrt(n ||H-H_hat||) ||H|| / sigma_min^{3/2}
    double a_gap = 0.0;              ///< ||A_hat - S A S^T||
    bool b_pass = false;
    bool c_pass = false;
    bool a_pass = false;
    Matrix S;  ///< aligning orthogonal transform (order x order)
};

/// Ho-Kalman: rank-n SVD truncation of H_minus, observability factor
/// O = U Sigma^{1/2}, controllability factor Ctrl = Sigma^{1/2} V^T,
/// C_hat = first p rows of O, B_hat = first m columns of Ctrl,
/// A_hat = O^+ H_plus Ctrl^+, D_hat = leading p x m block of G.
/// Requires G.horizon >= T1 + T2h + 1 and min(T1, T2h) >= n.
Realization ho_kalman(const MarkovMatrix& G, Index n, Index T1, Index T2h);

/// sqrt(min(T1, T2h + 1)) * g_err_spec: spectral-norm Hankel perturbation
/// implied by a Markov-parameter error of size g_err_spec.
double hankel_perturbation_bound(double g_err_spec, Index T1, Index T2h);

/// Checks the robustness inequalities of the Ho-Kalman algorithm: given
/// the truth and an estimated realization, verifies the precondition
/// ||H - H_hat|| <= sigma_min(H_minus)/4 and, with S found by orthogonal
/// Procrustes between the estimate's regenerated observability factor and
/// the balanced one obtained from the exact Markov parameters, evaluates
///   max(||B_hat - S B||, ||C_hat - C S^T||) <= 5 sqrt(n ||H - H_hat||)
///   ||A_hat - S A S^T|| <= 50 sqrt(n ||H - H_hat||) ||H|| / sigma_min^{3/2}(H_minus).
/// A violated precondition is reported, not thrown.
RobustnessReport realization_robustness_check(const SystemModel& truth, const Realization& est,
                                              double hankel_error, Index T1, Index T2h);

/// Evaluates the H-infinity split between a stable truth and a length-T
/// FIR estimate on a uniform frequency grid (grid_points >= 8 * horizon).
/// The tail series stops once the next term drops below 1e-12, capped at
/// 1e6 terms.
FirTruncationReport fir_hinf_report(const SystemModel& truth, const MarkovMatrix& G_hat,
                                    Index grid_points);

/// JSON export: matrices row-major, order, Hankel singular values.
void export_realization_json(const Realization& real, const std::filesystem::path& path);

}  // namespace sysid
