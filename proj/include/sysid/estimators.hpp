#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sysid/lti.hpp"

namespace sysid {

/// Stacked regression data for N rollouts of length T2 and Markov length
/// T1 <= T2. Per rollout, U holds the upper-triangular block Toeplitz
/// pattern: block (j, k) of U^(i) equals u^(i)_{k-j} for k >= j and zero
/// otherwise (0-based), truncated to the first T1 block rows when
/// T1 < T2. W has the same structure built from process noise. X0 is
/// present only when some rollout starts away from the origin; its block
/// for rollout i is I_{T2} (x) x_0^(i).
struct DataMatrices {
    Matrix Y;   ///< p x N*T2
    Matrix U;   ///< mT1 x N*T2
    Matrix W;   ///< qT1 x N*T2; empty when the dataset has no noise records
    Matrix V;   ///< l x N*T2; empty when the dataset has no noise records
    Matrix X0;  ///< nT2 x N*T2; empty when all initial states are zero
    Index T1 = 0;
    Index T2 = 0;
    Index N = 0;
    double sigma_u = 0.0;  ///< carried from the dataset for the rank cutoff
};

struct EstimationResult {
    MarkovMatrix G_hat;
    std::optional<double> spectral_error;    ///< ||G_hat - G|| when truth supplied
    std::optional<double> normalized_error;  ///< ||G_hat - G|| / ||G||
    double min_eig_UUT = 0.0;
    std::string method_tag;  ///< "full", "final_sample", or "unequal_length"
};

/// Builds Y, U, W, V (and X0 when needed) from a dataset. T1 = T2 gives
/// the equal-length layout; T1 < T2 gives the unequal-length layout.
/// Throws LengthOrderError if T1 > T2.
DataMatrices assemble_data_matrices(const RolloutDataset& ds, Index T1);

/// Multi-rollout OLS over all samples: G_hat = Y U^T (U U^T)^{-1}. Tagged
/// "full" when T1 = T2 and "unequal_length" otherwise. Throws
/// UnderExcitationError when lambda_min(UU^T) <= sigma_u^2 * N * 1e-12.
EstimationResult ols_full(const DataMatrices& dm, const MarkovMatrix* truth = nullptr);

/// Final-sample baseline: regresses y_{T-1}^(i) on the reversed stacked
/// input [u_{T-1}; ...; u_0] across rollouts (one sample per rollout).
/// Requires N >= mT.
EstimationResult ols_final_sample(const RolloutDataset& ds, const MarkovMatrix* truth = nullptr);

/// Evaluates the error-decomposition identity
///   G_hat - G = (F W + D_v V + Z) U^T (U U^T)^{-1},
/// where Z collects the state carry-over terms: column t of rollout i is
/// C A^t x_0^(i) for t <= T1-1 and C A^{T1-1} x^(i)_{t-T1+1} for t >= T1.
/// With T1 = T2 and zero initial states Z vanishes; with non-zero initial
/// states it equals H X0; with T1 < T2 it is the unequal-length residual
/// term. Returns the spectral norm of the difference of the two sides.
/// Throws IncompleteDatasetError when the dataset stores no noises.
double error_decomposition_check(const DataMatrices& dm, const SystemModel& sys,
                                 const RolloutDataset& ds, const MarkovMatrix& G_hat);

/// Writes G_hat as CSV (p rows, mT1 columns, 17 significant digits) plus
/// a JSON sidecar with method_tag, N, T1, T2, error norms, min_eig_UUT.
void export_estimate(const EstimationResult& result, Index N, Index T2,
                     const std::filesystem::path& csv_path,
                     const std::filesystem::path& json_path);

/// Reads an estimate CSV back into a MarkovMatrix with the given block width.
MarkovMatrix load_markov_csv(const std::filesystem::path& csv_path, Index block_width);

}  // namespace sysid
