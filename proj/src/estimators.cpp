#include "sysid/estimators.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <fstream>
#include <sstream>

#include "sysid/dataset_io.hpp"

namespace sysid {

using nlohmann::json;

namespace {

/// Upper-triangular block Toeplitz column stack for one rollout:
/// out is (bw*T1) x T2 with block (j, t) = signal column (t - j) for
/// t >= j, zero otherwise.
void fill_toeplitz_block(const Matrix& signal, Index T1, Eigen::Ref<Matrix> out) {
    const Index bw = signal.rows();
    const Index T2 = signal.cols();
    out.setZero();
    for (Index j = 0; j < T1; ++j) {
        for (Index t = j; t < T2; ++t) {
            out.block(j * bw, t, bw, 1) = signal.col(t - j);
        }
    }
}

struct OlsSolution {
    Matrix G_hat;
    double min_eig = 0.0;
};

/// Shared OLS core: G_hat = Y U^T (U U^T)^{-1} via Cholesky on the Gram
/// matrix, with SVD pseudo-inverse fallback; rejects under-excited data
/// using the sigma_u^2 * N * 1e-12 eigenvalue cutoff.
OlsSolution solve_ols(const Matrix& Y, const Matrix& U, double sigma_u, Index N,
                      const char* context) {
    OlsSolution sol;
    const Matrix M = U * U.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    sol.min_eig = es.info() == Eigen::Success ? es.eigenvalues().minCoeff() : 0.0;
    const double cutoff = sigma_u * sigma_u * static_cast<double>(N) * 1e-12;
    if (sol.min_eig <= cutoff) {
        std::ostringstream msg;
        msg << context << ": U U^T numerically singular (lambda_min = " << sol.min_eig
            << "); need at least " << U.rows()
            << " independent excitation columns, have N = " << N;
        throw UnderExcitationError(msg.str(), U.rows());
    }
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) {
        sol.G_hat = llt.solve(U * Y.transpose()).transpose();
    } else {
        sol.G_hat = Y * right_pseudo_inverse(U);
    }
    return sol;
}

void attach_truth(EstimationResult& r, const MarkovMatrix* truth) {
    if (!truth) return;
    if (truth->block_row.rows() != r.G_hat.block_row.rows() ||
        truth->block_row.cols() != r.G_hat.block_row.cols()) {
        throw InvalidInputError("truth Markov matrix has mismatched dimensions");
    }
    const double err = spectral_norm(r.G_hat.block_row - truth->block_row);
    r.spectral_error = err;
    r.normalized_error = err / spectral_norm(truth->block_row);
}

}  // namespace

DataMatrices assemble_data_matrices(const RolloutDataset& ds, Index T1) {
    if (ds.N() < 1) throw InvalidInputError("assemble_data_matrices: empty dataset");
    const Index T2 = ds.T2();
    if (T1 < 1) throw InvalidInputError("assemble_data_matrices: T1 must be >= 1");
    if (T1 > T2) {
        std::ostringstream msg;
        msg << "assemble_data_matrices: T1 = " << T1 << " exceeds rollout length T2 = " << T2;
        throw LengthOrderError(msg.str());
    }
    const Index N = ds.N();
    const auto& first = ds.rollouts.front();
    const Index m = first.inputs.rows();
    const Index p = first.outputs.rows();
    const Index q = first.process_noise.rows();
    const Index l = first.measurement_noise.rows();
    const Index n = first.initial_state.size();

    bool any_x0 = false;
    for (const auto& r : ds.rollouts) {
        if (r.length() != T2) {
            throw InvalidInputError("assemble_data_matrices: rollouts differ in length");
        }
        if (n > 0 && r.initial_state.cwiseAbs().maxCoeff() > 0.0) any_x0 = true;
    }

    DataMatrices dm;
    dm.T1 = T1;
    dm.T2 = T2;
    dm.N = N;
    dm.sigma_u = ds.noise.sigma_u;
    dm.Y.resize(p, N * T2);
    dm.U.resize(m * T1, N * T2);
    if (ds.has_noise_records) {
        dm.W.resize(q * T1, N * T2);
        dm.V.resize(l, N * T2);
    }
    if (any_x0) dm.X0 = Matrix::Zero(n * T2, N * T2);

    for (Index i = 0; i < N; ++i) {
        const auto& r = ds.rollouts[static_cast<std::size_t>(i)];
        const Index c0 = i * T2;
        dm.Y.middleCols(c0, T2) = r.outputs;
        fill_toeplitz_block(r.inputs, T1, dm.U.middleCols(c0, T2));
        if (ds.has_noise_records) {
            fill_toeplitz_block(r.process_noise, T1, dm.W.middleCols(c0, T2));
            dm.V.middleCols(c0, T2) = r.measurement_noise;
        }
        if (any_x0) {
            for (Index t = 0; t < T2; ++t) {
                dm.X0.block(t * n, c0 + t, n, 1) = r.initial_state;
            }
        }
    }
    return dm;
}

EstimationResult ols_full(const DataMatrices& dm, const MarkovMatrix* truth) {
    const Index m = dm.U.rows() / dm.T1;
    const OlsSolution sol = solve_ols(dm.Y, dm.U, dm.sigma_u, dm.N, "ols_full");
    EstimationResult r;
    r.G_hat.block_row = sol.G_hat;
    r.G_hat.block_width = m;
    r.G_hat.horizon = dm.T1;
    r.min_eig_UUT = sol.min_eig;
    r.method_tag = dm.T1 == dm.T2 ? "full" : "unequal_length";
    attach_truth(r, truth);
    return r;
}

EstimationResult ols_final_sample(const RolloutDataset& ds, const MarkovMatrix* truth) {
    if (ds.N() < 1) throw InvalidInputError("ols_final_sample: empty dataset");
    const Index N = ds.N();
    const Index T = ds.T2();
    const Index m = ds.rollouts.front().inputs.rows();
    const Index p = ds.rollouts.front().outputs.rows();
    if (N < m * T) {
        std::ostringstream msg;
        msg << "ols_final_sample: need N >= mT = " << m * T << " rollouts, have " << N;
        throw UnderExcitationError(msg.str(), m * T);
    }
    Matrix Yf(p, N);
    Matrix Ubar(m * T, N);
    for (Index i = 0; i < N; ++i) {
        const auto& r = ds.rollouts[static_cast<std::size_t>(i)];
        Yf.col(i) = r.outputs.col(T - 1);
        for (Index k = 0; k < T; ++k) {
            // Reversed stack: block k holds u_{T-1-k}.
            Ubar.block(k * m, i, m, 1) = r.inputs.col(T - 1 - k);
        }
    }
    const OlsSolution sol = solve_ols(Yf, Ubar, ds.noise.sigma_u, N, "ols_final_sample");
    EstimationResult r;
    r.G_hat.block_row = sol.G_hat;
    r.G_hat.block_width = m;
    r.G_hat.horizon = T;
    r.min_eig_UUT = sol.min_eig;
    r.method_tag = "final_sample";
    attach_truth(r, truth);
    return r;
}

double error_decomposition_check(const DataMatrices& dm, const SystemModel& sys,
                                 const RolloutDataset& ds, const MarkovMatrix& G_hat) {
    if (!ds.has_noise_records || dm.W.size() == 0 || dm.V.size() == 0) {
        throw IncompleteDatasetError(
            "error_decomposition_check: dataset stores no noise records");
    }
    const Index T1 = dm.T1;
    const Index T2 = dm.T2;
    const Index N = dm.N;
    const Index p = sys.p();

    const MarkovMatrix G = true_markov(sys, T1);
    const MarkovMatrix F = noise_markov_F(sys, T1);

    // State carry-over term Z: column t of rollout i is C A^t x_0 for
    // t <= T1-1 and C A^{T1-1} x_{t-T1+1} for t >= T1. Zero everywhere
    // when initial states vanish and T1 = T2.
    Matrix Z = Matrix::Zero(p, N * T2);
    std::vector<Matrix> CA(static_cast<std::size_t>(T1));
    CA[0] = sys.C;
    for (Index k = 1; k < T1; ++k) CA[static_cast<std::size_t>(k)] = CA[k - 1] * sys.A;
    for (Index i = 0; i < N; ++i) {
        const auto& r = ds.rollouts[static_cast<std::size_t>(i)];
        const bool zero_x0 = r.initial_state.size() == 0 ||
                             r.initial_state.cwiseAbs().maxCoeff() == 0.0;
        if (T1 == T2 && zero_x0) continue;
        const std::vector<Vector> states = replay_states(sys, r);
        for (Index t = 0; t < T2; ++t) {
            const Index k = std::min(t, T1 - 1);
            const Vector& x = states[static_cast<std::size_t>(t - k)];
            Z.col(i * T2 + t) = CA[static_cast<std::size_t>(k)] * x;
        }
    }

    const Matrix rhs_noise = F.block_row * dm.W + sys.D_v * dm.V + Z;
    const Matrix U_pinv = right_pseudo_inverse(dm.U);
    const Matrix lhs = G_hat.block_row - G.block_row;
    const Matrix rhs = rhs_noise * U_pinv;
    return spectral_norm(lhs - rhs);
}

void export_estimate(const EstimationResult& result, Index N, Index T2,
                     const std::filesystem::path& csv_path,
                     const std::filesystem::path& json_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw Error("cannot write " + csv_path.string());
    const Matrix& G = result.G_hat.block_row;
    for (Index i = 0; i < G.rows(); ++i) {
        for (Index j = 0; j < G.cols(); ++j) {
            if (j) csv << ",";
            csv << format_full_precision(G(i, j));
        }
        csv << "\n";
    }

    json side;
    side["method_tag"] = result.method_tag;
    side["N"] = N;
    side["T1"] = result.G_hat.horizon;
    side["T2"] = T2;
    side["min_eig_UUT"] = result.min_eig_UUT;
    if (result.spectral_error) side["spectral_error"] = *result.spectral_error;
    if (result.normalized_error) side["normalized_error"] = *result.normalized_error;
    std::ofstream jf(json_path);
    if (!jf) throw Error("cannot write " + json_path.string());
    jf << side.dump(2) << "\n";
}

MarkovMatrix load_markov_csv(const std::filesystem::path& csv_path, Index block_width) {
    std::ifstream in(csv_path);
    if (!in) throw NotFoundError("cannot open " + csv_path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InvalidInputError(csv_path.string() + ": ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInputError(csv_path.string() + ": empty file");
    const Index cols = static_cast<Index>(rows.front().size());
    if (block_width < 1 || cols % block_width != 0) {
        throw InvalidInputError("load_markov_csv: column count not divisible by block width");
    }
    MarkovMatrix g;
    g.block_width = block_width;
    g.horizon = cols / block_width;
    g.block_row.resize(static_cast<Index>(rows.size()), cols);
    for (Index i = 0; i < g.block_row.rows(); ++i) {
        for (Index j = 0; j < cols; ++j) {
            g.block_row(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return g;
}

}  // namespace sysid
