#include "sysid/realization.hpp"

#include <json.hpp>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

namespace sysid {

using nlohmann::json;

SystemModel Realization::to_system() const {
    // B_w / D_v placeholders: the realization carries no noise model.
    return SystemModel(A_hat, B_hat, C_hat, D_hat, Matrix::Zero(A_hat.rows(), 1),
                       Matrix::Zero(C_hat.rows(), 1));
}

Realization ho_kalman(const MarkovMatrix& G, Index n, Index T1, Index T2h) {
    if (n < 1) throw InvalidInputError("ho_kalman: order must be >= 1");
    if (std::min(T1, T2h) < n) {
        throw InvalidInputError("ho_kalman: need min(T1, T2h) >= order for the rank condition");
    }
    const HankelTriple hank = build_hankel(G, T1, T2h);  // throws on short horizon
    const Index p = G.block_row.rows();
    const Index m = G.block_width;

    const SvdResult dec = svd(hank.H_minus);
    const Index available = dec.singular_values.size();
    if (n > available) {
        throw InvalidInputError("ho_kalman: order exceeds Hankel rank capacity");
    }
    const double sigma_n = dec.singular_values(n - 1);
    if (!(sigma_n > dec.singular_values(0) * 1e-12)) {
        throw RankDeficiencyError("ho_kalman: Hankel matrix rank below requested order",
                                  sigma_n > 0 ? dec.singular_values(0) / sigma_n
                                              : std::numeric_limits<double>::infinity());
    }

    const Vector sqrt_sigma = dec.singular_values.head(n).cwiseSqrt();
    const Matrix Un = dec.U.leftCols(n);
    const Matrix Vn = dec.V.leftCols(n);
    const Matrix obs = Un * sqrt_sigma.asDiagonal();            // pT1 x n
    const Matrix ctrl = sqrt_sigma.asDiagonal() * Vn.transpose();  // n x mT2h

    Realization real;
    real.order = n;
    real.hankel_singular_values = dec.singular_values;
    real.C_hat = obs.topRows(p);
    real.B_hat = ctrl.leftCols(m);
    // O and Ctrl have orthogonal columns/rows scaled by sqrt(sigma), so
    // their pseudo-inverses reduce to diagonal rescalings.
    real.A_hat = sqrt_sigma.cwiseInverse().asDiagonal() * Un.transpose() * hank.H_plus * Vn *
                 sqrt_sigma.cwiseInverse().asDiagonal();
    real.D_hat = G.block(0);
    real.order_warning = n < available && dec.singular_values(n) > 0.5 * sigma_n;
    return real;
}

double hankel_perturbation_bound(double g_err_spec, Index T1, Index T2h) {
    if (g_err_spec < 0 || !std::isfinite(g_err_spec)) {
        throw InvalidInputError("hankel_perturbation_bound: error must be finite and >= 0");
    }
    if (T1 < 1 || T2h < 1) {
        throw InvalidInputError("hankel_perturbation_bound: T1 and T2h must be >= 1");
    }
    return std::sqrt(static_cast<double>(std::min(T1, T2h + 1))) * g_err_spec;
}

RobustnessReport realization_robustness_check(const SystemModel& truth, const Realization& est,
                                              double hankel_error, Index T1, Index T2h) {
    if (hankel_error < 0 || !std::isfinite(hankel_error)) {
        throw InvalidInputError("realization_robustness_check: hankel_error must be >= 0");
    }
    const Index n = est.order;
    if (n != truth.n()) {
        throw InvalidInputError("realization_robustness_check: order mismatch with truth");
    }

    const MarkovMatrix G_true = true_markov(truth, T1 + T2h + 1);
    const HankelTriple hank = build_hankel(G_true, T1, T2h);
    const SvdResult dec = svd(hank.H_minus);
    const double sigma_min = dec.singular_values(n - 1);
    const double H_norm = spectral_norm(hank.H);

    RobustnessReport rep;
    rep.hankel_error = hankel_error;
    rep.sigma_min_H_minus = sigma_min;
    rep.precondition_ok = hankel_error <= sigma_min / 4.0;

    // Balanced reference realization from the exact Markov parameters.
    const Realization ref = ho_kalman(G_true, n, T1, T2h);

    // Regenerate the estimate's observability factor from (C_hat, A_hat)
    // powers and align it to the reference factor by orthogonal
    // Procrustes: min_S || O_est - O_ref S^T ||_F over orthogonal S.
    const Index p = truth.p();
    Matrix O_ref(p * T1, n), O_est(p * T1, n);
    Matrix ref_pow = ref.C_hat, est_pow = est.C_hat;
    for (Index i = 0; i < T1; ++i) {
        O_ref.middleRows(i * p, p) = ref_pow;
        O_est.middleRows(i * p, p) = est_pow;
        if (i + 1 < T1) {
            ref_pow = ref_pow * ref.A_hat;
            est_pow = est_pow * est.A_hat;
        }
    }
    const SvdResult proc = svd(O_ref.transpose() * O_est);
    const Matrix S_T = proc.U * proc.V.transpose();
    rep.S = S_T.transpose();

    rep.bc_bound = 5.0 * std::sqrt(static_cast<double>(n) * hankel_error);
    rep.b_gap = spectral_norm(est.B_hat - rep.S * ref.B_hat);
    rep.c_gap = spectral_norm(est.C_hat - ref.C_hat * S_T);
    rep.a_gap = spectral_norm(est.A_hat - rep.S * ref.A_hat * S_T);
    rep.a_bound = 50.0 * std::sqrt(static_cast<double>(n) * hankel_error) * H_norm /
                  std::pow(sigma_min, 1.5);
    rep.b_pass = rep.b_gap <= rep.bc_bound;
    rep.c_pass = rep.c_gap <= rep.bc_bound;
    rep.a_pass = rep.a_gap <= rep.a_bound;
    return rep;
}

FirTruncationReport fir_hinf_report(const SystemModel& truth, const MarkovMatrix& G_hat,
                                    Index grid_points) {
    const Index T = G_hat.horizon;
    if (G_hat.block_width != truth.m() || G_hat.block_row.rows() != truth.p()) {
        throw InvalidInputError("fir_hinf_report: estimate dimensions do not match the system");
    }
    if (grid_points < 8 * T) {
        throw InvalidInputError("fir_hinf_report: grid_points must be >= 8 * horizon");
    }
    const double rho = spectral_radius(truth.A);
    if (rho >= 1.0) {
        std::ostringstream msg;
        msg << "fir_hinf_report: tail bound requires rho(A) < 1, got " << rho;
        throw InstabilityError(msg.str());
    }

    const MarkovMatrix G_true = true_markov(truth, T);
    const Matrix diff = G_true.block_row - G_hat.block_row;
    const Index p = truth.p();
    const Index m = truth.m();

    double grid_max = 0.0;
    using ComplexMatrix = Eigen::MatrixXcd;
    const std::complex<double> j_unit(0.0, 1.0);
    for (Index g = 0; g < grid_points; ++g) {
        const double omega =
            2.0 * 3.14159265358979323846 * static_cast<double>(g) / static_cast<double>(grid_points);
        ComplexMatrix sum = ComplexMatrix::Zero(p, m);
        for (Index k = 0; k < T; ++k) {
            sum += diff.middleCols(k * m, m) *
                   std::exp(-j_unit * (omega * static_cast<double>(k)));
        }
        const double s = Eigen::JacobiSVD<ComplexMatrix>(sum).singularValues()(0);
        grid_max = std::max(grid_max, s);
    }

    // Tail sum_{k >= T} ||C A^{k-1} B||, stopping once the next term is
    // negligible; rho(A) < 1 guarantees eventual geometric decay.
    double tail = 0.0;
    Matrix CA_power = truth.C;
    for (Index k = 1; k < T; ++k) CA_power = CA_power * truth.A;  // C A^{T-1}
    constexpr Index kMaxTerms = 1000000;
    Index terms = 0;
    while (true) {
        const double term = spectral_norm(CA_power * truth.B);
        if (term < 1e-12) break;
        tail += term;
        CA_power = CA_power * truth.A;
        if (++terms > kMaxTerms) {
            throw ConvergenceError("fir_hinf_report: tail series did not decay within 1e6 terms");
        }
    }

    FirTruncationReport rep;
    rep.ols_error_hinf = grid_max;
    rep.tail_bound = tail;
    rep.total_bound = grid_max + tail;
    rep.grid_points = grid_points;
    return rep;
}

void export_realization_json(const Realization& real, const std::filesystem::path& path) {
    auto mat = [](const Matrix& M) {
        json rows = json::array();
        for (Index i = 0; i < M.rows(); ++i) {
            json row = json::array();
            for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    json out;
    out["order"] = real.order;
    out["A"] = mat(real.A_hat);
    out["B"] = mat(real.B_hat);
    out["C"] = mat(real.C_hat);
    out["D"] = mat(real.D_hat);
    json sv = json::array();
    for (Index i = 0; i < real.hankel_singular_values.size(); ++i) {
        sv.push_back(real.hankel_singular_values(i));
    }
    out["hankel_singular_values"] = std::move(sv);
    out["order_warning"] = real.order_warning;
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << out.dump(2) << "\n";
}

}  // namespace sysid
