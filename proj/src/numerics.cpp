#include "sysid/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace sysid {

void check_finite(const Matrix& A, const char* name) {
    if (!A.allFinite()) {
        std::ostringstream msg;
        msg << name << " contains non-finite entries";
        throw InvalidInputError(msg.str());
    }
}

namespace {

void check_nonempty(const Matrix& A, const char* name) {
    if (A.rows() < 1 || A.cols() < 1) {
        throw InvalidInputError(std::string(name) + " must be non-empty");
    }
    check_finite(A, name);
}

void normalize_svd_signs(Matrix& U, Matrix& V) {
    for (Index k = 0; k < U.cols(); ++k) {
        Index imax = 0;
        double vmax = 0.0;
        for (Index i = 0; i < U.rows(); ++i) {
            const double a = std::abs(U(i, k));
            if (a > vmax) {
                vmax = a;
                imax = i;
            }
        }
        if (U(imax, k) < 0.0) {
            U.col(k) = -U.col(k);
            V.col(k) = -V.col(k);
        }
    }
}

}  // namespace

SvdResult svd(const Matrix& A) {
    check_nonempty(A, "svd input");
    Eigen::JacobiSVD<Matrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult out;
    out.U = dec.matrixU();
    out.singular_values = dec.singularValues();
    out.V = dec.matrixV();
    normalize_svd_signs(out.U, out.V);
    return out;
}

double spectral_norm(const Matrix& A) {
    check_nonempty(A, "spectral_norm input");
    if (A.rows() == 1 && A.cols() == 1) return std::abs(A(0, 0));
    return Eigen::BDCSVD<Matrix>(A).singularValues()(0);
}

double min_eigenvalue_sym(const Matrix& A) {
    check_nonempty(A, "min_eigenvalue_sym input");
    if (A.rows() != A.cols()) {
        throw InvalidInputError("min_eigenvalue_sym: matrix must be square");
    }
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        std::ostringstream msg;
        msg << "min_eigenvalue_sym: input asymmetric (relative asymmetry " << asym / scale << ")";
        throw InvalidInputError(msg.str());
    }
    const Matrix sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw NumericError("min_eigenvalue_sym: eigensolver failed");
    }
    return es.eigenvalues().minCoeff();
}

Matrix right_pseudo_inverse(const Matrix& U) {
    check_nonempty(U, "right_pseudo_inverse input");
    if (U.rows() > U.cols()) {
        throw InvalidInputError("right_pseudo_inverse: requires rows <= cols (full row rank)");
    }
    const Matrix M = U * U.transpose();
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) {
        // U^T M^{-1}, computed as (M^{-1} U)^T since M is symmetric.
        return llt.solve(U).transpose();
    }
    const SvdResult dec = svd(U);
    const double smax = dec.singular_values(0);
    const double cutoff = smax * 1e-12;
    const double smin = dec.singular_values(dec.singular_values.size() - 1);
    if (!(smin > cutoff)) {
        const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        std::ostringstream msg;
        msg << "right_pseudo_inverse: U U^T numerically rank deficient (condition ~ " << cond
            << ")";
        throw RankDeficiencyError(msg.str(), cond);
    }
    return dec.V * dec.singular_values.cwiseInverse().asDiagonal() * dec.U.transpose();
}

double spectral_radius(const Matrix& A) {
    check_nonempty(A, "spectral_radius input");
    if (A.rows() != A.cols()) {
        throw InvalidInputError("spectral_radius: matrix must be square");
    }
    double norm = spectral_norm(A);
    if (norm == 0.0) return 0.0;

    // Track A^(2^k) as unit-spectral-norm matrix times exp(log_norm).
    Matrix scaled = A / norm;
    double log_norm = std::log(norm);
    double estimate = norm;  // k = 0: ||A||
    constexpr int kMaxSquarings = 24;
    for (int k = 1; k <= kMaxSquarings; ++k) {
        Matrix squared = scaled * scaled;
        const double step_norm = spectral_norm(squared);
        if (step_norm == 0.0) return 0.0;  // nilpotent
        scaled = squared / step_norm;
        log_norm = 2.0 * log_norm + std::log(step_norm);
        const double next = std::exp(log_norm / static_cast<double>(1LL << k));
        if (!std::isfinite(next)) {
            throw NumericError("spectral_radius: estimate overflowed despite scaling");
        }
        if (std::abs(next - estimate) <= 1e-8 * std::max(1.0, std::abs(next))) {
            return next;
        }
        estimate = next;
    }
    return estimate;
}

}  // namespace sysid
