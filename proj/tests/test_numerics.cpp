#include <doctest.h>

#include <cmath>

#include "sysid/numerics.hpp"
#include "test_helpers.hpp"

using namespace sysid;
using testutil::random_matrix;

TEST_CASE("spectral_norm on fixed matrices") {
    CHECK(spectral_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-10));

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    CHECK(spectral_norm(d) == doctest::Approx(3.0).epsilon(1e-10));

    // Nilpotent Jordan block: singular values {1, 0}.
    Matrix jb(2, 2);
    jb << 0, 1, 0, 0;
    CHECK(spectral_norm(jb) == doctest::Approx(1.0).epsilon(1e-10));

    Matrix bad(1, 2);
    bad << 1.0, std::nan("");
    CHECK_THROWS_AS(spectral_norm(bad), InvalidInputError);
}

TEST_CASE("min_eigenvalue_sym on fixed matrices") {
    CHECK(min_eigenvalue_sym(Matrix::Identity(2, 2)) == doctest::Approx(1.0).epsilon(1e-10));

    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 5;
    d(1, 1) = 2;
    d(2, 2) = 7;
    CHECK(min_eigenvalue_sym(d) == doctest::Approx(2.0).epsilon(1e-10));

    Matrix s(2, 2);
    s << 2, 1, 1, 2;  // eigenvalues 3 and 1
    CHECK(min_eigenvalue_sym(s) == doctest::Approx(1.0).epsilon(1e-10));

    Matrix a(2, 2);
    a << 1, 2, 0, 1;
    CHECK_THROWS_AS(min_eigenvalue_sym(a), InvalidInputError);
    CHECK_THROWS_AS(min_eigenvalue_sym(Matrix::Ones(2, 3)), InvalidInputError);
}

TEST_CASE("right_pseudo_inverse on fixed matrices") {
    const Matrix I3 = Matrix::Identity(3, 3);
    CHECK(testutil::max_abs_diff(right_pseudo_inverse(I3), I3) < 1e-12);

    Matrix u(2, 3);
    u << 2, 0, 0, 0, 2, 0;
    Matrix want(3, 2);
    want << 0.5, 0, 0, 0.5, 0, 0;
    CHECK(testutil::max_abs_diff(right_pseudo_inverse(u), want) < 1e-12);

    Matrix row(1, 2);
    row << 1, 1;
    Matrix col(2, 1);
    col << 0.5, 0.5;
    CHECK(testutil::max_abs_diff(right_pseudo_inverse(row), col) < 1e-12);

    Matrix tall(3, 2);
    tall.setOnes();
    CHECK_THROWS_AS(right_pseudo_inverse(tall), InvalidInputError);

    Matrix dependent(2, 3);
    dependent << 1, 1, 1, 1, 1, 1;
    CHECK_THROWS_AS(right_pseudo_inverse(dependent), RankDeficiencyError);
}

TEST_CASE("spectral_radius on fixed matrices") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.5;
    d(1, 1) = 0.3;
    CHECK(spectral_radius(d) == doctest::Approx(1.5).epsilon(1e-8));

    // Marginally stable Newton discretization: double eigenvalue 1.
    Matrix newton(2, 2);
    newton << 1, 0.2, 0, 1;
    CHECK(spectral_radius(newton) == doctest::Approx(1.0).epsilon(1e-6));

    // Tridiagonal Toeplitz: eigenvalues 1.01 + 0.02 cos(k pi / 4).
    Matrix tri(3, 3);
    tri << 1.01, 0.01, 0, 0.01, 1.01, 0.01, 0, 0.01, 1.01;
    const double expected = 1.01 + 0.02 * std::cos(3.14159265358979323846 / 4.0);
    CHECK(spectral_radius(tri) == doctest::Approx(expected).epsilon(1e-6));

    Matrix nil(2, 2);
    nil << 0, 1, 0, 0;
    CHECK(spectral_radius(nil) == 0.0);
    CHECK(spectral_radius(Matrix::Zero(3, 3)) == 0.0);
}

TEST_CASE("svd reconstruction, ordering, and deterministic signs") {
    RandomStream rng(101);
    for (int it = 0; it < 100; ++it) {
        const Index rows = 1 + static_cast<Index>(rng.next_u64() % 6);
        const Index cols = 1 + static_cast<Index>(rng.next_u64() % 6);
        const Matrix A = random_matrix(rng, rows, cols);
        const SvdResult dec = svd(A);
        for (Index i = 0; i + 1 < dec.singular_values.size(); ++i) {
            CHECK(dec.singular_values(i) >= dec.singular_values(i + 1));
        }
        CHECK(dec.singular_values.minCoeff() >= 0.0);
        const Matrix rec = dec.U * dec.singular_values.asDiagonal() * dec.V.transpose();
        CHECK(spectral_norm(A - rec) <= 1e-10 * std::max(1.0, spectral_norm(A)));
        // Sign convention: max-magnitude entry of each left vector positive.
        for (Index k = 0; k < dec.U.cols(); ++k) {
            Index imax = 0;
            dec.U.col(k).cwiseAbs().maxCoeff(&imax);
            CHECK(dec.U(imax, k) >= 0.0);
        }
        // spectral_norm agrees with the top singular value.
        CHECK(std::abs(spectral_norm(A) - dec.singular_values(0)) <=
              1e-10 * std::max(1.0, dec.singular_values(0)));
    }
}

TEST_CASE("Moore-Penrose identities on random full-row-rank inputs") {
    RandomStream rng(202);
    for (int it = 0; it < 100; ++it) {
        const Index rows = 1 + static_cast<Index>(rng.next_u64() % 5);
        const Index cols = rows + static_cast<Index>(rng.next_u64() % 5);
        const Matrix U = random_matrix(rng, rows, cols);
        const Matrix pinv = right_pseudo_inverse(U);
        CHECK(spectral_norm(U * pinv - Matrix::Identity(rows, rows)) < 1e-8);
        CHECK(spectral_norm(U * pinv * U - U) < 1e-8 * std::max(1.0, spectral_norm(U)));
        CHECK(spectral_norm(pinv * U * pinv - pinv) < 1e-8 * std::max(1.0, spectral_norm(pinv)));
    }
}

TEST_CASE("spectral_radius scales linearly") {
    RandomStream rng(303);
    for (int it = 0; it < 100; ++it) {
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 4);
        const Matrix A = random_matrix(rng, n, n);
        const double c = 0.1 + 5.0 * rng.next_unit();
        const double lhs = spectral_radius(c * A);
        const double rhs = c * spectral_radius(A);
        CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(1e-9, rhs));
    }
}

TEST_CASE("rank-one update cannot lower the minimum eigenvalue") {
    RandomStream rng(404);
    for (int it = 0; it < 100; ++it) {
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 4);
        const Matrix R = random_matrix(rng, n, n);
        const Matrix A = 0.5 * (R + R.transpose());
        const Matrix c = random_matrix(rng, n, 1);
        const double before = min_eigenvalue_sym(A);
        const double after = min_eigenvalue_sym(A + c * c.transpose());
        CHECK(after >= before - 1e-10 * std::max(1.0, std::abs(before)));
    }
}
