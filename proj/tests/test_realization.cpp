#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sysid/estimators.hpp"
#include "sysid/experiments.hpp"
#include "sysid/realization.hpp"
#include "test_helpers.hpp"

using namespace sysid;
using testutil::max_abs_diff;
using testutil::random_matrix;

TEST_CASE("Ho-Kalman round trip on the unstable system") {
    const SystemModel sys = builtin_system("unstable3");
    const MarkovMatrix g = true_markov(sys, 9);
    const Realization real = ho_kalman(g, 3, 4, 4);
    CHECK_FALSE(real.order_warning);
    const MarkovMatrix regen = true_markov(real.to_system(), 9);
    CHECK(spectral_norm(regen.block_row - g.block_row) <=
          1e-8 * std::max(1.0, spectral_norm(g.block_row)));
}

TEST_CASE("Ho-Kalman round trip on the Newton system") {
    const SystemModel sys = builtin_system("newton", 0.2);
    const MarkovMatrix g = true_markov(sys, 5);
    const Realization real = ho_kalman(g, 2, 2, 2);
    const MarkovMatrix regen = true_markov(real.to_system(), 5);
    Matrix want(1, 5);
    want << 0, 0, 0.2, 0.4, 0.6;
    CHECK(max_abs_diff(regen.block_row, want) < 1e-10);
}

TEST_CASE("Ho-Kalman horizon and order preconditions") {
    const SystemModel sys = builtin_system("newton");
    const MarkovMatrix g3 = true_markov(sys, 3);
    CHECK_THROWS_AS(ho_kalman(g3, 2, 2, 2), InsufficientHorizonError);
    const MarkovMatrix g5 = true_markov(sys, 5);
    CHECK_THROWS_AS(ho_kalman(g5, 3, 2, 2), InvalidInputError);  // min(T1,T2h) < n
}

TEST_CASE("weak spectral gap sets the order warning") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 0.9;
    A(1, 1) = 0.89;
    const SystemModel sys(A, Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                          Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    const MarkovMatrix g = true_markov(sys, 7);
    const Realization real = ho_kalman(g, 1, 2, 2);
    CHECK(real.order_warning);
    CHECK(real.order == 1);
}

TEST_CASE("similarity freedom leaves regenerated Markov parameters unchanged") {
    const SystemModel sys = builtin_system("unstable3");
    const MarkovMatrix g = true_markov(sys, 9);
    const Realization real = ho_kalman(g, 3, 4, 4);

    RandomStream rng(252);
    for (int it = 0; it < 20; ++it) {
        // Random orthogonal similarity applied to the realization.
        const SvdResult qr = svd(random_matrix(rng, 3, 3));
        const Matrix Q = qr.U;
        const SystemModel rotated(Q * real.A_hat * Q.transpose(), Q * real.B_hat,
                                  real.C_hat * Q.transpose(), real.D_hat,
                                  Matrix::Identity(3, 3), Matrix::Identity(1, 1));
        const MarkovMatrix regen = true_markov(rotated, 9);
        CHECK(spectral_norm(regen.block_row - g.block_row) <=
              1e-8 * std::max(1.0, spectral_norm(g.block_row)));
    }
}

TEST_CASE("Ho-Kalman round trip on random controllable/observable systems") {
    RandomStream rng(141);
    for (int it = 0; it < 50; ++it) {
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 3);
        const Index m = 1 + static_cast<Index>(rng.next_u64() % 2);
        const Index p = 1 + static_cast<Index>(rng.next_u64() % 2);
        const SystemModel sys = testutil::random_system_gaussian(rng, n, m, p);
        const Index T1 = n + 1, T2h = n + 1;
        const Index horizon = T1 + T2h + 1;
        const MarkovMatrix g = true_markov(sys, horizon);
        const Realization real = ho_kalman(g, n, T1, T2h);
        const MarkovMatrix regen = true_markov(real.to_system(), horizon);
        CHECK(spectral_norm(regen.block_row - g.block_row) <=
              1e-8 * std::max(1.0, spectral_norm(g.block_row)));
    }
}

TEST_CASE("hankel_perturbation_bound closed form") {
    CHECK(hankel_perturbation_bound(0.0, 3, 7) == 0.0);
    CHECK(hankel_perturbation_bound(1.0, 4, 4) == doctest::Approx(2.0));
    CHECK(hankel_perturbation_bound(0.5, 9, 3) == doctest::Approx(1.0));
    CHECK_THROWS_AS(hankel_perturbation_bound(-1.0, 2, 2), InvalidInputError);
}

TEST_CASE("hankel perturbation bound dominates measured perturbations") {
    RandomStream rng(363);
    for (int it = 0; it < 100; ++it) {
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 2);
        const SystemModel sys = testutil::random_system_gaussian(rng, n, 2, 2);
        const Index T1 = n, T2h = n;
        const MarkovMatrix g = true_markov(sys, T1 + T2h + 1);
        MarkovMatrix g_hat = g;
        g_hat.block_row += random_matrix(rng, g.block_row.rows(), g.block_row.cols(), 0.1);
        const double g_err = spectral_norm(g.block_row - g_hat.block_row);
        const double measured = spectral_norm(build_hankel(g, T1, T2h).H -
                                              build_hankel(g_hat, T1, T2h).H);
        CHECK(measured <= hankel_perturbation_bound(g_err, T1, T2h) + 1e-12);
    }
}

TEST_CASE("robustness report on an exact estimate") {
    const SystemModel sys = builtin_system("unstable3");
    const MarkovMatrix g = true_markov(sys, 9);
    const Realization real = ho_kalman(g, 3, 4, 4);
    const RobustnessReport rep = realization_robustness_check(sys, real, 0.0, 4, 4);
    CHECK(rep.precondition_ok);
    CHECK(rep.b_gap < 1e-9);
    CHECK(rep.c_gap < 1e-9);
    CHECK(rep.a_gap < 1e-8);
    CHECK(rep.b_pass);
    CHECK(rep.c_pass);
    CHECK(rep.a_pass);
    // S orthogonal.
    CHECK(spectral_norm(rep.S * rep.S.transpose() - Matrix::Identity(3, 3)) < 1e-10);
}

TEST_CASE("robustness regime flag when the precondition fails") {
    const SystemModel sys = builtin_system("unstable3");
    const MarkovMatrix g = true_markov(sys, 9);
    const Realization real = ho_kalman(g, 3, 4, 4);
    const RobustnessReport rep = realization_robustness_check(sys, real, 1e6, 4, 4);
    CHECK_FALSE(rep.precondition_ok);
}

TEST_CASE("FIR report vanishes for an exact short FIR plant") {
    // Nilpotent A: impulse response ends after n taps.
    Matrix A(2, 2), B(2, 1), C(1, 2), D(1, 1), Dv(1, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    C << 1, 0;
    D << 0;
    Dv << 1;
    const SystemModel sys(A, B, C, D, B, Dv);
    const MarkovMatrix g = true_markov(sys, 4);
    const FirTruncationReport rep = fir_hinf_report(sys, g, 64);
    CHECK(rep.ols_error_hinf == 0.0);
    CHECK(rep.tail_bound == 0.0);
    CHECK(rep.total_bound == 0.0);
}

TEST_CASE("FIR report on the scalar geometric plant") {
    Matrix A(1, 1), B(1, 1), C(1, 1), D(1, 1), Dv(1, 1);
    A << 0.5;
    B << 1;
    C << 1;
    D << 0;
    Dv << 1;
    const SystemModel sys(A, B, C, D, B, Dv);
    const MarkovMatrix g = true_markov(sys, 4);

    SUBCASE("tail of the geometric series") {
        const FirTruncationReport rep = fir_hinf_report(sys, g, 32);
        CHECK(rep.ols_error_hinf < 1e-14);
        CHECK(rep.tail_bound == doctest::Approx(0.25).epsilon(1e-9));
    }
    SUBCASE("single perturbed tap has flat magnitude") {
        MarkovMatrix g_hat = g;
        g_hat.block_row(0, 2) += 0.1;
        const FirTruncationReport rep = fir_hinf_report(sys, g_hat, 32);
        CHECK(rep.ols_error_hinf == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(rep.total_bound == doctest::Approx(0.35).epsilon(1e-8));
    }
    SUBCASE("grid maximum is monotone under grid refinement") {
        MarkovMatrix g_hat = g;
        RandomStream rng(474);
        g_hat.block_row += random_matrix(rng, 1, 4, 0.2);
        double prev = 0.0;
        for (Index grid : {32, 64, 128, 256}) {
            const double cur = fir_hinf_report(sys, g_hat, grid).ols_error_hinf;
            CHECK(cur >= prev - 1e-15);
            prev = cur;
        }
    }
}

TEST_CASE("FIR report rejects unstable plants and thin grids") {
    const SystemModel unstable = builtin_system("unstable3");
    const MarkovMatrix g = true_markov(unstable, 5);
    CHECK_THROWS_AS(fir_hinf_report(unstable, g, 64), InstabilityError);

    Matrix A(1, 1), B(1, 1), C(1, 1), D(1, 1), Dv(1, 1);
    A << 0.5;
    B << 1;
    C << 1;
    D << 0;
    Dv << 1;
    const SystemModel stable(A, B, C, D, B, Dv);
    const MarkovMatrix g2 = true_markov(stable, 4);
    CHECK_THROWS_AS(fir_hinf_report(stable, g2, 8), InvalidInputError);
}

TEST_CASE("realization JSON export") {
    const SystemModel sys = builtin_system("newton");
    const MarkovMatrix g = true_markov(sys, 5);
    const Realization real = ho_kalman(g, 2, 2, 2);
    const auto path = std::filesystem::temp_directory_path() / "sysid_real_test.json";
    export_realization_json(real, path);
    std::ifstream f(path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"order\": 2") != std::string::npos);
    CHECK(text.find("hankel_singular_values") != std::string::npos);
    std::filesystem::remove(path);
}
