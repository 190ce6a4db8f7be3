#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sysid/dataset_io.hpp"
#include "sysid/experiments.hpp"
#include "sysid/lti.hpp"
#include "test_helpers.hpp"

using namespace sysid;
using testutil::max_abs_diff;
using testutil::random_matrix;

namespace {

NoiseConfig quiet() {
    NoiseConfig n;
    n.sigma_u = 0.0;
    return n;
}

}  // namespace

TEST_CASE("zero input and zero noise give zero outputs") {
    const SystemModel sys = builtin_system("newton");
    const Rollout r = simulate_rollout(sys, quiet(), 8, 42);
    CHECK(r.outputs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.inputs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("impulse response of the Newton system") {
    const SystemModel sys = builtin_system("newton", 0.2);
    Matrix impulse = Matrix::Zero(1, 5);
    impulse(0, 0) = 1.0;
    const Rollout r = simulate_rollout(sys, quiet(), 5, 0, &impulse);
    // y_t = C A^{t-1} B u_0 with C A^k B = k * delta.
    CHECK(r.outputs(0, 0) == doctest::Approx(0.0));
    CHECK(r.outputs(0, 1) == doctest::Approx(0.0));
    CHECK(r.outputs(0, 2) == doctest::Approx(0.2));
    CHECK(r.outputs(0, 3) == doctest::Approx(0.4));
}

TEST_CASE("impulse through the first input of the unstable system") {
    const SystemModel sys = builtin_system("unstable3");
    Matrix impulse = Matrix::Zero(3, 4);
    impulse(0, 0) = 1.0;  // u_0 = e_1
    const Rollout r = simulate_rollout(sys, quiet(), 4, 0, &impulse);
    CHECK(r.outputs(0, 0) == doctest::Approx(0.0));
    CHECK(r.outputs(0, 1) == doctest::Approx(1.0));  // CB e_1 = 1
}

TEST_CASE("simulation is deterministic given the seed") {
    const SystemModel sys = builtin_system("unstable3");
    NoiseConfig noise;
    noise.sigma_u = 1.0;
    noise.sigma_w = 0.2;
    noise.sigma_v = 0.5;
    const Rollout a = simulate_rollout(sys, noise, 12, 987);
    const Rollout b = simulate_rollout(sys, noise, 12, 987);
    CHECK(max_abs_diff(a.inputs, b.inputs) == 0.0);
    CHECK(max_abs_diff(a.outputs, b.outputs) == 0.0);
    const Rollout c = simulate_rollout(sys, noise, 12, 988);
    CHECK(max_abs_diff(a.inputs, c.inputs) > 0.0);
}

TEST_CASE("state overflow raises with the offending time index") {
    Matrix A = 3.0 * Matrix::Identity(2, 2);
    Matrix B(2, 1), C(1, 2), D(1, 1), Dv(1, 1);
    B << 1, 0;
    C << 1, 0;
    D << 0;
    Dv << 1;
    const SystemModel sys(A, B, C, D, B, Dv);
    NoiseConfig noise;
    noise.sigma_u = 1.0;
    CHECK_THROWS_AS(simulate_rollout(sys, noise, 500, 7), InstabilityOverflowError);
    try {
        simulate_rollout(sys, noise, 500, 7);
    } catch (const InstabilityOverflowError& e) {
        CHECK(e.time_index > 0);
        CHECK(e.time_index < 500);
    }
}

TEST_CASE("true_markov closed forms") {
    const SystemModel newton = builtin_system("newton", 0.2);
    const MarkovMatrix g = true_markov(newton, 4);
    Matrix want(1, 4);
    want << 0, 0, 0.2, 0.4;
    CHECK(max_abs_diff(g.block_row, want) < 1e-14);

    const SystemModel tri = builtin_system("unstable3");
    const MarkovMatrix g2 = true_markov(tri, 2);
    Matrix want2(1, 6);
    want2 << 0, 0, 0, 1, 0, 0;  // D block then CB block
    CHECK(max_abs_diff(g2.block_row, want2) < 1e-14);

    const MarkovMatrix g3 = true_markov(tri, 1);
    CHECK(max_abs_diff(g3.block_row, tri.D) == 0.0);
}

TEST_CASE("noise_markov_F closed forms") {
    const SystemModel newton = builtin_system("newton", 0.2);
    const MarkovMatrix f = noise_markov_F(newton, 4);
    Matrix want(1, 4);
    want << 0, 0, 0.2, 0.4;  // B_w = B, leading block forced to zero
    CHECK(max_abs_diff(f.block_row, want) < 1e-14);
    CHECK(noise_markov_F(newton, 1).block_row.cwiseAbs().maxCoeff() == 0.0);

    const SystemModel tri = builtin_system("unstable3");
    const MarkovMatrix f2 = noise_markov_F(tri, 2);
    Matrix want2(1, 6);
    want2 << 0, 0, 0, 1, 0, 0;
    CHECK(max_abs_diff(f2.block_row, want2) < 1e-14);
}

TEST_CASE("init_state_markov_H closed forms") {
    const SystemModel newton = builtin_system("newton", 0.2);
    const MarkovMatrix h = init_state_markov_H(newton, 2);
    Matrix want(1, 4);
    want << 1, 0, 1, 0.2;  // [C, CA]
    CHECK(max_abs_diff(h.block_row, want) < 1e-14);
    CHECK(max_abs_diff(init_state_markov_H(newton, 1).block_row, newton.C) == 0.0);

    const SystemModel tri = builtin_system("unstable3");
    Matrix want2(1, 3);
    want2 << 1, 0, 0;
    CHECK(max_abs_diff(init_state_markov_H(tri, 1).block_row, want2) == 0.0);
}

TEST_CASE("Hankel construction from the Newton Markov parameters") {
    const SystemModel newton = builtin_system("newton", 0.2);
    const MarkovMatrix g = true_markov(newton, 5);
    const HankelTriple h = build_hankel(g, 2, 2);

    Matrix H(2, 3), Hm(2, 2), Hp(2, 2);
    H << 0, 0.2, 0.4, 0.2, 0.4, 0.6;
    Hm << 0, 0.2, 0.2, 0.4;
    Hp << 0.2, 0.4, 0.4, 0.6;
    CHECK(max_abs_diff(h.H, H) < 1e-14);
    CHECK(max_abs_diff(h.H_minus, Hm) < 1e-14);
    CHECK(max_abs_diff(h.H_plus, Hp) < 1e-14);
    CHECK(h.H_minus.determinant() == doctest::Approx(-0.04));  // rank 2

    const MarkovMatrix short_g = true_markov(newton, 3);
    CHECK_THROWS_AS(build_hankel(short_g, 2, 2), InsufficientHorizonError);
}

TEST_CASE("Markov parameters are similarity invariant") {
    RandomStream rng(515);
    for (int it = 0; it < 100; ++it) {
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 3);
        const SystemModel sys = testutil::random_system_gaussian(rng, n, 2, 2);
        // Invertible S: random plus a diagonal bump.
        Matrix S = random_matrix(rng, n, n) + 3.0 * Matrix::Identity(n, n);
        const Matrix S_inv = S.inverse();
        const SystemModel transformed(S * sys.A * S_inv, S * sys.B, sys.C * S_inv, sys.D,
                                      S * sys.B_w, sys.D_v);
        const MarkovMatrix a = true_markov(sys, 6);
        const MarkovMatrix b = true_markov(transformed, 6);
        CHECK(max_abs_diff(a.block_row, b.block_row) < 1e-10);
    }
}

TEST_CASE("Hankel factorization and rank condition") {
    RandomStream rng(626);
    for (int it = 0; it < 100; ++it) {
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 3);
        const Index m = 1 + static_cast<Index>(rng.next_u64() % 2);
        const Index p = 1 + static_cast<Index>(rng.next_u64() % 2);
        const SystemModel sys = testutil::random_system_gaussian(rng, n, m, p);
        const Index T1 = n + static_cast<Index>(rng.next_u64() % 2);
        const Index T2h = n + static_cast<Index>(rng.next_u64() % 2);
        const MarkovMatrix g = true_markov(sys, T1 + T2h + 1);
        const HankelTriple h = build_hankel(g, T1, T2h);

        // H = (observability block column) * (controllability block row).
        Matrix obs(p * T1, n), ctrl(n, m * (T2h + 1));
        Matrix CA = sys.C;
        for (Index i = 0; i < T1; ++i) {
            obs.middleRows(i * p, p) = CA;
            CA = CA * sys.A;
        }
        Matrix AB = sys.B;
        for (Index j = 0; j <= T2h; ++j) {
            ctrl.middleCols(j * m, m) = AB;
            AB = sys.A * AB;
        }
        CHECK(max_abs_diff(h.H, obs * ctrl) < 1e-12 * std::max(1.0, spectral_norm(h.H)));

        // Exactly n singular values above sigma_max * 1e-9.
        const SvdResult dec = svd(h.H_minus);
        Index above = 0;
        for (Index i = 0; i < dec.singular_values.size(); ++i) {
            if (dec.singular_values(i) > dec.singular_values(0) * 1e-9) ++above;
        }
        CHECK(above == n);
    }
}

TEST_CASE("replay reproduces stored outputs exactly") {
    const SystemModel sys = builtin_system("unstable3");
    NoiseConfig noise;
    noise.sigma_u = 1.0;
    noise.sigma_w = 0.3;
    noise.sigma_v = 0.7;
    noise.sigma_0 = 1.0;
    const Rollout r = simulate_rollout(sys, noise, 15, 321);
    CHECK(max_abs_diff(replay_outputs(sys, r), r.outputs) == 0.0);
    const auto states = replay_states(sys, r);
    CHECK(states.size() == 15);
    CHECK((states[0] - r.initial_state).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dataset directory round trip is lossless") {
    const SystemModel sys = builtin_system("newton", 0.2);
    NoiseConfig noise;
    noise.sigma_u = 1.0;
    noise.sigma_w = 0.2;
    noise.sigma_v = 0.5;
    noise.sigma_0 = 0.4;
    const RolloutDataset ds = simulate_dataset(sys, noise, 7, 3, 555, "newton");

    const auto dir = std::filesystem::temp_directory_path() / "sysid_io_test";
    std::filesystem::remove_all(dir);
    save_dataset(sys, ds, dir);
    const DatasetFile loaded = load_dataset(dir);

    CHECK(loaded.data.N() == 3);
    CHECK(loaded.data.T2() == 7);
    CHECK(loaded.data.seed == 555);
    CHECK(loaded.data.system_tag == "newton");
    CHECK(loaded.data.noise.sigma_w == 0.2);
    CHECK(max_abs_diff(loaded.system.A, sys.A) == 0.0);
    for (Index i = 0; i < 3; ++i) {
        const auto& a = ds.rollouts[static_cast<std::size_t>(i)];
        const auto& b = loaded.data.rollouts[static_cast<std::size_t>(i)];
        CHECK(max_abs_diff(a.inputs, b.inputs) == 0.0);
        CHECK(max_abs_diff(a.outputs, b.outputs) == 0.0);
        CHECK(max_abs_diff(a.process_noise, b.process_noise) == 0.0);
        CHECK(max_abs_diff(a.measurement_noise, b.measurement_noise) == 0.0);
        CHECK((a.initial_state - b.initial_state).cwiseAbs().maxCoeff() == 0.0);
        // Loaded rollouts replay through the dynamics to the stored outputs.
        CHECK(max_abs_diff(replay_outputs(loaded.system, b), b.outputs) < 1e-12);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("rollout CSV carries the mandated header") {
    const SystemModel sys = builtin_system("unstable3");
    NoiseConfig noise;
    noise.sigma_u = 1.0;
    const RolloutDataset ds = simulate_dataset(sys, noise, 3, 1, 9);
    const auto dir = std::filesystem::temp_directory_path() / "sysid_io_header";
    std::filesystem::remove_all(dir);
    save_dataset(sys, ds, dir);
    std::ifstream f(dir / "rollout_00000.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,u_1,u_2,u_3,y_1,w_1,w_2,w_3,v_1");
    std::filesystem::remove_all(dir);
}
