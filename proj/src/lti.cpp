#include "sysid/lti.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace sysid {

namespace {

constexpr double kStateOverflowGuard = 1e150;

void check_dim(bool ok, const char* what) {
    if (!ok) throw InvalidInputError(std::string("SystemModel: ") + what);
}

Matrix gaussian_matrix(RandomStream& stream, Index rows, Index cols, double sigma) {
    Matrix out = Matrix::Zero(rows, cols);
    if (sigma > 0.0) {
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                out(i, j) = sigma * stream.next_gaussian();
            }
        }
    }
    return out;
}

/// The one place the dynamics recursion lives: iterates
/// x_{t+1} = A x_t + B u_t + B_w w_t, y_t = C x_t + D u_t + D_v v_t over
/// the given signals. Both simulation and replay run through here, so
/// replayed trajectories reproduce stored ones bit-for-bit.
void run_dynamics(const SystemModel& sys, const Matrix& inputs, const Matrix& process_noise,
                  const Matrix& measurement_noise, const Vector& x0, Matrix* outputs,
                  std::vector<Vector>* states) {
    const Index T2 = inputs.cols();
    Vector x = x0;
    if (outputs) outputs->resize(sys.p(), T2);
    if (states) {
        states->clear();
        states->reserve(static_cast<std::size_t>(T2));
    }
    for (Index t = 0; t < T2; ++t) {
        if (x.cwiseAbs().maxCoeff() > kStateOverflowGuard) {
            std::ostringstream msg;
            msg << "state magnitude exceeded " << kStateOverflowGuard << " at time index " << t;
            throw InstabilityOverflowError(msg.str(), static_cast<long long>(t));
        }
        if (states) states->push_back(x);
        if (outputs) {
            outputs->col(t) =
                sys.C * x + sys.D * inputs.col(t) + sys.D_v * measurement_noise.col(t);
        }
        x = sys.A * x + sys.B * inputs.col(t) + sys.B_w * process_noise.col(t);
    }
}

}  // namespace

SystemModel::SystemModel(Matrix A_, Matrix B_, Matrix C_, Matrix D_, Matrix B_w_, Matrix D_v_)
    : A(std::move(A_)),
      B(std::move(B_)),
      C(std::move(C_)),
      D(std::move(D_)),
      B_w(std::move(B_w_)),
      D_v(std::move(D_v_)) {
    check_dim(A.rows() >= 1 && A.rows() == A.cols(), "A must be square and non-empty");
    check_dim(B.rows() == A.rows() && B.cols() >= 1, "B must be n x m");
    check_dim(C.cols() == A.rows() && C.rows() >= 1, "C must be p x n");
    check_dim(D.rows() == C.rows() && D.cols() == B.cols(), "D must be p x m");
    check_dim(B_w.rows() == A.rows() && B_w.cols() >= 1, "B_w must be n x q");
    check_dim(D_v.rows() == C.rows() && D_v.cols() >= 1, "D_v must be p x l");
    check_finite(A, "A");
    check_finite(B, "B");
    check_finite(C, "C");
    check_finite(D, "D");
    check_finite(B_w, "B_w");
    check_finite(D_v, "D_v");
}

void NoiseConfig::validate() const {
    if (sigma_u < 0 || sigma_w < 0 || sigma_v < 0 || sigma_0 < 0 ||
        !std::isfinite(sigma_u + sigma_w + sigma_v + sigma_0)) {
        throw InvalidInputError("NoiseConfig: standard deviations must be finite and >= 0");
    }
}

Rollout simulate_rollout(const SystemModel& sys, const NoiseConfig& noise, Index T2,
                         std::uint64_t rollout_seed, const Matrix* input_override) {
    noise.validate();
    if (T2 < 1) throw InvalidInputError("simulate_rollout: T2 must be >= 1");
    if (input_override &&
        (input_override->rows() != sys.m() || input_override->cols() != T2)) {
        throw InvalidInputError("simulate_rollout: input override must be m x T2");
    }

    // Independent channel sub-streams: inputs, process noise, measurement
    // noise, initial state.
    RandomStream stream_u(derive_seed(rollout_seed, 0));
    RandomStream stream_w(derive_seed(rollout_seed, 1));
    RandomStream stream_v(derive_seed(rollout_seed, 2));
    RandomStream stream_x0(derive_seed(rollout_seed, 3));

    Rollout r;
    r.inputs = input_override ? *input_override
                              : gaussian_matrix(stream_u, sys.m(), T2, noise.sigma_u);
    r.process_noise = gaussian_matrix(stream_w, sys.q(), T2, noise.sigma_w);
    r.measurement_noise = gaussian_matrix(stream_v, sys.l(), T2, noise.sigma_v);
    r.initial_state = gaussian_matrix(stream_x0, sys.n(), 1, noise.sigma_0).col(0);
    run_dynamics(sys, r.inputs, r.process_noise, r.measurement_noise, r.initial_state,
                 &r.outputs, nullptr);
    return r;
}

RolloutDataset simulate_dataset(const SystemModel& sys, const NoiseConfig& noise, Index T2,
                                Index N, std::uint64_t seed, std::string system_tag) {
    if (N < 1) throw InvalidInputError("simulate_dataset: N must be >= 1");
    RolloutDataset ds;
    ds.system_tag = std::move(system_tag);
    ds.noise = noise;
    ds.seed = seed;
    ds.has_noise_records = true;
    ds.rollouts.reserve(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        ds.rollouts.push_back(
            simulate_rollout(sys, noise, T2, derive_seed(seed, static_cast<std::uint64_t>(i))));
    }
    return ds;
}

std::vector<Vector> replay_states(const SystemModel& sys, const Rollout& r) {
    std::vector<Vector> states;
    run_dynamics(sys, r.inputs, r.process_noise, r.measurement_noise, r.initial_state, nullptr,
                 &states);
    return states;
}

Matrix replay_outputs(const SystemModel& sys, const Rollout& r) {
    Matrix outputs;
    run_dynamics(sys, r.inputs, r.process_noise, r.measurement_noise, r.initial_state, &outputs,
                 nullptr);
    return outputs;
}

namespace {

/// Shared builder for the three block rows: first block `lead`, then
/// C A^{k-1} * tail for k = 1..T-1.
MarkovMatrix markov_row(const SystemModel& sys, Index T, const Matrix& lead, const Matrix& tail) {
    if (T < 1) throw InvalidInputError("Markov horizon T must be >= 1");
    const Index bw = lead.cols();
    MarkovMatrix g;
    g.block_width = bw;
    g.horizon = T;
    g.block_row.resize(sys.p(), bw * T);
    g.block_row.block(0, 0, sys.p(), bw) = lead;
    Matrix CA_power = sys.C;  // C A^{k-1} while filling block k
    for (Index k = 1; k < T; ++k) {
        g.block_row.block(0, k * bw, sys.p(), bw) = CA_power * tail;
        if (k + 1 < T) CA_power = CA_power * sys.A;
    }
    return g;
}

}  // namespace

MarkovMatrix true_markov(const SystemModel& sys, Index T) {
    return markov_row(sys, T, sys.D, sys.B);
}

MarkovMatrix noise_markov_F(const SystemModel& sys, Index T) {
    return markov_row(sys, T, Matrix::Zero(sys.p(), sys.q()), sys.B_w);
}

MarkovMatrix init_state_markov_H(const SystemModel& sys, Index T) {
    if (T < 1) throw InvalidInputError("Markov horizon T must be >= 1");
    MarkovMatrix h;
    h.block_width = sys.n();
    h.horizon = T;
    h.block_row.resize(sys.p(), sys.n() * T);
    Matrix CA_power = sys.C;
    for (Index k = 0; k < T; ++k) {
        h.block_row.block(0, k * sys.n(), sys.p(), sys.n()) = CA_power;
        if (k + 1 < T) CA_power = CA_power * sys.A;
    }
    return h;
}

HankelTriple build_hankel(const MarkovMatrix& G, Index T1, Index T2h) {
    if (T1 < 1 || T2h < 1) throw InvalidInputError("build_hankel: T1 and T2h must be >= 1");
    if (G.horizon < T1 + T2h + 1) {
        std::ostringstream msg;
        msg << "build_hankel: horizon " << G.horizon << " too short, need >= " << (T1 + T2h + 1);
        throw InsufficientHorizonError(msg.str());
    }
    const Index p = G.block_row.rows();
    const Index m = G.block_width;
    HankelTriple h;
    h.T1 = T1;
    h.T2h = T2h;
    h.H.resize(p * T1, m * (T2h + 1));
    for (Index i = 0; i < T1; ++i) {
        for (Index j = 0; j <= T2h; ++j) {
            h.H.block(i * p, j * m, p, m) = G.block(i + j + 1);
        }
    }
    h.H_minus = h.H.leftCols(m * T2h);
    h.H_plus = h.H.rightCols(m * T2h);
    return h;
}

}  // namespace sysid
