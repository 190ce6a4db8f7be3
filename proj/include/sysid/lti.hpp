#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sysid/numerics.hpp"
#include "sysid/rng.hpp"

namespace sysid {

/// Discrete-time LTI system
///   x_{t+1} = A x_t + B u_t + B_w w_t
///   y_t     = C x_t + D u_t + D_v v_t
/// with state dimension n, inputs m, outputs p, process-noise channels q,
/// measurement-noise channels l. Dimensions are validated on construction;
/// instances are immutable by convention and safe to share across workers.
struct SystemModel {
    Matrix A;    ///< n x n
    Matrix B;    ///< n x m
    Matrix C;    ///< p x n
    Matrix D;    ///< p x m
    Matrix B_w;  ///< n x q
    Matrix D_v;  ///< p x l

    SystemModel(Matrix A, Matrix B, Matrix C, Matrix D, Matrix B_w, Matrix D_v);

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index p() const { return C.rows(); }
    Index q() const { return B_w.cols(); }
    Index l() const { return D_v.cols(); }
};

/// Standard deviations of the isotropic Gaussian excitation and noises.
/// sigma_0 = 0 (the default) starts every rollout at x_0 = 0.
struct NoiseConfig {
    double sigma_u = 1.0;
    double sigma_w = 0.0;
    double sigma_v = 0.0;
    double sigma_0 = 0.0;

    void validate() const;
};

/// One recorded experiment trajectory of length T2.
struct Rollout {
    Matrix inputs;             ///< m x T2, columns u_0 .. u_{T2-1}
    Matrix outputs;            ///< p x T2
    Matrix process_noise;      ///< q x T2
    Matrix measurement_noise;  ///< l x T2
    Vector initial_state;      ///< n

    Index length() const { return inputs.cols(); }
};

struct RolloutDataset {
    std::vector<Rollout> rollouts;
    std::string system_tag;
    NoiseConfig noise;
    std::uint64_t seed = 0;
    /// True for simulation-produced datasets whose w/v records are usable.
    bool has_noise_records = true;

    Index N() const { return static_cast<Index>(rollouts.size()); }
    Index T2() const { return rollouts.empty() ? 0 : rollouts.front().length(); }
};

/// Block row of Markov parameters: [D, CB, CAB, ..., CA^{T-2}B] for the
/// input channel; the same shape holds F (block width q) and H (block
/// width n).
struct MarkovMatrix {
    Matrix block_row;       ///< p x (block_width * horizon)
    Index block_width = 0;
    Index horizon = 0;

    Index block_count() const { return horizon; }
    /// k-th block, 0-based; block 0 is the feedthrough term.
    Eigen::Block<const Matrix> block(Index k) const {
        return block_row.block(0, k * block_width, block_row.rows(), block_width);
    }
};

/// Hankel matrix of Markov parameters plus its last-block-column-dropped
/// and first-block-column-dropped variants.
struct HankelTriple {
    Matrix H;        ///< pT1 x m(T2h+1)
    Matrix H_minus;  ///< pT1 x mT2h
    Matrix H_plus;   ///< pT1 x mT2h
    Index T1 = 0;
    Index T2h = 0;
};

/// Simulates one rollout of length T2. Inputs, noises, and the initial
/// state are drawn from four independent Gaussian sub-streams derived
/// from rollout_seed, so the result is reproducible and unaffected by
/// which sigmas are zero. Each channel is filled column by column
/// (time-major), row by row within a column.
///
/// input_override, when non-null (m x T2), replaces the Gaussian inputs
/// with a deterministic sequence; noises are still drawn as configured.
///
/// Throws InstabilityOverflowError naming the time index if any state
/// entry exceeds 1e150 in magnitude.
Rollout simulate_rollout(const SystemModel& sys, const NoiseConfig& noise, Index T2,
                         std::uint64_t rollout_seed, const Matrix* input_override = nullptr);

/// N independent rollouts; rollout i uses the sub-stream derive_seed(seed, i).
RolloutDataset simulate_dataset(const SystemModel& sys, const NoiseConfig& noise, Index T2,
                                Index N, std::uint64_t seed, std::string system_tag = {});

/// Deterministically replays the rollout's stored inputs and noises
/// through the system dynamics; returns the state sequence x_0 .. x_{T2-1}.
/// Uses the same arithmetic as simulate_rollout, so replayed outputs
/// reproduce the stored ones exactly.
std::vector<Vector> replay_states(const SystemModel& sys, const Rollout& r);

/// Outputs recomputed from replay_states; equals r.outputs bit-for-bit.
Matrix replay_outputs(const SystemModel& sys, const Rollout& r);

/// [D, CB, CAB, ..., CA^{T-2}B], p x mT.
MarkovMatrix true_markov(const SystemModel& sys, Index T);

/// [0, CB_w, CAB_w, ..., CA^{T-2}B_w], p x qT.
MarkovMatrix noise_markov_F(const SystemModel& sys, Index T);

/// [C, CA, CA^2, ..., CA^{T-1}], p x nT.
MarkovMatrix init_state_markov_H(const SystemModel& sys, Index T);

/// Assembles the Hankel triple from Markov parameters. Block (i, j) of H
/// (0-based) is the Markov block at index i+j+1, i.e. the D block is
/// skipped and block (0,0) is CB. Requires G.horizon >= T1 + T2h + 1.
HankelTriple build_hankel(const MarkovMatrix& G, Index T1, Index T2h);

}  // namespace sysid
