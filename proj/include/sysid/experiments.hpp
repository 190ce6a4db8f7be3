#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sysid/estimators.hpp"
#include "sysid/lti.hpp"

namespace sysid {

/// Marginally stable double integrator ("newton", parameter delta) or
/// the unstable tridiagonal 3x3 ("unstable3"). Throws NotFoundError for
/// anything else.
SystemModel builtin_system(const std::string& name, double delta = 0.2);

/// Random MIMO system: A entries uniform integers in {1..5}; B, C, D
/// entries uniform integers in {-2..2}; B_w = I_n, D_v = I_p.
SystemModel random_system(std::uint64_t seed, Index n = 3, Index m = 2, Index p = 2);

/// Scales A so its spectral radius becomes target_rho; other matrices are
/// unchanged. Throws CannotRescaleError when rho(A) is zero within
/// tolerance.
SystemModel rescale_to_radius(const SystemModel& sys, double target_rho);

enum class SweepKind {
    RolloutCount,    ///< axis = N, fixed T
    MarkovLength,    ///< axis = T, fixed N
    SpectralRadius,  ///< axis = rho(A), fixed N and T, random system rescaled per cell
    RolloutLength,   ///< axis = T2, fixed T1 and N
};

/// How the system under test is constructed.
struct SystemSpec {
    std::string name = "newton";  ///< "newton" | "unstable3" | "random" | "explicit"
    double delta = 0.2;           ///< newton parameter
    std::uint64_t seed = 0;       ///< random-system seed
    std::optional<double> target_rho;  ///< optional one-shot rescale (random systems)
    std::optional<SystemModel> explicit_system;
};

struct ScenarioConfig {
    SystemSpec system;
    NoiseConfig noise;
    SweepKind sweep = SweepKind::RolloutCount;
    std::vector<double> sweep_values;  ///< non-empty, strictly increasing
    long long fixed_N = 500;
    Index fixed_T = 10;
    Index fixed_T1 = 10;
    std::vector<std::string> methods{"full"};  ///< subset of full / final_sample / unequal_length
    int seeds = 20;
    std::uint64_t root_seed = 1;
    int workers = 1;
    std::string output_dir;  ///< empty: compute only, write nothing

    void validate() const;
};

/// One (axis value, method, seed) measurement; absent errors carry the
/// reason the cell is missing (under-excitation, overflow, ...).
struct SweepCell {
    double axis = 0.0;
    std::string method;
    int seed_index = 0;
    std::optional<double> error;             ///< ||G_hat - G|| (spectral)
    std::optional<double> normalized_error;  ///< ||G_hat - G|| / ||G||
    std::string missing_reason;
};

struct SweepSummaryRow {
    double axis = 0.0;
    std::string method;
    double mean_error = 0.0;
    double std_error = 0.0;
    double mean_normalized = 0.0;
    double std_normalized = 0.0;
    int count = 0;  ///< cells that produced a value
};

struct SweepResult {
    std::vector<double> axis_values;
    std::vector<std::string> methods;
    std::vector<SweepCell> cells;  ///< ordered by (axis index, method index, seed index)
    std::vector<SweepSummaryRow> summary;

    const SweepSummaryRow* find(double axis, const std::string& method) const;
};

/// Runs the sweep: for every (axis value, seed) a fresh dataset is
/// generated with the cell seed derive(root_seed, axis bits, seed index),
/// every requested method is evaluated against the matching true Markov
/// parameters, and per-method mean/std are aggregated over seeds. Cells
/// that fail with an estimation or simulation error are recorded as
/// missing, not fatal. When cfg.output_dir is set, writes results.csv,
/// summary.csv, and plot.svg there. cfg.workers > 1 distributes cells
/// over a thread pool; aggregation order is fixed by cell index, so
/// output is identical regardless of scheduling.
SweepResult run_sweep(const ScenarioConfig& cfg);

/// JSON (de)serialization of ScenarioConfig for `sysid sweep --config`.
ScenarioConfig scenario_from_json_file(const std::string& path);
ScenarioConfig scenario_from_json_text(const std::string& text);

void write_sweep_outputs(const ScenarioConfig& cfg, const SweepResult& result);

}  // namespace sysid
