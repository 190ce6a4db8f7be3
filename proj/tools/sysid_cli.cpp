// sysid command-line front end: simulate rollout datasets, run the OLS
// estimators, recover realizations, evaluate error bounds, and drive the
// Monte Carlo sweeps. Exit codes: 0 success, 2 invalid input or
// configuration, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sysid/bounds.hpp"
#include "sysid/dataset_io.hpp"
#include "sysid/estimators.hpp"
#include "sysid/experiments.hpp"
#include "sysid/realization.hpp"

namespace {

struct SystemOptions {
    std::string name = "newton";
    double delta = 0.2;
    std::uint64_t seed = 0;
    std::optional<double> target_rho;

    void attach(CLI::App* cmd) {
        cmd->add_option("--system", name, "builtin system: newton | unstable3 | random")
            ->capture_default_str();
        cmd->add_option("--newton-delta", delta, "newton integrator step")->capture_default_str();
        cmd->add_option("--system-seed", seed, "random-system seed");
        cmd->add_option("--target-rho", target_rho, "rescale A to this spectral radius");
    }

    sysid::SystemModel build() const {
        sysid::SystemModel sys = name == "random" ? sysid::random_system(seed)
                                                  : sysid::builtin_system(name, delta);
        if (target_rho) sys = sysid::rescale_to_radius(sys, *target_rho);
        return sys;
    }
};

struct NoiseOptions {
    sysid::NoiseConfig noise;

    void attach(CLI::App* cmd) {
        cmd->add_option("--sigma-u", noise.sigma_u, "input std")->capture_default_str();
        cmd->add_option("--sigma-w", noise.sigma_w, "process-noise std")->capture_default_str();
        cmd->add_option("--sigma-v", noise.sigma_v, "measurement-noise std")
            ->capture_default_str();
        cmd->add_option("--sigma-0", noise.sigma_0, "initial-state std")->capture_default_str();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-sample identification of partially observed LTI systems"};
    app.require_subcommand(1);

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "generate a rollout dataset directory");
    SystemOptions sim_sys;
    NoiseOptions sim_noise;
    sim_sys.attach(sim);
    sim_noise.attach(sim);
    std::uint64_t sim_seed = 0;
    long long sim_N = 100;
    long long sim_T2 = 10;
    std::string sim_out, sim_tag;
    sim->add_option("--n", sim_N, "number of rollouts")->capture_default_str();
    sim->add_option("--t2", sim_T2, "rollout length")->capture_default_str();
    sim->add_option("--seed", sim_seed, "dataset seed")->capture_default_str();
    sim->add_option("--tag", sim_tag, "system tag stored in metadata");
    sim->add_option("--out", sim_out, "output directory")->required();

    // --- estimate ---
    auto* est = app.add_subcommand("estimate", "run an OLS estimator on a dataset");
    std::string est_data, est_method = "full", est_out;
    long long est_T1 = 0;
    est->add_option("--data", est_data, "dataset directory")->required();
    est->add_option("--method", est_method, "full | final | unequal")->capture_default_str();
    est->add_option("--t1", est_T1, "Markov length (default: rollout length)");
    est->add_option("--out", est_out, "output prefix (writes <prefix>.csv and <prefix>.json)")
        ->required();

    // --- hokalman ---
    auto* hk = app.add_subcommand("hokalman", "recover a realization from Markov parameters");
    std::string hk_markov, hk_out;
    long long hk_bw = 1, hk_order = 0, hk_T1 = 0, hk_T2h = 0;
    hk->add_option("--markov", hk_markov, "Markov parameter CSV (p rows, m*T columns)")
        ->required();
    hk->add_option("--block-width", hk_bw, "input dimension m")->required();
    hk->add_option("--order", hk_order, "system order n")->required();
    hk->add_option("--t1", hk_T1, "Hankel block rows T1")->required();
    hk->add_option("--t2", hk_T2h, "Hankel block columns T2")->required();
    hk->add_option("--out", hk_out, "realization JSON path")->required();

    // --- bound ---
    auto* bnd = app.add_subcommand("bound", "evaluate the high-probability error bound");
    SystemOptions bnd_sys;
    NoiseOptions bnd_noise;
    bnd_sys.attach(bnd);
    bnd_noise.attach(bnd);
    std::string bnd_theorem = "1", bnd_json;
    long long bnd_T = 10, bnd_N = 100;
    double bnd_delta = 0.05;
    bnd->add_option("--theorem", bnd_theorem, "1 | cor2")->capture_default_str();
    bnd->add_option("--t", bnd_T, "Markov length T")->capture_default_str();
    bnd->add_option("--n", bnd_N, "number of rollouts N")->capture_default_str();
    bnd->add_option("--delta", bnd_delta, "failure probability")->capture_default_str();
    bnd->add_option("--json", bnd_json, "also write the report as JSON to this path");

    // --- check ---
    auto* chk = app.add_subcommand("check", "Monte Carlo check of a concentration proposition");
    SystemOptions chk_sys;
    NoiseOptions chk_noise;
    chk_sys.attach(chk);
    chk_noise.attach(chk);
    int chk_prop = 1;
    long long chk_T = 10, chk_N = 100, chk_trials = 200;
    double chk_delta = 0.1;
    std::uint64_t chk_seed = 0;
    chk->add_option("--prop", chk_prop, "proposition: 1 | 2 | 3 | 4")->capture_default_str();
    chk->add_option("--t", chk_T, "Markov length T")->capture_default_str();
    chk->add_option("--n", chk_N, "number of rollouts N")->capture_default_str();
    chk->add_option("--delta", chk_delta, "failure probability")->capture_default_str();
    chk->add_option("--trials", chk_trials, "Monte Carlo trials")->capture_default_str();
    chk->add_option("--seed", chk_seed, "trial seed")->capture_default_str();

    // --- sweep ---
    auto* swp = app.add_subcommand("sweep", "run a Monte Carlo sweep from a JSON config");
    std::string swp_config;
    swp->add_option("--config", swp_config, "scenario JSON file")->required();

    // --- fir-report ---
    auto* fir = app.add_subcommand("fir-report", "H-infinity FIR truncation report");
    SystemOptions fir_sys;
    fir_sys.attach(fir);
    std::string fir_markov;
    long long fir_bw = 1, fir_grid = 0;
    fir->add_option("--markov", fir_markov, "estimated Markov parameter CSV")->required();
    fir->add_option("--block-width", fir_bw, "input dimension m")->required();
    fir->add_option("--grid-points", fir_grid, "frequency grid size (default 8 * horizon)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const sysid::SystemModel sys = sim_sys.build();
            const sysid::RolloutDataset ds = sysid::simulate_dataset(
                sys, sim_noise.noise, sim_T2, sim_N, sim_seed,
                sim_tag.empty() ? sim_sys.name : sim_tag);
            sysid::save_dataset(sys, ds, sim_out);
            std::cout << "wrote " << sim_N << " rollouts of length " << sim_T2 << " to "
                      << sim_out << "\n";
        } else if (*est) {
            const sysid::DatasetFile file = sysid::load_dataset(est_data);
            const sysid::Index T2 = file.data.T2();
            const sysid::Index T1 = est_T1 > 0 ? est_T1 : T2;
            sysid::EstimationResult result;
            if (est_method == "final" || est_method == "final_sample") {
                const sysid::MarkovMatrix truth = sysid::true_markov(file.system, T2);
                result = sysid::ols_final_sample(file.data, &truth);
            } else if (est_method == "full" || est_method == "unequal" ||
                       est_method == "unequal_length") {
                const sysid::MarkovMatrix truth = sysid::true_markov(file.system, T1);
                const sysid::DataMatrices dm = sysid::assemble_data_matrices(file.data, T1);
                result = sysid::ols_full(dm, &truth);
            } else {
                throw sysid::InvalidInputError("unknown method: " + est_method);
            }
            sysid::export_estimate(result, file.data.N(), T2, est_out + ".csv",
                                   est_out + ".json");
            std::cout << result.method_tag << ": spectral error "
                      << (result.spectral_error ? *result.spectral_error : -1.0)
                      << ", normalized "
                      << (result.normalized_error ? *result.normalized_error : -1.0) << "\n";
        } else if (*hk) {
            const sysid::MarkovMatrix g = sysid::load_markov_csv(hk_markov, hk_bw);
            const sysid::Realization real = sysid::ho_kalman(g, hk_order, hk_T1, hk_T2h);
            sysid::export_realization_json(real, hk_out);
            std::cout << "order " << real.order << " realization written to " << hk_out;
            if (real.order_warning) std::cout << " (weak spectral gap at the requested order)";
            std::cout << "\n";
        } else if (*bnd) {
            const sysid::SystemModel sys = bnd_sys.build();
            sysid::BoundReport report;
            if (bnd_theorem == "1") {
                report = sysid::theorem1_bound(sys, bnd_noise.noise, bnd_T, bnd_N, bnd_delta);
            } else if (bnd_theorem == "cor2") {
                report = sysid::corollary2_bound(sys, bnd_noise.noise, bnd_T, bnd_N, bnd_delta);
            } else {
                throw sysid::InvalidInputError("unknown theorem: " + bnd_theorem);
            }
            std::cout << sysid::bound_report_table(report);
            if (!bnd_json.empty()) {
                std::ofstream jf(bnd_json);
                jf << sysid::bound_report_json(report) << "\n";
            }
        } else if (*chk) {
            if (chk_prop < 1 || chk_prop > 4) {
                throw sysid::InvalidInputError("--prop must be 1, 2, 3, or 4");
            }
            const sysid::SystemModel sys = chk_sys.build();
            const sysid::ConcentrationCheck c = sysid::check_proposition(
                static_cast<sysid::Proposition>(chk_prop), sys, chk_noise.noise, chk_T, chk_N,
                chk_delta, chk_trials, chk_seed);
            std::cout << sysid::concentration_check_table(c);
        } else if (*swp) {
            const sysid::ScenarioConfig cfg = sysid::scenario_from_json_file(swp_config);
            const sysid::SweepResult res = sysid::run_sweep(cfg);
            long long missing = 0;
            for (const auto& cell : res.cells) {
                if (!cell.error) {
                    ++missing;
                    std::cerr << "warning: missing cell axis=" << cell.axis << " method="
                              << cell.method << " seed=" << cell.seed_index << ": "
                              << cell.missing_reason << "\n";
                }
            }
            std::cout << "sweep complete: " << res.cells.size() - missing << "/"
                      << res.cells.size() << " cells";
            if (!cfg.output_dir.empty()) std::cout << ", outputs in " << cfg.output_dir;
            std::cout << "\n";
        } else if (*fir) {
            const sysid::SystemModel sys = fir_sys.build();
            const sysid::MarkovMatrix g = sysid::load_markov_csv(fir_markov, fir_bw);
            const sysid::Index grid = fir_grid > 0 ? fir_grid : 8 * g.horizon;
            const sysid::FirTruncationReport rep = sysid::fir_hinf_report(sys, g, grid);
            std::cout << "ols_error_hinf  " << rep.ols_error_hinf << "\n"
                      << "tail_bound      " << rep.tail_bound << "\n"
                      << "total_bound     " << rep.total_bound << "\n"
                      << "grid_points     " << rep.grid_points << "\n";
        }
    } catch (const sysid::InvalidInputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sysid::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
