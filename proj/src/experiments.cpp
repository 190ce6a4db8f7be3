#include "sysid/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sysid/dataset_io.hpp"

namespace sysid {

using nlohmann::json;
namespace fs = std::filesystem;

SystemModel builtin_system(const std::string& name, double delta) {
    if (name == "newton" || name == "newton_delta") {
        Matrix A(2, 2), B(2, 1), C(1, 2), D(1, 1), Dv(1, 1);
        A << 1.0, delta, 0.0, 1.0;
        B << 0.0, 1.0;
        C << 1.0, 0.0;
        D << 0.0;
        Dv << 1.0;
        return SystemModel(A, B, C, D, B, Dv);
    }
    if (name == "unstable3" || name == "unstable_3x3") {
        Matrix A(3, 3), C(1, 3), Dv(1, 1);
        A << 1.01, 0.01, 0.00,
             0.01, 1.01, 0.01,
             0.00, 0.01, 1.01;
        C << 1.0, 0.0, 0.0;
        Dv << 1.0;
        return SystemModel(A, Matrix::Identity(3, 3), C, Matrix::Zero(1, 3),
                           Matrix::Identity(3, 3), Dv);
    }
    throw NotFoundError("unknown builtin system: " + name);
}

SystemModel random_system(std::uint64_t seed, Index n, Index m, Index p) {
    RandomStream rng(seed);
    // Draw order: A, B, C, D, each row-major.
    auto int_matrix = [&rng](Index rows, Index cols, int lo, int hi) {
        Matrix M(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                M(i, j) = static_cast<double>(rng.uniform_int(lo, hi));
            }
        }
        return M;
    };
    Matrix A = int_matrix(n, n, 1, 5);
    Matrix B = int_matrix(n, m, -2, 2);
    Matrix C = int_matrix(p, n, -2, 2);
    Matrix D = int_matrix(p, m, -2, 2);
    return SystemModel(std::move(A), std::move(B), std::move(C), std::move(D),
                       Matrix::Identity(n, n), Matrix::Identity(p, p));
}

SystemModel rescale_to_radius(const SystemModel& sys, double target_rho) {
    if (!(target_rho > 0.0) || !std::isfinite(target_rho)) {
        throw InvalidInputError("rescale_to_radius: target must be finite and positive");
    }
    const double rho = spectral_radius(sys.A);
    if (rho <= 1e-12) {
        throw CannotRescaleError("rescale_to_radius: spectral radius is zero within tolerance");
    }
    return SystemModel(sys.A * (target_rho / rho), sys.B, sys.C, sys.D, sys.B_w, sys.D_v);
}

void ScenarioConfig::validate() const {
    noise.validate();
    if (sweep_values.empty()) throw InvalidInputError("sweep: values list is empty");
    for (std::size_t i = 0; i + 1 < sweep_values.size(); ++i) {
        if (!(sweep_values[i] < sweep_values[i + 1])) {
            throw InvalidInputError("sweep: values must be strictly increasing");
        }
    }
    if (seeds < 1) throw InvalidInputError("sweep: seeds must be >= 1");
    if (workers < 1) throw InvalidInputError("sweep: workers must be >= 1");
    if (methods.empty()) throw InvalidInputError("sweep: no methods requested");
    for (const auto& m : methods) {
        if (m != "full" && m != "final_sample" && m != "unequal_length") {
            throw InvalidInputError("sweep: unknown method '" + m + "'");
        }
    }
    const bool has_unequal =
        std::find(methods.begin(), methods.end(), "unequal_length") != methods.end();
    if (sweep == SweepKind::RolloutLength || has_unequal) {
        if (fixed_T1 < 1) throw InvalidInputError("sweep: T1 must be >= 1");
        const double min_T2 = sweep == SweepKind::RolloutLength
                                  ? sweep_values.front()
                                  : static_cast<double>(sweep == SweepKind::MarkovLength
                                                            ? sweep_values.front()
                                                            : fixed_T);
        if (static_cast<double>(fixed_T1) > min_T2) {
            throw InvalidInputError("sweep: T1 exceeds the smallest rollout length");
        }
    }
}

namespace {

struct AxisContext {
    SystemModel system;
    Index T2 = 0;
    Index N = 0;
    MarkovMatrix truth_T2;   // truth at the rollout length
    MarkovMatrix truth_T1;   // truth at fixed_T1 (when needed)
};

std::uint64_t cell_seed(std::uint64_t root, double axis, int seed_index) {
    // Hash the axis *value* (not its list position) so subsetting the
    // sweep list reproduces the surviving cells exactly.
    const std::uint64_t axis_bits = std::bit_cast<std::uint64_t>(axis);
    return derive_seed(derive_seed(root, axis_bits), static_cast<std::uint64_t>(seed_index));
}

struct MethodOutcome {
    std::optional<double> error;
    std::optional<double> normalized;
    std::string reason;
};

MethodOutcome run_method(const std::string& method, const ScenarioConfig& cfg,
                         const AxisContext& ax, const RolloutDataset& ds) {
    MethodOutcome out;
    try {
        if (method == "full") {
            const DataMatrices dm = assemble_data_matrices(ds, ax.T2);
            EstimationResult r = ols_full(dm);
            if (cfg.sweep == SweepKind::RolloutLength) {
                // Keep only the first T1 Markov blocks for comparison.
                const Index mcols = ax.truth_T1.block_row.cols();
                const Matrix trunc = r.G_hat.block_row.leftCols(mcols);
                const double err = spectral_norm(trunc - ax.truth_T1.block_row);
                out.error = err;
                out.normalized = err / spectral_norm(ax.truth_T1.block_row);
            } else {
                const double err = spectral_norm(r.G_hat.block_row - ax.truth_T2.block_row);
                out.error = err;
                out.normalized = err / spectral_norm(ax.truth_T2.block_row);
            }
        } else if (method == "final_sample") {
            EstimationResult r = ols_final_sample(ds, &ax.truth_T2);
            out.error = r.spectral_error;
            out.normalized = r.normalized_error;
        } else {  // unequal_length
            const DataMatrices dm = assemble_data_matrices(ds, cfg.fixed_T1);
            EstimationResult r = ols_full(dm, &ax.truth_T1);
            out.error = r.spectral_error;
            out.normalized = r.normalized_error;
        }
    } catch (const Error& e) {
        out.reason = e.what();
    }
    return out;
}

std::string sweep_axis_label(SweepKind kind) {
    switch (kind) {
        case SweepKind::RolloutCount: return "number of rollouts N";
        case SweepKind::MarkovLength: return "length T";
        case SweepKind::SpectralRadius: return "spectral radius rho(A)";
        case SweepKind::RolloutLength: return "rollout length T2";
    }
    return "axis";
}

void write_plot_svg(const ScenarioConfig& cfg, const SweepResult& res, const fs::path& path);

}  // namespace

const SweepSummaryRow* SweepResult::find(double axis, const std::string& method) const {
    for (const auto& row : summary) {
        if (row.method == method && row.axis == axis) return &row;
    }
    return nullptr;
}

SweepResult run_sweep(const ScenarioConfig& cfg) {
    cfg.validate();

    // Base system.
    std::optional<SystemModel> base;
    if (cfg.system.name == "explicit") {
        if (!cfg.system.explicit_system) {
            throw InvalidInputError("sweep: explicit system requested but none given");
        }
        base = *cfg.system.explicit_system;
    } else if (cfg.system.name == "random") {
        base = random_system(cfg.system.seed);
        if (cfg.system.target_rho && cfg.sweep != SweepKind::SpectralRadius) {
            base = rescale_to_radius(*base, *cfg.system.target_rho);
        }
    } else {
        base = builtin_system(cfg.system.name, cfg.system.delta);
    }

    const Index n_axis = static_cast<Index>(cfg.sweep_values.size());
    const bool need_T1 =
        cfg.sweep == SweepKind::RolloutLength ||
        std::find(cfg.methods.begin(), cfg.methods.end(), "unequal_length") != cfg.methods.end();

    std::vector<AxisContext> axes;
    axes.reserve(static_cast<std::size_t>(n_axis));
    for (Index ai = 0; ai < n_axis; ++ai) {
        const double axis = cfg.sweep_values[static_cast<std::size_t>(ai)];
        AxisContext ax{*base, cfg.fixed_T, static_cast<Index>(cfg.fixed_N), {}, {}};
        switch (cfg.sweep) {
            case SweepKind::RolloutCount:
                ax.N = static_cast<Index>(std::llround(axis));
                break;
            case SweepKind::MarkovLength:
            case SweepKind::RolloutLength:
                ax.T2 = static_cast<Index>(std::llround(axis));
                break;
            case SweepKind::SpectralRadius:
                ax.system = rescale_to_radius(*base, axis);
                break;
        }
        ax.truth_T2 = true_markov(ax.system, ax.T2);
        if (need_T1) ax.truth_T1 = true_markov(ax.system, cfg.fixed_T1);
        axes.push_back(std::move(ax));
    }

    SweepResult res;
    res.axis_values = cfg.sweep_values;
    res.methods = cfg.methods;
    const std::size_t n_methods = cfg.methods.size();
    const std::size_t n_seeds = static_cast<std::size_t>(cfg.seeds);
    res.cells.resize(static_cast<std::size_t>(n_axis) * n_methods * n_seeds);

    // One job per (axis, seed): simulate once, evaluate every method.
    struct Job {
        Index axis_index;
        int seed_index;
    };
    std::vector<Job> jobs;
    jobs.reserve(static_cast<std::size_t>(n_axis) * n_seeds);
    for (Index ai = 0; ai < n_axis; ++ai) {
        for (int si = 0; si < cfg.seeds; ++si) jobs.push_back({ai, si});
    }

    std::atomic<std::size_t> next_job{0};
    std::exception_ptr first_failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t ji = next_job.fetch_add(1);
            if (ji >= jobs.size()) return;
            const Job job = jobs[ji];
            const std::size_t ai = static_cast<std::size_t>(job.axis_index);
            const AxisContext& ax = axes[ai];
            const double axis = cfg.sweep_values[ai];
            try {
                std::optional<RolloutDataset> ds;
                std::string sim_reason;
                try {
                    ds = simulate_dataset(ax.system, cfg.noise, ax.T2, ax.N,
                                          cell_seed(cfg.root_seed, axis, job.seed_index));
                } catch (const Error& e) {
                    sim_reason = e.what();
                }
                for (std::size_t mi = 0; mi < n_methods; ++mi) {
                    SweepCell cell;
                    cell.axis = axis;
                    cell.method = cfg.methods[mi];
                    cell.seed_index = job.seed_index;
                    if (ds) {
                        const MethodOutcome got = run_method(cfg.methods[mi], cfg, ax, *ds);
                        cell.error = got.error;
                        cell.normalized_error = got.normalized;
                        cell.missing_reason = got.reason;
                    } else {
                        cell.missing_reason = sim_reason;
                    }
                    const std::size_t idx =
                        (ai * n_methods + mi) * n_seeds + static_cast<std::size_t>(job.seed_index);
                    res.cells[idx] = std::move(cell);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!first_failure) first_failure = std::current_exception();
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_failure) std::rethrow_exception(first_failure);

    // Aggregate in cell order: deterministic regardless of scheduling.
    for (Index ai = 0; ai < n_axis; ++ai) {
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            SweepSummaryRow row;
            row.axis = cfg.sweep_values[static_cast<std::size_t>(ai)];
            row.method = cfg.methods[mi];
            double sum_e = 0, sum_n = 0;
            std::vector<double> errs, norms;
            for (std::size_t si = 0; si < n_seeds; ++si) {
                const SweepCell& cell =
                    res.cells[(static_cast<std::size_t>(ai) * n_methods + mi) * n_seeds + si];
                if (cell.error) {
                    sum_e += *cell.error;
                    sum_n += *cell.normalized_error;
                    errs.push_back(*cell.error);
                    norms.push_back(*cell.normalized_error);
                }
            }
            row.count = static_cast<int>(errs.size());
            if (row.count > 0) {
                row.mean_error = sum_e / row.count;
                row.mean_normalized = sum_n / row.count;
                if (row.count > 1) {
                    double se = 0, sn = 0;
                    for (double e : errs) se += (e - row.mean_error) * (e - row.mean_error);
                    for (double v : norms) sn += (v - row.mean_normalized) * (v - row.mean_normalized);
                    row.std_error = std::sqrt(se / (row.count - 1));
                    row.std_normalized = std::sqrt(sn / (row.count - 1));
                }
            }
            res.summary.push_back(std::move(row));
        }
    }

    if (!cfg.output_dir.empty()) write_sweep_outputs(cfg, res);
    return res;
}

void write_sweep_outputs(const ScenarioConfig& cfg, const SweepResult& res) {
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);

    {
        std::ofstream f(dir / "results.csv");
        if (!f) throw Error("cannot write results.csv");
        f << "axis,method,seed,error,normalized_error\n";
        for (const auto& cell : res.cells) {
            f << format_full_precision(cell.axis) << "," << cell.method << ","
              << cell.seed_index << ",";
            if (cell.error) f << format_full_precision(*cell.error);
            f << ",";
            if (cell.normalized_error) f << format_full_precision(*cell.normalized_error);
            f << "\n";
        }
    }
    {
        std::ofstream f(dir / "summary.csv");
        if (!f) throw Error("cannot write summary.csv");
        f << "axis,method,mean,std\n";
        for (const auto& row : res.summary) {
            f << format_full_precision(row.axis) << "," << row.method << ",";
            if (row.count > 0) {
                f << format_full_precision(row.mean_normalized) << ","
                  << format_full_precision(row.std_normalized);
            } else {
                f << ",";
            }
            f << "\n";
        }
    }
    write_plot_svg(cfg, res, dir / "plot.svg");
}

namespace {

// Self-contained log-scale SVG line chart, one polyline per method.
void write_plot_svg(const ScenarioConfig& cfg, const SweepResult& res, const fs::path& path) {
    constexpr double W = 720, H = 480;
    constexpr double ml = 80, mr = 170, mt = 30, mb = 60;
    const double plot_w = W - ml - mr, plot_h = H - mt - mb;

    double xmin = res.axis_values.front(), xmax = res.axis_values.back();
    if (xmax <= xmin) xmax = xmin + 1;
    double ymin = std::numeric_limits<double>::infinity(), ymax = 0;
    for (const auto& row : res.summary) {
        if (row.count > 0 && row.mean_normalized > 0) {
            ymin = std::min(ymin, row.mean_normalized);
            ymax = std::max(ymax, row.mean_normalized);
        }
    }
    if (!std::isfinite(ymin) || ymax <= 0) {
        ymin = 1e-3;
        ymax = 1.0;
    }
    double ly_min = std::floor(std::log10(ymin));
    double ly_max = std::ceil(std::log10(ymax));
    if (ly_max <= ly_min) ly_max = ly_min + 1;

    auto xpix = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * plot_w; };
    auto ypix = [&](double y) {
        return mt + plot_h - (std::log10(y) - ly_min) / (ly_max - ly_min) * plot_h;
    };

    static const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};

    std::ofstream f(path);
    if (!f) throw Error("cannot write plot.svg");
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    f << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

    // y grid: powers of ten
    for (double e = ly_min; e <= ly_max + 0.5; e += 1.0) {
        const double y = ypix(std::pow(10.0, e));
        f << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + plot_w << "\" y2=\""
          << y << "\" stroke=\"#dddddd\"/>\n";
        f << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
          << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">1e"
          << static_cast<int>(e) << "</text>\n";
    }
    // x ticks at the axis values
    for (double x : res.axis_values) {
        const double px = xpix(x);
        f << "<line x1=\"" << px << "\" y1=\"" << mt + plot_h << "\" x2=\"" << px << "\" y2=\""
          << mt + plot_h + 5 << "\" stroke=\"black\"/>\n";
        std::ostringstream lab;
        lab << x;
        f << "<text x=\"" << px << "\" y=\"" << mt + plot_h + 20
          << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << lab.str()
          << "</text>\n";
    }
    f << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\">"
      << sweep_axis_label(cfg.sweep) << "</text>\n";
    f << "<text x=\"18\" y=\"" << mt + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 18 "
      << mt + plot_h / 2 << ")\">mean normalized error</text>\n";

    for (std::size_t mi = 0; mi < res.methods.size(); ++mi) {
        const char* color = kColors[mi % 4];
        std::ostringstream pts;
        for (const auto& row : res.summary) {
            if (row.method != res.methods[mi] || row.count == 0 || row.mean_normalized <= 0) {
                continue;
            }
            pts << xpix(row.axis) << "," << ypix(row.mean_normalized) << " ";
        }
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
          << pts.str() << "\"/>\n";
        for (const auto& row : res.summary) {
            if (row.method != res.methods[mi] || row.count == 0 || row.mean_normalized <= 0) {
                continue;
            }
            f << "<circle cx=\"" << xpix(row.axis) << "\" cy=\"" << ypix(row.mean_normalized)
              << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        const double ly = mt + 16 + 18 * static_cast<double>(mi);
        f << "<line x1=\"" << ml + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\""
          << ml + plot_w + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
        f << "<text x=\"" << ml + plot_w + 42 << "\" y=\"" << ly + 4
          << "\" font-size=\"12\" font-family=\"sans-serif\">" << res.methods[mi] << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace

namespace {

SweepKind sweep_kind_from_string(const std::string& s) {
    if (s == "N") return SweepKind::RolloutCount;
    if (s == "T") return SweepKind::MarkovLength;
    if (s == "rho") return SweepKind::SpectralRadius;
    if (s == "T2") return SweepKind::RolloutLength;
    throw InvalidInputError("sweep: unknown type '" + s + "' (expected N, T, rho, or T2)");
}

Matrix config_matrix(const json& j, const char* name) {
    if (!j.is_array() || j.empty()) {
        throw InvalidInputError(std::string("config: bad matrix ") + name);
    }
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[i].size()) != cols) {
            throw InvalidInputError(std::string("config: ragged matrix ") + name);
        }
        for (Index k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
    }
    return M;
}

}  // namespace

ScenarioConfig scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInputError(std::string("config: JSON parse error: ") + e.what());
    }
    try {
        ScenarioConfig cfg;
        const json& js = j.at("system");
        cfg.system.name = js.at("name").get<std::string>();
        cfg.system.delta = js.value("delta", 0.2);
        cfg.system.seed = js.value("seed", 0ull);
        if (js.contains("target_rho")) cfg.system.target_rho = js["target_rho"].get<double>();
        if (cfg.system.name == "explicit") {
            cfg.system.explicit_system =
                SystemModel(config_matrix(js.at("A"), "A"), config_matrix(js.at("B"), "B"),
                            config_matrix(js.at("C"), "C"), config_matrix(js.at("D"), "D"),
                            config_matrix(js.at("B_w"), "B_w"), config_matrix(js.at("D_v"), "D_v"));
        }
        if (j.contains("noise")) {
            const json& jn = j["noise"];
            cfg.noise.sigma_u = jn.value("sigma_u", 1.0);
            cfg.noise.sigma_w = jn.value("sigma_w", 0.0);
            cfg.noise.sigma_v = jn.value("sigma_v", 0.0);
            cfg.noise.sigma_0 = jn.value("sigma_0", 0.0);
        }
        const json& jsw = j.at("sweep");
        cfg.sweep = sweep_kind_from_string(jsw.at("type").get<std::string>());
        cfg.sweep_values = jsw.at("values").get<std::vector<double>>();
        cfg.fixed_N = jsw.value("N", 500ll);
        cfg.fixed_T = jsw.value("T", Index{10});
        cfg.fixed_T1 = jsw.value("T1", Index{10});
        if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
        cfg.seeds = j.value("seeds", 20);
        cfg.root_seed = j.value("root_seed", 1ull);
        cfg.workers = j.value("workers", 1);
        cfg.output_dir = j.value("output_dir", std::string{});
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw InvalidInputError(std::string("config: ") + e.what());
    }
}

ScenarioConfig scenario_from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw NotFoundError("cannot open config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return scenario_from_json_text(buf.str());
}

}  // namespace sysid
