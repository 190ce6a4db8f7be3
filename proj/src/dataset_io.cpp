#include "sysid/dataset_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace sysid {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_full_precision(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw InvalidInputError(std::string("metadata: ") + name + " must be a 2-D array");
    }
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[i].size()) != cols) {
            throw InvalidInputError(std::string("metadata: ragged rows in ") + name);
        }
        for (Index k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
    }
    return M;
}

std::string rollout_filename(Index i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rollout_%05lld.csv", static_cast<long long>(i));
    return buf;
}

void write_rollout_csv(const Rollout& r, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    const Index m = r.inputs.rows(), p = r.outputs.rows(), q = r.process_noise.rows(),
                l = r.measurement_noise.rows();
    out << "t";
    for (Index i = 0; i < m; ++i) out << ",u_" << (i + 1);
    for (Index i = 0; i < p; ++i) out << ",y_" << (i + 1);
    for (Index i = 0; i < q; ++i) out << ",w_" << (i + 1);
    for (Index i = 0; i < l; ++i) out << ",v_" << (i + 1);
    out << "\n";
    for (Index t = 0; t < r.length(); ++t) {
        out << t;
        for (Index i = 0; i < m; ++i) out << "," << format_full_precision(r.inputs(i, t));
        for (Index i = 0; i < p; ++i) out << "," << format_full_precision(r.outputs(i, t));
        for (Index i = 0; i < q; ++i) out << "," << format_full_precision(r.process_noise(i, t));
        for (Index i = 0; i < l; ++i)
            out << "," << format_full_precision(r.measurement_noise(i, t));
        out << "\n";
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

Rollout read_rollout_csv(const fs::path& path, Index m, Index p, Index q, Index l, Index T2) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InvalidInputError(path.string() + ": missing header row");
    const Index expected_fields = 1 + m + p + q + l;
    if (static_cast<Index>(split_csv_line(line).size()) != expected_fields) {
        throw InvalidInputError(path.string() + ": unexpected column count in header");
    }
    Rollout r;
    r.inputs.resize(m, T2);
    r.outputs.resize(p, T2);
    r.process_noise.resize(q, T2);
    r.measurement_noise.resize(l, T2);
    Index t = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (t >= T2) throw InvalidInputError(path.string() + ": more rows than T2");
        const auto fields = split_csv_line(line);
        if (static_cast<Index>(fields.size()) != expected_fields) {
            throw InvalidInputError(path.string() + ": unexpected column count");
        }
        Index f = 1;
        for (Index i = 0; i < m; ++i) r.inputs(i, t) = std::stod(fields[f++]);
        for (Index i = 0; i < p; ++i) r.outputs(i, t) = std::stod(fields[f++]);
        for (Index i = 0; i < q; ++i) r.process_noise(i, t) = std::stod(fields[f++]);
        for (Index i = 0; i < l; ++i) r.measurement_noise(i, t) = std::stod(fields[f++]);
        ++t;
    }
    if (t != T2) throw InvalidInputError(path.string() + ": fewer rows than T2");
    return r;
}

}  // namespace

void save_dataset(const SystemModel& sys, const RolloutDataset& ds, const fs::path& dir) {
    if (ds.N() < 1) throw InvalidInputError("save_dataset: empty dataset");
    fs::create_directories(dir);

    json meta;
    meta["format_version"] = "1";
    meta["system_tag"] = ds.system_tag;
    meta["system"] = {{"A", matrix_to_json(sys.A)},   {"B", matrix_to_json(sys.B)},
                      {"C", matrix_to_json(sys.C)},   {"D", matrix_to_json(sys.D)},
                      {"B_w", matrix_to_json(sys.B_w)}, {"D_v", matrix_to_json(sys.D_v)}};
    meta["noise"] = {{"sigma_u", ds.noise.sigma_u},
                     {"sigma_w", ds.noise.sigma_w},
                     {"sigma_v", ds.noise.sigma_v},
                     {"sigma_0", ds.noise.sigma_0}};
    meta["N"] = ds.N();
    meta["T2"] = ds.T2();
    meta["seed"] = ds.seed;

    bool any_x0 = false;
    for (const auto& r : ds.rollouts) {
        if (r.initial_state.size() > 0 && r.initial_state.cwiseAbs().maxCoeff() > 0.0) {
            any_x0 = true;
            break;
        }
    }
    if (any_x0) {
        json x0s = json::array();
        for (const auto& r : ds.rollouts) {
            json v = json::array();
            for (Index i = 0; i < r.initial_state.size(); ++i) v.push_back(r.initial_state(i));
            x0s.push_back(std::move(v));
        }
        meta["initial_states"] = std::move(x0s);
    }

    std::ofstream mf(dir / "metadata.json");
    if (!mf) throw Error("cannot write " + (dir / "metadata.json").string());
    mf << meta.dump(2) << "\n";

    for (Index i = 0; i < ds.N(); ++i) {
        write_rollout_csv(ds.rollouts[static_cast<std::size_t>(i)], dir / rollout_filename(i));
    }
}

DatasetFile load_dataset(const fs::path& dir) {
    std::ifstream mf(dir / "metadata.json");
    if (!mf) throw NotFoundError("no metadata.json in " + dir.string());
    json meta;
    mf >> meta;
    if (meta.value("format_version", "") != "1") {
        throw InvalidInputError("unsupported dataset format version");
    }
    const json& js = meta.at("system");
    SystemModel sys(matrix_from_json(js.at("A"), "A"), matrix_from_json(js.at("B"), "B"),
                    matrix_from_json(js.at("C"), "C"), matrix_from_json(js.at("D"), "D"),
                    matrix_from_json(js.at("B_w"), "B_w"), matrix_from_json(js.at("D_v"), "D_v"));

    RolloutDataset ds;
    ds.system_tag = meta.value("system_tag", "");
    const json& jn = meta.at("noise");
    ds.noise.sigma_u = jn.at("sigma_u").get<double>();
    ds.noise.sigma_w = jn.at("sigma_w").get<double>();
    ds.noise.sigma_v = jn.at("sigma_v").get<double>();
    ds.noise.sigma_0 = jn.at("sigma_0").get<double>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    const Index N = meta.at("N").get<Index>();
    const Index T2 = meta.at("T2").get<Index>();

    ds.rollouts.reserve(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        Rollout r = read_rollout_csv(dir / rollout_filename(i), sys.m(), sys.p(), sys.q(),
                                     sys.l(), T2);
        r.initial_state = Vector::Zero(sys.n());
        ds.rollouts.push_back(std::move(r));
    }
    if (meta.contains("initial_states")) {
        const json& x0s = meta["initial_states"];
        if (static_cast<Index>(x0s.size()) != N) {
            throw InvalidInputError("metadata: initial_states length mismatch");
        }
        for (Index i = 0; i < N; ++i) {
            const json& v = x0s[static_cast<std::size_t>(i)];
            if (static_cast<Index>(v.size()) != sys.n()) {
                throw InvalidInputError("metadata: initial state dimension mismatch");
            }
            for (Index k = 0; k < sys.n(); ++k) {
                ds.rollouts[static_cast<std::size_t>(i)].initial_state(k) = v[k].get<double>();
            }
        }
    }
    return DatasetFile{std::move(sys), std::move(ds)};
}

}  // namespace sysid
