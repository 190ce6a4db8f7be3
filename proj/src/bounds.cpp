#include "sysid/bounds.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

#include "sysid/estimators.hpp"

namespace sysid {

using nlohmann::json;

namespace {

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw InvalidInputError("delta must lie strictly between 0 and 1");
    }
}

double t_cubic(double T) { return T * T * T / 3.0 + T * T / 2.0 + T / 6.0; }

BoundReport evaluate_bound(const SystemModel& sys, const NoiseConfig& noise, Index T,
                           long long N, double delta, bool with_initial_state) {
    check_delta(delta);
    if (T < 1) throw InvalidInputError("bound: T must be >= 1");
    if (N < 1) throw InvalidInputError("bound: N must be >= 1");
    if (!(noise.sigma_u > 0.0)) {
        throw InvalidInputError("bound: sigma_u must be positive");
    }
    const double Td = static_cast<double>(T);
    const double m = static_cast<double>(sys.m());
    const double q = static_cast<double>(sys.q());
    const double l = static_cast<double>(sys.l());
    const double n = static_cast<double>(sys.n());

    BoundReport r;
    r.delta = delta;
    r.N = N;
    r.F_norm = spectral_norm(noise_markov_F(sys, T).block_row);
    r.Dv_norm = spectral_norm(sys.D_v);

    const double log_c = with_initial_state ? std::log(36.0 * Td / delta)
                                            : std::log(27.0 * Td / delta);
    r.C1 = 8.0 * r.Dv_norm * std::sqrt(2.0 * Td * (Td + 1.0) * (m + l) * log_c);
    r.C2 = 16.0 * r.F_norm * std::sqrt(t_cubic(Td) * 2.0 * (m + q) * log_c);

    double numerator = noise.sigma_v * r.C1 + noise.sigma_w * r.C2;
    if (with_initial_state) {
        r.H_norm = spectral_norm(init_state_markov_H(sys, T).block_row);
        r.C0 = 16.0 * r.H_norm * std::sqrt(Td * (Td + 1.0) * (m + n) * log_c);
        numerator += noise.sigma_0 * r.C0;
        r.N_threshold = static_cast<long long>(
            std::ceil(8.0 * m * Td + 4.0 * (m + n + q + l + 4.0) * std::log(4.0 * Td / delta)));
    } else {
        r.N_threshold = static_cast<long long>(
            std::ceil(8.0 * m * Td + 4.0 * (m + q + l + 4.0) * std::log(3.0 * Td / delta)));
    }
    r.bound_value = numerator / (noise.sigma_u * std::sqrt(static_cast<double>(N)));
    r.n_satisfied = N >= r.N_threshold;
    return r;
}

}  // namespace

BoundReport theorem1_bound(const SystemModel& sys, const NoiseConfig& noise, Index T,
                           long long N, double delta) {
    return evaluate_bound(sys, noise, T, N, delta, false);
}

BoundReport corollary2_bound(const SystemModel& sys, const NoiseConfig& noise, Index T,
                             long long N, double delta) {
    return evaluate_bound(sys, noise, T, N, delta, true);
}

ConcentrationCheck check_proposition(Proposition prop, const SystemModel& sys,
                                     const NoiseConfig& noise, Index T, Index N, double delta,
                                     long long trials, std::uint64_t seed) {
    check_delta(delta);
    if (trials < 1) throw InvalidInputError("check_proposition: trials must be >= 1");
    if (T < 1 || N < 1) throw InvalidInputError("check_proposition: T and N must be >= 1");
    noise.validate();

    const double Td = static_cast<double>(T);
    const double Nd = static_cast<double>(N);
    const double m = static_cast<double>(sys.m());
    const double q = static_cast<double>(sys.q());
    const double l = static_cast<double>(sys.l());
    const double n = static_cast<double>(sys.n());
    const double log_T_delta = std::log(Td / delta);
    const double log_9T_delta = std::log(9.0 * Td / delta);

    ConcentrationCheck c;
    c.proposition_id = prop;
    c.trials = trials;
    c.delta = delta;
    c.N = N;
    switch (prop) {
        case Proposition::P1:
            c.stated_threshold = 8.0 * m * Td + 16.0 * log_T_delta;
            break;
        case Proposition::P2:
            c.stated_threshold = 2.0 * (m + l) * log_T_delta;
            break;
        case Proposition::P3:
            c.stated_threshold = 4.0 * (m + q) * log_T_delta;
            break;
        case Proposition::P4:
            c.stated_threshold = 4.0 * (n + m) * log_T_delta;
            break;
    }
    c.threshold_inequality_satisfied = Nd >= c.stated_threshold;

    long long holds = 0;
    for (long long trial = 0; trial < trials; ++trial) {
        const RolloutDataset ds = simulate_dataset(
            sys, noise, T, N, derive_seed(seed, static_cast<std::uint64_t>(trial)));
        const DataMatrices dm = assemble_data_matrices(ds, T);
        bool ok = false;
        switch (prop) {
            case Proposition::P1: {
                const double lam = min_eigenvalue_sym(dm.U * dm.U.transpose());
                ok = lam >= 0.25 * noise.sigma_u * noise.sigma_u * Nd;
                break;
            }
            case Proposition::P2: {
                const double lhs = spectral_norm(dm.V * dm.U.transpose());
                const double rhs = 2.0 * noise.sigma_v * noise.sigma_u *
                                   std::sqrt(2.0 * Td * (Td + 1.0) * Nd * (m + l) * log_9T_delta);
                ok = lhs <= rhs;
                break;
            }
            case Proposition::P3: {
                const double lhs = spectral_norm(dm.W * dm.U.transpose());
                const double rhs =
                    4.0 * noise.sigma_w * noise.sigma_u *
                    std::sqrt(t_cubic(Td) * 2.0 * Nd * (m + q) * log_9T_delta);
                ok = lhs <= rhs;
                break;
            }
            case Proposition::P4: {
                double lhs = 0.0;
                if (dm.X0.size() > 0) lhs = spectral_norm(dm.X0 * dm.U.transpose());
                const double rhs = 4.0 * noise.sigma_0 * noise.sigma_u *
                                   std::sqrt(Td * (Td + 1.0) * Nd * (m + n) * log_9T_delta);
                ok = lhs <= rhs;
                break;
            }
        }
        if (ok) ++holds;
    }
    c.hold_fraction = static_cast<double>(holds) / static_cast<double>(trials);
    return c;
}

std::string bound_report_table(const BoundReport& r) {
    std::ostringstream out;
    auto row = [&out](const char* name, double value) {
        out << name;
        for (std::size_t i = std::string(name).size(); i < 16; ++i) out << ' ';
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%20.10g", value);
        out << buf << "\n";
    };
    row("delta", r.delta);
    row("N", static_cast<double>(r.N));
    row("N_threshold", static_cast<double>(r.N_threshold));
    row("C0", r.C0);
    row("C1", r.C1);
    row("C2", r.C2);
    row("F_norm", r.F_norm);
    row("Dv_norm", r.Dv_norm);
    row("H_norm", r.H_norm);
    row("bound_value", r.bound_value);
    out << "valid           " << (r.n_satisfied ? "                 yes" : "  no (N below threshold)")
        << "\n";
    return out.str();
}

std::string bound_report_json(const BoundReport& r) {
    json j{{"delta", r.delta},       {"N", r.N},
           {"N_threshold", r.N_threshold}, {"C0", r.C0},
           {"C1", r.C1},             {"C2", r.C2},
           {"F_norm", r.F_norm},     {"Dv_norm", r.Dv_norm},
           {"H_norm", r.H_norm},     {"bound_value", r.bound_value},
           {"n_satisfied", r.n_satisfied}};
    return j.dump(2);
}

std::string concentration_check_table(const ConcentrationCheck& c) {
    std::ostringstream out;
    out << "proposition     P" << static_cast<int>(c.proposition_id) << "\n";
    auto row = [&out](const char* name, double value) {
        out << name;
        for (std::size_t i = std::string(name).size(); i < 16; ++i) out << ' ';
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%20.10g", value);
        out << buf << "\n";
    };
    row("trials", static_cast<double>(c.trials));
    row("N", static_cast<double>(c.N));
    row("stated_N", c.stated_threshold);
    row("delta", c.delta);
    row("hold_fraction", c.hold_fraction);
    out << "threshold_met   " << (c.threshold_inequality_satisfied ? "                 yes"
                                                                   : "                  no")
        << "\n";
    return out.str();
}

std::string concentration_check_json(const ConcentrationCheck& c) {
    json j{{"proposition", static_cast<int>(c.proposition_id)},
           {"trials", c.trials},
           {"N", c.N},
           {"stated_threshold", c.stated_threshold},
           {"delta", c.delta},
           {"hold_fraction", c.hold_fraction},
           {"threshold_inequality_satisfied", c.threshold_inequality_satisfied}};
    return j.dump(2);
}

}  // namespace sysid
