#pragma once

#include <cstdint>
#include <string>

#include "sysid/lti.hpp"

namespace sysid {

/// Closed-form high-probability error bound evaluation. All logarithms
/// are natural. bound_value = (sigma_0 C0 + sigma_v C1 + sigma_w C2) /
/// (sigma_u sqrt(N)); the report is valid only when N >= N_threshold.
struct BoundReport {
    double delta = 0.0;
    long long N = 0;
    long long N_threshold = 0;
    double C0 = 0.0;  ///< 0 unless the corollary with sigma_0 > 0 applies
    double C1 = 0.0;
    double C2 = 0.0;
    double bound_value = 0.0;
    double F_norm = 0.0;
    double Dv_norm = 0.0;
    double H_norm = 0.0;
    bool n_satisfied = false;  ///< N >= N_threshold
};

enum class Proposition { P1 = 1, P2 = 2, P3 = 3, P4 = 4 };

/// Monte Carlo check of one concentration proposition.
struct ConcentrationCheck {
    Proposition proposition_id = Proposition::P1;
    long long trials = 0;
    double hold_fraction = 0.0;
    double delta = 0.0;
    bool threshold_inequality_satisfied = false;
    long long N = 0;
    double stated_threshold = 0.0;  ///< the proposition's N requirement
};

/// Main error bound:
///   C1 = 8 ||D_v|| sqrt(2 T (T+1) (m+l) log(27 T / delta))
///   C2 = 16 ||F|| sqrt((T^3/3 + T^2/2 + T/6) 2 (m+q) log(27 T / delta))
///   N_threshold = ceil(8 m T + 4 (m+q+l+4) log(3 T / delta)).
BoundReport theorem1_bound(const SystemModel& sys, const NoiseConfig& noise, Index T,
                           long long N, double delta);

/// Non-zero initial state variant: adds
///   C0 = 16 ||H|| sqrt(T (T+1) (m+n) log(36 T / delta))
/// with C1/C2 using log(36 T / delta) and
///   N_threshold = ceil(8 m T + 4 (m+n+q+l+4) log(4 T / delta)).
BoundReport corollary2_bound(const SystemModel& sys, const NoiseConfig& noise, Index T,
                             long long N, double delta);

/// Runs `trials` fresh datasets and reports the fraction in which the
/// proposition's inequality holds:
///   P1: lambda_min(U U^T) >= sigma_u^2 N / 4
///   P2: ||v U^T||  <= 2 sigma_v sigma_u sqrt(2 T (T+1) N (m+l) log(9T/delta))
///   P3: ||W U^T||  <= 4 sigma_w sigma_u sqrt((T^3/3+T^2/2+T/6) 2 N (m+q) log(9T/delta))
///   P4: ||X0 U^T|| <= 4 sigma_0 sigma_u sqrt(T (T+1) N (m+n) log(9T/delta)).
/// If N is below the proposition's stated threshold the check still runs,
/// with threshold_inequality_satisfied = false.
ConcentrationCheck check_proposition(Proposition prop, const SystemModel& sys,
                                     const NoiseConfig& noise, Index T, Index N, double delta,
                                     long long trials, std::uint64_t seed);

std::string bound_report_table(const BoundReport& r);
std::string bound_report_json(const BoundReport& r);
std::string concentration_check_table(const ConcentrationCheck& c);
std::string concentration_check_json(const ConcentrationCheck& c);

}  // namespace sysid
