#pragma once

#include <filesystem>

#include "sysid/lti.hpp"

namespace sysid {

/// A dataset directory holds metadata.json (system matrices, noise
/// configuration, N, T2, seed, format version "1", and the per-rollout
/// initial states whenever any is non-zero) plus one CSV per rollout
/// named rollout_00000.csv, rollout_00001.csv, ...
///
/// Rollout CSV columns: t, u_1..u_m, y_1..y_p, w_1..w_q, v_1..v_l, with a
/// mandatory header row. Floats are printed with 17 significant digits so
/// a save/load round trip is lossless.
struct DatasetFile {
    SystemModel system;
    RolloutDataset data;
};

void save_dataset(const SystemModel& sys, const RolloutDataset& ds,
                  const std::filesystem::path& dir);

DatasetFile load_dataset(const std::filesystem::path& dir);

/// Formats a double with 17 significant digits ("%.17g").
std::string format_full_precision(double x);

}  // namespace sysid
