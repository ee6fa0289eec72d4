#pragma once

#include <cstdint>
#include <string>

#include "foj/inverse.hpp"
#include "foj/solver.hpp"

namespace foj {

struct TomoRunConfig {
    int views = 20;
    double photons = 1000.0;
    int det_rows = 0;  // 0 = auto from volume
    int det_cols = 0;
    std::array<int, 3> phantom_dims{32, 32, 32};
};

struct PointCloudRunConfig {
    int grid_dim = 256;
    int topk = 100000;
    double outlier_sigma = 0.0;  // 0 = 5% of bbox diagonal
    double spread_pad = 10.0;
};

// One JSON document with sections { solver, pgd, tomo, pointcloud, io, seed }.
// Unknown keys are rejected; omitted keys take the module defaults.
struct RunConfig {
    SolverConfig solver;
    PgdConfig pgd;
    TomoRunConfig tomo;
    PointCloudRunConfig pointcloud;
    std::string out_dir;  // io.out_dir; empty = timestamped directory
    std::uint64_t seed = 0;
};

RunConfig default_run_config();
RunConfig parse_run_config_file(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);  // fully resolved

}  // namespace foj
