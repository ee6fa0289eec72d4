#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foj/objective.hpp"
#include "foj/volume.hpp"

namespace foj {

struct SolverConfig {
    int patch_size = 10;   // R
    int stride = 2;        // s
    int num_regions = 3;   // M
    int batch_size = 6;    // patch-batches in flight (memory knob only)
    int n_init = 1;
    int n_refine = 30;     // standalone default; the proximal loop uses 1
    int angular_polar = 16;
    int angular_azimuth = 32;
    double vertex_scan_halfwidth = 1.0;  // voxels
    double vertex_scan_step = 0.5;       // voxels
    double step_size = 0.03;
    double lambda_b_target = 0.1;
    double lambda_c_target = 0.1;
    double ramp = 0.5;  // fraction of refine iterations over which lambdas rise
    double eta = 0.01;
    double delta = 0.1;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument on bad values
};

struct LossTraceRow {
    int iter = 0;
    double total = 0, data = 0, boundary = 0, color = 0;
};

// Field state plus the per-patch optimizer moments.
struct SolverState {
    FieldState field;
    std::vector<std::array<double, kGeomParams>> adam_m, adam_v;
    std::vector<int> adam_t;

    void reset_moments();
};

SolverState make_solver_state(const PatchGrid& grid, const SolverConfig& cfg);

// Coordinate-descent initialization for one patch: scans each plane over the
// angular grid (plus the incumbent orientation), then the vertex over a small
// lattice around its current position, n_init times. Candidates are scored by
// the reconstruction residual with intensities from the closed-form update at
// lambda_c = 0; ties keep the earliest candidate. `params`/`intensities` carry
// the starting point in and the result out.
void init_patch(const double* patch, const SolverConfig& cfg,
                JunctionParams& params,
                std::array<double, kMaxRegions>& intensities,
                std::array<bool, kMaxRegions>& live);

// Runs init_patch over every patch of the grid (parallel). When fresh is set,
// vertices restart at the patch center and angles at the first grid entry;
// otherwise the sweep starts from the state's current parameters.
void init_all(SolverState& state, const Volume& noisy, const PatchGrid& grid,
              const SolverConfig& cfg, bool fresh);

// n_iters iterations of: lambda ramp -> recompute global fields -> one Adam
// step per patch on the geometry -> closed-form intensity update. Appends one
// trace row per iteration (objective at iteration start, current lambdas).
void refine(SolverState& state, const Volume& noisy, const PatchGrid& grid,
            const SolverConfig& cfg, int n_iters,
            std::vector<LossTraceRow>* trace);

struct DenoiseResult {
    Volume denoised;
    FieldState state;
    std::vector<LossTraceRow> trace;
};

DenoiseResult denoise_volume(const Volume& noisy, const SolverConfig& cfg);

void write_loss_trace_csv(const std::string& path,
                          const std::vector<LossTraceRow>& trace);

// The (theta, phi) candidates of the init search, in tie-break order.
std::vector<std::array<double, 2>> angular_grid(int n_polar, int n_azimuth);

}  // namespace foj
