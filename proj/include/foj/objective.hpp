#pragma once

#include <array>
#include <vector>

#include "foj/junction.hpp"
#include "foj/volume.hpp"

namespace foj {

// Full model state for a field of junctions over a patch grid: per-patch
// geometry and region intensities plus the aggregated global fields and the
// consistency weights.
struct FieldState {
    std::vector<JunctionParams> params;                        // Gamma
    std::vector<std::array<double, kMaxRegions>> intensities;  // C
    std::vector<std::array<bool, kMaxRegions>> region_live;    // sum u > eps at last update
    Volume global_color;     // V-hat
    Volume global_boundary;  // B-hat
    double lambda_b = 0.0;
    double lambda_c = 0.0;

    std::size_t num_patches() const { return params.size(); }
};

FieldState make_field_state(const PatchGrid& grid, int num_regions);

struct LossBreakdown {
    double total = 0.0;
    double data = 0.0;
    double boundary = 0.0;
    double color = 0.0;
};

// rendered(v) = sum_j u_j(v) * c_j over the R^3 patch lattice; voxels outside
// every region default to zero.
void patch_render(const JunctionParams& params,
                  const std::array<double, kMaxRegions>& intensities, int R,
                  double eta, std::vector<double>& out);

// Recomputes state.global_color (overlap-average of patch renders) and
// state.global_boundary (overlap-average of boundary maps) in place.
void compute_global_fields(FieldState& state, const PatchGrid& grid,
                           double eta, double delta);

// The three-term objective, integrals realized as unit-weight voxel sums:
//   data     = sum_{i,j,v} u_j(v) (V_i(v) - c_j)^2
//   boundary = lambda_b * sum_{i,v} (B_i(v) - Bhat(v))^2
//   color    = lambda_c * sum_{i,j,v} u_j(v) (c_j - Vhat(v))^2
// loss() recomputes the global fields first; loss_with_fields evaluates
// against supplied snapshots (the detached form the refinement step sees).
LossBreakdown loss(FieldState& state, const Volume& noisy, const PatchGrid& grid,
                   double eta, double delta);
LossBreakdown loss_with_fields(const FieldState& state, const Volume& noisy,
                               const PatchGrid& grid, double eta, double delta,
                               const Volume& vhat, const Volume& bhat);

// Closed-form intensity update
//   c_j = sum_v u_j (V + lambda_c * Vhat) / ((1 + lambda_c) sum_v u_j).
// Regions with sum_v u_j < 1e-12 keep their previous intensity and are
// reported as not live. vhat_patch may be null when lambda_c == 0.
struct IntensityUpdate {
    std::array<double, kMaxRegions> c{};
    std::array<bool, kMaxRegions> live{};
};
IntensityUpdate closed_form_intensities(
    const JunctionParams& params, int R, const double* observed_patch,
    const double* vhat_patch, double lambda_c, double eta,
    const std::array<double, kMaxRegions>& previous);

// Exact intensity minimizer of the solver's objective
//   sum_v (V - sum_j c_j u_j)^2 + lambda_c sum_{j,v} u_j (c_j - Vhat)^2,
// i.e. the ridge-stabilized normal equations over the live regions. Unlike
// the per-region weighted mean this is a fixed point under re-fitting a
// state's own render (the weighted mean leaks intensity through the soft
// transition bands). Dead regions keep their previous value.
IntensityUpdate solve_intensities(
    const JunctionParams& params, int R, const double* observed_patch,
    const double* vhat_patch, double lambda_c, double eta,
    const std::array<double, kMaxRegions>& previous);

// Data-term form when differentiating geometry.
//   kWeighted       : sum_{j,v} u_j (V - c_j)^2     (the reported objective)
//   kRenderResidual : sum_v (V - sum_j u_j c_j)^2   (the fit the solver descends)
// The consistency terms are identical between the two and the global fields
// are detached snapshots in both.
enum class DataTermForm { kWeighted, kRenderResidual };

// Three-term objective against supplied field snapshots with a selectable
// data-term form. loss_with_fields is the kWeighted specialization; the
// solver traces the kRenderResidual one.
LossBreakdown objective_with_fields(const FieldState& state, const Volume& noisy,
                                    const PatchGrid& grid, double eta,
                                    double delta, const Volume& vhat,
                                    const Volume& bhat, DataTermForm form);

using GeomGradient = std::array<double, kGeomParams>;

// Gradient of patch i's terms w.r.t. its own 9 geometry parameters, with C
// fixed and (vhat, bhat) frozen. bhat_patch may be null when lambda_b == 0,
// vhat_patch may be null when lambda_c == 0.
GeomGradient patch_gradient(const JunctionParams& params,
                            const std::array<double, kMaxRegions>& intensities,
                            int R, const double* observed_patch,
                            const double* vhat_patch, const double* bhat_patch,
                            double lambda_b, double lambda_c, double eta,
                            double delta, DataTermForm form);

// Per-patch gradients of the full objective (kWeighted data term); the
// fields are recomputed from the state, then held fixed.
std::vector<GeomGradient> loss_gradient(FieldState& state, const Volume& noisy,
                                        const PatchGrid& grid, double eta,
                                        double delta);

// Reconstruction residual sum_v (V - render)^2; the score the initialization
// search minimizes.
double patch_fit_residual(const JunctionParams& params,
                          const std::array<double, kMaxRegions>& intensities,
                          int R, const double* observed_patch, double eta);

}  // namespace foj
