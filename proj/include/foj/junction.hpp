#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace foj {

inline constexpr int kNumPlanes = 3;
inline constexpr int kMaxRegions = 8;
inline constexpr int kGeomParams = 9;  // 3 vertex coords + 3 * (theta, phi)

// One patch's junction geometry. All coordinates live in the normalized
// patch frame: the patch occupies [-1,1]^3 with voxel centers at
// (2*i + 1 - R) / R, so the patch center is the origin. The vertex may lie
// anywhere in R^3, including far outside the patch. Angles are unconstrained
// radians (periodicity is handled by the trig functions, never by clamping).
struct JunctionParams {
    std::array<double, 3> vertex{0.0, 0.0, 0.0};            // (x, y, z)
    std::array<std::array<double, 2>, kNumPlanes> angles{};  // (theta, phi)
    int num_regions = 3;                                     // M in [2, 8]

    // Flat view in the optimizer's parameter order:
    // [vx, vy, vz, th1, ph1, th2, ph2, th3, ph3]
    std::array<double, kGeomParams> flatten() const;
    static JunctionParams unflatten(const std::array<double, kGeomParams>& p,
                                    int num_regions);
};

// Region j takes factor H(d_l) where sign_patterns[j][l] is true and
// 1 - H(d_l) otherwise. The first three rows reproduce the M=3 assignment
// (+,-,-), (-,+,-), (-,-,+); the remaining rows extend deterministically to
// all eight arrangements.
extern const std::array<std::array<bool, kNumPlanes>, kMaxRegions> kSignPatterns;

// n = (sin t cos p, sin t sin p, cos t)
std::array<double, 3> plane_normal(double theta, double phi);

// Derivatives of the normal w.r.t. theta and phi.
void plane_normal_derivs(double theta, double phi, std::array<double, 3>& d_theta,
                         std::array<double, 3>& d_phi);

double signed_distance(const JunctionParams& params, int plane,
                       const std::array<double, 3>& point);

double heaviside(double d, double eta);
double heaviside_prime(double d, double eta);

// The shared voxel-center lattice for an R^3 patch, structure-of-arrays.
struct PatchCoords {
    int R = 0;
    std::vector<double> x, y, z;  // length R^3, z-major voxel order

    static const PatchCoords& get(int R);  // cached per patch size
};

// Soft region memberships and the boundary field for one patch.
struct RegionField {
    int M = 0;
    std::size_t n = 0;
    std::array<std::vector<double>, kMaxRegions> u;
    std::vector<double> b;
};

// u_j(v) for j < M over the patch lattice. Throws if M is outside [2, 8].
void region_indicators(const JunctionParams& params, const PatchCoords& coords,
                       double eta, RegionField& out);

// b(v) = delta^2 / (min_l d_l(v)^2 + delta^2). Throws if delta <= 0.
void boundary_map(const JunctionParams& params, const PatchCoords& coords,
                  double delta, std::vector<double>& out);

// Analytic partials of every u_j(v) w.r.t. the 9 geometry parameters.
// grad[j][p] has length n; parameter order matches JunctionParams::flatten.
struct IndicatorGradients {
    int M = 0;
    std::size_t n = 0;
    std::array<std::array<std::vector<double>, kGeomParams>, kMaxRegions> grad;
};

void indicator_gradients(const JunctionParams& params, const PatchCoords& coords,
                         double eta, IndicatorGradients& out);

// Workspace shared by the per-patch evaluations (distances, heavisides and
// their derivatives for the three planes).
struct JunctionScratch {
    std::array<std::vector<double>, kNumPlanes> d, h, hp;
    std::vector<double> mind;
    void resize(std::size_t n);
};

// Fills scratch.d and scratch.h (and scratch.hp when with_prime is set).
void eval_planes(const JunctionParams& params, const PatchCoords& coords,
                 double eta, JunctionScratch& scratch, bool with_prime);

}  // namespace foj
