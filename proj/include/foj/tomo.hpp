#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "foj/volume.hpp"

namespace foj {

// Parallel-beam geometry, rotation about the z axis. Detector rows index z,
// columns index the in-plane axis perpendicular to the ray direction. The
// volume is centered on the world origin; detector pixels are centered on
// the rotation axis. Rays are sampled at a fixed step (default half the
// smallest voxel spacing) with trilinear interpolation.
struct ProjectorGeometry {
    std::vector<double> angles;  // radians
    int det_rows = 0;
    int det_cols = 0;
    double det_row_spacing = 1.0;
    double det_col_spacing = 1.0;
    std::array<int, 3> vol_dims{0, 0, 0};        // (D, H, W)
    std::array<double, 3> vol_spacing{1, 1, 1};  // (sz, sy, sx)
    double step = 0.0;                           // 0 = half min spacing

    double ray_step() const;
    void validate() const;
};

// n_views angles from a seeded jittered uniform partition of [0, pi), with a
// detector sized to cover the volume's rotated footprint.
ProjectorGeometry make_parallel_geometry(const Volume& vol, int n_views,
                                         std::uint64_t seed);

// Sinogram laid out as a Volume with dims (angles, rows, cols).
Volume project(const ProjectorGeometry& geom, const Volume& x);

// Exact adjoint of project's discrete matrix (same interpolation weights,
// scattered instead of gathered).
Volume backproject(const ProjectorGeometry& geom, const Volume& sino);

// Transmission photon-count model: per pixel, counts ~ Poisson(n0 * exp(-p)),
// then p_noisy = -ln(max(counts, 1) / n0).
struct PhotonNoiseModel {
    double photon_count = 1000.0;  // n0
    std::uint64_t seed = 0;
};

Volume simulate_low_dose(const Volume& sino_clean, const PhotonNoiseModel& model);

// Sinogram file = volume pair plus the geometry in the JSON sidecar.
void write_sinogram(const std::string& path, const Volume& sino,
                    const ProjectorGeometry& geom);
std::pair<Volume, ProjectorGeometry> read_sinogram(const std::string& path);

}  // namespace foj
