#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "foj/volume.hpp"

namespace foj {

struct PointCloud {
    std::vector<std::array<double, 3>> points;  // (x, y, z) world units
    std::array<double, 3> bb_min{0, 0, 0};
    std::array<double, 3> bb_max{0, 0, 0};

    std::size_t size() const { return points.size(); }
    void update_bounds();
    double bbox_diagonal() const;
};

PointCloud read_xyz(const std::string& path);
void write_xyz(const std::string& path, const PointCloud& pc);

// Maps voxel indices (z, y, x) to world positions of voxel centers.
struct VoxelTransform {
    std::array<double, 3> origin{0, 0, 0};  // world position of voxel (0,0,0) corner
    std::array<double, 3> voxel{1, 1, 1};   // per-axis voxel edge (x, y, z)

    std::array<double, 3> center(int z, int y, int x) const {
        return {origin[0] + (x + 0.5) * voxel[0],
                origin[1] + (y + 0.5) * voxel[1],
                origin[2] + (z + 0.5) * voxel[2]};
    }
};

// Point counts binned onto a cubic grid over the cloud's bounds expanded by a
// one-voxel margin, then normalized by the maximum count into [0, 1].
struct VoxelizeResult {
    Volume volume;
    VoxelTransform transform;
};
VoxelizeResult voxelize(const PointCloud& pc, int grid_dim = 256);

// The k largest-valued voxels (ties broken by lexicographic (z,y,x) index)
// emitted as world-space voxel centers. Only nonzero voxels are emitted; any
// shortfall against k is reported.
PointCloud devoxelize_topk(const Volume& vol, int k, const VoxelTransform& t,
                           int* shortfall = nullptr);

// Appends ceil(ratio*N/(1-ratio)) points, each a uniformly chosen clean point
// displaced by an isotropic Gaussian. sigma_surface <= 0 selects the default
// of 5% of the bounding-box diagonal.
PointCloud add_outlier_noise(const PointCloud& pc, double ratio,
                             double sigma_surface, std::uint64_t seed);

// Appends `count` points uniform in the bounding box padded by `pad` per axis.
PointCloud add_spread_noise(const PointCloud& pc, std::size_t count, double pad,
                            std::uint64_t seed);

// (1/|a|) sum_a min_b ||p-q||^2 + (1/|b|) sum_b min_a ||p-q||^2
double chamfer_l2(const PointCloud& a, const PointCloud& b);

}  // namespace foj
