#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace foj {

// Dense scalar volume, z-major layout: data[(z*H + y)*W + x].
// Stored in double internally; on-disk format is little-endian float32
// plus a JSON sidecar (see volume_io below).
struct Volume {
    int D = 0, H = 0, W = 0;
    int channels = 1;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // (sz, sy, sx)
    std::vector<double> data;

    Volume() = default;
    Volume(int d, int h, int w, double fill = 0.0)
        : D(d), H(h), W(w), data(static_cast<std::size_t>(d) * h * w, fill) {}

    std::size_t size() const { return data.size(); }

    double& at(int z, int y, int x) {
        return data[(static_cast<std::size_t>(z) * H + y) * W + x];
    }
    double at(int z, int y, int x) const {
        return data[(static_cast<std::size_t>(z) * H + y) * W + x];
    }

    bool same_dims(const Volume& o) const {
        return D == o.D && H == o.H && W == o.W;
    }

    double min_value() const;
    double max_value() const;
    bool all_finite() const;
};

// Overlapping patch decomposition of a (D,H,W) domain: cubic patches of edge
// patch_size placed at stride s per axis, with the final origin clamped so the
// last patch is flush with the boundary. Every voxel is covered at least once.
struct PatchGrid {
    int patch_size = 0;
    int stride = 0;
    std::array<int, 3> dims{0, 0, 0};               // (D, H, W)
    std::array<std::vector<int>, 3> axis_origins;   // per axis (z, y, x)
    std::vector<std::array<int, 3>> origins;        // (z, y, x), z-major order
    std::vector<int32_t> overlap_count;             // |N_v| per voxel

    std::size_t num_patches() const { return origins.size(); }
};

PatchGrid build_patch_grid(std::array<int, 3> dims, int patch_size, int stride);

// Copies the R^3 voxels at grid.origins[i] out of vol.
Volume extract_patch(const Volume& vol, const PatchGrid& grid, std::size_t i);

void extract_patch_into(const Volume& vol, const PatchGrid& grid, std::size_t i,
                        double* out);

// output(v) = (1/|N_v|) * sum over covering patches of patch_values[i](v).
// patch_values[i] must hold R^3 values in the same z-major layout.
Volume aggregate_patches(const std::vector<std::vector<double>>& patch_values,
                         const PatchGrid& grid);

// Scatter-add helpers used by the solver to avoid materializing all patches.
void scatter_add_patch(Volume& accum, const PatchGrid& grid, std::size_t i,
                       const double* values);
void divide_by_overlap(Volume& v, const PatchGrid& grid);

// --- file I/O -------------------------------------------------------------
// <path> holds little-endian float32 in (z,y,x) order; <path>.json holds
// { "dims": [D,H,W], "spacing": [sz,sy,sx], "channels": 1 }.
void write_volume(const std::string& path, const Volume& v);
Volume read_volume(const std::string& path);

}  // namespace foj
