#include "foj/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace foj {

double Volume::min_value() const {
    return data.empty() ? 0.0 : *std::min_element(data.begin(), data.end());
}

double Volume::max_value() const {
    return data.empty() ? 0.0 : *std::max_element(data.begin(), data.end());
}

bool Volume::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

std::vector<int> axis_origin_list(int dim, int patch, int stride) {
    std::vector<int> out;
    for (int o = 0; o + patch <= dim; o += stride) out.push_back(o);
    const int last = std::max(dim - patch, 0);
    if (out.empty() || out.back() != last) out.push_back(last);
    return out;
}

}  // namespace

PatchGrid build_patch_grid(std::array<int, 3> dims, int patch_size, int stride) {
    if (stride <= 0) throw std::invalid_argument("stride must be >= 1");
    for (int d : dims)
        if (patch_size > d)
            throw std::invalid_argument("patch larger than volume");
    if (patch_size <= 0) throw std::invalid_argument("patch_size must be >= 1");
    if (stride > patch_size)
        throw std::invalid_argument("stride must not exceed patch size");

    PatchGrid g;
    g.patch_size = patch_size;
    g.stride = stride;
    g.dims = dims;
    for (int a = 0; a < 3; ++a)
        g.axis_origins[a] = axis_origin_list(dims[a], patch_size, stride);

    g.origins.reserve(g.axis_origins[0].size() * g.axis_origins[1].size() *
                      g.axis_origins[2].size());
    for (int oz : g.axis_origins[0])
        for (int oy : g.axis_origins[1])
            for (int ox : g.axis_origins[2])
                g.origins.push_back({oz, oy, ox});

    g.overlap_count.assign(
        static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
    auto axis_counts = [&](int axis) {
        std::vector<int32_t> c(dims[axis], 0);
        for (int o : g.axis_origins[axis])
            for (int p = o; p < o + patch_size; ++p) ++c[p];
        return c;
    };
    const auto cz = axis_counts(0), cy = axis_counts(1), cx = axis_counts(2);
    std::size_t idx = 0;
    for (int z = 0; z < dims[0]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[2]; ++x, ++idx)
                g.overlap_count[idx] = cz[z] * cy[y] * cx[x];
    return g;
}

void extract_patch_into(const Volume& vol, const PatchGrid& grid, std::size_t i,
                        double* out) {
    if (i >= grid.num_patches())
        throw std::out_of_range("patch index out of range");
    const auto [oz, oy, ox] = grid.origins[i];
    const int R = grid.patch_size;
    for (int z = 0; z < R; ++z)
        for (int y = 0; y < R; ++y) {
            const double* src = &vol.data[(static_cast<std::size_t>(z + oz) * vol.H
                                           + (y + oy)) * vol.W + ox];
            std::memcpy(out + (static_cast<std::size_t>(z) * R + y) * R, src,
                        sizeof(double) * R);
        }
}

Volume extract_patch(const Volume& vol, const PatchGrid& grid, std::size_t i) {
    const int R = grid.patch_size;
    Volume p(R, R, R);
    p.spacing = vol.spacing;
    extract_patch_into(vol, grid, i, p.data.data());
    return p;
}

void scatter_add_patch(Volume& accum, const PatchGrid& grid, std::size_t i,
                       const double* values) {
    const auto [oz, oy, ox] = grid.origins[i];
    const int R = grid.patch_size;
    for (int z = 0; z < R; ++z)
        for (int y = 0; y < R; ++y) {
            double* dst = &accum.data[(static_cast<std::size_t>(z + oz) * accum.H
                                       + (y + oy)) * accum.W + ox];
            const double* src = values + (static_cast<std::size_t>(z) * R + y) * R;
            for (int x = 0; x < R; ++x) dst[x] += src[x];
        }
}

void divide_by_overlap(Volume& v, const PatchGrid& grid) {
    for (std::size_t i = 0; i < v.data.size(); ++i)
        v.data[i] /= grid.overlap_count[i];
}

Volume aggregate_patches(const std::vector<std::vector<double>>& patch_values,
                         const PatchGrid& grid) {
    if (patch_values.size() != grid.num_patches())
        throw std::invalid_argument("aggregate_patches: patch count mismatch");
    const std::size_t R3 = static_cast<std::size_t>(grid.patch_size) *
                           grid.patch_size * grid.patch_size;
    Volume out(grid.dims[0], grid.dims[1], grid.dims[2]);
    for (std::size_t i = 0; i < patch_values.size(); ++i) {
        if (patch_values[i].size() != R3)
            throw std::invalid_argument("aggregate_patches: patch size mismatch");
        scatter_add_patch(out, grid, i, patch_values[i].data());
    }
    divide_by_overlap(out, grid);
    return out;
}

// --- file I/O ---------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "volume files assume a little-endian host");

void write_volume(const std::string& path, const Volume& v) {
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for write: " + path);
        std::vector<float> buf(v.data.size());
        for (std::size_t i = 0; i < v.data.size(); ++i)
            buf[i] = static_cast<float>(v.data[i]);
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!f) throw std::runtime_error("write failed: " + path);
    }
    nlohmann::json j;
    j["dims"] = {v.D, v.H, v.W};
    j["spacing"] = {v.spacing[0], v.spacing[1], v.spacing[2]};
    j["channels"] = v.channels;
    std::ofstream jf(path + ".json");
    if (!jf) throw std::runtime_error("cannot open for write: " + path + ".json");
    jf << j.dump(2) << "\n";
}

Volume read_volume(const std::string& path) {
    std::ifstream jf(path + ".json");
    if (!jf) throw std::runtime_error("missing sidecar: " + path + ".json");
    nlohmann::json j;
    jf >> j;
    Volume v;
    const auto dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3)
        throw std::runtime_error("bad dims in sidecar: " + path + ".json");
    v.D = dims[0].get<int>();
    v.H = dims[1].get<int>();
    v.W = dims[2].get<int>();
    if (v.D <= 0 || v.H <= 0 || v.W <= 0)
        throw std::runtime_error("non-positive dims in sidecar: " + path);
    if (j.contains("spacing")) {
        const auto sp = j["spacing"];
        for (int a = 0; a < 3; ++a) v.spacing[a] = sp[a].get<double>();
    }
    v.channels = j.value("channels", 1);

    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    const std::size_t n =
        static_cast<std::size_t>(v.D) * v.H * v.W * v.channels;
    std::vector<float> buf(n);
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(f.gcount()) != n * sizeof(float))
        throw std::runtime_error("truncated volume file: " + path);
    v.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) v.data[i] = buf[i];
    if (!v.all_finite())
        throw std::runtime_error("non-finite values in volume: " + path);
    return v;
}

}  // namespace foj
