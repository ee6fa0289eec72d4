#include "foj/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "foj/parallel.hpp"

namespace foj {

namespace {

struct Frame {
    double dir_x, dir_y;    // ray direction (in xy-plane)
    double ux, uy;          // detector column axis
};

Frame frame_for(double angle) {
    return {std::cos(angle), std::sin(angle), -std::sin(angle), std::cos(angle)};
}

struct Extents {
    double half_x, half_y, half_z;  // world half-extents of the volume
    double t_half;                  // ray parameter half-range
};

Extents extents_for(const ProjectorGeometry& g) {
    Extents e;
    e.half_x = 0.5 * g.vol_dims[2] * g.vol_spacing[2];
    e.half_y = 0.5 * g.vol_dims[1] * g.vol_spacing[1];
    e.half_z = 0.5 * g.vol_dims[0] * g.vol_spacing[0];
    e.t_half = std::hypot(e.half_x, e.half_y) + g.ray_step();
    return e;
}

}  // namespace

double ProjectorGeometry::ray_step() const {
    if (step > 0.0) return step;
    return 0.5 * std::min({vol_spacing[0], vol_spacing[1], vol_spacing[2]});
}

void ProjectorGeometry::validate() const {
    if (angles.empty()) throw std::invalid_argument("need at least one view");
    if (det_rows < 1 || det_cols < 1)
        throw std::invalid_argument("detector must be at least 1x1");
    for (int d : vol_dims)
        if (d < 1) throw std::invalid_argument("volume dims must be positive");
    for (double s : vol_spacing)
        if (s <= 0.0) throw std::invalid_argument("voxel spacing must be > 0");
    if (det_row_spacing <= 0.0 || det_col_spacing <= 0.0)
        throw std::invalid_argument("detector spacing must be > 0");
    // Footprint coverage: the rotated xy diagonal and full z extent must fit.
    const double need_cols =
        std::hypot(vol_dims[2] * vol_spacing[2], vol_dims[1] * vol_spacing[1]);
    if (det_cols * det_col_spacing + 1e-9 < need_cols)
        throw std::invalid_argument("detector too narrow for rotated footprint");
    if (det_rows * det_row_spacing + 1e-9 < vol_dims[0] * vol_spacing[0])
        throw std::invalid_argument("detector too short for volume height");
}

ProjectorGeometry make_parallel_geometry(const Volume& vol, int n_views,
                                         std::uint64_t seed) {
    if (n_views < 1) throw std::invalid_argument("need at least one view");
    ProjectorGeometry g;
    g.vol_dims = {vol.D, vol.H, vol.W};
    g.vol_spacing = vol.spacing;
    const double sp = std::min({vol.spacing[0], vol.spacing[1], vol.spacing[2]});
    g.det_row_spacing = vol.spacing[0];
    g.det_col_spacing = sp;
    g.det_rows = vol.D;
    const double need =
        std::hypot(vol.W * vol.spacing[2], vol.H * vol.spacing[1]);
    g.det_cols = static_cast<int>(std::ceil(need / sp)) + 2;

    // Jittered uniform partition of [0, pi).
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    g.angles.resize(n_views);
    for (int i = 0; i < n_views; ++i)
        g.angles[i] = (i + jitter(rng)) * M_PI / n_views;
    return g;
}

Volume project(const ProjectorGeometry& geom, const Volume& x) {
    geom.validate();
    if (x.D != geom.vol_dims[0] || x.H != geom.vol_dims[1] ||
        x.W != geom.vol_dims[2])
        throw std::invalid_argument("project: volume dims mismatch geometry");

    const Extents ext = extents_for(geom);
    const double dt = geom.ray_step();
    const int n_samples = static_cast<int>(std::ceil(2.0 * ext.t_half / dt));
    const int rows = geom.det_rows, cols = geom.det_cols;
    const int n_angles = static_cast<int>(geom.angles.size());

    Volume sino(n_angles, rows, cols);
    sino.spacing = {1.0, geom.det_row_spacing, geom.det_col_spacing};

    const double isx = 1.0 / geom.vol_spacing[2];
    const double isy = 1.0 / geom.vol_spacing[1];
    const double isz = 1.0 / geom.vol_spacing[0];
    const int W = x.W, H = x.H, D = x.D;
    const double* vol = x.data.data();

    parallel_for(static_cast<std::size_t>(n_angles) * rows, [&](std::size_t job) {
        const int a = static_cast<int>(job / rows);
        const int r = static_cast<int>(job % rows);
        const Frame f = frame_for(geom.angles[a]);
        const double pz = (r - 0.5 * (rows - 1)) * geom.det_row_spacing;
        const double gz = (pz + ext.half_z) * isz - 0.5;
        const int z0 = static_cast<int>(std::floor(gz));
        const double wz = gz - z0;
        if (z0 < -1 || z0 > D - 1) return;  // row entirely outside

        double* out = &sino.data[(static_cast<std::size_t>(a) * rows + r) * cols];
        for (int c = 0; c < cols; ++c) {
            const double uo = (c - 0.5 * (cols - 1)) * geom.det_col_spacing;
            const double bx = uo * f.ux - ext.t_half * f.dir_x;
            const double by = uo * f.uy - ext.t_half * f.dir_y;
            double acc = 0.0;
            for (int k = 0; k < n_samples; ++k) {
                const double t = (k + 0.5) * dt;
                const double gx = (bx + t * f.dir_x + ext.half_x) * isx - 0.5;
                const double gy = (by + t * f.dir_y + ext.half_y) * isy - 0.5;
                const int x0 = static_cast<int>(std::floor(gx));
                const int y0 = static_cast<int>(std::floor(gy));
                if (x0 < -1 || x0 > W - 1 || y0 < -1 || y0 > H - 1) continue;
                const double wx = gx - x0, wy = gy - y0;
                for (int dz = 0; dz < 2; ++dz) {
                    const int z = z0 + dz;
                    if (z < 0 || z >= D) continue;
                    const double fz = dz ? wz : 1.0 - wz;
                    for (int dy = 0; dy < 2; ++dy) {
                        const int yy = y0 + dy;
                        if (yy < 0 || yy >= H) continue;
                        const double fy = dy ? wy : 1.0 - wy;
                        for (int dx = 0; dx < 2; ++dx) {
                            const int xx = x0 + dx;
                            if (xx < 0 || xx >= W) continue;
                            const double fx = dx ? wx : 1.0 - wx;
                            acc += fz * fy * fx *
                                   vol[(static_cast<std::size_t>(z) * H + yy) * W + xx];
                        }
                    }
                }
            }
            out[c] = acc * dt;
        }
    });
    return sino;
}

Volume backproject(const ProjectorGeometry& geom, const Volume& sino) {
    geom.validate();
    const int rows = geom.det_rows, cols = geom.det_cols;
    const int n_angles = static_cast<int>(geom.angles.size());
    if (sino.D != n_angles || sino.H != rows || sino.W != cols)
        throw std::invalid_argument("backproject: sinogram dims mismatch");

    const Extents ext = extents_for(geom);
    const double dt = geom.ray_step();
    const int n_samples = static_cast<int>(std::ceil(2.0 * ext.t_half / dt));
    const int D = geom.vol_dims[0], H = geom.vol_dims[1], W = geom.vol_dims[2];

    Volume out(D, H, W);
    out.spacing = geom.vol_spacing;

    const double isx = 1.0 / geom.vol_spacing[2];
    const double isy = 1.0 / geom.vol_spacing[1];
    const double isz = 1.0 / geom.vol_spacing[0];

    // Scatter writes race across rows, so chunks accumulate into private
    // volumes merged in chunk order; the chunk partition is fixed by job
    // count alone and the merge order never depends on the worker count.
    const std::size_t n_jobs = static_cast<std::size_t>(n_angles) * rows;
    const std::size_t chunk = 64;
    const std::size_t n_chunks = (n_jobs + chunk - 1) / chunk;
    const std::size_t n_buf =
        std::min<std::size_t>(std::max(1, num_threads()), n_chunks);
    std::vector<std::vector<double>> bufs(n_buf);

    auto run_chunk = [&](std::size_t b, std::size_t e, std::vector<double>& acc) {
        for (std::size_t job = b; job < e; ++job) {
            const int a = static_cast<int>(job / rows);
            const int r = static_cast<int>(job % rows);
            const Frame f = frame_for(geom.angles[a]);
            const double pz = (r - 0.5 * (rows - 1)) * geom.det_row_spacing;
            const double gz = (pz + ext.half_z) * isz - 0.5;
            const int z0 = static_cast<int>(std::floor(gz));
            const double wz = gz - z0;
            if (z0 < -1 || z0 > D - 1) continue;
            const double* in =
                &sino.data[(static_cast<std::size_t>(a) * rows + r) * cols];
            for (int c = 0; c < cols; ++c) {
                const double val = in[c] * dt;
                if (val == 0.0) continue;
                const double uo = (c - 0.5 * (cols - 1)) * geom.det_col_spacing;
                const double bx = uo * f.ux - ext.t_half * f.dir_x;
                const double by = uo * f.uy - ext.t_half * f.dir_y;
                for (int k = 0; k < n_samples; ++k) {
                    const double t = (k + 0.5) * dt;
                    const double gx = (bx + t * f.dir_x + ext.half_x) * isx - 0.5;
                    const double gy = (by + t * f.dir_y + ext.half_y) * isy - 0.5;
                    const int x0 = static_cast<int>(std::floor(gx));
                    const int y0 = static_cast<int>(std::floor(gy));
                    if (x0 < -1 || x0 > W - 1 || y0 < -1 || y0 > H - 1) continue;
                    const double wx = gx - x0, wy = gy - y0;
                    for (int dz = 0; dz < 2; ++dz) {
                        const int z = z0 + dz;
                        if (z < 0 || z >= D) continue;
                        const double fz = dz ? wz : 1.0 - wz;
                        for (int dy = 0; dy < 2; ++dy) {
                            const int yy = y0 + dy;
                            if (yy < 0 || yy >= H) continue;
                            const double fy = dy ? wy : 1.0 - wy;
                            for (int dx = 0; dx < 2; ++dx) {
                                const int xx = x0 + dx;
                                if (xx < 0 || xx >= W) continue;
                                const double fx = dx ? wx : 1.0 - wx;
                                acc[(static_cast<std::size_t>(z) * H + yy) * W + xx] +=
                                    fz * fy * fx * val;
                            }
                        }
                    }
                }
            }
        }
    };

    for (std::size_t wave = 0; wave < n_chunks; wave += n_buf) {
        const std::size_t batch = std::min(n_buf, n_chunks - wave);
        parallel_for(batch, [&](std::size_t k) {
            bufs[k].assign(out.size(), 0.0);
            const std::size_t c = wave + k;
            run_chunk(c * chunk, std::min(n_jobs, (c + 1) * chunk), bufs[k]);
        });
        for (std::size_t k = 0; k < batch; ++k)
            for (std::size_t i = 0; i < out.size(); ++i)
                out.data[i] += bufs[k][i];
    }
    return out;
}

Volume simulate_low_dose(const Volume& sino_clean, const PhotonNoiseModel& model) {
    if (model.photon_count <= 0.0)
        throw std::invalid_argument("photon count must be > 0");
    for (double p : sino_clean.data)
        if (p < 0.0)
            throw std::invalid_argument("simulate_low_dose: negative projection value");

    std::mt19937_64 rng(model.seed);
    Volume out = sino_clean;
    const double n0 = model.photon_count;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double lambda = n0 * std::exp(-sino_clean.data[i]);
        std::poisson_distribution<long long> poisson(lambda);
        const double counts = std::max<long long>(poisson(rng), 1);
        out.data[i] = -std::log(counts / n0);
    }
    return out;
}

void write_sinogram(const std::string& path, const Volume& sino,
                    const ProjectorGeometry& geom) {
    write_volume(path, sino);
    // Extend the sidecar with the acquisition geometry.
    nlohmann::json j;
    {
        std::ifstream jf(path + ".json");
        jf >> j;
    }
    j["geometry"] = {
        {"angles", geom.angles},
        {"det_rows", geom.det_rows},
        {"det_cols", geom.det_cols},
        {"det_row_spacing", geom.det_row_spacing},
        {"det_col_spacing", geom.det_col_spacing},
        {"vol_dims", geom.vol_dims},
        {"vol_spacing", geom.vol_spacing},
        {"step", geom.step},
    };
    std::ofstream jf(path + ".json");
    if (!jf) throw std::runtime_error("cannot open for write: " + path + ".json");
    jf << j.dump(2) << "\n";
}

std::pair<Volume, ProjectorGeometry> read_sinogram(const std::string& path) {
    Volume sino = read_volume(path);
    std::ifstream jf(path + ".json");
    nlohmann::json j;
    jf >> j;
    if (!j.contains("geometry"))
        throw std::runtime_error("sinogram sidecar missing geometry: " + path);
    const auto& g = j["geometry"];
    ProjectorGeometry geom;
    geom.angles = g.at("angles").get<std::vector<double>>();
    geom.det_rows = g.at("det_rows").get<int>();
    geom.det_cols = g.at("det_cols").get<int>();
    geom.det_row_spacing = g.at("det_row_spacing").get<double>();
    geom.det_col_spacing = g.at("det_col_spacing").get<double>();
    for (int a = 0; a < 3; ++a) {
        geom.vol_dims[a] = g.at("vol_dims")[a].get<int>();
        geom.vol_spacing[a] = g.at("vol_spacing")[a].get<double>();
    }
    geom.step = g.value("step", 0.0);
    geom.validate();
    return {std::move(sino), std::move(geom)};
}

}  // namespace foj
