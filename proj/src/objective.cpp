#include "foj/objective.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "foj/kernels.hpp"
#include "foj/parallel.hpp"

namespace foj {

namespace {

constexpr double kEmptyRegionMass = 1e-12;

// Patches per two-phase aggregation batch; bounds scratch memory while the
// scatter stays in patch-index order, so results never depend on thread count.
constexpr std::size_t kFieldBatch = 1024;

std::size_t patch_voxels(const PatchGrid& grid) {
    return static_cast<std::size_t>(grid.patch_size) * grid.patch_size *
           grid.patch_size;
}

void check_dims(const Volume& v, const PatchGrid& grid, const char* what) {
    if (v.D != grid.dims[0] || v.H != grid.dims[1] || v.W != grid.dims[2])
        throw std::invalid_argument(std::string(what) + ": dims mismatch");
}

void check_state(const FieldState& state, const PatchGrid& grid) {
    if (state.params.size() != grid.num_patches() ||
        state.intensities.size() != grid.num_patches())
        throw std::invalid_argument("state/grid patch count mismatch");
}

void render_into(const JunctionParams& params,
                 const std::array<double, kMaxRegions>& intensities,
                 const PatchCoords& coords, double eta, double* out) {
    thread_local RegionField rf;
    region_indicators(params, coords, eta, rf);
    const std::size_t n = rf.n;
    std::memset(out, 0, n * sizeof(double));
    for (int j = 0; j < rf.M; ++j) {
        const double c = intensities[j];
        const double* u = rf.u[j].data();
        for (std::size_t i = 0; i < n; ++i) out[i] += c * u[i];
    }
}

}  // namespace

FieldState make_field_state(const PatchGrid& grid, int num_regions) {
    FieldState s;
    JunctionParams def;
    def.num_regions = num_regions;
    s.params.assign(grid.num_patches(), def);
    s.intensities.assign(grid.num_patches(), {});
    s.region_live.assign(grid.num_patches(), {});
    s.global_color = Volume(grid.dims[0], grid.dims[1], grid.dims[2]);
    s.global_boundary = Volume(grid.dims[0], grid.dims[1], grid.dims[2]);
    return s;
}

void patch_render(const JunctionParams& params,
                  const std::array<double, kMaxRegions>& intensities, int R,
                  double eta, std::vector<double>& out) {
    const auto& coords = PatchCoords::get(R);
    out.resize(coords.x.size());
    render_into(params, intensities, coords, eta, out.data());
}

void compute_global_fields(FieldState& state, const PatchGrid& grid,
                           double eta, double delta) {
    check_state(state, grid);
    const std::size_t N = grid.num_patches();
    const std::size_t R3 = patch_voxels(grid);
    const auto& coords = PatchCoords::get(grid.patch_size);

    Volume color(grid.dims[0], grid.dims[1], grid.dims[2]);
    Volume bound(grid.dims[0], grid.dims[1], grid.dims[2]);

    std::vector<double> render_buf(std::min(kFieldBatch, N) * R3);
    std::vector<double> bmap_buf(render_buf.size());
    for (std::size_t base = 0; base < N; base += kFieldBatch) {
        const std::size_t count = std::min(kFieldBatch, N - base);
        parallel_for(count, [&](std::size_t k) {
            const std::size_t i = base + k;
            render_into(state.params[i], state.intensities[i], coords, eta,
                        render_buf.data() + k * R3);
            thread_local std::vector<double> b;
            boundary_map(state.params[i], coords, delta, b);
            std::memcpy(bmap_buf.data() + k * R3, b.data(), R3 * sizeof(double));
        });
        for (std::size_t k = 0; k < count; ++k) {
            scatter_add_patch(color, grid, base + k, render_buf.data() + k * R3);
            scatter_add_patch(bound, grid, base + k, bmap_buf.data() + k * R3);
        }
    }
    divide_by_overlap(color, grid);
    divide_by_overlap(bound, grid);
    color.spacing = state.global_color.spacing;
    bound.spacing = state.global_boundary.spacing;
    state.global_color = std::move(color);
    state.global_boundary = std::move(bound);
}

LossBreakdown objective_with_fields(const FieldState& state, const Volume& noisy,
                                    const PatchGrid& grid, double eta,
                                    double delta, const Volume& vhat,
                                    const Volume& bhat, DataTermForm form) {
    check_state(state, grid);
    check_dims(noisy, grid, "loss");
    check_dims(vhat, grid, "loss vhat");
    check_dims(bhat, grid, "loss bhat");

    const std::size_t N = grid.num_patches();
    const std::size_t R3 = patch_voxels(grid);
    const auto& coords = PatchCoords::get(grid.patch_size);

    const std::size_t chunk = 64;
    const std::size_t n_chunks = (N + chunk - 1) / chunk;
    std::vector<LossBreakdown> partial(n_chunks);

    parallel_chunks(N, chunk, [&](std::size_t b, std::size_t e) {
        thread_local std::vector<double> obs, vh, bh, bmap, render;
        thread_local RegionField rf;
        obs.resize(R3);
        vh.resize(R3);
        bh.resize(R3);
        render.resize(R3);
        LossBreakdown acc;
        for (std::size_t i = b; i < e; ++i) {
            extract_patch_into(noisy, grid, i, obs.data());
            extract_patch_into(vhat, grid, i, vh.data());
            extract_patch_into(bhat, grid, i, bh.data());
            region_indicators(state.params[i], coords, eta, rf);
            const auto& c = state.intensities[i];
            if (form == DataTermForm::kRenderResidual)
                std::memset(render.data(), 0, R3 * sizeof(double));
            for (int j = 0; j < rf.M; ++j) {
                const double* u = rf.u[j].data();
                double dsum = 0.0, csum = 0.0;
                for (std::size_t v = 0; v < R3; ++v) {
                    if (form == DataTermForm::kWeighted) {
                        const double rd = obs[v] - c[j];
                        dsum += u[v] * rd * rd;
                    } else {
                        render[v] += u[v] * c[j];
                    }
                    const double rc = c[j] - vh[v];
                    csum += u[v] * rc * rc;
                }
                acc.data += dsum;
                acc.color += csum;
            }
            if (form == DataTermForm::kRenderResidual)
                acc.data +=
                    kernels::active().sum_sq_diff(obs.data(), render.data(), R3);
            boundary_map(state.params[i], coords, delta, bmap);
            acc.boundary +=
                kernels::active().sum_sq_diff(bmap.data(), bh.data(), R3);
        }
        partial[b / chunk] = acc;
    });

    LossBreakdown out;
    for (const auto& p : partial) {
        out.data += p.data;
        out.boundary += p.boundary;
        out.color += p.color;
    }
    out.boundary *= state.lambda_b;
    out.color *= state.lambda_c;
    out.total = out.data + out.boundary + out.color;
    return out;
}

LossBreakdown loss_with_fields(const FieldState& state, const Volume& noisy,
                               const PatchGrid& grid, double eta, double delta,
                               const Volume& vhat, const Volume& bhat) {
    return objective_with_fields(state, noisy, grid, eta, delta, vhat, bhat,
                                 DataTermForm::kWeighted);
}

LossBreakdown loss(FieldState& state, const Volume& noisy, const PatchGrid& grid,
                   double eta, double delta) {
    compute_global_fields(state, grid, eta, delta);
    return loss_with_fields(state, noisy, grid, eta, delta, state.global_color,
                            state.global_boundary);
}

IntensityUpdate closed_form_intensities(
    const JunctionParams& params, int R, const double* observed_patch,
    const double* vhat_patch, double lambda_c, double eta,
    const std::array<double, kMaxRegions>& previous) {
    if (lambda_c > 0.0 && vhat_patch == nullptr)
        throw std::invalid_argument("closed_form_intensities: vhat required");
    const auto& coords = PatchCoords::get(R);
    thread_local RegionField rf;
    region_indicators(params, coords, eta, rf);
    const std::size_t n = rf.n;

    IntensityUpdate out;
    out.c = previous;
    for (int j = 0; j < rf.M; ++j) {
        const double* u = rf.u[j].data();
        double mass = 0.0, num = 0.0;
        if (vhat_patch != nullptr && lambda_c > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                mass += u[i];
                num += u[i] * (observed_patch[i] + lambda_c * vhat_patch[i]);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                mass += u[i];
                num += u[i] * observed_patch[i];
            }
        }
        if (mass < kEmptyRegionMass) {
            out.live[j] = false;  // frozen: keeps previous intensity
            continue;
        }
        out.live[j] = true;
        out.c[j] = num / ((1.0 + lambda_c) * mass);
    }
    return out;
}

IntensityUpdate solve_intensities(
    const JunctionParams& params, int R, const double* observed_patch,
    const double* vhat_patch, double lambda_c, double eta,
    const std::array<double, kMaxRegions>& previous) {
    if (lambda_c > 0.0 && vhat_patch == nullptr)
        throw std::invalid_argument("solve_intensities: vhat required");
    const auto& coords = PatchCoords::get(R);
    thread_local RegionField rf;
    region_indicators(params, coords, eta, rf);
    const std::size_t n = rf.n;
    const int M = rf.M;

    std::array<double, kMaxRegions> S{}, T{}, W{};
    std::array<std::array<double, kMaxRegions>, kMaxRegions> G{};
    for (int j = 0; j < M; ++j) {
        const double* uj = rf.u[j].data();
        for (std::size_t i = 0; i < n; ++i) {
            S[j] += uj[i];
            T[j] += uj[i] * observed_patch[i];
            if (vhat_patch) W[j] += uj[i] * vhat_patch[i];
        }
        for (int k = j; k < M; ++k) {
            const double* uk = rf.u[k].data();
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) g += uj[i] * uk[i];
            G[j][k] = G[k][j] = g;
        }
    }

    IntensityUpdate out;
    out.c = previous;
    std::array<int, kMaxRegions> live_idx{};
    int n_live = 0;
    for (int j = 0; j < M; ++j) {
        out.live[j] = S[j] >= kEmptyRegionMass;
        if (out.live[j]) live_idx[n_live++] = j;
    }
    if (n_live == 0) return out;

    // Reduced SPD system (G + lambda_c diag(S) + ridge) c = T + lambda_c W,
    // solved by Cholesky; M <= 8 so a direct factorization is plenty.
    double A[kMaxRegions][kMaxRegions];
    double rhs[kMaxRegions];
    double trace = 0.0;
    for (int a = 0; a < n_live; ++a) trace += G[live_idx[a]][live_idx[a]];
    const double ridge = 1e-12 * (trace + 1.0);
    for (int a = 0; a < n_live; ++a) {
        const int j = live_idx[a];
        for (int b = 0; b < n_live; ++b) A[a][b] = G[j][live_idx[b]];
        A[a][a] += lambda_c * S[j] + ridge;
        rhs[a] = T[j] + lambda_c * W[j];
    }
    // in-place Cholesky A = L L^T
    for (int a = 0; a < n_live; ++a) {
        for (int b = 0; b <= a; ++b) {
            double sum = A[a][b];
            for (int k = 0; k < b; ++k) sum -= A[a][k] * A[b][k];
            if (a == b) {
                A[a][a] = std::sqrt(std::max(sum, ridge));
            } else {
                A[a][b] = sum / A[b][b];
            }
        }
    }
    for (int a = 0; a < n_live; ++a) {  // forward
        double sum = rhs[a];
        for (int k = 0; k < a; ++k) sum -= A[a][k] * rhs[k];
        rhs[a] = sum / A[a][a];
    }
    for (int a = n_live - 1; a >= 0; --a) {  // backward
        double sum = rhs[a];
        for (int k = a + 1; k < n_live; ++k) sum -= A[k][a] * rhs[k];
        rhs[a] = sum / A[a][a];
    }
    for (int a = 0; a < n_live; ++a) out.c[live_idx[a]] = rhs[a];
    return out;
}

GeomGradient patch_gradient(const JunctionParams& params,
                            const std::array<double, kMaxRegions>& intensities,
                            int R, const double* observed_patch,
                            const double* vhat_patch, const double* bhat_patch,
                            double lambda_b, double lambda_c, double eta,
                            double delta, DataTermForm form) {
    if (lambda_b > 0.0 && bhat_patch == nullptr)
        throw std::invalid_argument("patch_gradient: bhat required");
    if (lambda_c > 0.0 && vhat_patch == nullptr)
        throw std::invalid_argument("patch_gradient: vhat required");
    if (delta <= 0.0) throw std::invalid_argument("patch_gradient: delta <= 0");

    const auto& coords = PatchCoords::get(R);
    const std::size_t n = coords.x.size();
    const int M = params.num_regions;

    thread_local JunctionScratch s;
    eval_planes(params, coords, eta, s, /*with_prime=*/true);

    std::array<std::array<double, 3>, kNumPlanes> normals, n_th, n_ph;
    for (int l = 0; l < kNumPlanes; ++l) {
        normals[l] = plane_normal(params.angles[l][0], params.angles[l][1]);
        plane_normal_derivs(params.angles[l][0], params.angles[l][1], n_th[l],
                            n_ph[l]);
    }

    const bool with_boundary = lambda_b > 0.0;
    const double delta2 = delta * delta;

    GeomGradient g{};
    const double* px = coords.x.data();
    const double* py = coords.y.data();
    const double* pz = coords.z.data();

    for (std::size_t i = 0; i < n; ++i) {
        // Per-pattern memberships and products of the two non-scanned factors.
        double render = 0.0;
        std::array<double, kMaxRegions> u{}, oth1{}, oth2{}, oth3{};
        for (int j = 0; j < M; ++j) {
            const auto& sp = kSignPatterns[j];
            const double f1 = sp[0] ? s.h[0][i] : 1.0 - s.h[0][i];
            const double f2 = sp[1] ? s.h[1][i] : 1.0 - s.h[1][i];
            const double f3 = sp[2] ? s.h[2][i] : 1.0 - s.h[2][i];
            u[j] = f1 * f2 * f3;
            oth1[j] = f2 * f3;
            oth2[j] = f1 * f3;
            oth3[j] = f1 * f2;
            render += u[j] * intensities[j];
        }

        // alpha_l multiplies dd_l/dgamma in the chain rule.
        std::array<double, kNumPlanes> alpha{};
        const double obs = observed_patch[i];
        const double vh = vhat_patch != nullptr ? vhat_patch[i] : 0.0;
        const double render_w =
            form == DataTermForm::kRenderResidual ? -2.0 * (obs - render) : 0.0;
        for (int j = 0; j < M; ++j) {
            const auto& sp = kSignPatterns[j];
            double w;
            if (form == DataTermForm::kWeighted) {
                const double rd = obs - intensities[j];
                w = rd * rd;
            } else {
                w = render_w * intensities[j];
            }
            if (lambda_c > 0.0) {
                const double rc = intensities[j] - vh;
                w += lambda_c * rc * rc;
            }
            const std::array<double, kNumPlanes> oth{oth1[j], oth2[j], oth3[j]};
            for (int l = 0; l < kNumPlanes; ++l)
                alpha[l] += (sp[l] ? 1.0 : -1.0) * s.hp[l][i] * oth[l] * w;
        }

        if (with_boundary) {
            int am = 0;
            double m = std::fabs(s.d[0][i]);
            for (int l = 1; l < kNumPlanes; ++l) {
                const double a = std::fabs(s.d[l][i]);
                if (a < m) {
                    m = a;
                    am = l;
                }
            }
            const double den = m * m + delta2;
            const double b = delta2 / den;
            const double db_dm = -2.0 * delta2 * m / (den * den);
            const double sign = s.d[am][i] >= 0.0 ? 1.0 : -1.0;
            alpha[am] +=
                lambda_b * 2.0 * (b - bhat_patch[i]) * db_dm * sign;
        }

        const double rx = px[i] - params.vertex[0];
        const double ry = py[i] - params.vertex[1];
        const double rz = pz[i] - params.vertex[2];
        for (int l = 0; l < kNumPlanes; ++l) {
            const double a = alpha[l];
            if (a == 0.0) continue;
            g[0] -= a * normals[l][0];
            g[1] -= a * normals[l][1];
            g[2] -= a * normals[l][2];
            g[3 + 2 * l] +=
                a * (rx * n_th[l][0] + ry * n_th[l][1] + rz * n_th[l][2]);
            g[4 + 2 * l] += a * (rx * n_ph[l][0] + ry * n_ph[l][1]);
        }
    }
    return g;
}

std::vector<GeomGradient> loss_gradient(FieldState& state, const Volume& noisy,
                                        const PatchGrid& grid, double eta,
                                        double delta) {
    check_state(state, grid);
    check_dims(noisy, grid, "loss_gradient");
    compute_global_fields(state, grid, eta, delta);
    const std::size_t N = grid.num_patches();
    const std::size_t R3 = patch_voxels(grid);
    std::vector<GeomGradient> grads(N);
    parallel_for(N, [&](std::size_t i) {
        thread_local std::vector<double> obs, vh, bh;
        obs.resize(R3);
        vh.resize(R3);
        bh.resize(R3);
        extract_patch_into(noisy, grid, i, obs.data());
        extract_patch_into(state.global_color, grid, i, vh.data());
        extract_patch_into(state.global_boundary, grid, i, bh.data());
        grads[i] = patch_gradient(state.params[i], state.intensities[i],
                                  grid.patch_size, obs.data(), vh.data(),
                                  bh.data(), state.lambda_b, state.lambda_c,
                                  eta, delta, DataTermForm::kWeighted);
    });
    return grads;
}

double patch_fit_residual(const JunctionParams& params,
                          const std::array<double, kMaxRegions>& intensities,
                          int R, const double* observed_patch, double eta) {
    const auto& coords = PatchCoords::get(R);
    thread_local std::vector<double> render;
    render.resize(coords.x.size());
    render_into(params, intensities, coords, eta, render.data());
    return kernels::active().sum_sq_diff(render.data(), observed_patch,
                                         render.size());
}

}  // namespace foj
