#include "foj/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "foj/errors.hpp"
#include "foj/kernels.hpp"
#include "foj/parallel.hpp"

namespace foj {

namespace {

constexpr double kEmptyRegionMass = 1e-12;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Vertex coordinates take larger steps than the angles. Flat regions are
// represented by junctions whose planes leave the patch entirely, which
// needs ~2 units of vertex travel within the refinement budget; angles only
// ever make sub-voxel plane adjustments.
constexpr double kVertexStepScale = 4.0;

// A scan candidate replaces the incumbent configuration only when it wins by
// this relative margin, with an absolute floor tied to the patch energy
// (scores are computed by moment expansion, so near-perfect fits carry
// cancellation noise around zero). Warm-started rescans otherwise flip
// between near-tied discrete candidates as the proximal iterate drifts.
constexpr double kScanHysteresis = 1e-3;
constexpr double kScanAbsFloor = 1e-9;

bool keeps_incumbent(double best, double incumbent, double patch_energy) {
    const double margin = std::max(kScanHysteresis * std::fabs(incumbent),
                                   kScanAbsFloor * (patch_energy + 1.0));
    return best >= incumbent - margin;
}

// Per-parameter gradient deadband, relative to the patch energy: the
// moment-normalized optimizer would otherwise turn rounding-noise gradients
// into full-size steps for parameters with no step history. Real fitting
// signals sit at least three orders of magnitude above this.
constexpr double kGradDeadband = 1e-8;

// Moment accumulators for scoring one candidate configuration:
// region masses S_j, data moments T_j = sum u_j V, Gram G_jk = sum u_j u_k.
struct ScanMoments {
    std::array<double, kMaxRegions> S{};
    std::array<double, kMaxRegions> T{};
    std::array<std::array<double, kMaxRegions>, kMaxRegions> G{};
};

// Reconstruction residual sum (V - sum_j c_j u_j)^2 expanded in moments,
// with c_j from the closed-form update (lambda_c = 0) and empty regions
// frozen at their previous intensity.
double score_from_moments(const ScanMoments& m, double sum_v2, int M,
                          const std::array<double, kMaxRegions>& prev_c,
                          std::array<double, kMaxRegions>* c_out) {
    std::array<double, kMaxRegions> c = prev_c;
    for (int j = 0; j < M; ++j)
        if (m.S[j] >= kEmptyRegionMass) c[j] = m.T[j] / m.S[j];
    double score = sum_v2;
    for (int j = 0; j < M; ++j) {
        score -= 2.0 * c[j] * m.T[j];
        for (int k = 0; k < M; ++k) score += c[j] * c[k] * m.G[j][k];
    }
    if (c_out) *c_out = c;
    return score;
}

void accumulate_moments_generic(
    const std::array<const double*, kMaxRegions>& u, int M, const double* val,
    std::size_t n, ScanMoments& m) {
    m = ScanMoments{};
    for (std::size_t i = 0; i < n; ++i) {
        const double vv = val[i];
        for (int j = 0; j < M; ++j) {
            const double uj = u[j][i];
            m.S[j] += uj;
            m.T[j] += uj * vv;
            for (int k = j; k < M; ++k) m.G[j][k] += uj * u[k][i];
        }
    }
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < j; ++k) m.G[j][k] = m.G[k][j];
}

struct PatchWorkspace {
    std::vector<double> q;                    // scanned plane heaviside
    std::array<std::vector<double>, kMaxRegions> w;  // fixed per-pattern products
    std::array<std::vector<double>, kNumPlanes> h;   // per-plane heavisides
    std::array<std::vector<double>, kMaxRegions> u;
    std::vector<double> render;

    void resize(std::size_t n, int M) {
        q.resize(n);
        render.resize(n);
        for (int l = 0; l < kNumPlanes; ++l) h[l].resize(n);
        for (int j = 0; j < std::max(M, 3); ++j) {
            w[j].resize(n);
            u[j].resize(n);
        }
    }
};

void plane_heavisides(const JunctionParams& params, const PatchCoords& coords,
                      double eta, PatchWorkspace& ws) {
    const auto& k = kernels::active();
    const std::size_t n = coords.x.size();
    for (int l = 0; l < kNumPlanes; ++l) {
        const auto nr = plane_normal(params.angles[l][0], params.angles[l][1]);
        k.plane_heaviside(coords.x.data(), coords.y.data(), coords.z.data(), n,
                          params.vertex.data(), nr.data(), eta, ws.h[l].data());
    }
}

// Moments for a full configuration (all three planes already in ws.h).
void config_moments(PatchWorkspace& ws, int M, const double* val,
                    std::size_t n, ScanMoments& m) {
    std::array<const double*, kMaxRegions> uptr{};
    for (int j = 0; j < M; ++j) {
        const auto& sp = kSignPatterns[j];
        double* u = ws.u[j].data();
        const double* h1 = ws.h[0].data();
        const double* h2 = ws.h[1].data();
        const double* h3 = ws.h[2].data();
        for (std::size_t i = 0; i < n; ++i) {
            const double f1 = sp[0] ? h1[i] : 1.0 - h1[i];
            const double f2 = sp[1] ? h2[i] : 1.0 - h2[i];
            const double f3 = sp[2] ? h3[i] : 1.0 - h3[i];
            u[i] = f1 * f2 * f3;
        }
        uptr[j] = u;
    }
    accumulate_moments_generic(uptr, M, val, n, m);
}

void moments_from_scan(const PatchWorkspace& ws, int scanned_plane, int M,
                       const double* val, std::size_t n, ScanMoments& m) {
    if (M == 3) {
        double out[kernels::kScanMomentsM3Size];
        kernels::active().scan_moments_m3(
            ws.q.data(), ws.w[0].data(), ws.w[1].data(), ws.w[2].data(), val, n,
            kSignPatterns[0][scanned_plane], kSignPatterns[1][scanned_plane],
            kSignPatterns[2][scanned_plane], out);
        m = ScanMoments{};
        m.S = {out[0], out[1], out[2]};
        m.T = {out[3], out[4], out[5]};
        m.G[0][0] = out[6];
        m.G[0][1] = m.G[1][0] = out[7];
        m.G[0][2] = m.G[2][0] = out[8];
        m.G[1][1] = out[9];
        m.G[1][2] = m.G[2][1] = out[10];
        m.G[2][2] = out[11];
        return;
    }
    std::array<const double*, kMaxRegions> uptr{};
    thread_local std::array<std::vector<double>, kMaxRegions> ubuf;
    for (int j = 0; j < M; ++j) {
        ubuf[j].resize(n);
        const bool s = kSignPatterns[j][scanned_plane];
        const double* q = ws.q.data();
        const double* w = ws.w[j].data();
        double* u = ubuf[j].data();
        for (std::size_t i = 0; i < n; ++i)
            u[i] = (s ? q[i] : 1.0 - q[i]) * w[i];
        uptr[j] = u;
    }
    accumulate_moments_generic(uptr, M, val, n, m);
}

}  // namespace

void SolverConfig::validate() const {
    if (patch_size < 2) throw std::invalid_argument("patch_size must be >= 2");
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (num_regions < 2 || num_regions > kMaxRegions)
        throw std::invalid_argument("num_regions must be in [2, 8]");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (n_init < 1) throw std::invalid_argument("n_init must be >= 1");
    if (n_refine < 0) throw std::invalid_argument("n_refine must be >= 0");
    if (angular_polar < 1 || angular_azimuth < 1)
        throw std::invalid_argument("angular grid must be >= 1 per axis");
    if (vertex_scan_step <= 0.0)
        throw std::invalid_argument("vertex_scan_step must be > 0");
    if (vertex_scan_halfwidth < 0.0)
        throw std::invalid_argument("vertex_scan_halfwidth must be >= 0");
    if (step_size <= 0.0) throw std::invalid_argument("step_size must be > 0");
    if (lambda_b_target < 0.0 || lambda_c_target < 0.0)
        throw std::invalid_argument("lambda targets must be >= 0");
    if (ramp < 0.0 || ramp > 1.0)
        throw std::invalid_argument("ramp must be in [0, 1]");
    if (eta <= 0.0) throw std::invalid_argument("eta must be > 0");
    if (delta <= 0.0) throw std::invalid_argument("delta must be > 0");
}

std::vector<std::array<double, 2>> angular_grid(int n_polar, int n_azimuth) {
    std::vector<std::array<double, 2>> g;
    g.reserve(static_cast<std::size_t>(n_polar) * n_azimuth);
    for (int i = 0; i < n_polar; ++i) {
        const double theta = (i + 0.5) * M_PI / n_polar;
        for (int j = 0; j < n_azimuth; ++j)
            g.push_back({theta, j * 2.0 * M_PI / n_azimuth});
    }
    return g;
}

void SolverState::reset_moments() {
    for (auto& m : adam_m) m.fill(0.0);
    for (auto& v : adam_v) v.fill(0.0);
    std::fill(adam_t.begin(), adam_t.end(), 0);
}

SolverState make_solver_state(const PatchGrid& grid, const SolverConfig& cfg) {
    SolverState s;
    s.field = make_field_state(grid, cfg.num_regions);
    s.adam_m.assign(grid.num_patches(), {});
    s.adam_v.assign(grid.num_patches(), {});
    s.adam_t.assign(grid.num_patches(), 0);
    return s;
}

void init_patch(const double* patch, const SolverConfig& cfg,
                JunctionParams& params,
                std::array<double, kMaxRegions>& intensities,
                std::array<bool, kMaxRegions>& live) {
    const int R = cfg.patch_size;
    const int M = params.num_regions;
    const auto& coords = PatchCoords::get(R);
    const std::size_t n = coords.x.size();
    const auto& k = kernels::active();
    const double sum_v2 = k.dot(patch, patch, n);

    static thread_local PatchWorkspace ws;
    ws.resize(n, M);

    const auto grid_angles = angular_grid(cfg.angular_polar, cfg.angular_azimuth);

    // Vertex-offset lattice in normalized units, incumbent position first.
    std::vector<std::array<double, 3>> offsets{{0.0, 0.0, 0.0}};
    const double step = cfg.vertex_scan_step * 2.0 / R;
    const int half = static_cast<int>(
        std::round(cfg.vertex_scan_halfwidth / cfg.vertex_scan_step));
    for (int dz = -half; dz <= half; ++dz)
        for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                offsets.push_back({dx * step, dy * step, dz * step});
            }

    ScanMoments m;
    for (int round = 0; round < cfg.n_init; ++round) {
        for (int l = 0; l < kNumPlanes; ++l) {
            // Fixed products of the two non-scanned planes per pattern.
            plane_heavisides(params, coords, cfg.eta, ws);
            const int a = (l + 1) % 3, b = (l + 2) % 3;
            for (int j = 0; j < M; ++j) {
                const auto& sp = kSignPatterns[j];
                const double* ha = ws.h[a].data();
                const double* hb = ws.h[b].data();
                double* w = ws.w[j].data();
                for (std::size_t i = 0; i < n; ++i) {
                    const double fa = sp[a] ? ha[i] : 1.0 - ha[i];
                    const double fb = sp[b] ? hb[i] : 1.0 - hb[i];
                    w[i] = fa * fb;
                }
            }
            double best = 0.0, incumbent = 0.0;
            int best_idx = -1;
            std::array<double, 2> best_angles = params.angles[l];
            std::array<double, kMaxRegions> best_c = intensities;
            std::array<double, kMaxRegions> incumbent_c = intensities;
            for (std::size_t cand = 0; cand < grid_angles.size() + 1; ++cand) {
                const std::array<double, 2> ang =
                    cand == 0 ? params.angles[l] : grid_angles[cand - 1];
                const auto nr = plane_normal(ang[0], ang[1]);
                k.plane_heaviside(coords.x.data(), coords.y.data(),
                                  coords.z.data(), n, params.vertex.data(),
                                  nr.data(), cfg.eta, ws.q.data());
                moments_from_scan(ws, l, M, patch, n, m);
                std::array<double, kMaxRegions> c;
                const double score = score_from_moments(m, sum_v2, M,
                                                        intensities, &c);
                if (cand == 0) {
                    incumbent = score;
                    incumbent_c = c;
                }
                if (best_idx < 0 || score < best) {
                    best = score;
                    best_idx = static_cast<int>(cand);
                    best_angles = ang;
                    best_c = c;
                }
            }
            if (best_idx != 0 && keeps_incumbent(best, incumbent, sum_v2)) {
                best_angles = params.angles[l];
                best_c = incumbent_c;
            }
            params.angles[l] = best_angles;
            intensities = best_c;
        }

        // Vertex scan around the current position, all planes re-evaluated.
        {
            double best = 0.0, incumbent = 0.0;
            int best_idx = -1;
            std::array<double, 3> best_vertex = params.vertex;
            std::array<double, kMaxRegions> best_c = intensities;
            std::array<double, kMaxRegions> incumbent_c = intensities;
            const std::array<double, 3> base = params.vertex;
            JunctionParams trial = params;
            for (std::size_t cand = 0; cand < offsets.size(); ++cand) {
                trial.vertex = {base[0] + offsets[cand][0],
                                base[1] + offsets[cand][1],
                                base[2] + offsets[cand][2]};
                plane_heavisides(trial, coords, cfg.eta, ws);
                config_moments(ws, M, patch, n, m);
                std::array<double, kMaxRegions> c;
                const double score = score_from_moments(m, sum_v2, M,
                                                        intensities, &c);
                if (cand == 0) {
                    incumbent = score;
                    incumbent_c = c;
                }
                if (best_idx < 0 || score < best) {
                    best = score;
                    best_idx = static_cast<int>(cand);
                    best_vertex = trial.vertex;
                    best_c = c;
                }
            }
            if (best_idx != 0 && keeps_incumbent(best, incumbent, sum_v2)) {
                best_vertex = base;
                best_c = incumbent_c;
            }
            params.vertex = best_vertex;
            intensities = best_c;
        }
    }

    // Canonical intensity pass for the chosen geometry (exact minimizer of
    // the reconstruction residual; the scans' weighted means are only scores).
    const auto upd =
        solve_intensities(params, R, patch, nullptr, 0.0, cfg.eta, intensities);
    intensities = upd.c;
    live = upd.live;
}

void init_all(SolverState& state, const Volume& noisy, const PatchGrid& grid,
              const SolverConfig& cfg, bool fresh) {
    cfg.validate();
    const std::size_t N = grid.num_patches();
    if (state.field.num_patches() != N)
        throw std::invalid_argument("init_all: state/grid mismatch");
    const std::size_t R3 = static_cast<std::size_t>(grid.patch_size) *
                           grid.patch_size * grid.patch_size;
    const auto grid0 = angular_grid(cfg.angular_polar, cfg.angular_azimuth)[0];

    parallel_for(N, [&](std::size_t i) {
        thread_local std::vector<double> obs;
        obs.resize(R3);
        extract_patch_into(noisy, grid, i, obs.data());
        auto& p = state.field.params[i];
        if (fresh) {
            p.vertex = {0.0, 0.0, 0.0};  // patch center in normalized coords
            for (int l = 0; l < kNumPlanes; ++l) p.angles[l] = grid0;
            state.field.intensities[i].fill(0.0);
        }
        p.num_regions = cfg.num_regions;
        init_patch(obs.data(), cfg, p, state.field.intensities[i],
                   state.field.region_live[i]);
    });
    // Optimizer moments survive warm-started sweeps (they are part of the
    // solver state); only a from-scratch initialization clears them.
    if (fresh) state.reset_moments();
}

void refine(SolverState& state, const Volume& noisy, const PatchGrid& grid,
            const SolverConfig& cfg, int n_iters,
            std::vector<LossTraceRow>* trace) {
    cfg.validate();
    if (n_iters <= 0) return;
    // The first moment restarts per call so a state refit against a new
    // target never coasts on stale momentum; the second moment persists
    // across warm-started calls as the long-memory step damper.
    for (auto& m : state.adam_m) m.fill(0.0);
    const std::size_t N = grid.num_patches();
    const std::size_t R3 = static_cast<std::size_t>(grid.patch_size) *
                           grid.patch_size * grid.patch_size;

    for (int t = 1; t <= n_iters; ++t) {
        const double denom = cfg.ramp * n_iters;
        const double frac = denom > 0.0 ? std::min(1.0, t / denom) : 1.0;
        state.field.lambda_b = frac * cfg.lambda_b_target;
        state.field.lambda_c = frac * cfg.lambda_c_target;

        compute_global_fields(state.field, grid, cfg.eta, cfg.delta);

        if (trace) {
            const auto lb = objective_with_fields(
                state.field, noisy, grid, cfg.eta, cfg.delta,
                state.field.global_color, state.field.global_boundary,
                DataTermForm::kRenderResidual);
            trace->push_back({t, lb.total, lb.data, lb.boundary, lb.color});
            if (!std::isfinite(lb.total))
                throw NumericError(
                    "refine: non-finite loss at iteration " + std::to_string(t));
        }

        const double lb_now = state.field.lambda_b;
        const double lc_now = state.field.lambda_c;
        std::atomic<std::size_t> bad_patch{N};

        parallel_for(N, [&](std::size_t i) {
            thread_local std::vector<double> obs, vh, bh;
            obs.resize(R3);
            vh.resize(R3);
            bh.resize(R3);
            extract_patch_into(noisy, grid, i, obs.data());
            extract_patch_into(state.field.global_color, grid, i, vh.data());
            extract_patch_into(state.field.global_boundary, grid, i, bh.data());

            auto& p = state.field.params[i];
            const auto g = patch_gradient(
                p, state.field.intensities[i], grid.patch_size, obs.data(),
                vh.data(), bh.data(), lb_now, lc_now, cfg.eta, cfg.delta,
                DataTermForm::kRenderResidual);

            bool finite = true;
            for (double gi : g)
                if (!std::isfinite(gi)) finite = false;
            if (!finite) {
                std::size_t expected = N;
                bad_patch.compare_exchange_strong(expected, i);
                return;
            }
            const double energy =
                kernels::active().dot(obs.data(), obs.data(), R3);
            const double deadband = kGradDeadband * (energy + 1.0);
            auto flat = p.flatten();
            auto& m = state.adam_m[i];
            auto& v = state.adam_v[i];
            const int step_count = ++state.adam_t[i];
            const double bc1 = 1.0 - std::pow(kAdamBeta1, step_count);
            const double bc2 = 1.0 - std::pow(kAdamBeta2, step_count);
            for (int pidx = 0; pidx < kGeomParams; ++pidx) {
                const double gi = g[pidx];
                if (std::fabs(gi) < deadband) continue;  // parameter at rest
                m[pidx] = kAdamBeta1 * m[pidx] + (1.0 - kAdamBeta1) * gi;
                v[pidx] = kAdamBeta2 * v[pidx] + (1.0 - kAdamBeta2) * gi * gi;
                const double mhat = m[pidx] / bc1;
                const double vhat = v[pidx] / bc2;
                const double lr =
                    cfg.step_size * (pidx < 3 ? kVertexStepScale : 1.0);
                flat[pidx] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
            }
            p = JunctionParams::unflatten(flat, p.num_regions);

            const auto upd = solve_intensities(
                p, grid.patch_size, obs.data(), vh.data(), lc_now, cfg.eta,
                state.field.intensities[i]);
            state.field.intensities[i] = upd.c;
            state.field.region_live[i] = upd.live;
        });

        if (bad_patch < N)
            throw NumericError("refine: non-finite gradient at patch " +
                                     std::to_string(bad_patch) +
                                     ", iteration " + std::to_string(t));
    }
    compute_global_fields(state.field, grid, cfg.eta, cfg.delta);
}

DenoiseResult denoise_volume(const Volume& noisy, const SolverConfig& cfg) {
    cfg.validate();
    if (!noisy.all_finite())
        throw std::invalid_argument("denoise_volume: input has non-finite values");
    const PatchGrid grid =
        build_patch_grid({noisy.D, noisy.H, noisy.W}, cfg.patch_size, cfg.stride);
    SolverState state = make_solver_state(grid, cfg);

    DenoiseResult result;
    init_all(state, noisy, grid, cfg, /*fresh=*/true);
    refine(state, noisy, grid, cfg, cfg.n_refine, &result.trace);
    if (cfg.n_refine == 0)
        compute_global_fields(state.field, grid, cfg.eta, cfg.delta);

    result.denoised = state.field.global_color;
    result.denoised.spacing = noisy.spacing;
    result.state = std::move(state.field);
    return result;
}

void write_loss_trace_csv(const std::string& path,
                          const std::vector<LossTraceRow>& trace) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "iter,total,data,boundary,color\n";
    f.precision(17);
    for (const auto& r : trace)
        f << r.iter << ',' << r.total << ',' << r.data << ',' << r.boundary
          << ',' << r.color << "\n";
}

}  // namespace foj
