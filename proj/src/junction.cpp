#include "foj/junction.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "foj/kernels.hpp"

namespace foj {

const std::array<std::array<bool, kNumPlanes>, kMaxRegions> kSignPatterns = {{
    {true, false, false},   // (+,-,-)
    {false, true, false},   // (-,+,-)
    {false, false, true},   // (-,-,+)
    {true, true, false},    // (+,+,-)
    {true, false, true},    // (+,-,+)
    {false, true, true},    // (-,+,+)
    {true, true, true},     // (+,+,+)
    {false, false, false},  // (-,-,-)
}};

std::array<double, kGeomParams> JunctionParams::flatten() const {
    return {vertex[0], vertex[1], vertex[2],
            angles[0][0], angles[0][1],
            angles[1][0], angles[1][1],
            angles[2][0], angles[2][1]};
}

JunctionParams JunctionParams::unflatten(
    const std::array<double, kGeomParams>& p, int num_regions) {
    JunctionParams j;
    j.vertex = {p[0], p[1], p[2]};
    j.angles = {{{p[3], p[4]}, {p[5], p[6]}, {p[7], p[8]}}};
    j.num_regions = num_regions;
    return j;
}

std::array<double, 3> plane_normal(double theta, double phi) {
    const double st = std::sin(theta), ct = std::cos(theta);
    const double sp = std::sin(phi), cp = std::cos(phi);
    return {st * cp, st * sp, ct};
}

void plane_normal_derivs(double theta, double phi, std::array<double, 3>& d_theta,
                         std::array<double, 3>& d_phi) {
    const double st = std::sin(theta), ct = std::cos(theta);
    const double sp = std::sin(phi), cp = std::cos(phi);
    d_theta = {ct * cp, ct * sp, -st};
    d_phi = {-st * sp, st * cp, 0.0};
}

double signed_distance(const JunctionParams& params, int plane,
                       const std::array<double, 3>& point) {
    const auto n = plane_normal(params.angles[plane][0], params.angles[plane][1]);
    return (point[0] - params.vertex[0]) * n[0] +
           (point[1] - params.vertex[1]) * n[1] +
           (point[2] - params.vertex[2]) * n[2];
}

double heaviside(double d, double eta) {
    if (eta <= 0.0) throw std::invalid_argument("heaviside: eta must be > 0");
    return 0.5 * (1.0 + (2.0 / M_PI) * std::atan(d / eta));
}

double heaviside_prime(double d, double eta) {
    if (eta <= 0.0) throw std::invalid_argument("heaviside_prime: eta must be > 0");
    return (1.0 / M_PI) * eta / (d * d + eta * eta);
}

const PatchCoords& PatchCoords::get(int R) {
    static std::map<int, PatchCoords> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(R);
    if (it != cache.end()) return it->second;

    PatchCoords c;
    c.R = R;
    const std::size_t n = static_cast<std::size_t>(R) * R * R;
    c.x.resize(n);
    c.y.resize(n);
    c.z.resize(n);
    auto norm = [R](int i) { return (2.0 * i + 1.0 - R) / R; };
    std::size_t idx = 0;
    for (int iz = 0; iz < R; ++iz)
        for (int iy = 0; iy < R; ++iy)
            for (int ix = 0; ix < R; ++ix, ++idx) {
                c.x[idx] = norm(ix);
                c.y[idx] = norm(iy);
                c.z[idx] = norm(iz);
            }
    return cache.emplace(R, std::move(c)).first->second;
}

void JunctionScratch::resize(std::size_t n) {
    for (int l = 0; l < kNumPlanes; ++l) {
        d[l].resize(n);
        h[l].resize(n);
        hp[l].resize(n);
    }
    mind.resize(n);
}

void eval_planes(const JunctionParams& params, const PatchCoords& coords,
                 double eta, JunctionScratch& s, bool with_prime) {
    if (eta <= 0.0) throw std::invalid_argument("eval_planes: eta must be > 0");
    const std::size_t n = coords.x.size();
    s.resize(n);
    const auto& k = kernels::active();
    for (int l = 0; l < kNumPlanes; ++l) {
        const auto nr = plane_normal(params.angles[l][0], params.angles[l][1]);
        k.plane_distance(coords.x.data(), coords.y.data(), coords.z.data(), n,
                         params.vertex.data(), nr.data(), s.d[l].data());
        k.heaviside(s.d[l].data(), s.h[l].data(), n, eta);
        if (with_prime)
            k.heaviside_prime(s.d[l].data(), s.hp[l].data(), n, eta);
    }
}

namespace {

void check_regions(int M) {
    if (M < 2 || M > kMaxRegions)
        throw std::invalid_argument("num_regions must be in [2, 8]");
}

}  // namespace

void region_indicators(const JunctionParams& params, const PatchCoords& coords,
                       double eta, RegionField& out) {
    check_regions(params.num_regions);
    const std::size_t n = coords.x.size();
    thread_local JunctionScratch scratch;
    eval_planes(params, coords, eta, scratch, false);

    out.M = params.num_regions;
    out.n = n;
    for (int j = 0; j < out.M; ++j) {
        out.u[j].resize(n);
        const auto& sp = kSignPatterns[j];
        const auto& h1 = scratch.h[0];
        const auto& h2 = scratch.h[1];
        const auto& h3 = scratch.h[2];
        double* u = out.u[j].data();
        for (std::size_t i = 0; i < n; ++i) {
            const double f1 = sp[0] ? h1[i] : 1.0 - h1[i];
            const double f2 = sp[1] ? h2[i] : 1.0 - h2[i];
            const double f3 = sp[2] ? h3[i] : 1.0 - h3[i];
            u[i] = f1 * f2 * f3;
        }
    }
}

void boundary_map(const JunctionParams& params, const PatchCoords& coords,
                  double delta, std::vector<double>& out) {
    if (delta <= 0.0) throw std::invalid_argument("boundary_map: delta must be > 0");
    const std::size_t n = coords.x.size();
    const auto& k = kernels::active();
    thread_local std::vector<double> d, mind;
    d.resize(n);
    mind.assign(n, std::numeric_limits<double>::infinity());
    for (int l = 0; l < kNumPlanes; ++l) {
        const auto nr = plane_normal(params.angles[l][0], params.angles[l][1]);
        k.plane_distance(coords.x.data(), coords.y.data(), coords.z.data(), n,
                         params.vertex.data(), nr.data(), d.data());
        k.min_abs(d.data(), mind.data(), n);
    }
    out.resize(n);
    k.boundary_from_min(mind.data(), out.data(), n, delta);
}

void indicator_gradients(const JunctionParams& params, const PatchCoords& coords,
                         double eta, IndicatorGradients& out) {
    check_regions(params.num_regions);
    const std::size_t n = coords.x.size();
    thread_local JunctionScratch s;
    eval_planes(params, coords, eta, s, true);

    // d d_l / d theta_l and d d_l / d phi_l per voxel; vertex partials are
    // the constant -n_l.
    std::array<std::array<double, 3>, kNumPlanes> normals, n_th, n_ph;
    for (int l = 0; l < kNumPlanes; ++l) {
        normals[l] = plane_normal(params.angles[l][0], params.angles[l][1]);
        plane_normal_derivs(params.angles[l][0], params.angles[l][1], n_th[l],
                            n_ph[l]);
    }

    out.M = params.num_regions;
    out.n = n;
    for (int j = 0; j < out.M; ++j)
        for (int p = 0; p < kGeomParams; ++p)
            out.grad[j][p].assign(n, 0.0);

    const double* px = coords.x.data();
    const double* py = coords.y.data();
    const double* pz = coords.z.data();
    const auto& v = params.vertex;

    for (int j = 0; j < out.M; ++j) {
        const auto& sp = kSignPatterns[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double f1 = sp[0] ? s.h[0][i] : 1.0 - s.h[0][i];
            const double f2 = sp[1] ? s.h[1][i] : 1.0 - s.h[1][i];
            const double f3 = sp[2] ? s.h[2][i] : 1.0 - s.h[2][i];
            const std::array<double, 3> others{f2 * f3, f1 * f3, f1 * f2};
            const double rx = px[i] - v[0];
            const double ry = py[i] - v[1];
            const double rz = pz[i] - v[2];
            for (int l = 0; l < kNumPlanes; ++l) {
                // du_j/dd_l = +-H'(d_l) * product of the other two factors
                const double du_dd = (sp[l] ? 1.0 : -1.0) * s.hp[l][i] * others[l];
                out.grad[j][0][i] += du_dd * -normals[l][0];
                out.grad[j][1][i] += du_dd * -normals[l][1];
                out.grad[j][2][i] += du_dd * -normals[l][2];
                const double dd_dth =
                    rx * n_th[l][0] + ry * n_th[l][1] + rz * n_th[l][2];
                const double dd_dph =
                    rx * n_ph[l][0] + ry * n_ph[l][1] + rz * n_ph[l][2];
                out.grad[j][3 + 2 * l][i] = du_dd * dd_dth;
                out.grad[j][4 + 2 * l][i] = du_dd * dd_dph;
            }
        }
    }
}

}  // namespace foj
