// Independent reference implementations used as test oracles. Everything here
// is deliberately naive (scalar loops, brute force) and must stay decoupled
// from the library's evaluation paths.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "foj/junction.hpp"
#include "foj/volume.hpp"

namespace oracle {

inline double heaviside(double d, double eta) {
    return 0.5 * (1.0 + (2.0 / M_PI) * std::atan(d / eta));
}

inline std::array<double, 3> spherical_normal(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
            std::cos(theta)};
}

// Per-voxel scalar evaluation of the region indicators, straight from the
// sign-pattern definition.
inline double region_indicator(const foj::JunctionParams& p, int region,
                               const std::array<double, 3>& point, double eta) {
    double u = 1.0;
    for (int l = 0; l < 3; ++l) {
        const auto n = spherical_normal(p.angles[l][0], p.angles[l][1]);
        const double d = (point[0] - p.vertex[0]) * n[0] +
                         (point[1] - p.vertex[1]) * n[1] +
                         (point[2] - p.vertex[2]) * n[2];
        const double h = heaviside(d, eta);
        u *= foj::kSignPatterns[region][l] ? h : 1.0 - h;
    }
    return u;
}

inline double boundary_value(const foj::JunctionParams& p,
                             const std::array<double, 3>& point, double delta) {
    double mind = 1e300;
    for (int l = 0; l < 3; ++l) {
        const auto n = spherical_normal(p.angles[l][0], p.angles[l][1]);
        const double d = (point[0] - p.vertex[0]) * n[0] +
                         (point[1] - p.vertex[1]) * n[1] +
                         (point[2] - p.vertex[2]) * n[2];
        mind = std::min(mind, std::fabs(d));
    }
    return delta * delta / (mind * mind + delta * delta);
}

inline std::array<double, 3> lattice_point(int R, int iz, int iy, int ix) {
    auto norm = [R](int i) { return (2.0 * i + 1.0 - R) / R; };
    return {norm(ix), norm(iy), norm(iz)};
}

// Central finite differences of a scalar function of an n-vector.
inline std::vector<double> central_diff(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Richardson-extrapolated central differences: cancels the O(h^2) term,
// leaving O(h^4) truncation. Four evaluations per component.
inline std::vector<double> central_diff_richardson(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
    const auto coarse = central_diff(f, x, h);
    const auto fine = central_diff(f, x, 0.5 * h);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        g[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    return g;
}

// Golden-section minimization of a unimodal scalar function on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a,
                             double b, double tol) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// O(N^2) chamfer.
inline double chamfer_brute(const std::vector<std::array<double, 3>>& a,
                            const std::vector<std::array<double, 3>>& b) {
    auto one_way = [](const std::vector<std::array<double, 3>>& from,
                      const std::vector<std::array<double, 3>>& to) {
        double total = 0.0;
        for (const auto& p : from) {
            double best = 1e300;
            for (const auto& q : to) {
                const double dx = p[0] - q[0], dy = p[1] - q[1],
                             dz = p[2] - q[2];
                best = std::min(best, dx * dx + dy * dy + dz * dz);
            }
            total += best;
        }
        return total / static_cast<double>(from.size());
    };
    return one_way(a, b) + one_way(b, a);
}

inline foj::Volume random_volume(int D, int H, int W, std::uint64_t seed,
                                 double lo = 0.0, double hi = 1.0) {
    foj::Volume v(D, H, W);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    for (auto& x : v.data) x = uni(rng);
    return v;
}

inline foj::JunctionParams random_params(std::uint64_t seed, int M = 3,
                                         double vertex_span = 0.6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    foj::JunctionParams p;
    p.num_regions = M;
    for (int a = 0; a < 3; ++a) p.vertex[a] = vertex_span * uni(rng);
    for (int l = 0; l < 3; ++l) {
        p.angles[l][0] = M_PI * 0.5 * (1.0 + 0.8 * uni(rng));
        p.angles[l][1] = M_PI * uni(rng);
    }
    return p;
}

}  // namespace oracle
