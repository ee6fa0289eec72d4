#pragma once

#include <cstddef>

// Data-parallel inner loops used by the junction fit and the volume solvers.
// Every kernel has a scalar reference implementation and may have a SIMD
// variant; the active table is chosen once at startup from CPU features.
// SIMD results may differ from scalar only by floating-point rounding and
// summation order (see tests/test_kernels.cpp for the equivalence bounds).

namespace foj::kernels {

// Accumulator layout for scan_moments_m3 (the M=3 init-scan hot loop):
//   [0..2]  S_j   = sum_v u_j(v)
//   [3..5]  T_j   = sum_v u_j(v) * V(v)
//   [6..11] G_jk  = sum_v u_j(v) * u_k(v), packed (11,12,13,22,23,33)
inline constexpr int kScanMomentsM3Size = 12;

struct Kernels {
    // h[i] = 0.5 * (1 + (2/pi) * atan(d[i] / eta))
    void (*heaviside)(const double* d, double* h, std::size_t n, double eta);

    // hp[i] = (1/pi) * eta / (d[i]^2 + eta^2)   (derivative of heaviside)
    void (*heaviside_prime)(const double* d, double* hp, std::size_t n, double eta);

    // Fused signed distance + heaviside for one plane over a point lattice:
    //   d = (x - vx) nx + (y - vy) ny + (z - vz) nz;  h = H_eta(d)
    void (*plane_heaviside)(const double* x, const double* y, const double* z,
                            std::size_t n, const double vertex[3],
                            const double normal[3], double eta, double* h);

    // d[i] = (x-vx) nx + (y-vy) ny + (z-vz) nz
    void (*plane_distance)(const double* x, const double* y, const double* z,
                           std::size_t n, const double vertex[3],
                           const double normal[3], double* d);

    // m[i] = min(m[i], |d[i]|)
    void (*min_abs)(const double* d, double* m, std::size_t n);

    // b[i] = delta^2 / (m[i]^2 + delta^2)
    void (*boundary_from_min)(const double* m, double* b, std::size_t n, double delta);

    // Init-scan moments for M=3 given the scanned plane's heaviside q[] and
    // the fixed products of the other two planes' factors W1,W2,W3.
    // sign_j selects q (true) or 1-q (false) for pattern j.
    void (*scan_moments_m3)(const double* q, const double* w1, const double* w2,
                            const double* w3, const double* val, std::size_t n,
                            bool s1, bool s2, bool s3, double out[kScanMomentsM3Size]);

    // out[i] = a*x[i] + b*y[i]
    void (*axpby)(double a, const double* x, double b, const double* y,
                  double* out, std::size_t n);

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);

    const char* name;
};

const Kernels& scalar();
const Kernels& active();

// Force a specific table ("scalar" or "avx2"); returns false if unavailable.
// Used by tests and the CLI --kernels flag.
bool select(const char* name);

bool avx2_supported();

}  // namespace foj::kernels
