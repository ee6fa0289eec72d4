#include "foj/kernels.hpp"

#include <cmath>

namespace foj::kernels {
namespace {

constexpr double kInvPi = 0.3183098861837906715;

void heaviside_s(const double* d, double* h, std::size_t n, double eta) {
    const double inv_eta = 1.0 / eta;
    for (std::size_t i = 0; i < n; ++i)
        h[i] = 0.5 + kInvPi * std::atan(d[i] * inv_eta);
}

void heaviside_prime_s(const double* d, double* hp, std::size_t n, double eta) {
    for (std::size_t i = 0; i < n; ++i)
        hp[i] = kInvPi * eta / (d[i] * d[i] + eta * eta);
}

void plane_distance_s(const double* x, const double* y, const double* z,
                      std::size_t n, const double v[3], const double nr[3],
                      double* d) {
    // Hoist the constant offset so the loop is a pure fma chain.
    const double c0 = -(v[0] * nr[0] + v[1] * nr[1] + v[2] * nr[2]);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = c0 + x[i] * nr[0] + y[i] * nr[1] + z[i] * nr[2];
}

void plane_heaviside_s(const double* x, const double* y, const double* z,
                       std::size_t n, const double v[3], const double nr[3],
                       double eta, double* h) {
    const double c0 = -(v[0] * nr[0] + v[1] * nr[1] + v[2] * nr[2]);
    const double inv_eta = 1.0 / eta;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = c0 + x[i] * nr[0] + y[i] * nr[1] + z[i] * nr[2];
        h[i] = 0.5 + kInvPi * std::atan(d * inv_eta);
    }
}

void min_abs_s(const double* d, double* m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::fabs(d[i]);
        if (a < m[i]) m[i] = a;
    }
}

void boundary_from_min_s(const double* m, double* b, std::size_t n, double delta) {
    const double d2 = delta * delta;
    for (std::size_t i = 0; i < n; ++i)
        b[i] = d2 / (m[i] * m[i] + d2);
}

void scan_moments_m3_s(const double* q, const double* w1, const double* w2,
                       const double* w3, const double* val, std::size_t n,
                       bool s1, bool s2, bool s3, double out[kScanMomentsM3Size]) {
    double S1 = 0, S2 = 0, S3 = 0;
    double T1 = 0, T2 = 0, T3 = 0;
    double G11 = 0, G12 = 0, G13 = 0, G22 = 0, G23 = 0, G33 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double qi = q[i];
        const double u1 = (s1 ? qi : 1.0 - qi) * w1[i];
        const double u2 = (s2 ? qi : 1.0 - qi) * w2[i];
        const double u3 = (s3 ? qi : 1.0 - qi) * w3[i];
        const double vv = val[i];
        S1 += u1; S2 += u2; S3 += u3;
        T1 += u1 * vv; T2 += u2 * vv; T3 += u3 * vv;
        G11 += u1 * u1; G12 += u1 * u2; G13 += u1 * u3;
        G22 += u2 * u2; G23 += u2 * u3; G33 += u3 * u3;
    }
    out[0] = S1; out[1] = S2; out[2] = S3;
    out[3] = T1; out[4] = T2; out[5] = T3;
    out[6] = G11; out[7] = G12; out[8] = G13;
    out[9] = G22; out[10] = G23; out[11] = G33;
}

void axpby_s(double a, const double* x, double b, const double* y,
             double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

double dot_s(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_s(const double* a, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

double sum_sq_diff_s(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const Kernels& scalar() {
    static const Kernels k{
        heaviside_s,     heaviside_prime_s, plane_heaviside_s,
        plane_distance_s, min_abs_s,        boundary_from_min_s,
        scan_moments_m3_s, axpby_s,         dot_s,
        sum_s,           sum_sq_diff_s,     "scalar"};
    return k;
}

}  // namespace foj::kernels
