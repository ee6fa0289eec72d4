// AVX2+FMA variants of the hot kernels. This translation unit is compiled
// with -mavx2 -mfma and must only be entered after a runtime CPU check.

#include "foj/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>
#include <cmath>

namespace foj::kernels {
namespace {

constexpr double kInvPi = 0.3183098861837906715;

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Cephes-style atan: range reduction to |x| <= 0.66 plus a degree-4/5
// rational minimax polynomial; ~1 ulp over the double range.
inline __m256d vatan(__m256d x) {
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    const __m256d sign = _mm256_and_pd(x, sign_bit);
    const __m256d ax = _mm256_andnot_pd(sign_bit, x);

    const __m256d t3p8 = _mm256_set1_pd(2.41421356237309504880);
    const __m256d lim = _mm256_set1_pd(0.66);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d pio2 = _mm256_set1_pd(1.57079632679489661923);
    const __m256d pio4 = _mm256_set1_pd(0.78539816339744830962);
    const __m256d morebits = _mm256_set1_pd(6.123233995736765886130e-17);

    const __m256d m_big = _mm256_cmp_pd(ax, t3p8, _CMP_GT_OQ);
    const __m256d m_mid = _mm256_andnot_pd(
        m_big, _mm256_cmp_pd(ax, lim, _CMP_GT_OQ));

    const __m256d x_big = _mm256_div_pd(_mm256_set1_pd(-1.0), ax);
    const __m256d x_mid = _mm256_div_pd(_mm256_sub_pd(ax, one),
                                        _mm256_add_pd(ax, one));
    __m256d xr = _mm256_blendv_pd(ax, x_mid, m_mid);
    xr = _mm256_blendv_pd(xr, x_big, m_big);

    __m256d y = _mm256_and_pd(m_big, pio2);
    y = _mm256_or_pd(y, _mm256_and_pd(m_mid, pio4));

    const __m256d z = _mm256_mul_pd(xr, xr);
    __m256d p = _mm256_set1_pd(-8.750608600031904122785e-01);
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-1.615753718733365076637e+01));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-7.500855792314704667340e+01));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-1.228866684490136173410e+02));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(-6.485021904942025371773e+01));
    __m256d q = _mm256_add_pd(z, _mm256_set1_pd(2.485846490142306297962e+01));
    q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(1.650270098316988542046e+02));
    q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(4.328810604912902668951e+02));
    q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(4.853903996359136964868e+02));
    q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(1.945506571482613964425e+02));

    __m256d r = _mm256_div_pd(_mm256_mul_pd(z, p), q);
    r = _mm256_fmadd_pd(xr, r, xr);

    __m256d corr = _mm256_and_pd(m_big, morebits);
    corr = _mm256_or_pd(corr, _mm256_and_pd(
        m_mid, _mm256_mul_pd(morebits, _mm256_set1_pd(0.5))));
    r = _mm256_add_pd(r, corr);

    y = _mm256_add_pd(y, r);
    return _mm256_xor_pd(y, sign);
}

inline __m256d vheaviside(__m256d d, __m256d inv_eta) {
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d ipi = _mm256_set1_pd(kInvPi);
    return _mm256_fmadd_pd(ipi, vatan(_mm256_mul_pd(d, inv_eta)), half);
}

void heaviside_v(const double* d, double* h, std::size_t n, double eta) {
    const __m256d inv_eta = _mm256_set1_pd(1.0 / eta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(h + i, vheaviside(_mm256_loadu_pd(d + i), inv_eta));
    const double ie = 1.0 / eta;
    for (; i < n; ++i) h[i] = 0.5 + kInvPi * std::atan(d[i] * ie);
}

void heaviside_prime_v(const double* d, double* hp, std::size_t n, double eta) {
    const __m256d e = _mm256_set1_pd(eta);
    const __m256d e2 = _mm256_set1_pd(eta * eta);
    const __m256d ipi = _mm256_set1_pd(kInvPi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(d + i);
        const __m256d den = _mm256_fmadd_pd(x, x, e2);
        _mm256_storeu_pd(hp + i, _mm256_div_pd(_mm256_mul_pd(ipi, e), den));
    }
    for (; i < n; ++i) hp[i] = kInvPi * eta / (d[i] * d[i] + eta * eta);
}

void plane_distance_v(const double* x, const double* y, const double* z,
                      std::size_t n, const double v[3], const double nr[3],
                      double* d) {
    const double c0s = -(v[0] * nr[0] + v[1] * nr[1] + v[2] * nr[2]);
    const __m256d c0 = _mm256_set1_pd(c0s);
    const __m256d nx = _mm256_set1_pd(nr[0]);
    const __m256d ny = _mm256_set1_pd(nr[1]);
    const __m256d nz = _mm256_set1_pd(nr[2]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), nx, c0);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(y + i), ny, acc);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(z + i), nz, acc);
        _mm256_storeu_pd(d + i, acc);
    }
    for (; i < n; ++i)
        d[i] = c0s + x[i] * nr[0] + y[i] * nr[1] + z[i] * nr[2];
}

void plane_heaviside_v(const double* x, const double* y, const double* z,
                       std::size_t n, const double v[3], const double nr[3],
                       double eta, double* h) {
    const double c0s = -(v[0] * nr[0] + v[1] * nr[1] + v[2] * nr[2]);
    const __m256d c0 = _mm256_set1_pd(c0s);
    const __m256d nx = _mm256_set1_pd(nr[0]);
    const __m256d ny = _mm256_set1_pd(nr[1]);
    const __m256d nz = _mm256_set1_pd(nr[2]);
    const __m256d inv_eta = _mm256_set1_pd(1.0 / eta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), nx, c0);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(y + i), ny, acc);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(z + i), nz, acc);
        _mm256_storeu_pd(h + i, vheaviside(acc, inv_eta));
    }
    const double ie = 1.0 / eta;
    for (; i < n; ++i) {
        const double d = c0s + x[i] * nr[0] + y[i] * nr[1] + z[i] * nr[2];
        h[i] = 0.5 + kInvPi * std::atan(d * ie);
    }
}

void min_abs_v(const double* d, double* m, std::size_t n) {
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_andnot_pd(sign_bit, _mm256_loadu_pd(d + i));
        _mm256_storeu_pd(m + i, _mm256_min_pd(_mm256_loadu_pd(m + i), a));
    }
    for (; i < n; ++i) {
        const double a = std::fabs(d[i]);
        if (a < m[i]) m[i] = a;
    }
}

void boundary_from_min_v(const double* m, double* b, std::size_t n, double delta) {
    const __m256d d2 = _mm256_set1_pd(delta * delta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(m + i);
        _mm256_storeu_pd(b + i, _mm256_div_pd(d2, _mm256_fmadd_pd(x, x, d2)));
    }
    const double d2s = delta * delta;
    for (; i < n; ++i) b[i] = d2s / (m[i] * m[i] + d2s);
}

void scan_moments_m3_v(const double* q, const double* w1, const double* w2,
                       const double* w3, const double* val, std::size_t n,
                       bool s1, bool s2, bool s3, double out[kScanMomentsM3Size]) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d a1 = _mm256_set1_pd(s1 ? 1.0 : -1.0);
    const __m256d a2 = _mm256_set1_pd(s2 ? 1.0 : -1.0);
    const __m256d a3 = _mm256_set1_pd(s3 ? 1.0 : -1.0);
    const __m256d c1 = s1 ? _mm256_setzero_pd() : one;
    const __m256d c2 = s2 ? _mm256_setzero_pd() : one;
    const __m256d c3 = s3 ? _mm256_setzero_pd() : one;

    __m256d S1 = _mm256_setzero_pd(), S2 = S1, S3 = S1;
    __m256d T1 = S1, T2 = S1, T3 = S1;
    __m256d G11 = S1, G12 = S1, G13 = S1, G22 = S1, G23 = S1, G33 = S1;

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d qi = _mm256_loadu_pd(q + i);
        const __m256d u1 = _mm256_mul_pd(_mm256_fmadd_pd(a1, qi, c1),
                                         _mm256_loadu_pd(w1 + i));
        const __m256d u2 = _mm256_mul_pd(_mm256_fmadd_pd(a2, qi, c2),
                                         _mm256_loadu_pd(w2 + i));
        const __m256d u3 = _mm256_mul_pd(_mm256_fmadd_pd(a3, qi, c3),
                                         _mm256_loadu_pd(w3 + i));
        const __m256d vv = _mm256_loadu_pd(val + i);
        S1 = _mm256_add_pd(S1, u1);
        S2 = _mm256_add_pd(S2, u2);
        S3 = _mm256_add_pd(S3, u3);
        T1 = _mm256_fmadd_pd(u1, vv, T1);
        T2 = _mm256_fmadd_pd(u2, vv, T2);
        T3 = _mm256_fmadd_pd(u3, vv, T3);
        G11 = _mm256_fmadd_pd(u1, u1, G11);
        G12 = _mm256_fmadd_pd(u1, u2, G12);
        G13 = _mm256_fmadd_pd(u1, u3, G13);
        G22 = _mm256_fmadd_pd(u2, u2, G22);
        G23 = _mm256_fmadd_pd(u2, u3, G23);
        G33 = _mm256_fmadd_pd(u3, u3, G33);
    }

    out[0] = hsum(S1); out[1] = hsum(S2); out[2] = hsum(S3);
    out[3] = hsum(T1); out[4] = hsum(T2); out[5] = hsum(T3);
    out[6] = hsum(G11); out[7] = hsum(G12); out[8] = hsum(G13);
    out[9] = hsum(G22); out[10] = hsum(G23); out[11] = hsum(G33);

    for (; i < n; ++i) {
        const double qi = q[i];
        const double u1 = (s1 ? qi : 1.0 - qi) * w1[i];
        const double u2 = (s2 ? qi : 1.0 - qi) * w2[i];
        const double u3 = (s3 ? qi : 1.0 - qi) * w3[i];
        const double vv = val[i];
        out[0] += u1; out[1] += u2; out[2] += u3;
        out[3] += u1 * vv; out[4] += u2 * vv; out[5] += u3 * vv;
        out[6] += u1 * u1; out[7] += u1 * u2; out[8] += u1 * u3;
        out[9] += u2 * u2; out[10] += u2 * u3; out[11] += u3 * u3;
    }
}

void axpby_v(double a, const double* x, double b, const double* y,
             double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), t));
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

double dot_v(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = acc0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i),
                               _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                               _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i),
                               _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_v(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = acc0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i];
    return s;
}

double sum_sq_diff_v(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                        _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const Kernels* avx2_table() {
    static const Kernels k{
        heaviside_v,      heaviside_prime_v, plane_heaviside_v,
        plane_distance_v, min_abs_v,         boundary_from_min_v,
        scan_moments_m3_v, axpby_v,          dot_v,
        sum_v,            sum_sq_diff_v,     "avx2"};
    return &k;
}

}  // namespace foj::kernels

#else

namespace foj::kernels {
const Kernels* avx2_table() { return nullptr; }
}  // namespace foj::kernels

#endif
