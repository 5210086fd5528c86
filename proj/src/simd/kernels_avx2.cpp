#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "ms/simd.hpp"

// AVX2 variants of the inner-loop kernels. Arithmetic mirrors the scalar
// reference op-for-op (no explicit FMA) so per-element outputs match exactly;
// reductions differ from scalar only in summation order.

namespace ms::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        tail += d * d;
    }
    return hsum(acc) + tail;
}

double sum_norm3_diff_avx2(const double* a, const double* b, std::size_t n_points) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n_points; i += 4) {
        const double* pa = a + 3 * i;
        const double* pb = b + 3 * i;
        const __m256d ax = _mm256_set_pd(pa[9], pa[6], pa[3], pa[0]);
        const __m256d ay = _mm256_set_pd(pa[10], pa[7], pa[4], pa[1]);
        const __m256d az = _mm256_set_pd(pa[11], pa[8], pa[5], pa[2]);
        const __m256d bx = _mm256_set_pd(pb[9], pb[6], pb[3], pb[0]);
        const __m256d by = _mm256_set_pd(pb[10], pb[7], pb[4], pb[1]);
        const __m256d bz = _mm256_set_pd(pb[11], pb[8], pb[5], pb[2]);
        const __m256d dx = _mm256_sub_pd(ax, bx);
        const __m256d dy = _mm256_sub_pd(ay, by);
        const __m256d dz = _mm256_sub_pd(az, bz);
        const __m256d sq = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
        acc = _mm256_add_pd(acc, _mm256_sqrt_pd(sq));
    }
    double tail = 0.0;
    for (; i < n_points; ++i) {
        const double dx = a[3 * i + 0] - b[3 * i + 0];
        const double dy = a[3 * i + 1] - b[3 * i + 1];
        const double dz = a[3 * i + 2] - b[3 * i + 2];
        tail += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return hsum(acc) + tail;
}

void epipolar_sym_dist_sq_avx2(const double f[9], const double* x1, const double* y1,
                               const double* x2, const double* y2, std::size_t n,
                               double* out) {
    const __m256d f00 = _mm256_set1_pd(f[0]), f01 = _mm256_set1_pd(f[1]), f02 = _mm256_set1_pd(f[2]);
    const __m256d f10 = _mm256_set1_pd(f[3]), f11 = _mm256_set1_pd(f[4]), f12 = _mm256_set1_pd(f[5]);
    const __m256d f20 = _mm256_set1_pd(f[6]), f21 = _mm256_set1_pd(f[7]), f22 = _mm256_set1_pd(f[8]);
    const __m256d eps = _mm256_set1_pd(1e-300);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d u1 = _mm256_loadu_pd(x1 + i);
        const __m256d v1 = _mm256_loadu_pd(y1 + i);
        const __m256d u2 = _mm256_loadu_pd(x2 + i);
        const __m256d v2 = _mm256_loadu_pd(y2 + i);

        const __m256d a2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(f00, u1), _mm256_mul_pd(f01, v1)), f02);
        const __m256d b2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(f10, u1), _mm256_mul_pd(f11, v1)), f12);
        const __m256d c2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(f20, u1), _mm256_mul_pd(f21, v1)), f22);
        const __m256d a1 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(f00, u2), _mm256_mul_pd(f10, v2)), f20);
        const __m256d b1 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(f01, u2), _mm256_mul_pd(f11, v2)), f21);

        const __m256d val =
            _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(u2, a2), _mm256_mul_pd(v2, b2)), c2);
        const __m256d vv = _mm256_mul_pd(val, val);
        const __m256d d2 =
            _mm256_max_pd(_mm256_add_pd(_mm256_mul_pd(a2, a2), _mm256_mul_pd(b2, b2)), eps);
        const __m256d d1 =
            _mm256_max_pd(_mm256_add_pd(_mm256_mul_pd(a1, a1), _mm256_mul_pd(b1, b1)), eps);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_div_pd(vv, d2), _mm256_div_pd(vv, d1)));
    }
    for (; i < n; ++i) {
        const double a2 = f[0] * x1[i] + f[1] * y1[i] + f[2];
        const double b2 = f[3] * x1[i] + f[4] * y1[i] + f[5];
        const double c2 = f[6] * x1[i] + f[7] * y1[i] + f[8];
        const double a1 = f[0] * x2[i] + f[3] * y2[i] + f[6];
        const double b1 = f[1] * x2[i] + f[4] * y2[i] + f[7];
        const double val = x2[i] * a2 + y2[i] * b2 + c2;
        const double vv = val * val;
        double d2 = a2 * a2 + b2 * b2;
        double d1 = a1 * a1 + b1 * b1;
        if (d2 < 1e-300) d2 = 1e-300;
        if (d1 < 1e-300) d1 = 1e-300;
        out[i] = vv / d2 + vv / d1;
    }
}

void project_points_avx2(double fx, double fy, double ox, double oy, const double r[9],
                         const double t[3], const double* points_xyz, std::size_t n_points,
                         double* uv_out, double* z_out) {
    const __m256d r0 = _mm256_set1_pd(r[0]), r1 = _mm256_set1_pd(r[1]), r2 = _mm256_set1_pd(r[2]);
    const __m256d r3 = _mm256_set1_pd(r[3]), r4 = _mm256_set1_pd(r[4]), r5 = _mm256_set1_pd(r[5]);
    const __m256d r6 = _mm256_set1_pd(r[6]), r7 = _mm256_set1_pd(r[7]), r8 = _mm256_set1_pd(r[8]);
    const __m256d t0 = _mm256_set1_pd(t[0]), t1 = _mm256_set1_pd(t[1]), t2 = _mm256_set1_pd(t[2]);
    const __m256d vfx = _mm256_set1_pd(fx), vfy = _mm256_set1_pd(fy);
    const __m256d vox = _mm256_set1_pd(ox), voy = _mm256_set1_pd(oy);

    std::size_t i = 0;
    for (; i + 4 <= n_points; i += 4) {
        const double* p = points_xyz + 3 * i;
        const __m256d px = _mm256_set_pd(p[9], p[6], p[3], p[0]);
        const __m256d py = _mm256_set_pd(p[10], p[7], p[4], p[1]);
        const __m256d pz = _mm256_set_pd(p[11], p[8], p[5], p[2]);

        const __m256d cx = _mm256_add_pd(
            _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r0, px), _mm256_mul_pd(r1, py)),
                          _mm256_mul_pd(r2, pz)),
            t0);
        const __m256d cy = _mm256_add_pd(
            _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r3, px), _mm256_mul_pd(r4, py)),
                          _mm256_mul_pd(r5, pz)),
            t1);
        const __m256d cz = _mm256_add_pd(
            _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r6, px), _mm256_mul_pd(r7, py)),
                          _mm256_mul_pd(r8, pz)),
            t2);

        _mm256_storeu_pd(z_out + i, cz);
        const __m256d u = _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(vfx, cx), cz), vox);
        const __m256d v = _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(vfy, cy), cz), voy);

        // Interleave u/v back to (u0,v0,u1,v1,...).
        alignas(32) double ubuf[4], vbuf[4];
        _mm256_store_pd(ubuf, u);
        _mm256_store_pd(vbuf, v);
        for (int j = 0; j < 4; ++j) {
            uv_out[2 * (i + j) + 0] = ubuf[j];
            uv_out[2 * (i + j) + 1] = vbuf[j];
        }
    }
    for (; i < n_points; ++i) {
        const double px = points_xyz[3 * i + 0];
        const double py = points_xyz[3 * i + 1];
        const double pz = points_xyz[3 * i + 2];
        const double cx = r[0] * px + r[1] * py + r[2] * pz + t[0];
        const double cy = r[3] * px + r[4] * py + r[5] * pz + t[1];
        const double cz = r[6] * px + r[7] * py + r[8] * pz + t[2];
        z_out[i] = cz;
        uv_out[2 * i + 0] = fx * cx / cz + ox;
        uv_out[2 * i + 1] = fy * cy / cz + oy;
    }
}

}  // namespace

const Kernels* avx2_kernels_impl() {
    static const Kernels k = {
        sum_sq_diff_avx2,
        sum_norm3_diff_avx2,
        epipolar_sym_dist_sq_avx2,
        project_points_avx2,
        "avx2",
    };
    return &k;
}

}  // namespace ms::simd
