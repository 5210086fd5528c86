#include <cmath>
#include <cstddef>

#include "ms/simd.hpp"

namespace ms::simd {
namespace {

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double sum_norm3_diff_scalar(const double* a, const double* b, std::size_t n_points) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
        const double dx = a[3 * i + 0] - b[3 * i + 0];
        const double dy = a[3 * i + 1] - b[3 * i + 1];
        const double dz = a[3 * i + 2] - b[3 * i + 2];
        acc += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return acc;
}

void epipolar_sym_dist_sq_scalar(const double f[9], const double* x1, const double* y1,
                                 const double* x2, const double* y2, std::size_t n,
                                 double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        // Epiline in image 2: F * (x1, y1, 1).
        const double a2 = f[0] * x1[i] + f[1] * y1[i] + f[2];
        const double b2 = f[3] * x1[i] + f[4] * y1[i] + f[5];
        const double c2 = f[6] * x1[i] + f[7] * y1[i] + f[8];
        // Epiline in image 1: F' * (x2, y2, 1); only the direction terms matter.
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

void project_points_scalar(double fx, double fy, double ox, double oy, const double r[9],
                           const double t[3], const double* points_xyz, std::size_t n_points,
                           double* uv_out, double* z_out) {
    for (std::size_t i = 0; i < n_points; ++i) {
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

const Kernels& scalar_kernels() {
    static const Kernels k = {
        sum_sq_diff_scalar,
        sum_norm3_diff_scalar,
        epipolar_sym_dist_sq_scalar,
        project_points_scalar,
        "scalar",
    };
    return k;
}

}  // namespace ms::simd
