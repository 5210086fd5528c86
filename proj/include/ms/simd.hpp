#ifndef MS_SIMD_HPP
#define MS_SIMD_HPP

#include <cstddef>

namespace ms::simd {

// Data-parallel inner-loop kernels. Two implementations exist: a scalar
// reference and an AVX2 variant; the active one is chosen once at startup
// from CPU features, overridable via MOTIONSTITCH_SIMD=scalar|avx2|auto.
// Per-element kernels are arithmetic-identical across variants; reductions
// may differ in association order only.
struct Kernels {
    // sum over i of (a[i] - b[i])^2.
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);

    // a, b are packed xyz triples; returns sum over points of |a_i - b_i|.
    double (*sum_norm3_diff)(const double* a, const double* b, std::size_t n_points);

    // Squared symmetric epipolar distance of each correspondence (x1,y1)<->(x2,y2)
    // under fundamental matrix f (row-major 3x3): point-to-epiline distance
    // squared, summed over both images.
    void (*epipolar_sym_dist_sq)(const double f[9], const double* x1, const double* y1,
                                 const double* x2, const double* y2, std::size_t n,
                                 double* out);

    // Batch pinhole projection of packed xyz world points through x_cam = r*x + t.
    // Writes interleaved (u, v) pairs and the camera-frame depth of each point;
    // callers must check depths before trusting uv.
    void (*project_points)(double fx, double fy, double ox, double oy, const double r[9],
                           const double t[3], const double* points_xyz, std::size_t n_points,
                           double* uv_out, double* z_out);

    const char* name;
};

/// Active kernel set (runtime-dispatched, resolved on first call).
const Kernels& kernels();

/// Scalar reference implementation, always available (for equivalence tests).
const Kernels& scalar_kernels();

/// AVX2 implementation, or nullptr when not compiled in / not supported.
const Kernels* avx2_kernels_if_supported();

}  // namespace ms::simd

#endif
