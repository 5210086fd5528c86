#ifndef MS_EPIPOLAR_HPP
#define MS_EPIPOLAR_HPP

#include <cstdint>
#include <vector>

#include "ms/geom.hpp"

namespace ms {

/// Index-matched point correspondences between two views. Pair i is usable
/// only when visible[i] is true.
struct CorrespondenceSet {
    std::vector<Vec2> s1;
    std::vector<Vec2> s2;
    std::vector<bool> visible;

    size_t size() const { return s1.size(); }
    size_t visible_count() const;
};

/// Rank-2, Frobenius-normalized fundamental matrix with x2' F x1 = 0.
struct FundamentalMatrix {
    Mat3 f = Mat3::Zero();
};

/// Essential matrix projected onto the manifold (singular values 1, 1, 0).
struct EssentialMatrix {
    Mat3 e = Mat3::Zero();
};

/// Relative camera motion across a transition: x_head = r_delta * x_tail + s * t_dir
/// for some unrecoverable scale s.
struct RelativePose {
    Mat3 r_delta = Mat3::Identity();
    Vec3 t_dir = Vec3::UnitZ();
    int inlier_count = 0;
    std::vector<bool> inlier_mask;
};

struct RansacConfig {
    int iterations = 2048;  // upper bound; adaptive confidence exit applies
    double inlier_threshold_px = 2.0;
    std::uint64_t seed = 0;
};

/// Normalized eight-point algorithm: builds the N x 9 constraint matrix from
/// Hartley-normalized coordinates, takes the null vector via SVD, enforces
/// rank 2, denormalizes, and scales to unit Frobenius norm.
/// Throws InputError with fewer than 8 visible pairs or a degenerate
/// configuration.
FundamentalMatrix eight_point(const CorrespondenceSet& c, const Intrinsics& k);

/// E = K' F K, then projected to singular values (1, 1, 0).
EssentialMatrix to_essential(const FundamentalMatrix& f, const Intrinsics& k);

/// SVD decomposition of E into the four (R, t) candidates; the returned pose is
/// the one placing the majority of midpoint-triangulated correspondences at
/// positive depth in both views. Throws InputError when no candidate wins.
RelativePose decompose_essential(const EssentialMatrix& e, const CorrespondenceSet& c,
                                 const Intrinsics& k);

/// Robust relative pose: RANSAC over 8-point samples scored by symmetric
/// epipolar distance, followed by a refit on the winning inlier set.
/// Deterministic for a fixed cfg.seed.
RelativePose ransac_relative_pose(const CorrespondenceSet& c, const Intrinsics& k,
                                  const RansacConfig& cfg = {});

/// Symmetric epipolar distance (pixels) of one correspondence under F.
double symmetric_epipolar_distance(const Mat3& f, const Vec2& p1, const Vec2& p2);

struct YawConsensusConfig {
    double inlier_threshold_px = 4.0;
    double grid_step_deg = 0.5;
};

/// Yaw-restricted relative rotation consensus: sweeps the Y-axis rotation,
/// solving the translation direction linearly at each candidate, and keeps the
/// angle with the largest epipolar-inlier consensus (ties broken by robust
/// residual). Immune to the coplanar-point ambiguity that defeats the
/// unrestricted eight-point solve on human keypoints. Deterministic.
RelativePose yaw_consensus_pose(const CorrespondenceSet& c, const Intrinsics& k,
                                const YawConsensusConfig& cfg = {});

/// All near-tied local maxima of the yaw consensus (best first). Coplanar
/// correspondences admit a conjugate yaw solution; callers with external
/// continuity information pick among these.
std::vector<RelativePose> yaw_consensus_candidates(const CorrespondenceSet& c,
                                                   const Intrinsics& k,
                                                   const YawConsensusConfig& cfg = {},
                                                   int max_candidates = 4);

}  // namespace ms

#endif
