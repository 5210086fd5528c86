#ifndef MS_METRICS_HPP
#define MS_METRICS_HPP

#include <vector>

#include "ms/align.hpp"
#include "ms/geom.hpp"
#include "ms/traj.hpp"

namespace ms {

/// Similarity transform x -> scale * rotation * x + translation.
struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
};

/// Predicted and ground-truth motion over the same frames.
struct MotionPair {
    std::vector<SkeletonFrame> pred_joints;
    std::vector<SkeletonFrame> truth_joints;
    std::vector<BodyState> pred_states;
    std::vector<BodyState> truth_states;
    double fps = 30.0;
};

struct FootSlidingResult {
    double cm = 0.0;
    bool no_contact = false;
};

struct RpeResult {
    double trans_m = 0.0;
    double rot_deg = 0.0;
};

/// Umeyama closed form: the similarity minimizing sum |s R a_i + t - b_i|^2.
/// Throws InputError for fewer than 3 points or a degenerate (collinear) set.
SimilarityTransform procrustes_align(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                                     bool with_scale = true);

/// Per-frame Procrustes-aligned mean joint error, millimeters.
double pa_mpjpe(const MotionPair& pair);

/// Rigid (scale = 1) per-chunk alignment, then mean joint error, millimeters.
double wa_mpjpe(const MotionPair& pair, int chunk = 100);

/// Rigid alignment of the first chunk only, evaluated globally, millimeters.
double w_mpjpe(const MotionPair& pair, int chunk = 100);

/// Mean root translation error (m) after first-frame yaw+translation alignment.
double rte(const MotionPair& pair);

/// Mean root orientation geodesic error (deg) after the same alignment.
double roe(const MotionPair& pair);

/// Mean third-difference magnitude of joint positions, in 10 m/s^3 units.
double jitter(const std::vector<SkeletonFrame>& motion);

/// Mean horizontal displacement (cm) of the contacting foot joints (ankle and
/// toe) between consecutive contact frames.
FootSlidingResult foot_sliding(const std::vector<SkeletonFrame>& motion,
                               const ContactState& contacts);

/// RMSE of camera centers after similarity alignment, meters. Falls back to
/// translation-only alignment when the trajectory is degenerate (e.g. a static
/// camera).
double ate(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& truth);

/// Mean relative-pose error over frame pairs (t, t+delta).
RpeResult rpe(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& truth,
              int delta = 1);

}  // namespace ms

#endif
