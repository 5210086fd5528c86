#ifndef MS_BA_HPP
#define MS_BA_HPP

#include <optional>
#include <vector>

#include "ms/geom.hpp"
#include "ms/shotdet.hpp"

namespace ms {

/// A tracked scene point. positions/visible are dense over the frame range the
/// track belongs to (index = frame - first_frame); positions are meaningful
/// exactly where visible.
struct PointTrack {
    int id = 0;
    int first_frame = 0;
    std::vector<Vec2> positions;
    std::vector<bool> visible;
    int anchor_frame = 0;      // first visible frame
    double inv_depth = 0.2;    // anchor-frame inverse depth (optimized)
    double confidence = 1.0;   // normalized track confidence, [0,1]
    bool dynamic = false;

    bool visible_at(int frame) const {
        const int i = frame - first_frame;
        return i >= 0 && i < static_cast<int>(visible.size()) && visible[static_cast<size_t>(i)];
    }
    const Vec2& position_at(int frame) const {
        return positions[static_cast<size_t>(frame - first_frame)];
    }
    int visible_count() const;
};

struct BAConfig {
    int window_size = 12;       // S_BA
    int gn_iters = 2;
    double damping = 1e-4;
    int min_track_len = 5;
    double confidence_threshold = 0.2;
    int max_step_rejects = 16;  // per iteration, before giving up on a better step
    int max_outer_rounds = 40;  // ba_solve calls per window in solve_sequence
    double outer_tol = 1e-12;   // relative cost change declaring a window converged
    double max_pose_step = 0.25;  // trust region: largest pose update per GN step (rad, m)
};

struct WindowObservation {
    int frame = 0;
    Vec2 pos = Vec2::Zero();
    double weight = 1.0;  // w_{ij,n}: per-edge normalized confidence weight
};

struct WindowTrack {
    int track_index = 0;   // index into the source track list
    int anchor_frame = 0;  // first visible frame inside the window
    Vec2 anchor_pos = Vec2::Zero();
    double inv_depth = 0.2;
    std::vector<WindowObservation> obs;  // frames != anchor
};

/// One sliding-window subproblem: poses over [start_frame, end_frame) with the
/// leading n_fixed poses held constant (gauge).
struct BAWindow {
    int start_frame = 0;
    int end_frame = 0;
    int s_ba = 12;
    int n_fixed = 1;
    std::vector<CameraPose> poses;
    std::vector<WindowTrack> tracks;
    double cost = 0.0;  // weighted squared reprojection cost after ba_solve
};

/// Zeroes visibility of track points that fall inside the per-frame mask
/// rectangle; tracks left with fewer than min_track_len visible frames are
/// marked dynamic (and thereby excluded from BA).
std::vector<PointTrack> mask_tracks(std::vector<PointTrack> tracks,
                                    const std::vector<std::optional<BBox>>& masks,
                                    int min_track_len = 5);

/// Per-coordinate Cauchy fit (median location, MAD scale) over each track's
/// windowed positions; returns the geometric-mean density per track normalized
/// so the best track in the window scores 1. Tracks visible in fewer than 3
/// window frames score 0.
std::vector<double> track_confidences(const std::vector<PointTrack>& tracks, int window_start,
                                      int window_end);

/// Builds the window subproblem: selects non-dynamic tracks with >= 2 visible
/// frames in [start, end), computes confidences and per-edge normalized weights.
/// init_poses must have end-start entries.
BAWindow make_window(const std::vector<PointTrack>& tracks, int start, int end,
                     const std::vector<CameraPose>& init_poses, const BAConfig& cfg,
                     int n_fixed = 1);

/// Gauss-Newton over poses and inverse depths: runs exactly cfg.gn_iters
/// iterations with Levenberg damping; a step that would increase the weighted
/// cost is rejected and retried with damping * 10. Throws UnderConstrainedError
/// when the window has fewer than 6 usable tracks or fewer than 2 frames.
BAWindow ba_solve(BAWindow window, const Intrinsics& k, const BAConfig& cfg);

/// Sliding-window solve over [start_frame, end_frame): windows of
/// window_size+1 frames advanced by window_size/2, gauge chained through the
/// overlap; the first pose of the output is exactly identity. Returns one pose
/// per frame.
std::vector<CameraPose> solve_sequence(const std::vector<PointTrack>& tracks,
                                       const std::vector<std::optional<BBox>>& masks,
                                       const Intrinsics& k, const BAConfig& cfg, int start_frame,
                                       int end_frame);

/// Reprojection residual of one (anchor pose, observing pose, inverse depth)
/// configuration and its analytic Jacobians with respect to the two 6-dof pose
/// perturbations (rotation, translation; applied as left increments) and the
/// inverse depth. Exposed for gradient verification.
Vec2 reprojection_residual(const CameraPose& pose_anchor, const CameraPose& pose_obs,
                           double inv_depth, const Vec2& anchor_px, const Vec2& obs_px,
                           const Intrinsics& k, Eigen::Matrix<double, 2, 6>* j_anchor = nullptr,
                           Eigen::Matrix<double, 2, 6>* j_obs = nullptr,
                           Eigen::Matrix<double, 2, 1>* j_depth = nullptr);

/// Applies a 6-dof left increment (rotation vector, translation) to a pose.
CameraPose apply_pose_delta(const CameraPose& g, const Eigen::Matrix<double, 6, 1>& delta);

}  // namespace ms

#endif
