#ifndef MS_SYNTH_HPP
#define MS_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ms/align.hpp"
#include "ms/ba.hpp"
#include "ms/geom.hpp"
#include "ms/shotdet.hpp"
#include "ms/traj.hpp"

namespace ms {

enum class MotionKind { kWalkCircle, kWalkLine, kFigureEight, kIdle };

MotionKind motion_kind_from_string(const std::string& s);
std::string motion_kind_to_string(MotionKind k);

struct SceneSpec {
    std::uint64_t seed = 0;
    int duration_frames = 300;
    double fps = 30.0;
    MotionKind motion_kind = MotionKind::kWalkCircle;
    int camera_count = 4;
    int shot_count = 2;  // number of shots; valid values 2, 3, 4
    int static_point_count = 80;
    double keypoint_noise_px = 0.0;
    double outlier_fraction = 0.0;
    double bbox_jitter = 0.0;  // fractional jitter of each bbox side
    int moving_track_count = 0;
    int min_shot_len = 30;
    double image_width = 1920.0;
    double image_height = 1080.0;
};

/// Everything the generator knows about a scene: the exact world motion, the
/// cameras, the observations the pipeline sees, and the per-shot initial body
/// states expressed in each shot's view-aligned frame.
struct GroundTruthBundle {
    SceneSpec spec;
    Intrinsics intrinsics;
    std::vector<BodyState> motion;
    std::vector<SkeletonFrame> skeletons;
    std::vector<std::vector<CameraPose>> cameras_per_shot;
    std::vector<CameraPose> active_camera;
    std::vector<double> camera_azimuths;  // per shot, radians
    ShotSegmentation segmentation;
    std::vector<FrameObservation> observations;
    std::vector<PointTrack> tracks;
    std::vector<bool> truth_dynamic;
    ContactState contact_schedule;
    std::vector<std::vector<BodyState>> view_states;
};

/// Deterministic scene synthesis; throws InputError for infeasible specs
/// (duration too short for the shot count, shot_count outside {2,3,4}).
GroundTruthBundle generate(const SceneSpec& spec);

/// Training-style corruption: a uniform([0, yaw_max_rad]) yaw offset over one
/// contiguous random segment of the sequence plus Gaussian joint perturbations
/// at random (frame, joint) positions.
std::vector<BodyState> inject_noise(const std::vector<BodyState>& motion, std::uint64_t seed,
                                    double yaw_max_rad, double pose_noise_rad);

/// Single-camera orbit fixture for bundle adjustment: a camera circling a
/// static point cloud, optionally contaminated by a moving track cluster with
/// per-frame masks covering it.
struct OrbitSpec {
    std::uint64_t seed = 0;
    int n_frames = 60;
    double fps = 30.0;
    int static_point_count = 40;
    int moving_track_count = 0;
    double orbit_deg_per_frame = 0.8;
    double keypoint_noise_px = 0.0;
};

struct OrbitBundle {
    Intrinsics intrinsics;
    std::vector<CameraPose> cameras;
    std::vector<PointTrack> tracks;
    std::vector<std::optional<BBox>> masks;
    std::vector<bool> truth_dynamic;
};

OrbitBundle generate_orbit(const OrbitSpec& spec);

/// Ring camera with zero pitch: position on a circle of `radius` at `height`,
/// looking at (0, height, 0).
CameraPose ring_camera(double azimuth, double radius = 4.0, double height = 1.5);

}  // namespace ms

#endif
