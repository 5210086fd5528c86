#include <Eigen/Dense>

#include "ms/synth.hpp"

#include <algorithm>
#include <cmath>

#include "ms/errors.hpp"
#include "ms/rng.hpp"

namespace ms {

MotionKind motion_kind_from_string(const std::string& s) {
    if (s == "walk_circle") return MotionKind::kWalkCircle;
    if (s == "walk_line") return MotionKind::kWalkLine;
    if (s == "figure_eight") return MotionKind::kFigureEight;
    if (s == "idle") return MotionKind::kIdle;
    throw InputError("unknown motion kind '" + s +
                     "' (valid: walk_circle, walk_line, figure_eight, idle)");
}

std::string motion_kind_to_string(MotionKind k) {
    switch (k) {
        case MotionKind::kWalkCircle: return "walk_circle";
        case MotionKind::kWalkLine: return "walk_line";
        case MotionKind::kFigureEight: return "figure_eight";
        case MotionKind::kIdle: return "idle";
    }
    return "walk_circle";
}

CameraPose ring_camera(double azimuth, double radius, double height) {
    const Vec3 c(radius * std::sin(azimuth), height, radius * std::cos(azimuth));
    const Vec3 target(0.0, height, 0.0);
    const Vec3 up(0.0, 1.0, 0.0);

    const Vec3 z = (target - c).normalized();
    Vec3 x = z.cross(up);
    if (x.norm() < 1e-9) x = Vec3(1, 0, 0);
    x.normalize();
    const Vec3 y = z.cross(x);  // image y grows downward

    Mat3 r;
    r.row(0) = x.transpose();
    r.row(1) = y.transpose();
    r.row(2) = z.transpose();
    return CameraPose(r, -(r * c));
}

namespace {

constexpr double kRingRadius = 4.0;
constexpr double kRingHeight = 1.5;
constexpr double kWalkRootHeight = 0.90;
constexpr double kIdleRootHeight = 0.93;
constexpr double kAnkleRest = 0.08;
constexpr double kHipLateral = 0.09;
constexpr double kThigh = 0.40;
constexpr double kShin = 0.42;
constexpr double kCycleSeconds = 1.0;
constexpr double kContactDuty = 0.55;
constexpr double kSwingHeight = 0.14;

struct PathSample {
    Vec3 pos;       // root position before bobbing, y = nominal root height
    double yaw;     // heading
};

// Root path and heading for each motion kind; paths stay within ~1.6 m of the
// origin so every ring camera keeps the subject in frame.
PathSample sample_path(MotionKind kind, double t_sec, double root_height) {
    PathSample s;
    switch (kind) {
        case MotionKind::kWalkCircle: {
            const double radius = 1.4;
            const double speed = 0.7;
            const double w = speed / radius;
            const double a = w * t_sec;
            s.pos = Vec3(radius * std::sin(a), root_height, radius * std::cos(a));
            // Tangent direction (derivative), Y-up heading.
            const Vec3 d(radius * w * std::cos(a), 0, -radius * w * std::sin(a));
            s.yaw = std::atan2(d.x(), d.z());
            break;
        }
        case MotionKind::kWalkLine: {
            const double speed = 0.15;  // slow enough to stay in frame
            s.pos = Vec3(-1.4 + speed * t_sec, root_height, 0.4);
            s.yaw = std::atan2(1.0, 0.0);
            break;
        }
        case MotionKind::kFigureEight: {
            const double a = 1.3, w = 0.45;
            const double th = w * t_sec;
            s.pos = Vec3(a * std::sin(th), root_height, a * std::sin(th) * std::cos(th));
            const Vec3 d(a * w * std::cos(th), 0, a * w * std::cos(2 * th));
            s.yaw = std::atan2(d.x(), d.z());
            break;
        }
        case MotionKind::kIdle: {
            s.pos = Vec3(0.03 * std::sin(0.9 * t_sec), root_height, 0.02 * std::sin(0.6 * t_sec));
            s.yaw = 0.0;
            break;
        }
    }
    return s;
}

// Minimal rotation taking direction `from` to direction `to`.
Mat3 rotation_between(const Vec3& from, const Vec3& to) {
    const Vec3 f = from.normalized();
    const Vec3 t = to.normalized();
    const double c = std::clamp(f.dot(t), -1.0, 1.0);
    if (c > 1.0 - 1e-12) return Mat3::Identity();
    if (c < -1.0 + 1e-12) {
        Vec3 axis = f.cross(Vec3::UnitX());
        if (axis.norm() < 1e-6) axis = f.cross(Vec3::UnitY());
        axis.normalize();
        return axis_angle_to_matrix(AxisAngle(kPi * axis));
    }
    const Vec3 axis = f.cross(t).normalized();
    return axis_angle_to_matrix(AxisAngle(std::acos(c) * axis));
}

Mat3 rot_x(double a) { return axis_angle_to_matrix(AxisAngle(a, 0, 0)); }
Mat3 rot_z(double a) { return axis_angle_to_matrix(AxisAngle(0, 0, a)); }

struct GaitFrame {
    BodyState state;
    bool left_contact = false;
    bool right_contact = false;
};

// Builds one frame of the analytic gait: root from the path, legs from
// two-bone IK onto planted/swinging ankle targets, arms from sinusoids.
class GaitBuilder {
  public:
    GaitBuilder(MotionKind kind, int n_frames, double fps)
        : kind_(kind), n_(n_frames), fps_(fps) {
        root_height_ = (kind == MotionKind::kIdle) ? kIdleRootHeight : kWalkRootHeight;
        build_schedule();
        build_footholds();
    }

    GaitFrame frame(int t) const {
        const double ts = static_cast<double>(t) / fps_;
        const PathSample path = sample_path(kind_, ts, root_height_);
        const double phase = cycle_phase(t);

        GaitFrame out;
        out.left_contact = left_contact_[static_cast<size_t>(t)];
        out.right_contact = right_contact_[static_cast<size_t>(t)];

        BodyState& st = out.state;
        const double bob = (kind_ == MotionKind::kIdle)
                               ? 0.0
                               : -0.02 * 0.5 * (1.0 - std::cos(4.0 * kPi * phase));
        st.translation = path.pos + Vec3(0, bob, 0);
        const Mat3 root = yaw_matrix(path.yaw);
        st.root_orient = matrix_to_axis_angle(root);

        // Legs via IK onto the precomputed ankle trajectories.
        solve_leg(st, root, t, /*left=*/true);
        solve_leg(st, root, t, /*left=*/false);

        // Ankle world orientation pinned to the heading so feet stay flat.
        fix_ankles(st, root, t);

        // Arms: hang plus counter-swing; slight constant elbow flex.
        const double swing = (kind_ == MotionKind::kIdle) ? 0.04 : 0.25;
        const double sw = swing * std::cos(2.0 * kPi * phase);
        st.body_pose[kLeftShoulder - 1] = matrix_to_axis_angle(rot_x(sw) * rot_z(-1.15));
        st.body_pose[kRightShoulder - 1] = matrix_to_axis_angle(rot_x(-sw) * rot_z(1.15));
        st.body_pose[kLeftElbow - 1] = matrix_to_axis_angle(rot_x(0.35));
        st.body_pose[kRightElbow - 1] = matrix_to_axis_angle(rot_x(0.35));

        // Gentle spine sway at step frequency.
        const double sway = (kind_ == MotionKind::kIdle) ? 0.01 : 0.03;
        st.body_pose[kSpine1 - 1] = AxisAngle(0, 0, sway * std::sin(2.0 * kPi * phase));
        st.body_pose[kSpine2 - 1] = AxisAngle(0, 0, -0.5 * sway * std::sin(2.0 * kPi * phase));
        return out;
    }

  private:
    double cycle_phase(int t) const {
        const double p = static_cast<double>(t) / fps_ / kCycleSeconds;
        return p - std::floor(p);
    }

    void build_schedule() {
        left_contact_.resize(static_cast<size_t>(n_));
        right_contact_.resize(static_cast<size_t>(n_));
        for (int t = 0; t < n_; ++t) {
            if (kind_ == MotionKind::kIdle) {
                left_contact_[static_cast<size_t>(t)] = true;
                right_contact_[static_cast<size_t>(t)] = true;
                continue;
            }
            const double p = cycle_phase(t);
            left_contact_[static_cast<size_t>(t)] = p < kContactDuty;
            const double q = p < 0.5 ? p + 0.5 : p - 0.5;
            right_contact_[static_cast<size_t>(t)] = q < kContactDuty;
        }
    }

    // Planted ankle position of a stance interval: root path at the interval
    // midpoint plus the lateral hip offset rotated by the heading there.
    Vec3 foothold_for(int mid_frame, bool left) const {
        const double ts = static_cast<double>(mid_frame) / fps_;
        const PathSample p = sample_path(kind_, ts, root_height_);
        const double side = left ? 1.0 : -1.0;
        const Vec3 lateral = yaw_matrix(p.yaw) * Vec3(side * kHipLateral, 0, 0);
        return Vec3(p.pos.x() + lateral.x(), kAnkleRest, p.pos.z() + lateral.z());
    }

    void build_footholds() {
        for (int side = 0; side < 2; ++side) {
            const bool left = side == 0;
            const std::vector<bool>& contact = left ? left_contact_ : right_contact_;
            std::vector<Vec3>& ankle = left ? left_ankle_ : right_ankle_;
            ankle.resize(static_cast<size_t>(n_));

            // Stance intervals.
            struct Iv {
                int a, b;
                Vec3 plant;
            };
            std::vector<Iv> ivs;
            int t = 0;
            while (t < n_) {
                if (!contact[static_cast<size_t>(t)]) {
                    ++t;
                    continue;
                }
                int e = t;
                while (e < n_ && contact[static_cast<size_t>(e)]) ++e;
                ivs.push_back({t, e, foothold_for((t + e) / 2, left)});
                t = e;
            }
            if (ivs.empty()) {
                for (int f = 0; f < n_; ++f) ankle[static_cast<size_t>(f)] = foothold_for(f, left);
                continue;
            }

            for (size_t k = 0; k < ivs.size(); ++k) {
                for (int f = ivs[k].a; f < ivs[k].b; ++f) {
                    ankle[static_cast<size_t>(f)] = ivs[k].plant;
                }
                // Swing to the next foothold (or extrapolate at the end).
                const int sw_a = ivs[k].b;
                const int sw_b = (k + 1 < ivs.size()) ? ivs[k + 1].a : n_;
                if (sw_a >= n_) break;
                const Vec3 from = ivs[k].plant;
                const Vec3 to = (k + 1 < ivs.size()) ? ivs[k + 1].plant
                                                     : foothold_for(std::min(n_ - 1, sw_b), left);
                // Linear horizontal travel keeps every swing sample clearly
                // faster than the contact-velocity gate.
                const double len = static_cast<double>(sw_b - sw_a + 1);
                for (int f = sw_a; f < sw_b; ++f) {
                    const double u = static_cast<double>(f - sw_a + 1) / len;
                    Vec3 p = from + u * (to - from);
                    p.y() = kAnkleRest + kSwingHeight * std::sin(kPi * u);
                    ankle[static_cast<size_t>(f)] = p;
                }
            }
            // Frames before the first interval (sequence starts mid-swing).
            for (int f = 0; f < ivs.front().a; ++f) {
                ankle[static_cast<size_t>(f)] = ivs.front().plant;
            }
        }
    }

    void solve_leg(BodyState& st, const Mat3& root, int t, bool left) const {
        const int hip_j = left ? kLeftHip : kRightHip;
        const int knee_j = left ? kLeftKnee : kRightKnee;
        const Vec3 hip = st.translation + root * skeleton_offsets()[static_cast<size_t>(hip_j)];
        const Vec3 target =
            left ? left_ankle_[static_cast<size_t>(t)] : right_ankle_[static_cast<size_t>(t)];

        Vec3 d = target - hip;
        double dist = d.norm();
        const double dmax = kThigh + kShin - 1e-4;
        const double dmin = std::abs(kThigh - kShin) + 1e-4;
        dist = std::clamp(dist, dmin, dmax);
        const Vec3 u = d.normalized();

        // Law of cosines; knee displaced toward the heading direction.
        const double cos_alpha =
            std::clamp((kThigh * kThigh + dist * dist - kShin * kShin) / (2.0 * kThigh * dist),
                       -1.0, 1.0);
        const double alpha = std::acos(cos_alpha);
        const Vec3 forward = root * Vec3(0, 0, 1);
        Vec3 e2 = forward - forward.dot(u) * u;
        if (e2.norm() < 1e-9) e2 = root * Vec3(0, 1, 0) - (root * Vec3(0, 1, 0)).dot(u) * u;
        e2.normalize();
        const Vec3 thigh_dir = std::cos(alpha) * u + std::sin(alpha) * e2;

        const Vec3 knee = hip + kThigh * thigh_dir;
        const Vec3 shin_dir = (hip + dist * u - knee).normalized();

        // Twist-minimal global orientations, then convert to chain-local.
        const Vec3 rest_dir(0, -1, 0);
        const Mat3 hip_global = rotation_between(root * rest_dir, thigh_dir) * root;
        const Mat3 knee_global = rotation_between(hip_global * rest_dir, shin_dir) * hip_global;

        st.body_pose[static_cast<size_t>(hip_j - 1)] =
            matrix_to_axis_angle(root.transpose() * hip_global);
        st.body_pose[static_cast<size_t>(knee_j - 1)] =
            matrix_to_axis_angle(hip_global.transpose() * knee_global);
    }

    void fix_ankles(BodyState& st, const Mat3& root, int t) const {
        (void)t;
        for (int side = 0; side < 2; ++side) {
            const bool left = side == 0;
            const int hip_j = left ? kLeftHip : kRightHip;
            const int knee_j = left ? kLeftKnee : kRightKnee;
            const int ankle_j = left ? kLeftAnkle : kRightAnkle;
            const Mat3 hip_global =
                root * axis_angle_to_matrix(st.body_pose[static_cast<size_t>(hip_j - 1)]);
            const Mat3 knee_global =
                hip_global * axis_angle_to_matrix(st.body_pose[static_cast<size_t>(knee_j - 1)]);
            // Ankle global orientation = heading yaw, so the toe offset stays flat.
            st.body_pose[static_cast<size_t>(ankle_j - 1)] =
                matrix_to_axis_angle(knee_global.transpose() * root);
        }
    }

    MotionKind kind_;
    int n_;
    double fps_;
    double root_height_ = kWalkRootHeight;
    std::vector<bool> left_contact_, right_contact_;
    std::vector<Vec3> left_ankle_, right_ankle_;
};

std::vector<int> sample_cuts(Rng& rng, int total, int shot_count, int min_len) {
    const int n_cuts = shot_count - 1;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<int> cuts;
        for (int i = 0; i < n_cuts; ++i) {
            cuts.push_back(min_len +
                           static_cast<int>(rng.uniform_index(
                               static_cast<std::uint64_t>(total - 2 * min_len + 1))));
        }
        std::sort(cuts.begin(), cuts.end());
        bool ok = true;
        for (int i = 1; i < n_cuts; ++i) {
            if (cuts[static_cast<size_t>(i)] - cuts[static_cast<size_t>(i - 1)] < min_len) ok = false;
        }
        if (ok) return cuts;
    }
    // Deterministic fallback: even spacing.
    std::vector<int> cuts;
    for (int i = 1; i < shot_count; ++i) cuts.push_back(i * total / shot_count);
    return cuts;
}

}  // namespace

GroundTruthBundle generate(const SceneSpec& spec) {
    if (spec.shot_count < 2 || spec.shot_count > 4) {
        throw InputError("scene spec: shot count must be one of {2, 3, 4}");
    }
    if (spec.camera_count < 2) {
        throw InputError("scene spec: camera_count must be >= 2");
    }
    if (spec.duration_frames < spec.shot_count * spec.min_shot_len) {
        throw InputError("scene spec: duration " + std::to_string(spec.duration_frames) +
                         " too short for " + std::to_string(spec.shot_count) + " shots of >= " +
                         std::to_string(spec.min_shot_len) + " frames");
    }
    if (spec.outlier_fraction < 0.0 || spec.outlier_fraction >= 1.0) {
        throw InputError("scene spec: outlier_fraction must be in [0, 1)");
    }

    Rng rng(spec.seed);
    Rng rng_cuts = rng.fork(1);
    Rng rng_cams = rng.fork(2);
    Rng rng_points = rng.fork(3);
    Rng rng_noise = rng.fork(4);

    GroundTruthBundle b;
    b.spec = spec;
    b.intrinsics = Intrinsics::fallback(spec.image_width, spec.image_height);

    const int n = spec.duration_frames;

    // Ground-truth motion and contact schedule.
    GaitBuilder gait(spec.motion_kind, n, spec.fps);
    b.motion.reserve(static_cast<size_t>(n));
    b.contact_schedule.left_contact.resize(static_cast<size_t>(n));
    b.contact_schedule.right_contact.resize(static_cast<size_t>(n));
    b.contact_schedule.root_velocity.resize(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
        GaitFrame gf = gait.frame(t);
        b.motion.push_back(gf.state);
        b.contact_schedule.left_contact[static_cast<size_t>(t)] = gf.left_contact;
        b.contact_schedule.right_contact[static_cast<size_t>(t)] = gf.right_contact;
    }
    b.skeletons = forward_kinematics(b.motion, spec.fps);
    for (int t = 0; t < n; ++t) {
        const int t0 = std::max(0, t - 1), t1 = std::min(n - 1, t + 1);
        b.contact_schedule.root_velocity[static_cast<size_t>(t)] =
            (b.motion[static_cast<size_t>(t1)].translation -
             b.motion[static_cast<size_t>(t0)].translation) *
            spec.fps / static_cast<double>(t1 - t0);
    }

    // Shot segmentation and camera assignment (adjacent shots use different
    // cameras so every cut is a real viewpoint change).
    const std::vector<int> cuts = sample_cuts(rng_cuts, n, spec.shot_count, spec.min_shot_len);
    b.segmentation.transitions = cuts;
    b.segmentation.total_frames = n;

    const double ring_phase = rng_cams.uniform(0.0, 2.0 * kPi);
    std::vector<double> ring_azimuths(static_cast<size_t>(spec.camera_count));
    for (int i = 0; i < spec.camera_count; ++i) {
        ring_azimuths[static_cast<size_t>(i)] =
            ring_phase + 2.0 * kPi * static_cast<double>(i) / spec.camera_count;
    }
    std::vector<int> shot_camera(static_cast<size_t>(spec.shot_count));
    for (int s = 0; s < spec.shot_count; ++s) {
        int pick = static_cast<int>(rng_cams.uniform_index(static_cast<std::uint64_t>(spec.camera_count)));
        if (s > 0 && pick == shot_camera[static_cast<size_t>(s - 1)]) {
            pick = (pick + 1) % spec.camera_count;
        }
        shot_camera[static_cast<size_t>(s)] = pick;
        b.camera_azimuths.push_back(ring_azimuths[static_cast<size_t>(pick)]);
    }

    b.active_camera.resize(static_cast<size_t>(n));
    b.cameras_per_shot.resize(static_cast<size_t>(spec.shot_count));
    for (int s = 0; s < spec.shot_count; ++s) {
        const auto [fs, fe] = b.segmentation.shot_range(s);
        const CameraPose cam = ring_camera(b.camera_azimuths[static_cast<size_t>(s)], kRingRadius,
                                           kRingHeight);
        for (int f = fs; f < fe; ++f) b.active_camera[static_cast<size_t>(f)] = cam;
        b.cameras_per_shot[static_cast<size_t>(s)].assign(static_cast<size_t>(fe - fs), cam);
    }

    // Observations: keypoints, bbox, scene score, mask.
    b.observations.resize(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
        FrameObservation& obs = b.observations[static_cast<size_t>(t)];
        obs.frame_index = t;
        const CameraPose& cam = b.active_camera[static_cast<size_t>(t)];
        const int shot = b.segmentation.shot_of(t);
        obs.scene_score = (t > 0 && b.segmentation.shot_of(t - 1) != shot) ? 0.0 : 1.0;

        obs.keypoints.joints.resize(kSkeletonJointCount);
        double x_min = 1e30, y_min = 1e30, x_max = -1e30, y_max = -1e30;
        for (int j = 0; j < kSkeletonJointCount; ++j) {
            Keypoint2D& kp = obs.keypoints.joints[static_cast<size_t>(j)];
            const Vec3 p = b.skeletons[static_cast<size_t>(t)].joints[static_cast<size_t>(j)];
            const Vec3 pc = cam.r * p + cam.t;
            if (pc.z() <= 0.1) {
                kp = Keypoint2D{0, 0, false, 0.0};
                continue;
            }
            Vec2 uv(b.intrinsics.fx * pc.x() / pc.z() + b.intrinsics.ox,
                    b.intrinsics.fy * pc.y() / pc.z() + b.intrinsics.oy);
            const bool in_frame = uv.x() >= 0 && uv.x() <= spec.image_width && uv.y() >= 0 &&
                                  uv.y() <= spec.image_height;
            if (!in_frame) {
                kp = Keypoint2D{0, 0, false, 0.0};
                continue;
            }
            x_min = std::min(x_min, uv.x());
            y_min = std::min(y_min, uv.y());
            x_max = std::max(x_max, uv.x());
            y_max = std::max(y_max, uv.y());

            if (spec.keypoint_noise_px > 0.0) {
                uv.x() += rng_noise.normal(0.0, spec.keypoint_noise_px);
                uv.y() += rng_noise.normal(0.0, spec.keypoint_noise_px);
            }
            if (spec.outlier_fraction > 0.0 && rng_noise.uniform() < spec.outlier_fraction) {
                uv.x() = rng_noise.uniform(0.0, spec.image_width);
                uv.y() = rng_noise.uniform(0.0, spec.image_height);
            }
            kp = Keypoint2D{uv.x(), uv.y(), true, 1.0};
        }

        if (x_min > x_max) {
            // Subject fully out of view; keep a degenerate box at the image center.
            x_min = x_max = spec.image_width / 2;
            y_min = y_max = spec.image_height / 2;
        }
        // Pad by a fraction of the diagonal on both axes: a subject facing the
        // camera projects to a nearly collinear keypoint hull, and a sliver of a
        // box would make the bbox IoU meaningless.
        const double diag = std::sqrt((x_max - x_min) * (x_max - x_min) +
                                      (y_max - y_min) * (y_max - y_min));
        const double margin = 0.06 * diag + 12.0;
        BBox box(x_min - margin, y_min - margin, x_max + margin, y_max + margin);
        if (spec.bbox_jitter > 0.0) {
            const double jw = spec.bbox_jitter * box.width();
            const double jh = spec.bbox_jitter * box.height();
            box.x_min += rng_noise.uniform(-jw, jw);
            box.x_max += rng_noise.uniform(-jw, jw);
            box.y_min += rng_noise.uniform(-jh, jh);
            box.y_max += rng_noise.uniform(-jh, jh);
            if (box.x_min > box.x_max) std::swap(box.x_min, box.x_max);
            if (box.y_min > box.y_max) std::swap(box.y_min, box.y_max);
        }
        obs.bbox = box;
        const double mw = 0.10 * box.width(), mh = 0.10 * box.height();
        obs.mask_bbox = BBox(box.x_min - mw, box.y_min - mh, box.x_max + mw, box.y_max + mh);
    }

    // Static scene points: a far ring plus closer in-scene scatter.
    std::vector<Vec3> points;
    points.reserve(static_cast<size_t>(spec.static_point_count + spec.moving_track_count));
    for (int i = 0; i < spec.static_point_count; ++i) {
        const double az = rng_points.uniform(0.0, 2.0 * kPi);
        const bool far_ring = rng_points.uniform() < 0.6;
        const double radius = far_ring ? rng_points.uniform(6.0, 14.0) : rng_points.uniform(1.8, 3.4);
        const double height = rng_points.uniform(0.0, far_ring ? 4.0 : 2.5);
        points.emplace_back(radius * std::sin(az), height, radius * std::cos(az));
    }

    // Moving cluster: points rigidly attached to the subject root.
    std::vector<Vec3> cluster_offsets;
    for (int i = 0; i < spec.moving_track_count; ++i) {
        cluster_offsets.emplace_back(rng_points.uniform(-0.3, 0.3), rng_points.uniform(-0.8, 0.8),
                                     rng_points.uniform(-0.15, 0.15));
    }

    const int total_tracks = spec.static_point_count + spec.moving_track_count;
    b.tracks.resize(static_cast<size_t>(total_tracks));
    b.truth_dynamic.assign(static_cast<size_t>(total_tracks), false);
    for (int i = 0; i < total_tracks; ++i) {
        PointTrack& tr = b.tracks[static_cast<size_t>(i)];
        tr.id = i;
        tr.first_frame = 0;
        tr.positions.assign(static_cast<size_t>(n), Vec2::Zero());
        tr.visible.assign(static_cast<size_t>(n), false);
        const bool moving = i >= spec.static_point_count;
        b.truth_dynamic[static_cast<size_t>(i)] = moving;

        int first_visible = -1;
        for (int t = 0; t < n; ++t) {
            Vec3 p;
            if (moving) {
                const BodyState& st = b.motion[static_cast<size_t>(t)];
                p = st.translation + axis_angle_to_matrix(st.root_orient) *
                                         cluster_offsets[static_cast<size_t>(i - spec.static_point_count)];
            } else {
                p = points[static_cast<size_t>(i)];
            }
            const CameraPose& cam = b.active_camera[static_cast<size_t>(t)];
            const Vec3 pc = cam.r * p + cam.t;
            if (pc.z() <= 0.2) continue;
            Vec2 uv(b.intrinsics.fx * pc.x() / pc.z() + b.intrinsics.ox,
                    b.intrinsics.fy * pc.y() / pc.z() + b.intrinsics.oy);
            if (uv.x() < 0 || uv.x() > spec.image_width || uv.y() < 0 || uv.y() > spec.image_height) {
                continue;
            }
            if (spec.keypoint_noise_px > 0.0) {
                uv.x() += rng_noise.normal(0.0, spec.keypoint_noise_px);
                uv.y() += rng_noise.normal(0.0, spec.keypoint_noise_px);
            }
            tr.positions[static_cast<size_t>(t)] = uv;
            tr.visible[static_cast<size_t>(t)] = true;
            if (first_visible < 0) first_visible = t;
        }
        tr.anchor_frame = std::max(first_visible, 0);
    }

    // Per-shot initial body states in each shot's view-aligned frame: the true
    // motion yawed by the camera-azimuth difference to shot 0, pivoted at the
    // shot's first-frame translation.
    b.view_states.resize(static_cast<size_t>(spec.shot_count));
    for (int s = 0; s < spec.shot_count; ++s) {
        const auto [fs, fe] = b.segmentation.shot_range(s);
        const Mat3 v = yaw_matrix(b.camera_azimuths[0] - b.camera_azimuths[static_cast<size_t>(s)]);
        const Vec3 pivot = b.motion[static_cast<size_t>(fs)].translation;
        auto& states = b.view_states[static_cast<size_t>(s)];
        states.reserve(static_cast<size_t>(fe - fs));
        for (int f = fs; f < fe; ++f) {
            BodyState st = b.motion[static_cast<size_t>(f)];
            st.root_orient =
                matrix_to_axis_angle(v * axis_angle_to_matrix(st.root_orient));
            st.translation = v * (st.translation - pivot) + pivot;
            states.push_back(st);
        }
    }

    return b;
}

std::vector<BodyState> inject_noise(const std::vector<BodyState>& motion, std::uint64_t seed,
                                    double yaw_max_rad, double pose_noise_rad) {
    if (yaw_max_rad < 0.0) {
        throw InputError("inject_noise: yaw_max_rad must be >= 0");
    }
    std::vector<BodyState> out = motion;
    if (out.empty()) return out;
    Rng rng(seed ^ 0x9d2c5680ca876a1bULL);

    const int n = static_cast<int>(out.size());
    const int seg_start = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    const int seg_len =
        1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - seg_start)));
    const double yaw_off = rng.uniform(0.0, yaw_max_rad);
    if (yaw_off > 0.0) {
        const Mat3 y = yaw_matrix(yaw_off);
        for (int t = seg_start; t < seg_start + seg_len; ++t) {
            BodyState& st = out[static_cast<size_t>(t)];
            st.root_orient = matrix_to_axis_angle(y * axis_angle_to_matrix(st.root_orient));
        }
    }

    if (pose_noise_rad > 0.0) {
        for (int t = 0; t < n; ++t) {
            for (int j = 0; j < kBodyJointCount; ++j) {
                if (rng.uniform() >= 0.1) continue;  // sparse corruption
                Vec3 axis(rng.normal(), rng.normal(), rng.normal());
                if (axis.norm() < 1e-9) axis = Vec3::UnitY();
                axis.normalize();
                const double angle = rng.normal(0.0, pose_noise_rad);
                BodyState& st = out[static_cast<size_t>(t)];
                st.body_pose[static_cast<size_t>(j)] = matrix_to_axis_angle(
                    axis_angle_to_matrix(AxisAngle(angle * axis)) *
                    axis_angle_to_matrix(st.body_pose[static_cast<size_t>(j)]));
            }
        }
    }
    return out;
}

OrbitBundle generate_orbit(const OrbitSpec& spec) {
    Rng rng(spec.seed ^ 0x2545f4914f6cdd1dULL);
    OrbitBundle b;
    b.intrinsics = Intrinsics::fallback(1920.0, 1080.0);

    const int n = spec.n_frames;
    const double a0 = rng.uniform(0.0, 2.0 * kPi);
    b.cameras.reserve(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
        const double az = a0 + deg_to_rad(spec.orbit_deg_per_frame) * t;
        b.cameras.push_back(ring_camera(az, kRingRadius, kRingHeight));
    }

    // Rejection-sample static points visible through (almost) the whole orbit
    // so the requested track count is actually usable.
    std::vector<Vec3> points;
    int guard = 0;
    while (static_cast<int>(points.size()) < spec.static_point_count && guard++ < 100000) {
        const double az = rng.uniform(0.0, 2.0 * kPi);
        const bool far_ring = rng.uniform() < 0.5;
        const double radius = far_ring ? rng.uniform(6.0, 14.0) : rng.uniform(1.2, 3.2);
        const double height = rng.uniform(0.0, far_ring ? 4.0 : 2.5);
        const Vec3 p(radius * std::sin(az), height, radius * std::cos(az));
        int visible = 0;
        for (const CameraPose& cam : b.cameras) {
            const Vec3 pc = cam.r * p + cam.t;
            if (pc.z() <= 0.2) continue;
            const double u = b.intrinsics.fx * pc.x() / pc.z() + b.intrinsics.ox;
            const double v = b.intrinsics.fy * pc.y() / pc.z() + b.intrinsics.oy;
            if (u >= 0 && u <= 1920.0 && v >= 0 && v <= 1080.0) ++visible;
        }
        if (visible >= static_cast<int>(0.9 * n)) points.push_back(p);
    }

    std::vector<Vec3> cluster_offsets;
    for (int i = 0; i < spec.moving_track_count; ++i) {
        cluster_offsets.emplace_back(rng.uniform(-0.35, 0.35), rng.uniform(-0.7, 0.7),
                                     rng.uniform(-0.2, 0.2));
    }

    const int total = spec.static_point_count + spec.moving_track_count;
    b.tracks.resize(static_cast<size_t>(total));
    b.truth_dynamic.assign(static_cast<size_t>(total), false);
    b.masks.assign(static_cast<size_t>(n), std::nullopt);

    std::vector<Vec3> cluster_center(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
        const double u = static_cast<double>(t) / std::max(1, n - 1);
        cluster_center[static_cast<size_t>(t)] =
            Vec3(-1.2 + 2.4 * u, 1.0 + 0.1 * std::sin(6.0 * u), 0.5 - 1.0 * u);
    }

    for (int i = 0; i < total; ++i) {
        PointTrack& tr = b.tracks[static_cast<size_t>(i)];
        tr.id = i;
        tr.first_frame = 0;
        tr.positions.assign(static_cast<size_t>(n), Vec2::Zero());
        tr.visible.assign(static_cast<size_t>(n), false);
        const bool moving = i >= spec.static_point_count;
        b.truth_dynamic[static_cast<size_t>(i)] = moving;

        int first_visible = -1;
        for (int t = 0; t < n; ++t) {
            const Vec3 p = moving ? cluster_center[static_cast<size_t>(t)] +
                                        cluster_offsets[static_cast<size_t>(i - spec.static_point_count)]
                                  : points[static_cast<size_t>(i)];
            const CameraPose& cam = b.cameras[static_cast<size_t>(t)];
            const Vec3 pc = cam.r * p + cam.t;
            if (pc.z() <= 0.2) continue;
            Vec2 uv(b.intrinsics.fx * pc.x() / pc.z() + b.intrinsics.ox,
                    b.intrinsics.fy * pc.y() / pc.z() + b.intrinsics.oy);
            if (uv.x() < 0 || uv.x() > 1920.0 || uv.y() < 0 || uv.y() > 1080.0) continue;
            if (spec.keypoint_noise_px > 0.0) {
                uv.x() += rng.normal(0.0, spec.keypoint_noise_px);
                uv.y() += rng.normal(0.0, spec.keypoint_noise_px);
            }
            tr.positions[static_cast<size_t>(t)] = uv;
            tr.visible[static_cast<size_t>(t)] = true;
            if (first_visible < 0) first_visible = t;
        }
        tr.anchor_frame = std::max(first_visible, 0);
    }

    // Masks cover the projected moving cluster.
    for (int t = 0; t < n; ++t) {
        double x_min = 1e30, y_min = 1e30, x_max = -1e30, y_max = -1e30;
        bool any = false;
        for (int i = spec.static_point_count; i < total; ++i) {
            const PointTrack& tr = b.tracks[static_cast<size_t>(i)];
            if (!tr.visible[static_cast<size_t>(t)]) continue;
            any = true;
            x_min = std::min(x_min, tr.positions[static_cast<size_t>(t)].x());
            y_min = std::min(y_min, tr.positions[static_cast<size_t>(t)].y());
            x_max = std::max(x_max, tr.positions[static_cast<size_t>(t)].x());
            y_max = std::max(y_max, tr.positions[static_cast<size_t>(t)].y());
        }
        if (any) {
            b.masks[static_cast<size_t>(t)] = BBox(x_min - 25, y_min - 25, x_max + 25, y_max + 25);
        }
    }
    return b;
}

}  // namespace ms
