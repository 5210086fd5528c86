#include "ms/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ms/align.hpp"
#include "ms/errors.hpp"
#include "ms/metrics.hpp"

namespace ms::pipeline {

using nlohmann::json;

namespace {

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

}  // namespace

void run_synth(const SceneSpec& spec, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const GroundTruthBundle b = generate(spec);
    const Paths paths{dir};

    io::ObservationsFile obs;
    obs.fps = spec.fps;
    obs.image_width = spec.image_width;
    obs.image_height = spec.image_height;
    obs.intrinsics = b.intrinsics;
    obs.observations = b.observations;
    io::write_observations(paths.observations(), obs);

    io::TracksFile tracks;
    tracks.fps = spec.fps;
    tracks.total_frames = spec.duration_frames;
    tracks.tracks = b.tracks;
    for (PointTrack& tr : tracks.tracks) tr.dynamic = false;  // unjudged input
    io::write_tracks(paths.tracks(), tracks);

    io::PosesFile view;
    view.fps = spec.fps;
    view.first_frame = 0;
    for (const auto& shot_states : b.view_states) {
        view.states.insert(view.states.end(), shot_states.begin(), shot_states.end());
    }
    io::write_poses(paths.view_poses(), view);

    io::PosesFile truth;
    truth.fps = spec.fps;
    truth.states = b.motion;
    io::write_poses(paths.truth_poses(), truth);

    io::CamerasFile cams;
    cams.fps = spec.fps;
    cams.intrinsics = b.intrinsics;
    cams.cameras = b.active_camera;
    io::write_cameras(paths.truth_cameras(), cams);

    io::TransitionsFile trans;
    trans.fps = spec.fps;
    trans.segmentation = b.segmentation;
    io::write_transitions(paths.truth_transitions(), trans);

    io::ContactsFile contacts;
    contacts.fps = spec.fps;
    contacts.contacts = b.contact_schedule;
    io::write_contacts(paths.truth_contacts(), contacts);

    {
        json scene;
        scene["seed"] = spec.seed;
        scene["duration_frames"] = spec.duration_frames;
        scene["fps"] = spec.fps;
        scene["motion_kind"] = motion_kind_to_string(spec.motion_kind);
        scene["camera_count"] = spec.camera_count;
        scene["shot_count"] = spec.shot_count;
        scene["static_point_count"] = spec.static_point_count;
        scene["keypoint_noise_px"] = spec.keypoint_noise_px;
        scene["outlier_fraction"] = spec.outlier_fraction;
        scene["bbox_jitter"] = spec.bbox_jitter;
        scene["moving_track_count"] = spec.moving_track_count;
        scene["min_shot_len"] = spec.min_shot_len;
        scene["image_width"] = spec.image_width;
        scene["image_height"] = spec.image_height;
        scene["camera_azimuths"] = b.camera_azimuths;
        scene["intrinsics"] = {{"fx", b.intrinsics.fx},
                               {"fy", b.intrinsics.fy},
                               {"ox", b.intrinsics.ox},
                               {"oy", b.intrinsics.oy}};
        std::ofstream out(paths.scene());
        out << scene.dump(2) << "\n";
    }
    {
        json manifest;
        manifest["seed"] = spec.seed;
        manifest["files"] = {"observations.jsonl", "tracks.jsonl",        "view_poses.jsonl",
                             "truth_poses.jsonl",  "truth_cameras.jsonl", "truth_transitions.jsonl",
                             "truth_contacts.jsonl", "scene.json",        "manifest.json"};
        std::ofstream out(paths.manifest());
        out << manifest.dump(2) << "\n";
    }
}

void run_detect(const Paths& paths, const PipelineConfig& cfg) {
    const io::ObservationsFile obs = io::read_observations(paths.observations());
    std::vector<FrameObservation> stream = obs.observations;
    const ShotSegmentation seg = detect_shots(stream, cfg.detect);

    io::TransitionsFile out;
    out.fps = obs.fps;
    out.segmentation = seg;
    io::write_transitions(paths.transitions(), out);
}

void run_calibrate(const Paths& paths, const PipelineConfig& cfg) {
    const io::ObservationsFile obs = io::read_observations(paths.observations());
    const io::TransitionsFile trans = io::read_transitions(paths.transitions());

    // Boundary root orientations provide a continuity hint used only to break
    // ties between conjugate consensus peaks (coplanar keypoints admit two
    // yaw interpretations; the true motion is orientation-continuous).
    std::vector<BodyState> view_states;
    if (file_exists(paths.view_poses())) {
        view_states = io::read_poses(paths.view_poses()).states;
    }

    io::RelPosesFile out;
    out.fps = obs.fps;
    for (size_t i = 0; i < trans.segmentation.transitions.size(); ++i) {
        const int t = trans.segmentation.transitions[i];
        if (t <= 0 || t >= static_cast<int>(obs.observations.size())) {
            throw InputError("calibrate: transition " + std::to_string(t) + " out of range");
        }
        const Keypoints2D& tail = obs.observations[static_cast<size_t>(t - 1)].keypoints;
        const Keypoints2D& head = obs.observations[static_cast<size_t>(t)].keypoints;
        if (tail.joint_count() != head.joint_count()) {
            throw InputError("calibrate: joint count mismatch at transition " + std::to_string(t));
        }

        // The subject keeps moving through the cut, so raw (t-1, t) pairs see
        // the body at two different instants. Compensate to first order by
        // extrapolating each side one frame at constant pixel velocity, giving
        // two same-instant correspondence sets across the same camera pair.
        const int n_frames = static_cast<int>(obs.observations.size());
        const auto joint = [&](int frame, int j) -> const Keypoint2D& {
            return obs.observations[static_cast<size_t>(frame)].keypoints.joints[static_cast<size_t>(j)];
        };
        CorrespondenceSet c;
        for (int j = 0; j < tail.joint_count(); ++j) {
            const Keypoint2D& a = tail.joints[static_cast<size_t>(j)];
            const Keypoint2D& b = head.joints[static_cast<size_t>(j)];

            // Tail view advanced to instant t.
            const bool fwd_ok = t >= 2 && a.visible && b.visible && joint(t - 2, j).visible;
            c.s1.emplace_back(fwd_ok ? 2 * a.u - joint(t - 2, j).u : 0.0,
                              fwd_ok ? 2 * a.v - joint(t - 2, j).v : 0.0);
            c.s2.emplace_back(b.u, b.v);
            c.visible.push_back(fwd_ok);

            // Head view rewound to instant t-1.
            const bool bwd_ok = t + 1 < n_frames && a.visible && b.visible &&
                                joint(t + 1, j).visible;
            c.s1.emplace_back(a.u, a.v);
            c.s2.emplace_back(bwd_ok ? 2 * b.u - joint(t + 1, j).u : 0.0,
                              bwd_ok ? 2 * b.v - joint(t + 1, j).v : 0.0);
            c.visible.push_back(bwd_ok);
        }
        if (c.visible_count() < 8) {
            // Degenerate fallback: the raw pair, without compensation.
            c = CorrespondenceSet{};
            for (int j = 0; j < tail.joint_count(); ++j) {
                const Keypoint2D& a = tail.joints[static_cast<size_t>(j)];
                const Keypoint2D& b = head.joints[static_cast<size_t>(j)];
                c.s1.emplace_back(a.u, a.v);
                c.s2.emplace_back(b.u, b.v);
                c.visible.push_back(a.visible && b.visible);
            }
        }

        // Human keypoints are frequently near-coplanar, which leaves the
        // unrestricted eight-point solve ambiguous; the orientation alignment
        // only consumes the Y-axis rotation anyway, so calibrate with the
        // yaw-restricted consensus.
        YawConsensusConfig ycfg;
        ycfg.inlier_threshold_px = std::max(cfg.ransac.inlier_threshold_px, 4.0);
        const std::vector<RelativePose> candidates =
            yaw_consensus_candidates(c, obs.intrinsics, ycfg);

        RelativePose rel = candidates.front();
        if (candidates.size() > 1 && static_cast<size_t>(t) < view_states.size()) {
            const Mat3 r_tail =
                axis_angle_to_matrix(view_states[static_cast<size_t>(t - 1)].root_orient);
            const Mat3 r_head =
                axis_angle_to_matrix(view_states[static_cast<size_t>(t)].root_orient);
            const double hint = yaw_angle(r_tail * r_head.transpose());
            double best_gap = 1e30;
            for (const RelativePose& cand : candidates) {
                if (cand.inlier_count + 2 < candidates.front().inlier_count) continue;
                double gap = std::abs(yaw_angle(cand.r_delta) - hint);
                if (gap > kPi) gap = 2 * kPi - gap;
                if (gap < best_gap) {
                    best_gap = gap;
                    rel = cand;
                }
            }
        }

        io::RelPoseRecord rec;
        rec.transition = t;
        rec.rotation = rel.r_delta;
        rec.t_dir = rel.t_dir;
        rec.inlier_count = rel.inlier_count;
        rec.yaw_deg = rad_to_deg(yaw_angle(rel.r_delta));
        out.rel_poses.push_back(rec);
    }
    io::write_rel_poses(paths.rel_poses(), out);
}

void run_ba(const Paths& paths, const PipelineConfig& cfg) {
    const io::ObservationsFile obs = io::read_observations(paths.observations());
    const io::TracksFile tracks = io::read_tracks(paths.tracks());
    const io::TransitionsFile trans = io::read_transitions(paths.transitions());

    std::vector<std::optional<BBox>> masks(obs.observations.size());
    for (size_t t = 0; t < obs.observations.size(); ++t) {
        masks[t] = obs.observations[t].mask_bbox;
    }

    io::CamerasFile out;
    out.fps = obs.fps;
    out.intrinsics = obs.intrinsics;
    out.cameras.reserve(static_cast<size_t>(trans.segmentation.total_frames));
    for (int s = 0; s < trans.segmentation.shot_count(); ++s) {
        const auto [fs, fe] = trans.segmentation.shot_range(s);
        const std::vector<CameraPose> shot_poses =
            solve_sequence(tracks.tracks, masks, obs.intrinsics, cfg.ba, fs, fe);
        out.cameras.insert(out.cameras.end(), shot_poses.begin(), shot_poses.end());
    }
    io::write_cameras(paths.cameras_est(), out);
}

void run_stitch(const Paths& paths, const PipelineConfig& cfg) {
    const io::PosesFile view = io::read_poses(paths.view_poses());
    const io::TransitionsFile trans = io::read_transitions(paths.transitions());
    const io::RelPosesFile rels = io::read_rel_poses(paths.rel_poses());

    if (static_cast<int>(view.states.size()) != trans.segmentation.total_frames) {
        throw InputError("stitch: pose count does not match total_frames");
    }
    if (rels.rel_poses.size() != trans.segmentation.transitions.size()) {
        throw InputError("stitch: need one relative pose per transition");
    }

    std::vector<ShotMotion> shots;
    for (int s = 0; s < trans.segmentation.shot_count(); ++s) {
        const auto [fs, fe] = trans.segmentation.shot_range(s);
        ShotMotion shot;
        shot.shot_index = s;
        shot.start_frame = fs;
        shot.end_frame = fe;
        shot.states.assign(view.states.begin() + fs, view.states.begin() + fe);
        shot.cameras.assign(static_cast<size_t>(fe - fs), CameraPose());
        shots.push_back(std::move(shot));
    }

    std::vector<RelativePose> rel_poses;
    for (const io::RelPoseRecord& rec : rels.rel_poses) {
        RelativePose rp;
        rp.r_delta = rec.rotation;
        rp.t_dir = rec.t_dir;
        rp.inlier_count = rec.inlier_count;
        rel_poses.push_back(rp);
    }

    const StitchedMotion stitched = stitch(shots, rel_poses, cfg.align_half_window);

    io::PosesFile out;
    out.fps = view.fps;
    out.states = stitched.states;
    io::write_poses(paths.stitched_poses(), out);

    json meta;
    json offsets = json::array();
    for (const Mat3& m : stitched.applied_offsets) {
        offsets.push_back(rad_to_deg(yaw_angle(m)));
    }
    meta["applied_offset_yaw_deg"] = std::move(offsets);
    meta["provenance"] = stitched.provenance;
    std::ofstream mout(paths.stitch_meta());
    mout << meta.dump(2) << "\n";
}

void run_refine(const Paths& paths, const PipelineConfig& cfg) {
    const io::PosesFile stitched = io::read_poses(paths.stitched_poses());

    StitchedMotion motion;
    motion.states = stitched.states;
    motion.provenance.assign(stitched.states.size(), 0);

    const std::vector<SkeletonFrame> skel = forward_kinematics(motion.states, stitched.fps);
    const ContactState contacts = detect_contacts(skel, cfg.contact);
    const StitchedMotion refined = refine_trajectory(motion, contacts, stitched.fps);

    io::PosesFile out;
    out.fps = stitched.fps;
    out.states = refined.states;
    io::write_poses(paths.refined_poses(), out);

    io::ContactsFile cfile;
    cfile.fps = stitched.fps;
    cfile.contacts = contacts;
    io::write_contacts(paths.contacts_est(), cfile);
}

std::vector<io::MetricRecord> run_eval(const Paths& paths, const PipelineConfig& cfg,
                                       const std::string& video_name,
                                       const std::string& pred_poses_path) {
    const std::string pred_path =
        pred_poses_path.empty() ? paths.refined_poses() : pred_poses_path;
    const io::PosesFile pred = io::read_poses(pred_path);
    const io::PosesFile truth = io::read_poses(paths.truth_poses());
    if (pred.states.size() != truth.states.size()) {
        throw InputError("eval: predicted and truth pose files disagree in length");
    }

    MotionPair pair;
    pair.fps = pred.fps;
    pair.pred_states = pred.states;
    pair.truth_states = truth.states;
    pair.pred_joints = forward_kinematics(pred.states, pred.fps);
    pair.truth_joints = forward_kinematics(truth.states, truth.fps);

    std::vector<io::MetricRecord> records;
    records.push_back({video_name, "pa_mpjpe", pa_mpjpe(pair), "mm"});
    records.push_back({video_name, "wa_mpjpe", wa_mpjpe(pair, cfg.metrics_wa_chunk), "mm"});
    records.push_back({video_name, "w_mpjpe", w_mpjpe(pair, cfg.metrics_wa_chunk), "mm"});
    records.push_back({video_name, "rte", rte(pair), "m"});
    records.push_back({video_name, "roe", roe(pair), "deg"});
    records.push_back({video_name, "jitter", jitter(pair.pred_joints), "10m/fps^3"});

    const ContactState pred_contacts = detect_contacts(pair.pred_joints, cfg.contact);
    const FootSlidingResult fs = foot_sliding(pair.pred_joints, pred_contacts);
    records.push_back({video_name, "foot_sliding", fs.cm, "cm"});

    if (file_exists(paths.cameras_est()) && file_exists(paths.truth_cameras()) &&
        file_exists(paths.truth_transitions())) {
        const io::CamerasFile est = io::read_cameras(paths.cameras_est());
        const io::CamerasFile gt = io::read_cameras(paths.truth_cameras());
        const io::TransitionsFile trans = io::read_transitions(paths.truth_transitions());
        if (est.cameras.size() == gt.cameras.size()) {
            double ate_sum = 0.0, rpe_t_sum = 0.0, rpe_r_sum = 0.0;
            int frames = 0;
            for (int s = 0; s < trans.segmentation.shot_count(); ++s) {
                const auto [fs_, fe_] = trans.segmentation.shot_range(s);
                const std::vector<CameraPose> p(est.cameras.begin() + fs_, est.cameras.begin() + fe_);
                const std::vector<CameraPose> g(gt.cameras.begin() + fs_, gt.cameras.begin() + fe_);
                const double a = ate(p, g);
                const RpeResult r = rpe(p, g, cfg.metrics_rpe_delta);
                const int n = fe_ - fs_;
                ate_sum += a * n;
                rpe_t_sum += r.trans_m * n;
                rpe_r_sum += r.rot_deg * n;
                frames += n;
            }
            records.push_back({video_name, "ate", ate_sum / frames, "m"});
            records.push_back({video_name, "rpe_trans", rpe_t_sum / frames, "m"});
            records.push_back({video_name, "rpe_rot", rpe_r_sum / frames, "deg"});
        }
    }

    if (file_exists(paths.transitions()) && file_exists(paths.truth_transitions())) {
        const io::TransitionsFile det = io::read_transitions(paths.transitions());
        const io::TransitionsFile gt = io::read_transitions(paths.truth_transitions());
        const DetectorScore score =
            evaluate_detector(det.segmentation, gt.segmentation, cfg.detect_slack);
        records.push_back({video_name, "detect_recall", score.recall, "ratio"});
        records.push_back({video_name, "detect_precision", score.precision, "ratio"});
        records.push_back({video_name, "detect_f1", score.f1, "ratio"});
    }

    io::write_metrics(paths.metrics(), records);
    return records;
}

std::vector<io::MetricRecord> run_all(const Paths& paths, const PipelineConfig& cfg,
                                      const std::string& video_name) {
    run_detect(paths, cfg);
    run_calibrate(paths, cfg);
    run_ba(paths, cfg);
    run_stitch(paths, cfg);
    run_refine(paths, cfg);
    if (file_exists(paths.truth_poses())) {
        return run_eval(paths, cfg, video_name);
    }
    return {};
}

}  // namespace ms::pipeline
