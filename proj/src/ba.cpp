#include "ms/ba.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>

#include "ms/epipolar.hpp"
#include "ms/errors.hpp"

namespace ms {

namespace {

double median_of(std::vector<double> v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2 - 1), v.end());
        m = 0.5 * (m + v[n / 2 - 1]);
    }
    return m;
}

// Mean log-density of samples under a Cauchy model fitted by median/MAD.
double cauchy_mean_log_density(const std::vector<double>& samples) {
    const double mu = median_of(samples);
    std::vector<double> dev(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) dev[i] = std::abs(samples[i] - mu);
    double gamma = median_of(dev);
    if (gamma < 1e-6) gamma = 1e-6;

    double acc = 0.0;
    for (double s : samples) {
        const double z = (s - mu) / gamma;
        acc += -std::log(kPi * gamma * (1.0 + z * z));
    }
    return acc / static_cast<double>(samples.size());
}

}  // namespace

int PointTrack::visible_count() const {
    int n = 0;
    for (bool v : visible) n += v ? 1 : 0;
    return n;
}

std::vector<PointTrack> mask_tracks(std::vector<PointTrack> tracks,
                                    const std::vector<std::optional<BBox>>& masks,
                                    int min_track_len) {
    for (PointTrack& tr : tracks) {
        for (size_t i = 0; i < tr.visible.size(); ++i) {
            if (!tr.visible[i]) continue;
            const int frame = tr.first_frame + static_cast<int>(i);
            if (frame < 0 || frame >= static_cast<int>(masks.size())) continue;
            const auto& mask = masks[static_cast<size_t>(frame)];
            if (mask.has_value() && mask->contains(tr.positions[i].x(), tr.positions[i].y())) {
                tr.visible[i] = false;
            }
        }
        if (tr.visible_count() < min_track_len) {
            tr.dynamic = true;
        }
    }
    return tracks;
}

std::vector<double> track_confidences(const std::vector<PointTrack>& tracks, int window_start,
                                      int window_end) {
    std::vector<double> log_density(tracks.size(), -std::numeric_limits<double>::infinity());
    bool any = false;
    for (size_t n = 0; n < tracks.size(); ++n) {
        std::vector<double> us, vs;
        for (int f = window_start; f < window_end; ++f) {
            if (!tracks[n].visible_at(f)) continue;
            us.push_back(tracks[n].position_at(f).x());
            vs.push_back(tracks[n].position_at(f).y());
        }
        if (us.size() < 3) continue;  // confidence 0
        log_density[n] = cauchy_mean_log_density(us) + cauchy_mean_log_density(vs);
        any = true;
    }

    // Rank-normalize the densities to [0, 1]: the best-modeled track scores 1,
    // the worst scores 1/n. Ratio normalization would spread fast-but-clean
    // tracks over orders of magnitude and starve the solver of parallax.
    std::vector<double> conf(tracks.size(), 0.0);
    if (!any) return conf;
    std::vector<size_t> order;
    for (size_t n = 0; n < tracks.size(); ++n) {
        if (!std::isinf(log_density[n])) order.push_back(n);
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return log_density[a] < log_density[b];
    });
    for (size_t rank = 0; rank < order.size(); ++rank) {
        conf[order[rank]] = static_cast<double>(rank + 1) / static_cast<double>(order.size());
    }
    return conf;
}

Vec2 reprojection_residual(const CameraPose& pose_anchor, const CameraPose& pose_obs,
                           double inv_depth, const Vec2& anchor_px, const Vec2& obs_px,
                           const Intrinsics& k, Eigen::Matrix<double, 2, 6>* j_anchor,
                           Eigen::Matrix<double, 2, 6>* j_obs,
                           Eigen::Matrix<double, 2, 1>* j_depth) {
    // Back-project the anchor pixel at the current inverse depth, move it to
    // the observing camera.
    const Vec3 x_a((anchor_px.x() - k.ox) / k.fx / inv_depth,
                   (anchor_px.y() - k.oy) / k.fy / inv_depth, 1.0 / inv_depth);
    const Vec3 x_w = pose_anchor.r.transpose() * (x_a - pose_anchor.t);
    const Vec3 x_j = pose_obs.r * x_w + pose_obs.t;

    const double z = x_j.z();
    const double zc = (std::abs(z) < 1e-12) ? (z < 0 ? -1e-12 : 1e-12) : z;
    const Vec2 proj(k.fx * x_j.x() / zc + k.ox, k.fy * x_j.y() / zc + k.oy);
    const Vec2 residual = proj - obs_px;

    if (j_anchor != nullptr || j_obs != nullptr || j_depth != nullptr) {
        Eigen::Matrix<double, 2, 3> dproj;
        dproj << k.fx / zc, 0, -k.fx * x_j.x() / (zc * zc),
                 0, k.fy / zc, -k.fy * x_j.y() / (zc * zc);

        if (j_obs != nullptr) {
            // Left increment on the observing pose: x_j -> exp(w) x_j + v.
            j_obs->block<2, 3>(0, 0) = dproj * (-skew(x_j));
            j_obs->block<2, 3>(0, 3) = dproj;
        }
        if (j_anchor != nullptr) {
            // Left increment on the anchor pose enters through x_w.
            const Mat3 r_ja = pose_obs.r * pose_anchor.r.transpose();
            j_anchor->block<2, 3>(0, 0) = dproj * (r_ja * skew(x_a));
            j_anchor->block<2, 3>(0, 3) = dproj * (-r_ja);
        }
        if (j_depth != nullptr) {
            const Mat3 r_ja = pose_obs.r * pose_anchor.r.transpose();
            *j_depth = dproj * (r_ja * (-x_a / inv_depth));
        }
    }
    return residual;
}

CameraPose apply_pose_delta(const CameraPose& g, const Eigen::Matrix<double, 6, 1>& delta) {
    const Mat3 dr = axis_angle_to_matrix(AxisAngle(Vec3(delta(0), delta(1), delta(2))));
    const Vec3 dv(delta(3), delta(4), delta(5));
    return CameraPose(dr * g.r, dr * g.t + dv);
}

BAWindow make_window(const std::vector<PointTrack>& tracks, int start, int end,
                     const std::vector<CameraPose>& init_poses, const BAConfig& cfg,
                     int n_fixed) {
    if (end - start < 2) {
        throw UnderConstrainedError("make_window: window [" + std::to_string(start) + ", " +
                                    std::to_string(end) + ") has fewer than 2 frames");
    }
    if (end - start > 2 * cfg.window_size + 1) {
        throw InputError("make_window: window longer than 2*S_BA+1 frames");
    }
    if (static_cast<int>(init_poses.size()) != end - start) {
        throw InputError("make_window: init_poses size mismatch");
    }

    BAWindow w;
    w.start_frame = start;
    w.end_frame = end;
    w.s_ba = cfg.window_size;
    w.n_fixed = std::max(1, n_fixed);
    w.poses = init_poses;

    const std::vector<double> conf = track_confidences(tracks, start, end);

    for (size_t n = 0; n < tracks.size(); ++n) {
        const PointTrack& tr = tracks[n];
        if (tr.dynamic) continue;

        std::vector<int> vis_frames;
        for (int f = start; f < end; ++f) {
            if (tr.visible_at(f)) vis_frames.push_back(f);
        }
        if (vis_frames.size() < 2) continue;

        // Spread anchors round-robin across the window: a single shared anchor
        // frame degenerates the constraint graph to a star and leaves the
        // window's scale poorly coupled to the fixed poses.
        WindowTrack wt;
        wt.track_index = static_cast<int>(n);
        wt.anchor_frame = vis_frames[n % vis_frames.size()];
        wt.anchor_pos = tr.position_at(wt.anchor_frame);
        for (int f : vis_frames) {
            if (f == wt.anchor_frame) continue;
            if (std::abs(f - wt.anchor_frame) <= cfg.window_size) {
                wt.obs.push_back({f, tr.position_at(f), 0.0});
            }
        }
        if (wt.obs.empty()) continue;

        wt.inv_depth = tr.inv_depth;
        // Down-weight low-confidence tracks; floor keeps edges well-defined.
        double u = conf[n];
        if (u < cfg.confidence_threshold) u *= 0.1;
        if (u < 1e-6) u = 1e-6;
        for (WindowObservation& o : wt.obs) o.weight = u;
        w.tracks.push_back(std::move(wt));
    }

    // Normalize weights per edge (anchor frame, observed frame) to sum to 1.
    std::map<std::pair<int, int>, double> edge_sum;
    for (const WindowTrack& wt : w.tracks) {
        for (const WindowObservation& o : wt.obs) {
            edge_sum[{wt.anchor_frame, o.frame}] += o.weight;
        }
    }
    for (WindowTrack& wt : w.tracks) {
        for (WindowObservation& o : wt.obs) {
            o.weight /= edge_sum[{wt.anchor_frame, o.frame}];
        }
    }
    return w;
}

namespace {

double window_cost(const BAWindow& w, const Intrinsics& k) {
    double cost = 0.0;
    for (const WindowTrack& wt : w.tracks) {
        const CameraPose& ga = w.poses[static_cast<size_t>(wt.anchor_frame - w.start_frame)];
        for (const WindowObservation& o : wt.obs) {
            const CameraPose& gj = w.poses[static_cast<size_t>(o.frame - w.start_frame)];
            const Vec2 r = reprojection_residual(ga, gj, wt.inv_depth, wt.anchor_pos, o.pos, k);
            cost += o.weight * r.squaredNorm();
        }
    }
    return cost;
}

}  // namespace

BAWindow ba_solve(BAWindow w, const Intrinsics& k, const BAConfig& cfg) {
    const int n_frames = w.end_frame - w.start_frame;
    if (n_frames < 2) {
        throw UnderConstrainedError("ba_solve: fewer than 2 frames");
    }
    if (static_cast<int>(w.tracks.size()) < 6) {
        throw UnderConstrainedError("ba_solve: fewer than 6 usable tracks in window [" +
                                    std::to_string(w.start_frame) + ", " +
                                    std::to_string(w.end_frame) + ")");
    }

    const int n_free = n_frames - w.n_fixed;
    const int n_tracks = static_cast<int>(w.tracks.size());
    const int dim = 6 * n_free + n_tracks;

    double lambda = cfg.damping;
    double cost = window_cost(w, k);

    for (int iter = 0; iter < cfg.gn_iters; ++iter) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);

        for (int n = 0; n < n_tracks; ++n) {
            WindowTrack& wt = w.tracks[static_cast<size_t>(n)];
            const int ai = wt.anchor_frame - w.start_frame;
            const CameraPose& ga = w.poses[static_cast<size_t>(ai)];
            const int a_free = ai - w.n_fixed;  // < 0 when the anchor pose is fixed
            const int depth_col = 6 * n_free + n;

            for (const WindowObservation& o : wt.obs) {
                const int ji = o.frame - w.start_frame;
                const CameraPose& gj = w.poses[static_cast<size_t>(ji)];
                const int j_free = ji - w.n_fixed;

                Eigen::Matrix<double, 2, 6> ja, jj;
                Eigen::Matrix<double, 2, 1> jd;
                const Vec2 r = reprojection_residual(ga, gj, wt.inv_depth, wt.anchor_pos, o.pos,
                                                     k, &ja, &jj, &jd);

                // Assemble the sparse Jacobian row into dense blocks.
                struct Block {
                    int col;
                    const Eigen::Matrix<double, 2, 6>* j6;
                };
                Block blocks[2];
                int n_blocks = 0;
                if (a_free >= 0) blocks[n_blocks++] = {6 * a_free, &ja};
                if (j_free >= 0) blocks[n_blocks++] = {6 * j_free, &jj};

                const double wgt = o.weight;
                for (int bi = 0; bi < n_blocks; ++bi) {
                    const auto& jb = *blocks[bi].j6;
                    for (int bj = 0; bj < n_blocks; ++bj) {
                        h.block<6, 6>(blocks[bi].col, blocks[bj].col) +=
                            wgt * jb.transpose() * (*blocks[bj].j6);
                    }
                    h.block<6, 1>(blocks[bi].col, depth_col) += wgt * jb.transpose() * jd;
                    h.block<1, 6>(depth_col, blocks[bi].col) +=
                        wgt * (jd.transpose() * jb);
                    g.segment<6>(blocks[bi].col) += wgt * jb.transpose() * r;
                }
                h(depth_col, depth_col) += wgt * (jd.transpose() * jd)(0, 0);
                g(depth_col) += wgt * (jd.transpose() * r)(0, 0);
            }
        }

        // Try the damped step; reject and raise damping while it would increase
        // the cost.
        bool accepted = false;
        for (int attempt = 0; attempt <= cfg.max_step_rejects; ++attempt) {
            // Marquardt scaling: relative damping regularizes weakly observed
            // directions (a static camera leaves depth/translation nearly
            // unconstrained) where an absolute lambda*I would not.
            Eigen::MatrixXd hd = h;
            const double floor = 1e-8 * h.diagonal().maxCoeff() + 1e-12;
            hd.diagonal().array() +=
                lambda * (h.diagonal().array().max(floor));
            const Eigen::VectorXd delta = hd.ldlt().solve(-g);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            // Trust region: an unchecked step along a weak-curvature direction
            // can clear the valley and land in a spurious minimum.
            if (n_free > 0 &&
                delta.head(6 * n_free).lpNorm<Eigen::Infinity>() > cfg.max_pose_step) {
                lambda *= 10.0;
                continue;
            }

            BAWindow trial = w;
            for (int p = 0; p < n_free; ++p) {
                trial.poses[static_cast<size_t>(p + w.n_fixed)] = apply_pose_delta(
                    w.poses[static_cast<size_t>(p + w.n_fixed)], delta.segment<6>(6 * p));
            }
            for (int n = 0; n < n_tracks; ++n) {
                double d = w.tracks[static_cast<size_t>(n)].inv_depth + delta(6 * n_free + n);
                d = std::clamp(d, 1e-6, 20.0);
                trial.tracks[static_cast<size_t>(n)].inv_depth = d;
            }

            const double trial_cost = window_cost(trial, k);
            static const bool debug_steps = std::getenv("MOTIONSTITCH_BA_DEBUG2") != nullptr;
            if (debug_steps) {
                std::fprintf(stderr, "  [gn] iter=%d attempt=%d lambda=%.1e cost %.6e -> %.6e |dx|=%.3e\n",
                             iter, attempt, lambda, cost, trial_cost, delta.norm());
            }
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                w = std::move(trial);
                cost = trial_cost;
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No improving step found at any damping level; keep the current
            // state for the remaining iterations (cost stays non-increasing).
            continue;
        }
    }

    w.cost = cost;
    return w;
}

namespace {

// Two-view initialization of the opening window: relative pose from the
// essential matrix across the window endpoints (unit baseline), intermediate
// poses interpolated along the chord. Returns empty when the geometry is
// degenerate (static or purely rotating camera), in which case the caller
// falls back to an incremental identity start.
std::vector<CameraPose> essential_bootstrap(const std::vector<PointTrack>& tracks,
                                            const Intrinsics& k, int frame0, int frame1) {
    CorrespondenceSet c;
    for (const PointTrack& tr : tracks) {
        if (tr.dynamic) continue;
        if (!tr.visible_at(frame0) || !tr.visible_at(frame1)) continue;
        c.s1.push_back(tr.position_at(frame0));
        c.s2.push_back(tr.position_at(frame1));
        c.visible.push_back(true);
    }
    if (c.size() < 12) return {};

    // A (near-)static camera has no usable two-view geometry: track noise
    // would let an arbitrary unit-baseline model claim full consensus.
    {
        std::vector<double> disp;
        disp.reserve(c.size());
        for (size_t i = 0; i < c.size(); ++i) disp.push_back((c.s2[i] - c.s1[i]).norm());
        std::nth_element(disp.begin(), disp.begin() + static_cast<long>(disp.size() / 2),
                         disp.end());
        if (disp[disp.size() / 2] < 3.0) return {};
    }

    RelativePose rel;
    try {
        RansacConfig rcfg;
        rcfg.iterations = 256;
        rcfg.inlier_threshold_px = 4.0;
        rcfg.seed = 0x9e07a5c3u;
        rel = ransac_relative_pose(c, k, rcfg);
    } catch (const InputError&) {
        return {};
    }
    if (2 * rel.inlier_count < static_cast<int>(c.size())) return {};

    const int n = frame1 - frame0 + 1;
    const AxisAngle full = matrix_to_axis_angle(rel.r_delta);
    const Vec3 center_last = -rel.r_delta.transpose() * rel.t_dir;  // unit-scale baseline

    std::vector<CameraPose> init(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n - 1);
        const Mat3 r = axis_angle_to_matrix(AxisAngle(u * full.v));
        const Vec3 center = u * center_last;
        init[static_cast<size_t>(i)] = CameraPose(r, -(r * center));
    }
    return init;
}

}  // namespace

std::vector<CameraPose> solve_sequence(const std::vector<PointTrack>& tracks_in,
                                       const std::vector<std::optional<BBox>>& masks,
                                       const Intrinsics& k, const BAConfig& cfg, int start_frame,
                                       int end_frame) {
    if (end_frame - start_frame < 2) {
        throw UnderConstrainedError("solve_sequence: need at least 2 frames");
    }
    const std::vector<PointTrack> tracks = mask_tracks(tracks_in, masks, cfg.min_track_len);

    const int n_frames = end_frame - start_frame;
    std::vector<CameraPose> poses(static_cast<size_t>(n_frames));

    const int wlen = std::min(2 * cfg.window_size + 1, n_frames);
    const int stride = std::max(1, cfg.window_size / 2);

    // Per-track world-point estimates used to chain inverse depths between
    // windows (world frame = this sequence's gauge frame).
    std::vector<Vec3> world_points(tracks.size(), Vec3::Zero());
    std::vector<bool> has_world_point(tracks.size(), false);

    const auto triangulate_midpoint = [&k](const CameraPose& c0, const CameraPose& c1,
                                           const Vec2& p0, const Vec2& p1, Vec3* out) {
        const Vec3 d0 = c0.r.transpose() * Vec3((p0.x() - k.ox) / k.fx, (p0.y() - k.oy) / k.fy, 1);
        const Vec3 d1 = c1.r.transpose() * Vec3((p1.x() - k.ox) / k.fx, (p1.y() - k.oy) / k.fy, 1);
        const Vec3 o0 = c0.center(), o1 = c1.center();
        const Vec3 w0 = o0 - o1;
        const double a = d0.dot(d0), b = d0.dot(d1), c = d1.dot(d1);
        const double d = d0.dot(w0), e = d1.dot(w0);
        const double denom = a * c - b * b;
        if (std::abs(denom) < 1e-12) return false;
        const double s = (b * e - c * d) / denom;
        const double t = (a * e - b * d) / denom;
        *out = 0.5 * ((o0 + s * d0) + (o1 + t * d1));
        return true;
    };

    // Window schedule. The opening window needs special care: a cold start
    // over a full window has no usable linearization point, so try a two-view
    // essential-matrix initialization across the window endpoints first and
    // fall back to incremental frame-by-frame growth (which handles static and
    // near-static cameras) when the two-view geometry is degenerate.
    std::vector<CameraPose> boot =
        essential_bootstrap(tracks, k, start_frame, start_frame + wlen - 1);

    struct WindowPlan {
        int ws, w1, n_fixed;
    };
    std::vector<WindowPlan> plan;
    if (!boot.empty()) {
        plan.push_back({0, wlen, 1});
        // Seed depths by triangulating against the bootstrap endpoints.
        const int f0 = start_frame, f1 = start_frame + wlen - 1;
        for (size_t ti = 0; ti < tracks.size(); ++ti) {
            const PointTrack& tr = tracks[ti];
            if (tr.dynamic || !tr.visible_at(f0) || !tr.visible_at(f1)) continue;
            Vec3 x;
            if (triangulate_midpoint(boot.front(), boot.back(), tr.position_at(f0),
                                     tr.position_at(f1), &x) &&
                (boot.front().r * x + boot.front().t).z() > 1e-3) {
                world_points[ti] = x;
                has_world_point[ti] = true;
            }
        }
    } else {
        for (int sub = 2; sub <= wlen; ++sub) plan.push_back({0, sub, 1});
    }
    for (int w0 = stride; w0 + wlen < n_frames + stride; w0 += stride) {
        const int w1 = std::min(w0 + wlen, n_frames);
        const int ws = std::max(0, w1 - wlen);
        // The leading two poses carry the gauge (frame anchor + scale); the
        // rest of the overlap is re-optimized so inherited error can relax
        // instead of compounding window over window.
        plan.push_back({ws, w1, 2});
        if (w1 >= n_frames) break;
    }

    // Median endpoint parallax of a window's tracks; below the gate the
    // camera cannot be distinguished from static and optimizing poses would
    // only fit noise.
    const auto window_is_static = [&](int f0, int f1) {
        std::vector<double> disp;
        for (const PointTrack& tr : tracks) {
            if (tr.dynamic || !tr.visible_at(f0) || !tr.visible_at(f1)) continue;
            disp.push_back((tr.position_at(f1) - tr.position_at(f0)).norm());
        }
        if (disp.size() < 6) return false;  // not enough evidence; let the solve decide
        std::nth_element(disp.begin(), disp.begin() + static_cast<long>(disp.size() / 2),
                         disp.end());
        return disp[disp.size() / 2] < 3.0;
    };

    int solved_until = 0;  // frames [0, solved_until) have solved poses
    for (const WindowPlan& wp : plan) {
        const int ws = wp.ws;
        const int w1 = wp.w1;

        if (window_is_static(start_frame + ws, start_frame + w1 - 1)) {
            // Hold: copy the last solved pose (identity at the very start).
            for (int f = ws; f < w1; ++f) {
                if (f < solved_until) continue;
                poses[static_cast<size_t>(f)] =
                    f > 0 ? poses[static_cast<size_t>(f - 1)] : CameraPose();
            }
            solved_until = w1;
            if (w1 >= n_frames) break;
            continue;
        }

        std::vector<CameraPose> init(static_cast<size_t>(w1 - ws));
        for (int f = ws; f < w1; ++f) {
            if (f < solved_until) {
                init[static_cast<size_t>(f - ws)] = poses[static_cast<size_t>(f)];
            } else if (solved_until == 0 && !boot.empty() && f < static_cast<int>(boot.size())) {
                init[static_cast<size_t>(f - ws)] = boot[static_cast<size_t>(f)];
            } else if (f >= 2) {
                // Constant-velocity extrapolation from the last two known
                // poses; implausibly large steps are clamped to a hold (they
                // double per frame otherwise when a window went bad).
                const CameraPose& g1 = init[static_cast<size_t>(f - 1 - ws)];
                const CameraPose& g2 = init[static_cast<size_t>(f - 2 - ws)];
                const CameraPose rel = g1.compose(g2.inverse());
                if (rel.t.norm() > 1.0 ||
                    geodesic_distance(rel.r, Mat3::Identity()) > 0.5) {
                    init[static_cast<size_t>(f - ws)] = g1;
                } else {
                    init[static_cast<size_t>(f - ws)] = rel.compose(g1);
                }
            } else if (f >= 1) {
                init[static_cast<size_t>(f - ws)] = init[static_cast<size_t>(f - 1 - ws)];
            }
        }

        BAWindow w;
        try {
            w = make_window(tracks, start_frame + ws, start_frame + w1, init, cfg, wp.n_fixed);
        } catch (const UnderConstrainedError&) {
            throw UnderConstrainedError("solve_sequence: window covering frames [" +
                                        std::to_string(start_frame + ws) + ", " +
                                        std::to_string(start_frame + w1) +
                                        ") is under-constrained");
        }

        // Seed window depths: prefer a fresh triangulation against the window's
        // own initial poses (self-consistent with the linearization point),
        // fall back to the chained world-point estimate.
        for (WindowTrack& wt : w.tracks) {
            const size_t ti = static_cast<size_t>(wt.track_index);
            const PointTrack& tr = tracks[ti];
            const CameraPose& ga = w.poses[static_cast<size_t>(wt.anchor_frame - w.start_frame)];

            int far_obs = -1;
            for (const WindowObservation& o : wt.obs) {
                if (far_obs < 0 ||
                    std::abs(o.frame - wt.anchor_frame) > std::abs(far_obs - wt.anchor_frame)) {
                    far_obs = o.frame;
                }
            }
            bool seeded = false;
            if (far_obs >= 0) {
                const CameraPose& gb = w.poses[static_cast<size_t>(far_obs - w.start_frame)];
                Vec3 x;
                if (triangulate_midpoint(ga, gb, wt.anchor_pos, tr.position_at(far_obs), &x)) {
                    const double z = (ga.r * x + ga.t).z();
                    if (z > 1e-3) {
                        wt.inv_depth = 1.0 / z;
                        seeded = true;
                    }
                }
            }
            if (!seeded && has_world_point[ti]) {
                const double z = (ga.r * world_points[ti] + ga.t).z();
                if (z > 1e-3) wt.inv_depth = 1.0 / z;
            }
        }

        // Structure-only refinement against the frozen initial poses: a joint
        // first step from depth-contaminated seeds can drag the poses into a
        // neighboring basin.
        for (WindowTrack& wt : w.tracks) {
            const CameraPose& ga = w.poses[static_cast<size_t>(wt.anchor_frame - w.start_frame)];
            for (int it = 0; it < 6; ++it) {
                double jtj = 0.0, jtr = 0.0;
                for (const WindowObservation& o : wt.obs) {
                    const CameraPose& gj = w.poses[static_cast<size_t>(o.frame - w.start_frame)];
                    Eigen::Matrix<double, 2, 1> jd;
                    const Vec2 r = reprojection_residual(ga, gj, wt.inv_depth, wt.anchor_pos,
                                                         o.pos, k, nullptr, nullptr, &jd);
                    jtj += jd.squaredNorm();
                    jtr += jd.dot(r);
                }
                if (jtj < 1e-18) break;
                const double step = -jtr / jtj;
                wt.inv_depth = std::clamp(wt.inv_depth + step, 1e-6, 20.0);
                if (std::abs(step) < 1e-14) break;
            }
        }

        // Repeated fixed-iteration solves until the window converges; a cold
        // start needs more than one two-iteration pass.
        double prev_cost = 0.0;
        for (int round = 0; round < cfg.max_outer_rounds; ++round) {
            try {
                w = ba_solve(std::move(w), k, cfg);
            } catch (const UnderConstrainedError&) {
                throw UnderConstrainedError("solve_sequence: window covering frames [" +
                                            std::to_string(start_frame + ws) + ", " +
                                            std::to_string(start_frame + w1) +
                                            ") is under-constrained");
            }
            if (round > 0 && prev_cost - w.cost <= cfg.outer_tol * std::max(prev_cost, 1e-30)) {
                break;
            }
            prev_cost = w.cost;
        }

        if (std::getenv("MOTIONSTITCH_BA_DEBUG") != nullptr) {
            double maxt = 0, mind = 1e30, maxd = 0;
            for (const auto& g : w.poses) maxt = std::max(maxt, g.t.norm());
            for (const auto& wt : w.tracks) {
                mind = std::min(mind, wt.inv_depth);
                maxd = std::max(maxd, wt.inv_depth);
            }
            std::fprintf(stderr, "[ba] window [%d,%d) tracks=%zu cost=%.3e max|t|=%.3f invd=[%.2e,%.2e]\n",
                         start_frame + ws, start_frame + w1, w.tracks.size(), w.cost, maxt, mind, maxd);
        }
        for (int f = ws; f < w1; ++f) {
            poses[static_cast<size_t>(f)] = w.poses[static_cast<size_t>(f - ws)];
        }
        solved_until = w1;

        // Refresh world points from the solved anchor depths.
        for (const WindowTrack& wt : w.tracks) {
            const size_t ti = static_cast<size_t>(wt.track_index);
            const CameraPose& ga = w.poses[static_cast<size_t>(wt.anchor_frame - w.start_frame)];
            const Vec2& px = wt.anchor_pos;
            const Vec3 x_a((px.x() - k.ox) / k.fx / wt.inv_depth,
                           (px.y() - k.oy) / k.fy / wt.inv_depth, 1.0 / wt.inv_depth);
            world_points[ti] = ga.r.transpose() * (x_a - ga.t);
            has_world_point[ti] = true;
        }

    }

    return poses;
}

}  // namespace ms
