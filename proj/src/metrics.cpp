#include "ms/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ms/errors.hpp"
#include "ms/simd.hpp"

namespace ms {

namespace {

Vec3 mean_of(const std::vector<Vec3>& pts) {
    Vec3 m = Vec3::Zero();
    for (const Vec3& p : pts) m += p;
    return m / static_cast<double>(pts.size());
}

SimilarityTransform umeyama(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                            bool with_scale, bool allow_degenerate) {
    if (a.size() != b.size() || a.size() < 3) {
        if (allow_degenerate && a.size() == b.size() && !a.empty()) {
            SimilarityTransform t;
            t.translation = mean_of(b) - mean_of(a);
            return t;
        }
        throw InputError("procrustes_align: need matching point sets with >= 3 points");
    }
    const Vec3 mu_a = mean_of(a);
    const Vec3 mu_b = mean_of(b);

    Mat3 cov = Mat3::Zero();
    double var_a = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const Vec3 da = a[i] - mu_a;
        const Vec3 db = b[i] - mu_b;
        cov += db * da.transpose();
        var_a += da.squaredNorm();
    }
    cov /= static_cast<double>(a.size());
    var_a /= static_cast<double>(a.size());

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 d = svd.singularValues();
    if (d(1) <= 1e-12 * std::max(d(0), 1e-300) || var_a <= 1e-24) {
        if (allow_degenerate) {
            SimilarityTransform t;
            t.translation = mu_b - mu_a;
            return t;
        }
        throw InputError("procrustes_align: degenerate (rank < 2) point configuration");
    }

    Vec3 s_fix = Vec3::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) s_fix.z() = -1.0;

    SimilarityTransform t;
    t.rotation = svd.matrixU() * s_fix.asDiagonal() * svd.matrixV().transpose();
    t.scale = with_scale ? (d.array() * s_fix.array()).sum() / var_a : 1.0;
    t.translation = mu_b - t.scale * (t.rotation * mu_a);
    return t;
}

// First-frame alignment used by RTE/ROE: yaw + translation matching the root
// of frame 0.
SimilarityTransform first_frame_alignment(const MotionPair& pair) {
    const Mat3 r_pred = axis_angle_to_matrix(pair.pred_states.front().root_orient);
    const Mat3 r_truth = axis_angle_to_matrix(pair.truth_states.front().root_orient);
    SimilarityTransform t;
    t.rotation = yaw_matrix(yaw_angle(r_truth * r_pred.transpose()));
    t.translation =
        pair.truth_states.front().translation - t.rotation * pair.pred_states.front().translation;
    return t;
}

void check_pair(const MotionPair& pair) {
    if (pair.pred_joints.size() != pair.truth_joints.size() ||
        pair.pred_states.size() != pair.truth_states.size() ||
        pair.pred_joints.size() != pair.pred_states.size() || pair.pred_joints.empty()) {
        throw InputError("metrics: predicted/truth sequences disagree in length");
    }
}

double mean_joint_error_mm(const std::vector<Vec3>& pred, const std::vector<Vec3>& truth) {
    // Packed xyz arrays for the batch norm kernel.
    std::vector<double> pa(pred.size() * 3), pb(pred.size() * 3);
    for (size_t i = 0; i < pred.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            pa[3 * i + static_cast<size_t>(c)] = pred[i](c);
            pb[3 * i + static_cast<size_t>(c)] = truth[i](c);
        }
    }
    const double total = simd::kernels().sum_norm3_diff(pa.data(), pb.data(), pred.size());
    return 1000.0 * total / static_cast<double>(pred.size());
}

}  // namespace

SimilarityTransform procrustes_align(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                                     bool with_scale) {
    return umeyama(a, b, with_scale, /*allow_degenerate=*/false);
}

double pa_mpjpe(const MotionPair& pair) {
    check_pair(pair);
    double total_mm = 0.0;
    for (size_t f = 0; f < pair.pred_joints.size(); ++f) {
        std::vector<Vec3> p(pair.pred_joints[f].joints.begin(), pair.pred_joints[f].joints.end());
        std::vector<Vec3> g(pair.truth_joints[f].joints.begin(), pair.truth_joints[f].joints.end());
        const SimilarityTransform t = umeyama(p, g, true, /*allow_degenerate=*/true);
        for (Vec3& x : p) x = t.apply(x);
        total_mm += mean_joint_error_mm(p, g);
    }
    return total_mm / static_cast<double>(pair.pred_joints.size());
}

namespace {

double chunk_aligned_mpjpe(const MotionPair& pair, int chunk, bool first_chunk_only) {
    check_pair(pair);
    const int n = static_cast<int>(pair.pred_joints.size());
    if (chunk <= 0) throw InputError("wa_mpjpe: chunk must be positive");

    double total_mm = 0.0;
    int counted = 0;
    SimilarityTransform first_t;
    for (int c0 = 0; c0 < n; c0 += chunk) {
        const int c1 = std::min(n, c0 + chunk);
        SimilarityTransform t;
        if (c0 == 0 || !first_chunk_only) {
            std::vector<Vec3> p, g;
            for (int f = c0; f < c1; ++f) {
                for (const Vec3& x : pair.pred_joints[static_cast<size_t>(f)].joints) p.push_back(x);
                for (const Vec3& x : pair.truth_joints[static_cast<size_t>(f)].joints) g.push_back(x);
            }
            t = umeyama(p, g, /*with_scale=*/false, /*allow_degenerate=*/true);
            if (c0 == 0) first_t = t;
        } else {
            t = first_t;
        }
        for (int f = c0; f < c1; ++f) {
            std::vector<Vec3> p(pair.pred_joints[static_cast<size_t>(f)].joints.begin(),
                                pair.pred_joints[static_cast<size_t>(f)].joints.end());
            std::vector<Vec3> g(pair.truth_joints[static_cast<size_t>(f)].joints.begin(),
                                pair.truth_joints[static_cast<size_t>(f)].joints.end());
            for (Vec3& x : p) x = t.apply(x);
            total_mm += mean_joint_error_mm(p, g);
            ++counted;
        }
    }
    return total_mm / static_cast<double>(counted);
}

}  // namespace

double wa_mpjpe(const MotionPair& pair, int chunk) {
    return chunk_aligned_mpjpe(pair, chunk, /*first_chunk_only=*/false);
}

double w_mpjpe(const MotionPair& pair, int chunk) {
    return chunk_aligned_mpjpe(pair, chunk, /*first_chunk_only=*/true);
}

double rte(const MotionPair& pair) {
    check_pair(pair);
    const SimilarityTransform t = first_frame_alignment(pair);
    double total = 0.0;
    for (size_t f = 0; f < pair.pred_states.size(); ++f) {
        total += (t.apply(pair.pred_states[f].translation) - pair.truth_states[f].translation).norm();
    }
    return total / static_cast<double>(pair.pred_states.size());
}

double roe(const MotionPair& pair) {
    check_pair(pair);
    const SimilarityTransform t = first_frame_alignment(pair);
    double total = 0.0;
    for (size_t f = 0; f < pair.pred_states.size(); ++f) {
        const Mat3 rp = t.rotation * axis_angle_to_matrix(pair.pred_states[f].root_orient);
        const Mat3 rg = axis_angle_to_matrix(pair.truth_states[f].root_orient);
        total += rad_to_deg(geodesic_distance(rp, rg));
    }
    return total / static_cast<double>(pair.pred_states.size());
}

double jitter(const std::vector<SkeletonFrame>& motion) {
    const int n = static_cast<int>(motion.size());
    if (n < 4) {
        throw InputError("jitter: need at least 4 frames");
    }
    const double fps = motion.front().fps;

    // Third difference per joint, flattened for the batch norm kernel.
    const int nt = n - 3;
    std::vector<double> diff(static_cast<size_t>(nt) * kSkeletonJointCount * 3);
    std::vector<double> zeros(diff.size(), 0.0);
    size_t w = 0;
    for (int t = 0; t < nt; ++t) {
        for (int j = 0; j < kSkeletonJointCount; ++j) {
            const Vec3 d3 = motion[static_cast<size_t>(t + 3)].joints[static_cast<size_t>(j)] -
                            3.0 * motion[static_cast<size_t>(t + 2)].joints[static_cast<size_t>(j)] +
                            3.0 * motion[static_cast<size_t>(t + 1)].joints[static_cast<size_t>(j)] -
                            motion[static_cast<size_t>(t)].joints[static_cast<size_t>(j)];
            diff[w++] = d3.x();
            diff[w++] = d3.y();
            diff[w++] = d3.z();
        }
    }
    const size_t n_points = diff.size() / 3;
    const double total = simd::kernels().sum_norm3_diff(diff.data(), zeros.data(), n_points);
    return total / static_cast<double>(n_points) * fps * fps * fps / 10.0;
}

FootSlidingResult foot_sliding(const std::vector<SkeletonFrame>& motion,
                               const ContactState& contacts) {
    if (contacts.size() != motion.size()) {
        throw InputError("foot_sliding: contacts and motion length mismatch");
    }
    double total_cm = 0.0;
    int count = 0;
    const auto horizontal_step = [&](int t, int joint) {
        const Vec3& a = motion[static_cast<size_t>(t - 1)].joints[static_cast<size_t>(joint)];
        const Vec3& b = motion[static_cast<size_t>(t)].joints[static_cast<size_t>(joint)];
        const double dx = b.x() - a.x();
        const double dz = b.z() - a.z();
        return std::sqrt(dx * dx + dz * dz);
    };
    for (size_t t = 1; t < motion.size(); ++t) {
        if (contacts.left_contact[t] && contacts.left_contact[t - 1]) {
            total_cm += 100.0 * 0.5 *
                        (horizontal_step(static_cast<int>(t), kLeftAnkle) +
                         horizontal_step(static_cast<int>(t), kLeftToe));
            ++count;
        }
        if (contacts.right_contact[t] && contacts.right_contact[t - 1]) {
            total_cm += 100.0 * 0.5 *
                        (horizontal_step(static_cast<int>(t), kRightAnkle) +
                         horizontal_step(static_cast<int>(t), kRightToe));
            ++count;
        }
    }
    if (count == 0) return {0.0, true};
    return {total_cm / static_cast<double>(count), false};
}

double ate(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& truth) {
    if (pred.size() != truth.size() || pred.size() < 2) {
        throw InputError("ate: trajectories must have equal length >= 2");
    }
    std::vector<Vec3> p, g;
    p.reserve(pred.size());
    g.reserve(truth.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        p.push_back(pred[i].center());
        g.push_back(truth[i].center());
    }
    const SimilarityTransform t = umeyama(p, g, true, /*allow_degenerate=*/true);

    std::vector<double> pa(p.size() * 3), pb(p.size() * 3);
    for (size_t i = 0; i < p.size(); ++i) {
        const Vec3 x = t.apply(p[i]);
        for (int c = 0; c < 3; ++c) {
            pa[3 * i + static_cast<size_t>(c)] = x(c);
            pb[3 * i + static_cast<size_t>(c)] = g[i](c);
        }
    }
    const double ssd = simd::kernels().sum_sq_diff(pa.data(), pb.data(), pa.size());
    return std::sqrt(ssd / static_cast<double>(p.size()));
}

RpeResult rpe(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& truth,
              int delta) {
    if (pred.size() != truth.size() || pred.size() < 2) {
        throw InputError("rpe: trajectories must have equal length >= 2");
    }
    if (delta < 1 || delta >= static_cast<int>(pred.size())) {
        throw InputError("rpe: invalid delta");
    }
    RpeResult out;
    int count = 0;
    for (size_t t = 0; t + static_cast<size_t>(delta) < pred.size(); ++t) {
        const CameraPose rel_p = pred[t + static_cast<size_t>(delta)].compose(pred[t].inverse());
        const CameraPose rel_g = truth[t + static_cast<size_t>(delta)].compose(truth[t].inverse());
        const CameraPose err = rel_g.inverse().compose(rel_p);
        out.trans_m += err.t.norm();
        out.rot_deg += rad_to_deg(geodesic_distance(rel_p.r, rel_g.r));
        ++count;
    }
    out.trans_m /= static_cast<double>(count);
    out.rot_deg /= static_cast<double>(count);
    return out;
}

}  // namespace ms
