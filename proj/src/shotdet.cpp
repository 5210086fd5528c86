#include "ms/shotdet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "ms/errors.hpp"

namespace ms {

double BBox::diagonal() const {
    return std::sqrt(width() * width() + height() * height());
}

int ShotSegmentation::shot_of(int frame) const {
    int s = 0;
    for (int t : transitions) {
        if (frame >= t) ++s;
        else break;
    }
    return s;
}

std::pair<int, int> ShotSegmentation::shot_range(int s) const {
    if (s < 0 || s >= shot_count()) {
        throw InputError("shot_range: shot index " + std::to_string(s) + " out of range");
    }
    const int start = (s == 0) ? 0 : transitions[static_cast<size_t>(s) - 1];
    const int end = (s == static_cast<int>(transitions.size())) ? total_frames
                                                                : transitions[static_cast<size_t>(s)];
    return {start, end};
}

double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

double keypoint_iou(const Keypoints2D& a, const Keypoints2D& b, double radius) {
    if (a.joint_count() != b.joint_count()) {
        throw InputError("keypoint_iou: mismatched joint counts");
    }
    int mutual = 0;
    int close = 0;
    for (int j = 0; j < a.joint_count(); ++j) {
        const Keypoint2D& ka = a.joints[static_cast<size_t>(j)];
        const Keypoint2D& kb = b.joints[static_cast<size_t>(j)];
        if (!ka.visible || !kb.visible) continue;
        ++mutual;
        const double du = ka.u - kb.u;
        const double dv = ka.v - kb.v;
        if (std::sqrt(du * du + dv * dv) <= radius) ++close;
    }
    if (mutual == 0) return 0.0;
    return static_cast<double>(close) / static_cast<double>(mutual);
}

ShotSegmentation detect_shots(const std::vector<FrameObservation>& stream,
                              const DetectorConfig& cfg) {
    if (stream.empty()) {
        throw InputError("detect_shots: empty stream");
    }
    for (size_t i = 1; i < stream.size(); ++i) {
        if (stream[i].frame_index != stream[i - 1].frame_index + 1) {
            throw InputError("detect_shots: frame indices not contiguous");
        }
    }

    ShotSegmentation seg;
    seg.total_frames = static_cast<int>(stream.size());
    int last_kept = -cfg.min_shot_len - 1;
    for (size_t i = 1; i < stream.size(); ++i) {
        const FrameObservation& prev = stream[i - 1];
        const FrameObservation& cur = stream[i];

        bool fire = cur.scene_score < cfg.tau_scene;
        if (!fire) fire = iou(prev.bbox, cur.bbox) < cfg.tau_bbox;
        if (!fire) {
            const double radius =
                cfg.kpt_radius_scale * 0.5 * (prev.bbox.diagonal() + cur.bbox.diagonal());
            fire = keypoint_iou(prev.keypoints, cur.keypoints, radius) < cfg.tau_kpt;
        }
        if (fire) {
            const int t = static_cast<int>(i);
            if (t - last_kept >= cfg.min_shot_len) {
                seg.transitions.push_back(t);
                last_kept = t;
            }
        }
    }
    return seg;
}

DetectorScore evaluate_detector(const ShotSegmentation& predicted, const ShotSegmentation& truth,
                                int slack) {
    // Candidate (pred, truth) pairs within slack, nearest first; ties broken by
    // index order so the matching is deterministic.
    std::vector<std::tuple<int, size_t, size_t>> candidates;
    for (size_t p = 0; p < predicted.transitions.size(); ++p) {
        for (size_t g = 0; g < truth.transitions.size(); ++g) {
            const int d = std::abs(predicted.transitions[p] - truth.transitions[g]);
            if (d <= slack) candidates.emplace_back(d, p, g);
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<bool> pred_used(predicted.transitions.size(), false);
    std::vector<bool> truth_used(truth.transitions.size(), false);
    int tp = 0;
    for (const auto& [d, p, g] : candidates) {
        if (pred_used[p] || truth_used[g]) continue;
        pred_used[p] = truth_used[g] = true;
        ++tp;
    }

    DetectorScore s;
    const size_t n_truth = truth.transitions.size();
    const size_t n_pred = predicted.transitions.size();
    if (n_truth == 0 && n_pred == 0) {
        s.recall = s.precision = s.f1 = 1.0;
        return s;
    }
    s.recall = n_truth == 0 ? 1.0 : static_cast<double>(tp) / n_truth;
    s.precision = n_pred == 0 ? 0.0 : static_cast<double>(tp) / n_pred;
    s.f1 = (s.recall + s.precision) > 0 ? 2.0 * s.recall * s.precision / (s.recall + s.precision)
                                        : 0.0;
    return s;
}

}  // namespace ms
