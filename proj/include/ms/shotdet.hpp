#ifndef MS_SHOTDET_HPP
#define MS_SHOTDET_HPP

#include <cstdint>
#include <optional>
#include <vector>

namespace ms {

struct BBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    BBox() = default;
    BBox(double x0, double y0, double x1, double y1) : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {}

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    double diagonal() const;
    bool contains(double u, double v) const {
        return u >= x_min && u <= x_max && v >= y_min && v <= y_max;
    }
    bool valid() const { return x_min <= x_max && y_min <= y_max; }
};

struct Keypoint2D {
    double u = 0, v = 0;
    bool visible = false;
    double confidence = 0.0;
};

struct Keypoints2D {
    std::vector<Keypoint2D> joints;

    int joint_count() const { return static_cast<int>(joints.size()); }
};

struct FrameObservation {
    int frame_index = 0;
    BBox bbox;
    Keypoints2D keypoints;
    double scene_score = 1.0;  // similarity to the previous frame, [0,1]
    std::optional<BBox> mask_bbox;
};

/// Transition indices partition [0, total_frames) into shots; each listed frame
/// is the first frame of a new shot.
struct ShotSegmentation {
    std::vector<int> transitions;
    int total_frames = 0;

    int shot_count() const { return static_cast<int>(transitions.size()) + 1; }

    /// Shot index owning a frame.
    int shot_of(int frame) const;

    /// (start, end) frame range of shot s, end exclusive.
    std::pair<int, int> shot_range(int s) const;
};

struct DetectorConfig {
    double tau_scene = 0.5;
    double tau_bbox = 0.3;
    double tau_kpt = 0.4;
    double kpt_radius_scale = 0.05;  // radius = scale * mean bbox diagonal of the pair
    int min_shot_len = 10;
};

struct DetectorScore {
    double recall = 0, precision = 0, f1 = 0;
};

double iou(const BBox& a, const BBox& b);

/// Fraction of mutually visible joint pairs within `radius` pixels of each
/// other. Throws InputError on mismatched joint counts.
double keypoint_iou(const Keypoints2D& a, const Keypoints2D& b, double radius);

/// Three-stage detector: a frame starts a new shot when the scene score drops,
/// the bbox IoU drops, or the keypoint IoU drops below its threshold.
/// Transitions closer than min_shot_len to the previous kept one are dropped.
ShotSegmentation detect_shots(const std::vector<FrameObservation>& stream,
                              const DetectorConfig& cfg = {});

/// Greedy nearest matching of predicted to truth transitions within +-slack
/// frames; standard recall/precision/F1.
DetectorScore evaluate_detector(const ShotSegmentation& predicted, const ShotSegmentation& truth,
                                int slack);

}  // namespace ms

#endif
