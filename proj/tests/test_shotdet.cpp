#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "ms/errors.hpp"
#include "ms/rng.hpp"
#include "ms/shotdet.hpp"

using namespace ms;

namespace {

Keypoints2D grid_keypoints(double u0, double v0, int count = 12, double spacing = 20.0) {
    Keypoints2D kp;
    for (int i = 0; i < count; ++i) {
        kp.joints.push_back({u0 + spacing * (i % 4), v0 + spacing * (i / 4), true, 1.0});
    }
    return kp;
}

FrameObservation make_frame(int index, double u0, double v0, double scene_score = 1.0) {
    FrameObservation f;
    f.frame_index = index;
    f.bbox = BBox(u0 - 10, v0 - 10, u0 + 80, v0 + 60);
    f.keypoints = grid_keypoints(u0, v0);
    f.scene_score = scene_score;
    return f;
}

std::vector<FrameObservation> constant_stream(int n) {
    std::vector<FrameObservation> s;
    for (int i = 0; i < n; ++i) s.push_back(make_frame(i, 300, 200));
    return s;
}

}  // namespace

TEST_CASE("iou basics") {
    const BBox a(0, 0, 2, 2);
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, BBox(5, 5, 7, 7)) == doctest::Approx(0.0));
    CHECK(iou(a, BBox(1, 1, 3, 3)) == doctest::Approx(1.0 / 7.0));
    // Zero-area union.
    CHECK(iou(BBox(1, 1, 1, 1), BBox(1, 1, 1, 1)) == 0.0);
}

TEST_CASE("iou symmetry and bounds over random boxes") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const auto rand_box = [&]() {
            const double x0 = rng.uniform(0, 500), y0 = rng.uniform(0, 500);
            return BBox(x0, y0, x0 + rng.uniform(0, 300), y0 + rng.uniform(0, 300));
        };
        const BBox a = rand_box(), b = rand_box();
        const double ab = iou(a, b), ba = iou(b, a);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("keypoint_iou") {
    const Keypoints2D a = grid_keypoints(100, 100);
    CHECK(keypoint_iou(a, a, 5.0) == doctest::Approx(1.0));

    // All joints displaced by twice the radius.
    Keypoints2D far = a;
    for (auto& j : far.joints) j.u += 10.0;
    CHECK(keypoint_iou(a, far, 5.0) == doctest::Approx(0.0));

    // Half within radius, half outside.
    Keypoints2D half = a;
    for (size_t i = 0; i < half.joints.size(); ++i) {
        half.joints[i].u += (i % 2 == 0) ? 1.0 : 50.0;
    }
    CHECK(keypoint_iou(a, half, 5.0) == doctest::Approx(0.5));

    // No mutually visible pair.
    Keypoints2D invis = a;
    for (auto& j : invis.joints) j.visible = false;
    CHECK(keypoint_iou(a, invis, 5.0) == 0.0);

    Keypoints2D other;
    other.joints.resize(3);
    CHECK_THROWS_AS(keypoint_iou(a, other, 5.0), InputError);
}

TEST_CASE("detect_shots finds a single camera switch") {
    std::vector<FrameObservation> s;
    for (int i = 0; i < 100; ++i) {
        if (i < 50) {
            s.push_back(make_frame(i, 300, 200));
        } else {
            s.push_back(make_frame(i, 900, 500, i == 50 ? 0.0 : 1.0));
        }
    }
    const ShotSegmentation seg = detect_shots(s);
    CHECK(seg.transitions == std::vector<int>{50});
    CHECK(seg.total_frames == 100);
    CHECK(seg.shot_of(49) == 0);
    CHECK(seg.shot_of(50) == 1);
    CHECK(seg.shot_range(1) == std::pair<int, int>{50, 100});
}

TEST_CASE("constant stream has no transitions") {
    const ShotSegmentation seg = detect_shots(constant_stream(80));
    CHECK(seg.transitions.empty());
}

TEST_CASE("each stage alone can fire a transition") {
    DetectorConfig cfg;

    // Scene stage only: same geometry, low scene score once.
    auto s = constant_stream(60);
    s[30].scene_score = 0.1;
    CHECK(detect_shots(s, cfg).transitions == std::vector<int>{30});

    // Bbox stage: jump in position without scene score change.
    s = constant_stream(60);
    for (int i = 30; i < 60; ++i) s[static_cast<size_t>(i)] = make_frame(i, 900, 600);
    CHECK(detect_shots(s, cfg).transitions == std::vector<int>{30});

    // Keypoint stage: same bbox, scrambled keypoints inside it.
    s = constant_stream(60);
    for (int i = 30; i < 60; ++i) {
        for (size_t j = 0; j < s[static_cast<size_t>(i)].keypoints.joints.size(); ++j) {
            auto& kp = s[static_cast<size_t>(i)].keypoints.joints[j];
            kp.u = 300 + 60.0 * ((j * 7) % 2);
            kp.v = 200 + 50.0 * ((j * 5) % 2);
        }
    }
    CHECK(detect_shots(s, cfg).transitions == std::vector<int>{30});
}

TEST_CASE("transitions within min_shot_len are suppressed, earlier wins") {
    auto s = constant_stream(100);
    s[40].scene_score = 0.0;
    s[45].scene_score = 0.0;  // within 10 frames of the previous transition
    s[70].scene_score = 0.0;
    const ShotSegmentation seg = detect_shots(s);
    CHECK(seg.transitions == std::vector<int>{40, 70});
}

TEST_CASE("inserting an exact-copy frame never creates a transition") {
    auto s = constant_stream(50);
    // Duplicate frame 20 (re-indexing the rest).
    std::vector<FrameObservation> dup;
    for (int i = 0; i <= 20; ++i) dup.push_back(s[static_cast<size_t>(i)]);
    dup.push_back(s[20]);
    for (int i = 21; i < 50; ++i) dup.push_back(s[static_cast<size_t>(i)]);
    for (size_t i = 0; i < dup.size(); ++i) dup[i].frame_index = static_cast<int>(i);
    CHECK(detect_shots(dup).transitions.empty());
}

TEST_CASE("detection is invariant under uniform translation") {
    Rng rng(77);
    auto s = constant_stream(90);
    s[33].scene_score = 0.2;
    for (int i = 60; i < 90; ++i) s[static_cast<size_t>(i)] = make_frame(i, 700, 420);
    const ShotSegmentation base = detect_shots(s);

    const double du = rng.uniform(-200, 200), dv = rng.uniform(-200, 200);
    auto shifted = s;
    for (auto& f : shifted) {
        f.bbox.x_min += du;
        f.bbox.x_max += du;
        f.bbox.y_min += dv;
        f.bbox.y_max += dv;
        for (auto& kp : f.keypoints.joints) {
            kp.u += du;
            kp.v += dv;
        }
    }
    CHECK(detect_shots(shifted).transitions == base.transitions);
}

TEST_CASE("detect_shots rejects empty and non-contiguous streams") {
    CHECK_THROWS_AS(detect_shots({}), InputError);
    auto s = constant_stream(10);
    s[5].frame_index = 99;
    CHECK_THROWS_AS(detect_shots(s), InputError);
}

TEST_CASE("evaluate_detector") {
    ShotSegmentation truth;
    truth.total_frames = 300;
    truth.transitions = {50, 100};

    ShotSegmentation same = truth;
    DetectorScore s = evaluate_detector(same, truth, 2);
    CHECK(s.recall == doctest::Approx(1.0));
    CHECK(s.precision == doctest::Approx(1.0));
    CHECK(s.f1 == doctest::Approx(1.0));

    ShotSegmentation empty;
    empty.total_frames = 300;
    s = evaluate_detector(empty, truth, 2);
    CHECK(s.recall == 0.0);
    CHECK(s.precision == 0.0);
    CHECK(s.f1 == 0.0);

    ShotSegmentation off;
    off.total_frames = 300;
    off.transitions = {51, 200};
    s = evaluate_detector(off, truth, 2);
    CHECK(s.recall == doctest::Approx(0.5));
    CHECK(s.precision == doctest::Approx(0.5));
    CHECK(s.f1 == doctest::Approx(0.5));

    // One truth transition cannot match two predictions.
    ShotSegmentation both_close;
    both_close.total_frames = 300;
    both_close.transitions = {49, 51};
    s = evaluate_detector(both_close, truth, 2);
    CHECK(s.recall == doctest::Approx(0.5));
    CHECK(s.precision == doctest::Approx(0.5));
}
