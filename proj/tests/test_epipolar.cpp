#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ms/epipolar.hpp"
#include "ms/errors.hpp"
#include "ms/geom.hpp"
#include "ms/rng.hpp"
#include "ms/synth.hpp"

using namespace ms;

namespace {

struct TwoViewScene {
    CameraPose cam1, cam2;
    Intrinsics k{1000, 1000, 960, 540};
    CorrespondenceSet c;
    Mat3 true_relative;  // x2 = R x1 + t
    Vec3 true_t;
};

// Random 3D points in front of two ring cameras separated by a yaw angle,
// projected exactly.
TwoViewScene make_scene(Rng& rng, double yaw_gap_deg, int n_points,
                        double noise_px = 0.0, double outlier_fraction = 0.0) {
    TwoViewScene s;
    const double a1 = rng.uniform(0.0, 2.0 * kPi);
    const double a2 = a1 + deg_to_rad(yaw_gap_deg);
    s.cam1 = ring_camera(a1);
    s.cam2 = ring_camera(a2);
    s.true_relative = s.cam2.r * s.cam1.r.transpose();
    s.true_t = s.cam2.t - s.true_relative * s.cam1.t;

    int placed = 0;
    while (placed < n_points) {
        const Vec3 p(rng.uniform(-2.2, 2.2), rng.uniform(0.0, 2.8), rng.uniform(-2.2, 2.2));
        const Vec3 p1 = s.cam1.r * p + s.cam1.t;
        const Vec3 p2 = s.cam2.r * p + s.cam2.t;
        if (p1.z() < 0.5 || p2.z() < 0.5) continue;
        Vec2 u1(s.k.fx * p1.x() / p1.z() + s.k.ox, s.k.fy * p1.y() / p1.z() + s.k.oy);
        Vec2 u2(s.k.fx * p2.x() / p2.z() + s.k.ox, s.k.fy * p2.y() / p2.z() + s.k.oy);
        if (noise_px > 0) {
            u1 += Vec2(rng.normal(0, noise_px), rng.normal(0, noise_px));
            u2 += Vec2(rng.normal(0, noise_px), rng.normal(0, noise_px));
        }
        if (outlier_fraction > 0 && rng.uniform() < outlier_fraction) {
            u2 = Vec2(rng.uniform(0, 1920), rng.uniform(0, 1080));
        }
        s.c.s1.push_back(u1);
        s.c.s2.push_back(u2);
        s.c.visible.push_back(true);
        ++placed;
    }
    return s;
}

}  // namespace

TEST_CASE("eight_point satisfies the epipolar constraint on exact data") {
    Rng rng(101);
    const TwoViewScene s = make_scene(rng, 35.0, 20);
    const FundamentalMatrix f = eight_point(s.c, s.k);

    for (size_t i = 0; i < s.c.size(); ++i) {
        const Eigen::Vector3d x1(s.c.s1[i].x(), s.c.s1[i].y(), 1.0);
        const Eigen::Vector3d x2(s.c.s2[i].x(), s.c.s2[i].y(), 1.0);
        CHECK(std::abs(x2.dot(f.f * x1)) < 1e-6);
    }
    CHECK(std::abs(f.f.norm() - 1.0) < 1e-12);

    // Rank 2: smallest singular value is numerically zero.
    Eigen::JacobiSVD<Mat3> svd(f.f);
    CHECK(svd.singularValues()(2) / svd.singularValues()(1) < 1e-6);
}

TEST_CASE("eight_point preconditions") {
    Rng rng(102);
    TwoViewScene s = make_scene(rng, 30.0, 7);
    CHECK_THROWS_AS(eight_point(s.c, s.k), InputError);

    // Collinear points in both images: rank-deficient constraint matrix.
    CorrespondenceSet degen;
    for (int i = 0; i < 12; ++i) {
        degen.s1.emplace_back(100.0 + 5.0 * i, 200.0 + 3.0 * i);
        degen.s2.emplace_back(110.0 + 5.0 * i, 190.0 + 3.0 * i);
        degen.visible.push_back(true);
    }
    CHECK_THROWS_AS(eight_point(degen, s.k), InputError);
}

TEST_CASE("to_essential with identity intrinsics is manifold projection of F") {
    Rng rng(103);
    const TwoViewScene s = make_scene(rng, 25.0, 30);
    const FundamentalMatrix f = eight_point(s.c, s.k);
    const Intrinsics identity_k(1, 1, 0, 0);
    const EssentialMatrix e = to_essential(f, identity_k);

    Eigen::JacobiSVD<Mat3> fsvd(f.f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 sv(1, 1, 0);
    const Mat3 projected = fsvd.matrixU() * sv.asDiagonal() * fsvd.matrixV().transpose();
    CHECK((e.e - projected).norm() < 1e-9);

    // Singular values exactly (1, 1, 0).
    Eigen::JacobiSVD<Mat3> esvd(e.e);
    CHECK(esvd.singularValues()(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(esvd.singularValues()(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(esvd.singularValues()(2) < 1e-12);
}

TEST_CASE("to_essential is invariant to a coherent intrinsics rescale") {
    Rng rng(104);
    const TwoViewScene s = make_scene(rng, 40.0, 25);

    const FundamentalMatrix f1 = eight_point(s.c, s.k);
    const EssentialMatrix e1 = to_essential(f1, s.k);

    // Same scene with doubled focal length and scaled pixels.
    CorrespondenceSet scaled = s.c;
    Intrinsics k2(2 * s.k.fx, 2 * s.k.fy, 2 * s.k.ox, 2 * s.k.oy);
    for (size_t i = 0; i < scaled.size(); ++i) {
        scaled.s1[i] *= 2.0;
        scaled.s2[i] *= 2.0;
    }
    const FundamentalMatrix f2 = eight_point(scaled, k2);
    const EssentialMatrix e2 = to_essential(f2, k2);

    const Mat3 a = e1.e / e1.e.norm();
    Mat3 b = e2.e / e2.e.norm();
    if ((a + b).norm() < (a - b).norm()) b = -b;
    CHECK((a - b).norm() < 1e-6);
}

TEST_CASE("decompose_essential recovers a pure yaw rotation") {
    Rng rng(105);
    const TwoViewScene s = make_scene(rng, 30.0, 40);
    const FundamentalMatrix f = eight_point(s.c, s.k);
    const EssentialMatrix e = to_essential(f, s.k);
    const RelativePose pose = decompose_essential(e, s.c, s.k);

    CHECK(rad_to_deg(geodesic_distance(pose.r_delta, s.true_relative)) < 0.5);
    CHECK(std::abs(pose.t_dir.norm() - 1.0) < 1e-9);
    // Translation direction up to sign.
    const Vec3 tn = s.true_t.normalized();
    CHECK(std::min((pose.t_dir - tn).norm(), (pose.t_dir + tn).norm()) < 1e-3);
}

TEST_CASE("decompose_essential handles a pure-translation pair") {
    Rng rng(106);
    TwoViewScene s;
    s.cam1 = CameraPose(Mat3::Identity(), Vec3(0, 0, 4));
    s.cam2 = CameraPose(Mat3::Identity(), Vec3(1.5, 0.3, 4));  // same R, shifted
    s.true_relative = Mat3::Identity();
    for (int i = 0; i < 40; ++i) {
        const Vec3 p(rng.uniform(-2.5, 2.5), rng.uniform(-1.5, 1.5), rng.uniform(-2, 2));
        const Vec3 p1 = s.cam1.r * p + s.cam1.t;
        const Vec3 p2 = s.cam2.r * p + s.cam2.t;
        s.c.s1.emplace_back(s.k.fx * p1.x() / p1.z() + s.k.ox, s.k.fy * p1.y() / p1.z() + s.k.oy);
        s.c.s2.emplace_back(s.k.fx * p2.x() / p2.z() + s.k.ox, s.k.fy * p2.y() / p2.z() + s.k.oy);
        s.c.visible.push_back(true);
    }
    const RelativePose pose =
        decompose_essential(to_essential(eight_point(s.c, s.k), s.k), s.c, s.k);
    CHECK(rad_to_deg(geodesic_distance(pose.r_delta, Mat3::Identity())) < 0.5);
}

TEST_CASE("decompose_essential fails cheirality on flipped-depth correspondences") {
    Rng rng(107);
    const Intrinsics k(1000, 1000, 960, 540);
    const Mat3 r_rel = yaw_matrix(deg_to_rad(20.0));
    const Vec3 t_rel(1.0, 0.0, 0.2);

    // Build E directly from the true motion, but flip half the second-view
    // pixels to their antipodal rays: no candidate can place a majority of
    // points in front of both cameras.
    Mat3 e_mat = skew(t_rel) * r_rel;
    {
        Eigen::JacobiSVD<Mat3> svd(e_mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec3 sv(1, 1, 0);
        e_mat = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
    }
    CorrespondenceSet c;
    for (int i = 0; i < 30; ++i) {
        const Vec3 p(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(4, 8));
        const Vec3 p2 = r_rel * p + t_rel;
        Vec2 u1(k.fx * p.x() / p.z() + k.ox, k.fy * p.y() / p.z() + k.oy);
        Vec2 u2(k.fx * p2.x() / p2.z() + k.ox, k.fy * p2.y() / p2.z() + k.oy);
        if (i % 2 == 0) {
            u2 = Vec2(2 * k.ox - u2.x(), 2 * k.oy - u2.y());  // antipodal ray
        }
        c.s1.push_back(u1);
        c.s2.push_back(u2);
        c.visible.push_back(true);
    }
    CHECK_THROWS_AS(decompose_essential(EssentialMatrix{e_mat}, c, k), InputError);
}

TEST_CASE("self-consistency: [t]x R reconstructs E up to sign and scale") {
    Rng rng(108);
    for (int trial = 0; trial < 20; ++trial) {
        const TwoViewScene s = make_scene(rng, rng.uniform(-60, 60), 30);
        const EssentialMatrix e = to_essential(eight_point(s.c, s.k), s.k);
        const RelativePose pose = decompose_essential(e, s.c, s.k);

        Mat3 rebuilt = skew(pose.t_dir) * pose.r_delta;
        rebuilt /= rebuilt.norm();
        Mat3 en = e.e / e.e.norm();
        if ((rebuilt + en).norm() < (rebuilt - en).norm()) en = -en;
        CHECK((rebuilt - en).norm() < 1e-6);
    }
}

TEST_CASE("rotation recovery over 100 random noiseless scenes") {
    Rng rng(109);
    double max_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double yaw = rng.uniform(-60.0, 60.0);
        const int n = 30 + static_cast<int>(rng.uniform_index(71));
        const TwoViewScene s = make_scene(rng, yaw, n);
        const RelativePose pose =
            decompose_essential(to_essential(eight_point(s.c, s.k), s.k), s.c, s.k);
        max_err = std::max(max_err, rad_to_deg(geodesic_distance(pose.r_delta, s.true_relative)));
    }
    CHECK(max_err < 0.5);
}

TEST_CASE("ransac on clean data marks every correspondence inlier") {
    Rng rng(110);
    const TwoViewScene s = make_scene(rng, 30.0, 50);
    RansacConfig cfg;
    cfg.seed = 9;
    const RelativePose pose = ransac_relative_pose(s.c, s.k, cfg);
    CHECK(pose.inlier_count == 50);
    for (bool b : pose.inlier_mask) CHECK(b);
    CHECK(rad_to_deg(geodesic_distance(pose.r_delta, s.true_relative)) < 0.5);
}

TEST_CASE("ransac rejects 30 percent outliers") {
    Rng rng(111);
    const TwoViewScene s = make_scene(rng, 40.0, 60, 0.0, 0.3);
    RansacConfig cfg;
    cfg.seed = 17;
    const RelativePose pose = ransac_relative_pose(s.c, s.k, cfg);
    CHECK(rad_to_deg(geodesic_distance(pose.r_delta, s.true_relative)) < 2.0);
    CHECK(pose.inlier_count >= 30);
}

TEST_CASE("ransac is deterministic for a fixed seed") {
    Rng rng(112);
    const TwoViewScene s = make_scene(rng, 25.0, 40, 0.5, 0.2);
    RansacConfig cfg;
    cfg.seed = 4242;
    const RelativePose a = ransac_relative_pose(s.c, s.k, cfg);
    const RelativePose b = ransac_relative_pose(s.c, s.k, cfg);
    CHECK((a.r_delta - b.r_delta).norm() == 0.0);
    CHECK((a.t_dir - b.t_dir).norm() == 0.0);
    CHECK(a.inlier_count == b.inlier_count);
    CHECK(a.inlier_mask == b.inlier_mask);
}

TEST_CASE("ransac requires 8 visible pairs and respects visibility") {
    Rng rng(113);
    TwoViewScene s = make_scene(rng, 30.0, 20);
    for (size_t i = 5; i < s.c.visible.size(); ++i) s.c.visible[i] = false;
    CHECK_THROWS_AS(ransac_relative_pose(s.c, s.k, {}), InputError);
}

TEST_CASE("every returned inlier satisfies the distance threshold") {
    Rng rng(114);
    const TwoViewScene s = make_scene(rng, 35.0, 60, 1.0, 0.25);
    RansacConfig cfg;
    cfg.seed = 5;
    const RelativePose pose = ransac_relative_pose(s.c, s.k, cfg);

    // Rebuild F from the final model path: check with the returned inliers via
    // an eight-point refit, mirroring the implementation's final model.
    CorrespondenceSet inliers;
    inliers.s1 = s.c.s1;
    inliers.s2 = s.c.s2;
    inliers.visible = pose.inlier_mask;
    const FundamentalMatrix f = eight_point(inliers, s.k);
    for (size_t i = 0; i < s.c.size(); ++i) {
        if (!pose.inlier_mask[i]) continue;
        CHECK(symmetric_epipolar_distance(f.f, s.c.s1[i], s.c.s2[i]) <
              cfg.inlier_threshold_px + 1e-9);
    }
}

TEST_CASE("noise degrades rotation accuracy on average") {
    Rng rng(115);
    double err_clean = 0.0, err_noisy = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const double yaw = rng.uniform(-50.0, 50.0);
        const TwoViewScene clean = make_scene(rng, yaw, 60);
        const TwoViewScene noisy = make_scene(rng, yaw, 60, 1.0);
        const RelativePose pc =
            decompose_essential(to_essential(eight_point(clean.c, clean.k), clean.k), clean.c, clean.k);
        const RelativePose pn =
            decompose_essential(to_essential(eight_point(noisy.c, noisy.k), noisy.k), noisy.c, noisy.k);
        err_clean += geodesic_distance(pc.r_delta, clean.true_relative);
        err_noisy += geodesic_distance(pn.r_delta, noisy.true_relative);
    }
    CHECK(err_noisy >= err_clean);
}
