#include "ms/epipolar.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "ms/errors.hpp"
#include "ms/rng.hpp"
#include "ms/simd.hpp"

namespace ms {

namespace {

// Hartley similarity transform: centroid to origin, RMS distance sqrt(2).
Mat3 normalizing_transform(const std::vector<Vec2>& pts, const std::vector<size_t>& idx) {
    Vec2 centroid = Vec2::Zero();
    for (size_t i : idx) centroid += pts[i];
    centroid /= static_cast<double>(idx.size());

    double rms = 0.0;
    for (size_t i : idx) rms += (pts[i] - centroid).squaredNorm();
    rms = std::sqrt(rms / static_cast<double>(idx.size()));
    const double scale = rms > 1e-12 ? std::sqrt(2.0) / rms : 1.0;

    Mat3 t;
    t << scale, 0, -scale * centroid.x(),
         0, scale, -scale * centroid.y(),
         0, 0, 1;
    return t;
}

std::vector<size_t> visible_indices(const CorrespondenceSet& c) {
    std::vector<size_t> idx;
    idx.reserve(c.size());
    for (size_t i = 0; i < c.size(); ++i) {
        if (c.visible[i]) idx.push_back(i);
    }
    return idx;
}

FundamentalMatrix eight_point_on(const CorrespondenceSet& c, const std::vector<size_t>& idx) {
    if (idx.size() < 8) {
        throw InputError("eight_point: need at least 8 visible correspondences, got " +
                         std::to_string(idx.size()));
    }

    const Mat3 t1 = normalizing_transform(c.s1, idx);
    const Mat3 t2 = normalizing_transform(c.s2, idx);

    // One row per correspondence: x2'Fx1 = 0 expanded over the 9 entries of F.
    Eigen::MatrixXd a(idx.size(), 9);
    for (size_t r = 0; r < idx.size(); ++r) {
        const Vec2& p1 = c.s1[idx[r]];
        const Vec2& p2 = c.s2[idx[r]];
        const double x1 = t1(0, 0) * p1.x() + t1(0, 2);
        const double y1 = t1(1, 1) * p1.y() + t1(1, 2);
        const double x2 = t2(0, 0) * p2.x() + t2(0, 2);
        const double y2 = t2(1, 1) * p2.y() + t2(1, 2);
        a.row(static_cast<Eigen::Index>(r)) << x2 * x1, x2 * y1, x2,
                                               y2 * x1, y2 * y1, y2,
                                               x1, y1, 1.0;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // Rank(A) must be 8; with exact data the 9th singular value is ~0, so the
    // conditioning check uses sigma_1 / sigma_8.
    if (sv(7) <= 0.0 || sv(0) / sv(7) > 1e12) {
        throw InputError("eight_point: degenerate correspondence configuration");
    }

    const Eigen::VectorXd fvec = svd.matrixV().col(8);
    Mat3 fn;
    fn << fvec(0), fvec(1), fvec(2),
          fvec(3), fvec(4), fvec(5),
          fvec(6), fvec(7), fvec(8);

    // Rank-2 enforcement: zero the smallest singular value.
    Eigen::JacobiSVD<Mat3> fsvd(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 s = fsvd.singularValues();
    s.z() = 0.0;
    fn = fsvd.matrixU() * s.asDiagonal() * fsvd.matrixV().transpose();

    Mat3 f = t2.transpose() * fn * t1;
    f /= f.norm();

    // Deterministic sign: largest-magnitude entry positive.
    double best = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(f(i, j)) > std::abs(best)) best = f(i, j);
    if (best < 0) f = -f;

    return FundamentalMatrix{f};
}

struct Ray {
    Vec3 origin;
    Vec3 dir;
};

// Midpoint of the common perpendicular between two rays; returns false for
// near-parallel rays.
bool midpoint_triangulate(const Ray& r1, const Ray& r2, Vec3* out) {
    const Vec3 w0 = r1.origin - r2.origin;
    const double a = r1.dir.dot(r1.dir);
    const double b = r1.dir.dot(r2.dir);
    const double c = r2.dir.dot(r2.dir);
    const double d = r1.dir.dot(w0);
    const double e = r2.dir.dot(w0);
    const double denom = a * c - b * b;
    if (std::abs(denom) < 1e-12) return false;
    const double s = (b * e - c * d) / denom;
    const double t = (a * e - b * d) / denom;
    *out = 0.5 * ((r1.origin + s * r1.dir) + (r2.origin + t * r2.dir));
    return true;
}

Vec3 backproject(const Intrinsics& k, const Vec2& p) {
    return Vec3((p.x() - k.ox) / k.fx, (p.y() - k.oy) / k.fy, 1.0);
}

}  // namespace

size_t CorrespondenceSet::visible_count() const {
    size_t n = 0;
    for (bool v : visible) n += v ? 1 : 0;
    return n;
}

double symmetric_epipolar_distance(const Mat3& f, const Vec2& p1, const Vec2& p2) {
    double farr[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) farr[3 * i + j] = f(i, j);
    const double x1 = p1.x(), y1 = p1.y(), x2 = p2.x(), y2 = p2.y();
    double out = 0.0;
    simd::kernels().epipolar_sym_dist_sq(farr, &x1, &y1, &x2, &y2, 1, &out);
    return std::sqrt(out);
}

FundamentalMatrix eight_point(const CorrespondenceSet& c, const Intrinsics& k) {
    (void)k;  // pixel-space solve; intrinsics enter in to_essential
    if (c.s1.size() != c.s2.size() || c.s1.size() != c.visible.size()) {
        throw InputError("eight_point: correspondence arrays disagree in length");
    }
    return eight_point_on(c, visible_indices(c));
}

EssentialMatrix to_essential(const FundamentalMatrix& f, const Intrinsics& k) {
    const Mat3 km = k.matrix();
    Mat3 e = km.transpose() * f.f * km;

    Eigen::JacobiSVD<Mat3> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 ones(1.0, 1.0, 0.0);
    e = svd.matrixU() * ones.asDiagonal() * svd.matrixV().transpose();
    return EssentialMatrix{e};
}

RelativePose decompose_essential(const EssentialMatrix& e, const CorrespondenceSet& c,
                                 const Intrinsics& k) {
    const std::vector<size_t> idx = visible_indices(c);
    if (idx.empty()) {
        throw InputError("decompose_essential: need at least one visible correspondence");
    }

    Eigen::JacobiSVD<Mat3> svd(e.e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();

    Mat3 w;
    w << 0, -1, 0,
         1, 0, 0,
         0, 0, 1;

    Mat3 r1 = u * w * v.transpose();
    Mat3 r2 = u * w.transpose() * v.transpose();
    if (r1.determinant() < 0) r1 = -r1;
    if (r2.determinant() < 0) r2 = -r2;
    const Vec3 t = u.col(2);

    const Mat3 rs[4] = {r1, r1, r2, r2};
    const Vec3 ts[4] = {t, -t, t, -t};

    int best_candidate = -1;
    int best_in_front = -1;
    for (int cand = 0; cand < 4; ++cand) {
        const Mat3& r = rs[cand];
        const Vec3& tc = ts[cand];
        // Rays in the tail-view frame: camera 1 at origin, camera 2 center at -R't.
        const Vec3 c2 = -r.transpose() * tc;
        int in_front = 0;
        for (size_t i : idx) {
            Ray ray1{Vec3::Zero(), backproject(k, c.s1[i])};
            Ray ray2{c2, r.transpose() * backproject(k, c.s2[i])};
            Vec3 x;
            if (!midpoint_triangulate(ray1, ray2, &x)) continue;
            const double z1 = x.z();
            const double z2 = (r * x + tc).z();
            if (z1 > 0 && z2 > 0) ++in_front;
        }
        if (in_front > best_in_front) {
            best_in_front = in_front;
            best_candidate = cand;
        }
    }

    if (best_candidate < 0 || 2 * best_in_front <= static_cast<int>(idx.size())) {
        throw InputError("decompose_essential: cheirality test failed (no candidate places a "
                         "majority of points in front of both cameras)");
    }

    RelativePose pose;
    pose.r_delta = rs[best_candidate];
    pose.t_dir = ts[best_candidate].normalized();
    pose.inlier_count = static_cast<int>(idx.size());
    pose.inlier_mask = c.visible;
    return pose;
}

namespace {

struct YawSweep {
    std::vector<Vec3> b1, b2;
    std::vector<double> x1, y1, x2, y2;
    std::vector<size_t> idx;
    Mat3 k_inv;
    double thr_sq = 16.0;
    size_t n = 0;

    // For a fixed yaw the epipolar constraint is linear in t:
    // x2 . (t x (Y x1)) = 0  =>  t ⟂ (Y x1) x x2 for every pair.
    std::pair<int, double> evaluate(double psi, Vec3* t_out, std::vector<double>* d_out) const {
        const Mat3 ry = yaw_matrix(psi);
        Mat3 vtv = Mat3::Zero();
        for (size_t i = 0; i < n; ++i) {
            const Vec3 v = (ry * b1[i]).cross(b2[i]);
            vtv += v * v.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> es(vtv);
        const Vec3 t = es.eigenvectors().col(0);
        const Mat3 f = k_inv.transpose() * (skew(t) * ry) * k_inv;
        double farr[9];
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) farr[3 * r + cc] = f(r, cc);
        simd::kernels().epipolar_sym_dist_sq(farr, x1.data(), y1.data(), x2.data(), y2.data(), n,
                                             d_out->data());
        *t_out = t;
        int inliers = 0;
        double robust = 0.0;
        for (size_t i = 0; i < n; ++i) {
            if ((*d_out)[i] < thr_sq) ++inliers;
            robust += std::min((*d_out)[i], thr_sq);
        }
        return {inliers, robust};
    }
};

}  // namespace

std::vector<RelativePose> yaw_consensus_candidates(const CorrespondenceSet& c,
                                                   const Intrinsics& k,
                                                   const YawConsensusConfig& cfg,
                                                   int max_candidates) {
    YawSweep sweep;
    sweep.idx = visible_indices(c);
    if (sweep.idx.size() < 3) {
        throw InputError("yaw_consensus: need at least 3 visible correspondences");
    }
    sweep.n = sweep.idx.size();
    const size_t n = sweep.n;
    sweep.b1.resize(n);
    sweep.b2.resize(n);
    sweep.x1.resize(n);
    sweep.y1.resize(n);
    sweep.x2.resize(n);
    sweep.y2.resize(n);
    for (size_t i = 0; i < n; ++i) {
        sweep.b1[i] = backproject(k, c.s1[sweep.idx[i]]);
        sweep.b2[i] = backproject(k, c.s2[sweep.idx[i]]);
        sweep.x1[i] = c.s1[sweep.idx[i]].x();
        sweep.y1[i] = c.s1[sweep.idx[i]].y();
        sweep.x2[i] = c.s2[sweep.idx[i]].x();
        sweep.y2[i] = c.s2[sweep.idx[i]].y();
    }
    sweep.k_inv = k.matrix().inverse();
    sweep.thr_sq = cfg.inlier_threshold_px * cfg.inlier_threshold_px;

    struct GridPoint {
        double psi;
        int inliers;
        double robust;
    };
    std::vector<GridPoint> grid;
    std::vector<double> dist_sq(n);
    Vec3 t_tmp;
    const double step = deg_to_rad(cfg.grid_step_deg);
    for (double psi = -kPi; psi < kPi; psi += step) {
        const auto [inliers, robust] = sweep.evaluate(psi, &t_tmp, &dist_sq);
        grid.push_back({psi, inliers, robust});
    }

    int best_inliers = 0;
    for (const GridPoint& g : grid) best_inliers = std::max(best_inliers, g.inliers);

    // Local maxima of the consensus profile (circular neighborhood), strong
    // enough to be worth refining.
    std::vector<GridPoint> peaks;
    const size_t gn = grid.size();
    for (size_t i = 0; i < gn; ++i) {
        const GridPoint& cur = grid[i];
        const GridPoint& prev = grid[(i + gn - 1) % gn];
        const GridPoint& next = grid[(i + 1) % gn];
        const bool peak = (cur.inliers > prev.inliers ||
                           (cur.inliers == prev.inliers && cur.robust <= prev.robust)) &&
                          (cur.inliers > next.inliers ||
                           (cur.inliers == next.inliers && cur.robust < next.robust));
        if (peak && cur.inliers >= std::max(3, static_cast<int>(0.7 * best_inliers))) {
            peaks.push_back(cur);
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const GridPoint& a, const GridPoint& b) {
        if (a.inliers != b.inliers) return a.inliers > b.inliers;
        if (a.robust != b.robust) return a.robust < b.robust;
        return a.psi < b.psi;
    });

    // Suppress near-duplicate peaks and refine the survivors.
    std::vector<RelativePose> out;
    for (const GridPoint& p : peaks) {
        if (static_cast<int>(out.size()) >= max_candidates) break;
        bool dup = false;
        for (const RelativePose& r : out) {
            double d = std::abs(yaw_angle(r.r_delta) - p.psi);
            if (d > kPi) d = 2 * kPi - d;
            if (d < deg_to_rad(5.0)) dup = true;
        }
        if (dup) continue;

        // Golden-section refinement of the robust score around the peak.
        double lo = p.psi - step, hi = p.psi + step;
        const double gr = 0.61803398874989484820;
        const auto robust_at = [&](double psi) {
            return sweep.evaluate(psi, &t_tmp, &dist_sq).second;
        };
        double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
        double f1 = robust_at(m1), f2 = robust_at(m2);
        for (int it = 0; it < 40; ++it) {
            if (f1 < f2) {
                hi = m2;
                m2 = m1;
                f2 = f1;
                m1 = hi - gr * (hi - lo);
                f1 = robust_at(m1);
            } else {
                lo = m1;
                m1 = m2;
                f1 = f2;
                m2 = lo + gr * (hi - lo);
                f2 = robust_at(m2);
            }
        }
        const double psi = 0.5 * (lo + hi);

        Vec3 t_best;
        sweep.evaluate(psi, &t_best, &dist_sq);

        RelativePose pose;
        pose.r_delta = yaw_matrix(psi);
        pose.inlier_mask.assign(c.size(), false);
        pose.inlier_count = 0;
        for (size_t i = 0; i < n; ++i) {
            if (dist_sq[i] < sweep.thr_sq) {
                pose.inlier_mask[sweep.idx[i]] = true;
                ++pose.inlier_count;
            }
        }

        // Cheirality fixes the translation sign; the epipolar score cannot.
        int front_pos = 0, front_neg = 0;
        const Vec3 c2_pos = -pose.r_delta.transpose() * t_best;
        for (size_t i = 0; i < n; ++i) {
            Vec3 x;
            Ray r1{Vec3::Zero(), sweep.b1[i]};
            Ray r2p{c2_pos, pose.r_delta.transpose() * sweep.b2[i]};
            if (midpoint_triangulate(r1, r2p, &x)) {
                if (x.z() > 0 && (pose.r_delta * x + t_best).z() > 0) ++front_pos;
            }
            Ray r2n{-c2_pos, pose.r_delta.transpose() * sweep.b2[i]};
            if (midpoint_triangulate(r1, r2n, &x)) {
                if (x.z() > 0 && (pose.r_delta * x - t_best).z() > 0) ++front_neg;
            }
        }
        pose.t_dir = (front_neg > front_pos ? -t_best : t_best).normalized();
        out.push_back(std::move(pose));
    }

    if (out.empty()) {
        throw InputError("yaw_consensus: no consensus peak found");
    }
    return out;
}

RelativePose yaw_consensus_pose(const CorrespondenceSet& c, const Intrinsics& k,
                                const YawConsensusConfig& cfg) {
    return yaw_consensus_candidates(c, k, cfg, 1).front();
}

RelativePose ransac_relative_pose(const CorrespondenceSet& c, const Intrinsics& k,
                                  const RansacConfig& cfg) {
    const std::vector<size_t> idx = visible_indices(c);
    if (idx.size() < 8) {
        throw InputError("ransac_relative_pose: need at least 8 visible correspondences, got " +
                         std::to_string(idx.size()));
    }

    // SoA copies of the visible pairs for batch scoring.
    const size_t n = idx.size();
    std::vector<double> x1(n), y1(n), x2(n), y2(n), dist_sq(n);
    for (size_t i = 0; i < n; ++i) {
        x1[i] = c.s1[idx[i]].x();
        y1[i] = c.s1[idx[i]].y();
        x2[i] = c.s2[idx[i]].x();
        y2[i] = c.s2[idx[i]].y();
    }
    const double thr_sq = cfg.inlier_threshold_px * cfg.inlier_threshold_px;

    Rng rng(cfg.seed ^ 0x8f1bbcdc2f693b3aULL);
    std::vector<size_t> pool(n);

    Mat3 best_f = Mat3::Zero();
    int best_inliers = -1;
    std::vector<bool> best_mask;
    bool have_model = false;

    CorrespondenceSet sample;
    sample.s1.resize(8);
    sample.s2.resize(8);
    sample.visible.assign(8, true);

    int needed_iters = cfg.iterations;
    for (int iter = 0; iter < cfg.iterations && iter < needed_iters; ++iter) {
        // Partial Fisher-Yates for 8 distinct visible pairs.
        for (size_t i = 0; i < n; ++i) pool[i] = i;
        for (int j = 0; j < 8; ++j) {
            const size_t pick = j + static_cast<size_t>(rng.uniform_index(n - j));
            std::swap(pool[j], pool[pick]);
            sample.s1[j] = Vec2(x1[pool[j]], y1[pool[j]]);
            sample.s2[j] = Vec2(x2[pool[j]], y2[pool[j]]);
        }

        Mat3 f;
        try {
            f = eight_point_on(sample, {0, 1, 2, 3, 4, 5, 6, 7}).f;
        } catch (const InputError&) {
            continue;  // degenerate sample
        }

        double farr[9];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) farr[3 * i + j] = f(i, j);
        simd::kernels().epipolar_sym_dist_sq(farr, x1.data(), y1.data(), x2.data(), y2.data(), n,
                                             dist_sq.data());
        int inliers = 0;
        for (size_t i = 0; i < n; ++i) {
            if (dist_sq[i] < thr_sq) ++inliers;
        }
        if (inliers > best_inliers) {
            best_inliers = inliers;
            best_f = f;
            best_mask.assign(c.size(), false);
            for (size_t i = 0; i < n; ++i) {
                if (dist_sq[i] < thr_sq) best_mask[idx[i]] = true;
            }
            have_model = true;

            // Adaptive exit at 1 - 1e-4 confidence of having drawn one
            // all-inlier sample.
            const double w = static_cast<double>(inliers) / static_cast<double>(n);
            const double p_clean = std::pow(w, 8.0);
            if (p_clean > 1e-9) {
                const double limit = std::log(1e-4) / std::log(std::max(1e-12, 1.0 - p_clean));
                needed_iters = static_cast<int>(std::min<double>(cfg.iterations, limit + 1.0));
            }
        }
    }

    if (!have_model || best_inliers < 8) {
        throw InputError("ransac_relative_pose: all iterations degenerate or too few inliers");
    }

    // Refit on the winning inlier set, then iterate mask <-> model to a
    // fixpoint so every returned inlier satisfies the threshold under the
    // returned model.
    std::vector<bool> final_mask = best_mask;
    CorrespondenceSet final_set;
    final_set.s1 = c.s1;
    final_set.s2 = c.s2;
    final_set.visible = final_mask;
    FundamentalMatrix f_final = eight_point(final_set, k);
    for (int round = 0; round < 16; ++round) {
        double farr[9];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) farr[3 * i + j] = f_final.f(i, j);
        simd::kernels().epipolar_sym_dist_sq(farr, x1.data(), y1.data(), x2.data(), y2.data(), n,
                                             dist_sq.data());
        std::vector<bool> next_mask(c.size(), false);
        size_t count = 0;
        for (size_t i = 0; i < n; ++i) {
            if (dist_sq[i] < thr_sq) {
                next_mask[idx[i]] = true;
                ++count;
            }
        }
        if (count < 8 || next_mask == final_mask) break;
        final_mask = std::move(next_mask);
        final_set.visible = final_mask;
        f_final = eight_point(final_set, k);
    }

    const EssentialMatrix e = to_essential(f_final, k);
    RelativePose pose = decompose_essential(e, final_set, k);
    pose.inlier_mask = final_mask;
    pose.inlier_count = static_cast<int>(final_set.visible_count());
    return pose;
}

}  // namespace ms
