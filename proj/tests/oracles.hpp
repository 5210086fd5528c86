#ifndef MS_TESTS_ORACLES_HPP
#define MS_TESTS_ORACLES_HPP

// Test-only reference implementations, coded independently of the library
// paths they validate. Horn's quaternion method stands against the SVD-based
// Umeyama solve; the metric oracles are direct loop re-computations.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "ms/align.hpp"
#include "ms/geom.hpp"
#include "ms/traj.hpp"

namespace oracle {

using ms::Vec3;
using Quat = std::array<double, 4>;  // w, x, y, z

inline Vec3 rotate(const Quat& q, const Vec3& v) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    const Vec3 u(x, y, z);
    const Vec3 uv = u.cross(v);
    return v + 2.0 * (w * uv + u.cross(uv));
}

// Largest-eigenvalue eigenvector of a symmetric 4x4 via Jacobi sweeps.
inline Quat max_eigenvector(std::array<std::array<double, 4>, 4> a) {
    std::array<std::array<double, 4>, 4> v{};
    for (int i = 0; i < 4; ++i) v[i][i] = 1.0;

    for (int iter = 0; iter < 200; ++iter) {
        int p = 0, q = 1;
        double off = 0.0;
        for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j) {
                if (std::abs(a[i][j]) > off) {
                    off = std::abs(a[i][j]);
                    p = i;
                    q = j;
                }
            }
        }
        if (off < 1e-15) break;
        const double theta = 0.5 * std::atan2(2.0 * a[p][q], a[p][p] - a[q][q]);
        const double c = std::cos(theta), s = std::sin(theta);
        const double app = a[p][p], aqq = a[q][q], apq = a[p][q];
        a[p][p] = c * c * app + 2 * s * c * apq + s * s * aqq;
        a[q][q] = s * s * app - 2 * s * c * apq + c * c * aqq;
        a[p][q] = a[q][p] = 0.0;
        for (int r = 0; r < 4; ++r) {
            if (r == p || r == q) continue;
            const double arp = a[r][p], arq = a[r][q];
            a[r][p] = a[p][r] = c * arp + s * arq;
            a[r][q] = a[q][r] = -s * arp + c * arq;
        }
        for (int r = 0; r < 4; ++r) {
            const double vp = v[r][p], vq = v[r][q];
            v[r][p] = c * vp + s * vq;
            v[r][q] = -s * vp + c * vq;
        }
    }
    int best = 0;
    for (int i = 1; i < 4; ++i) {
        if (a[i][i] > a[best][best]) best = i;
    }
    Quat out{v[0][best], v[1][best], v[2][best], v[3][best]};
    double n = std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2] + out[3] * out[3]);
    for (double& e : out) e /= n;
    if (out[0] < 0) for (double& e : out) e = -e;
    return out;
}

struct HornResult {
    Quat rotation{1, 0, 0, 0};
    double scale = 1.0;
    Vec3 translation = Vec3::Zero();
};

// Horn's closed-form absolute orientation (quaternion route), with Umeyama's
// scale: minimizes sum |s R a_i + t - b_i|^2.
inline HornResult horn_align(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                             bool with_scale) {
    const double n = static_cast<double>(a.size());
    Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
    for (const Vec3& p : a) ca += p;
    for (const Vec3& p : b) cb += p;
    ca /= n;
    cb /= n;

    double sxx = 0, sxy = 0, sxz = 0, syx = 0, syy = 0, syz = 0, szx = 0, szy = 0, szz = 0;
    double var_a = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const Vec3 p = a[i] - ca;
        const Vec3 q = b[i] - cb;
        sxx += p.x() * q.x(); sxy += p.x() * q.y(); sxz += p.x() * q.z();
        syx += p.y() * q.x(); syy += p.y() * q.y(); syz += p.y() * q.z();
        szx += p.z() * q.x(); szy += p.z() * q.y(); szz += p.z() * q.z();
        var_a += p.squaredNorm();
    }

    std::array<std::array<double, 4>, 4> m{};
    m[0] = {sxx + syy + szz, syz - szy, szx - sxz, sxy - syx};
    m[1] = {syz - szy, sxx - syy - szz, sxy + syx, szx + sxz};
    m[2] = {szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy};
    m[3] = {sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz};

    HornResult r;
    r.rotation = max_eigenvector(m);
    if (with_scale) {
        // s = sum (R a_c) . b_c / sum |a_c|^2  (valid at the optimal rotation).
        double num = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            num += rotate(r.rotation, a[i] - ca).dot(b[i] - cb);
        }
        r.scale = var_a > 0 ? num / var_a : 1.0;
    }
    r.translation = cb - r.scale * rotate(r.rotation, ca);
    return r;
}

inline double horn_residual(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                            const HornResult& h) {
    double acc = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        acc += (h.scale * rotate(h.rotation, a[i]) + h.translation - b[i]).squaredNorm();
    }
    return acc;
}

// Naive per-frame PA-MPJPE: Horn alignment per frame, plain loops.
inline double pa_mpjpe(const std::vector<ms::SkeletonFrame>& pred,
                       const std::vector<ms::SkeletonFrame>& truth) {
    double total = 0;
    for (size_t f = 0; f < pred.size(); ++f) {
        std::vector<Vec3> p(pred[f].joints.begin(), pred[f].joints.end());
        std::vector<Vec3> g(truth[f].joints.begin(), truth[f].joints.end());
        const HornResult h = horn_align(p, g, true);
        double frame = 0;
        for (size_t j = 0; j < p.size(); ++j) {
            frame += (h.scale * rotate(h.rotation, p[j]) + h.translation - g[j]).norm();
        }
        total += 1000.0 * frame / static_cast<double>(p.size());
    }
    return total / static_cast<double>(pred.size());
}

inline double chunk_mpjpe(const std::vector<ms::SkeletonFrame>& pred,
                          const std::vector<ms::SkeletonFrame>& truth, int chunk,
                          bool first_only) {
    const int n = static_cast<int>(pred.size());
    double total = 0;
    int counted = 0;
    HornResult first_h;
    for (int c0 = 0; c0 < n; c0 += chunk) {
        const int c1 = std::min(n, c0 + chunk);
        HornResult h;
        if (c0 == 0 || !first_only) {
            std::vector<Vec3> p, g;
            for (int f = c0; f < c1; ++f) {
                p.insert(p.end(), pred[static_cast<size_t>(f)].joints.begin(),
                         pred[static_cast<size_t>(f)].joints.end());
                g.insert(g.end(), truth[static_cast<size_t>(f)].joints.begin(),
                         truth[static_cast<size_t>(f)].joints.end());
            }
            h = horn_align(p, g, false);
            if (c0 == 0) first_h = h;
        } else {
            h = first_h;
        }
        for (int f = c0; f < c1; ++f) {
            double frame = 0;
            for (size_t j = 0; j < ms::kSkeletonJointCount; ++j) {
                frame += (rotate(h.rotation, pred[static_cast<size_t>(f)].joints[j]) +
                          h.translation - truth[static_cast<size_t>(f)].joints[j])
                             .norm();
            }
            total += 1000.0 * frame / ms::kSkeletonJointCount;
            ++counted;
        }
    }
    return total / counted;
}

// Naive RTE/ROE: explicit first-frame yaw alignment, plain loops.
inline std::pair<double, double> rte_roe(const std::vector<ms::BodyState>& pred,
                                         const std::vector<ms::BodyState>& truth) {
    const ms::Mat3 rp0 = ms::axis_angle_to_matrix(pred.front().root_orient);
    const ms::Mat3 rt0 = ms::axis_angle_to_matrix(truth.front().root_orient);
    const ms::Mat3 d = rt0 * rp0.transpose();
    const double psi = std::atan2(d(0, 2), d(2, 2));
    const double cp = std::cos(psi), sp = std::sin(psi);
    const auto yaw_apply = [&](const Vec3& v) {
        return Vec3(cp * v.x() + sp * v.z(), v.y(), -sp * v.x() + cp * v.z());
    };
    ms::Mat3 ry;
    ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
    const Vec3 t_off = truth.front().translation - yaw_apply(pred.front().translation);

    double rte_sum = 0, roe_sum = 0;
    for (size_t f = 0; f < pred.size(); ++f) {
        rte_sum += (yaw_apply(pred[f].translation) + t_off - truth[f].translation).norm();
        const ms::Mat3 rp = ry * ms::axis_angle_to_matrix(pred[f].root_orient);
        const ms::Mat3 rt = ms::axis_angle_to_matrix(truth[f].root_orient);
        roe_sum += ms::rad_to_deg(ms::geodesic_distance(rp, rt));
    }
    const double n = static_cast<double>(pred.size());
    return {rte_sum / n, roe_sum / n};
}

// Naive foot sliding over the ankle+toe joints, plain loops.
inline double foot_sliding_cm(const std::vector<ms::SkeletonFrame>& motion,
                              const ms::ContactState& contacts) {
    double total = 0;
    int count = 0;
    for (size_t t = 1; t < motion.size(); ++t) {
        const auto step = [&](int j) {
            const Vec3& a = motion[t - 1].joints[static_cast<size_t>(j)];
            const Vec3& b = motion[t].joints[static_cast<size_t>(j)];
            return std::hypot(b.x() - a.x(), b.z() - a.z());
        };
        if (contacts.left_contact[t] && contacts.left_contact[t - 1]) {
            total += 50.0 * (step(ms::kLeftAnkle) + step(ms::kLeftToe));
            ++count;
        }
        if (contacts.right_contact[t] && contacts.right_contact[t - 1]) {
            total += 50.0 * (step(ms::kRightAnkle) + step(ms::kRightToe));
            ++count;
        }
    }
    return count == 0 ? 0.0 : total / count;
}

// Naive ATE: Horn alignment of camera centers, then RMSE.
inline double ate_m(const std::vector<ms::CameraPose>& pred,
                    const std::vector<ms::CameraPose>& truth) {
    std::vector<Vec3> p, g;
    for (const auto& c : pred) p.push_back(-(c.r.transpose() * c.t));
    for (const auto& c : truth) g.push_back(-(c.r.transpose() * c.t));
    const HornResult h = horn_align(p, g, true);
    double acc = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        acc += (h.scale * rotate(h.rotation, p[i]) + h.translation - g[i]).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(p.size()));
}

// Naive RPE over frame pairs (t, t+delta), plain composition arithmetic.
inline std::pair<double, double> rpe(const std::vector<ms::CameraPose>& pred,
                                     const std::vector<ms::CameraPose>& truth, int delta) {
    double trans = 0, rot = 0;
    int count = 0;
    for (size_t t = 0; t + static_cast<size_t>(delta) < pred.size(); ++t) {
        const size_t u = t + static_cast<size_t>(delta);
        const ms::Mat3 rel_p_r = pred[u].r * pred[t].r.transpose();
        const Vec3 rel_p_t = pred[u].t - rel_p_r * pred[t].t;
        const ms::Mat3 rel_g_r = truth[u].r * truth[t].r.transpose();
        const Vec3 rel_g_t = truth[u].t - rel_g_r * truth[t].t;
        const ms::Mat3 err_r = rel_g_r.transpose() * rel_p_r;
        const Vec3 err_t = rel_g_r.transpose() * (rel_p_t - rel_g_t);
        trans += err_t.norm();
        rot += ms::rad_to_deg(ms::geodesic_distance(err_r, ms::Mat3::Identity()));
        ++count;
    }
    return {trans / count, rot / count};
}

inline double jitter(const std::vector<ms::SkeletonFrame>& motion) {
    const int n = static_cast<int>(motion.size());
    const double fps = motion.front().fps;
    double total = 0;
    int count = 0;
    for (int t = 0; t + 3 < n; ++t) {
        for (size_t j = 0; j < ms::kSkeletonJointCount; ++j) {
            const Vec3 d = motion[static_cast<size_t>(t + 3)].joints[j] -
                           3.0 * motion[static_cast<size_t>(t + 2)].joints[j] +
                           3.0 * motion[static_cast<size_t>(t + 1)].joints[j] -
                           motion[static_cast<size_t>(t)].joints[j];
            total += d.norm();
            ++count;
        }
    }
    return total / count * fps * fps * fps / 10.0;
}

}  // namespace oracle

#endif
