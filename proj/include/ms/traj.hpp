#ifndef MS_TRAJ_HPP
#define MS_TRAJ_HPP

#include <array>
#include <vector>

#include "ms/align.hpp"
#include "ms/geom.hpp"

namespace ms {

// Skeleton joint ids (fixed 24-node tree).
enum SkeletonJoint : int {
    kPelvis = 0,
    kLeftHip = 1,
    kRightHip = 2,
    kSpine1 = 3,
    kLeftKnee = 4,
    kRightKnee = 5,
    kSpine2 = 6,
    kLeftAnkle = 7,
    kRightAnkle = 8,
    kSpine3 = 9,
    kLeftToe = 10,
    kRightToe = 11,
    kNeck = 12,
    kLeftCollar = 13,
    kRightCollar = 14,
    kHead = 15,
    kLeftShoulder = 16,
    kRightShoulder = 17,
    kLeftElbow = 18,
    kRightElbow = 19,
    kLeftWrist = 20,
    kRightWrist = 21,
    kLeftHand = 22,
    kRightHand = 23,
};

/// Parent of each skeleton joint (-1 for the root).
const std::array<int, kSkeletonJointCount>& skeleton_parents();

/// Rest offset of each joint relative to its parent, meters.
const std::array<Vec3, kSkeletonJointCount>& skeleton_offsets();

/// World-space joint positions for one frame.
struct SkeletonFrame {
    std::array<Vec3, kSkeletonJointCount> joints{};
    double fps = 30.0;
};

struct ContactState {
    std::vector<bool> left_contact;
    std::vector<bool> right_contact;
    std::vector<Vec3> root_velocity;  // m/s

    size_t size() const { return left_contact.size(); }
};

struct ContactConfig {
    double height_thresh_m = 0.08;  // above the estimated ground plane
    double vel_thresh_mps = 0.25;
};

/// Fixed-offset kinematic chain: root at the state's translation with the root
/// orientation, children chained through the 23 joint rotations.
SkeletonFrame forward_kinematics(const BodyState& state, double fps = 30.0);

std::vector<SkeletonFrame> forward_kinematics(const std::vector<BodyState>& states,
                                              double fps = 30.0);

/// Threshold-based contact detection: a foot is in contact when its ankle is
/// below ground + height_thresh and its speed is below vel_thresh. Ground
/// height is the 5th percentile of observed ankle heights. Root velocity is a
/// central finite difference scaled by fps.
ContactState detect_contacts(const std::vector<SkeletonFrame>& frames,
                             const ContactConfig& cfg = {});

/// Contact-anchored root adjustment: within each maximal contact interval the
/// contacting foot's horizontal (XZ) position is anchored to the interval mean;
/// between intervals the correction is bridged with a C1 cubic. Only the root
/// translation changes.
StitchedMotion refine_trajectory(const StitchedMotion& motion, const ContactState& contacts,
                                 double fps = 30.0);

}  // namespace ms

#endif
