#ifndef MS_IO_HPP
#define MS_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include "ms/align.hpp"
#include "ms/ba.hpp"
#include "ms/epipolar.hpp"
#include "ms/geom.hpp"
#include "ms/shotdet.hpp"
#include "ms/traj.hpp"

namespace ms::io {

// All data files are UTF-8 JSON lines: a header object first (format, version,
// fps, joint_count, plus format-specific fields), then one record per line.

struct ObservationsFile {
    double fps = 30.0;
    double image_width = 0.0, image_height = 0.0;
    Intrinsics intrinsics;
    std::vector<FrameObservation> observations;
};

struct PosesFile {
    double fps = 30.0;
    int first_frame = 0;
    std::vector<BodyState> states;
};

struct CamerasFile {
    double fps = 30.0;
    Intrinsics intrinsics;
    int first_frame = 0;
    std::vector<CameraPose> cameras;
};

struct TracksFile {
    double fps = 30.0;
    int total_frames = 0;
    std::vector<PointTrack> tracks;
};

struct TransitionsFile {
    double fps = 30.0;
    ShotSegmentation segmentation;
};

struct ContactsFile {
    double fps = 30.0;
    ContactState contacts;
};

struct RelPoseRecord {
    int transition = 0;  // first frame of the new shot
    Mat3 rotation = Mat3::Identity();
    Vec3 t_dir = Vec3::UnitZ();
    int inlier_count = 0;
    double yaw_deg = 0.0;
};

struct RelPosesFile {
    double fps = 30.0;
    std::vector<RelPoseRecord> rel_poses;
};

struct MetricRecord {
    std::string video;
    std::string metric;
    double value = 0.0;
    std::string unit;
};

void write_observations(const std::string& path, const ObservationsFile& data);
ObservationsFile read_observations(const std::string& path);

void write_poses(const std::string& path, const PosesFile& data);
PosesFile read_poses(const std::string& path);

void write_cameras(const std::string& path, const CamerasFile& data);
CamerasFile read_cameras(const std::string& path);

void write_tracks(const std::string& path, const TracksFile& data);
TracksFile read_tracks(const std::string& path);

void write_transitions(const std::string& path, const TransitionsFile& data);
TransitionsFile read_transitions(const std::string& path);

void write_contacts(const std::string& path, const ContactsFile& data);
ContactsFile read_contacts(const std::string& path);

void write_rel_poses(const std::string& path, const RelPosesFile& data);
RelPosesFile read_rel_poses(const std::string& path);

void write_metrics(const std::string& path, const std::vector<MetricRecord>& records);
std::vector<MetricRecord> read_metrics(const std::string& path);

}  // namespace ms::io

#endif
