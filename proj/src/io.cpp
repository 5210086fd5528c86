#include "ms/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ms/errors.hpp"

namespace ms::io {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json make_header(const char* format, double fps) {
    json h;
    h["format"] = format;
    h["version"] = kFormatVersion;
    h["fps"] = fps;
    h["joint_count"] = kSkeletonJointCount;
    return h;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot open '" + path + "' for writing");
    }
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "' for reading");
    }
    return in;
}

json parse_line(const std::string& line, const std::string& path) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw InputError("corrupt record in '" + path + "': " + e.what());
    }
}

json read_header(std::ifstream& in, const char* format, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("'" + path + "' is empty");
    }
    const json h = parse_line(line, path);
    if (!h.contains("format") || h["format"] != format) {
        throw InputError("'" + path + "' is not a " + std::string(format) + " file");
    }
    return h;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& a) { return Vec3(a.at(0), a.at(1), a.at(2)); }

json mat3_json(const Mat3& m) {
    json a = json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a.push_back(m(i, j));
    return a;
}

Mat3 mat3_from(const json& a) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = a.at(static_cast<size_t>(3 * i + j));
    return m;
}

json bbox_json(const BBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BBox bbox_from(const json& a) { return BBox(a.at(0), a.at(1), a.at(2), a.at(3)); }

}  // namespace

void write_observations(const std::string& path, const ObservationsFile& data) {
    std::ofstream out = open_out(path);
    json h = make_header("observations", data.fps);
    h["width"] = data.image_width;
    h["height"] = data.image_height;
    h["fx"] = data.intrinsics.fx;
    h["fy"] = data.intrinsics.fy;
    h["ox"] = data.intrinsics.ox;
    h["oy"] = data.intrinsics.oy;
    out << h.dump() << "\n";
    for (const FrameObservation& obs : data.observations) {
        json rec;
        rec["frame"] = obs.frame_index;
        rec["bbox"] = bbox_json(obs.bbox);
        rec["scene_score"] = obs.scene_score;
        json kpts = json::array();
        for (const Keypoint2D& kp : obs.keypoints.joints) {
            kpts.push_back(json::array({kp.u, kp.v, kp.visible ? 1 : 0, kp.confidence}));
        }
        rec["keypoints"] = std::move(kpts);
        if (obs.mask_bbox.has_value()) {
            rec["mask_bbox"] = bbox_json(*obs.mask_bbox);
        }
        out << rec.dump() << "\n";
    }
}

ObservationsFile read_observations(const std::string& path) {
    std::ifstream in = open_in(path);
    ObservationsFile data;
    const json h = read_header(in, "observations", path);
    data.fps = h.at("fps");
    data.image_width = h.value("width", 0.0);
    data.image_height = h.value("height", 0.0);
    data.intrinsics = Intrinsics(h.value("fx", 1.0), h.value("fy", 1.0), h.value("ox", 0.0),
                                 h.value("oy", 0.0));

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = parse_line(line, path);
        FrameObservation obs;
        obs.frame_index = rec.at("frame");
        obs.bbox = bbox_from(rec.at("bbox"));
        obs.scene_score = rec.at("scene_score");
        for (const json& kj : rec.at("keypoints")) {
            Keypoint2D kp;
            kp.u = kj.at(0);
            kp.v = kj.at(1);
            kp.visible = static_cast<double>(kj.at(2)) != 0.0;
            kp.confidence = kj.at(3);
            obs.keypoints.joints.push_back(kp);
        }
        if (rec.contains("mask_bbox")) {
            obs.mask_bbox = bbox_from(rec.at("mask_bbox"));
        }
        data.observations.push_back(std::move(obs));
    }
    return data;
}

void write_poses(const std::string& path, const PosesFile& data) {
    std::ofstream out = open_out(path);
    out << make_header("poses", data.fps).dump() << "\n";
    for (size_t i = 0; i < data.states.size(); ++i) {
        const BodyState& st = data.states[i];
        json rec;
        rec["frame"] = data.first_frame + static_cast<int>(i);
        rec["root_orient"] = vec3_json(st.root_orient.v);
        json body = json::array();
        for (const AxisAngle& a : st.body_pose) {
            body.push_back(a.v.x());
            body.push_back(a.v.y());
            body.push_back(a.v.z());
        }
        rec["body_pose"] = std::move(body);
        rec["shape"] = st.shape;
        rec["translation"] = vec3_json(st.translation);
        out << rec.dump() << "\n";
    }
}

PosesFile read_poses(const std::string& path) {
    std::ifstream in = open_in(path);
    PosesFile data;
    const json h = read_header(in, "poses", path);
    data.fps = h.at("fps");

    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = parse_line(line, path);
        if (first) {
            data.first_frame = rec.at("frame");
            first = false;
        }
        BodyState st;
        st.root_orient = AxisAngle(vec3_from(rec.at("root_orient")));
        const json& body = rec.at("body_pose");
        if (body.size() != 3 * kBodyJointCount) {
            throw InputError("'" + path + "': body_pose must have 69 entries");
        }
        for (int j = 0; j < kBodyJointCount; ++j) {
            st.body_pose[static_cast<size_t>(j)] =
                AxisAngle(body.at(static_cast<size_t>(3 * j)), body.at(static_cast<size_t>(3 * j + 1)),
                          body.at(static_cast<size_t>(3 * j + 2)));
        }
        const json& shape = rec.at("shape");
        if (shape.size() != kShapeDim) {
            throw InputError("'" + path + "': shape must have 10 entries");
        }
        for (int j = 0; j < kShapeDim; ++j) st.shape[static_cast<size_t>(j)] = shape.at(static_cast<size_t>(j));
        st.translation = vec3_from(rec.at("translation"));
        data.states.push_back(st);
    }
    return data;
}

void write_cameras(const std::string& path, const CamerasFile& data) {
    std::ofstream out = open_out(path);
    json h = make_header("cameras", data.fps);
    h["fx"] = data.intrinsics.fx;
    h["fy"] = data.intrinsics.fy;
    h["ox"] = data.intrinsics.ox;
    h["oy"] = data.intrinsics.oy;
    out << h.dump() << "\n";
    for (size_t i = 0; i < data.cameras.size(); ++i) {
        json rec;
        rec["frame"] = data.first_frame + static_cast<int>(i);
        rec["rotation"] = mat3_json(data.cameras[i].r);
        rec["translation"] = vec3_json(data.cameras[i].t);
        out << rec.dump() << "\n";
    }
}

CamerasFile read_cameras(const std::string& path) {
    std::ifstream in = open_in(path);
    CamerasFile data;
    const json h = read_header(in, "cameras", path);
    data.fps = h.at("fps");
    data.intrinsics =
        Intrinsics(h.at("fx"), h.at("fy"), h.at("ox"), h.at("oy"));

    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = parse_line(line, path);
        if (first) {
            data.first_frame = rec.at("frame");
            first = false;
        }
        data.cameras.emplace_back(mat3_from(rec.at("rotation")), vec3_from(rec.at("translation")));
    }
    return data;
}

void write_tracks(const std::string& path, const TracksFile& data) {
    std::ofstream out = open_out(path);
    json h = make_header("tracks", data.fps);
    h["total_frames"] = data.total_frames;
    out << h.dump() << "\n";
    for (const PointTrack& tr : data.tracks) {
        json rec;
        rec["track_id"] = tr.id;
        rec["anchor_frame"] = tr.anchor_frame;
        json pos = json::array();
        for (size_t i = 0; i < tr.positions.size(); ++i) {
            if (!tr.visible[i]) continue;
            pos.push_back(json::array({tr.first_frame + static_cast<int>(i), tr.positions[i].x(),
                                       tr.positions[i].y()}));
        }
        rec["positions"] = std::move(pos);
        rec["dynamic"] = tr.dynamic;
        out << rec.dump() << "\n";
    }
}

TracksFile read_tracks(const std::string& path) {
    std::ifstream in = open_in(path);
    TracksFile data;
    const json h = read_header(in, "tracks", path);
    data.fps = h.at("fps");
    data.total_frames = h.at("total_frames");

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = parse_line(line, path);
        PointTrack tr;
        tr.id = rec.at("track_id");
        tr.anchor_frame = rec.at("anchor_frame");
        tr.first_frame = 0;
        tr.positions.assign(static_cast<size_t>(data.total_frames), Vec2::Zero());
        tr.visible.assign(static_cast<size_t>(data.total_frames), false);
        for (const json& p : rec.at("positions")) {
            const int frame = p.at(0);
            if (frame < 0 || frame >= data.total_frames) {
                throw InputError("'" + path + "': track position frame out of range");
            }
            tr.positions[static_cast<size_t>(frame)] = Vec2(p.at(1), p.at(2));
            tr.visible[static_cast<size_t>(frame)] = true;
        }
        tr.dynamic = rec.at("dynamic");
        data.tracks.push_back(std::move(tr));
    }
    return data;
}

void write_transitions(const std::string& path, const TransitionsFile& data) {
    std::ofstream out = open_out(path);
    json h = make_header("transitions", data.fps);
    h["total_frames"] = data.segmentation.total_frames;
    out << h.dump() << "\n";
    for (int t : data.segmentation.transitions) {
        out << t << "\n";
    }
}

TransitionsFile read_transitions(const std::string& path) {
    std::ifstream in = open_in(path);
    TransitionsFile data;
    const json h = read_header(in, "transitions", path);
    data.fps = h.at("fps");
    data.segmentation.total_frames = h.at("total_frames");

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            data.segmentation.transitions.push_back(std::stoi(line));
        } catch (const std::exception&) {
            throw InputError("'" + path + "': bad transition line '" + line + "'");
        }
    }
    return data;
}

void write_contacts(const std::string& path, const ContactsFile& data) {
    std::ofstream out = open_out(path);
    out << make_header("contacts", data.fps).dump() << "\n";
    for (size_t t = 0; t < data.contacts.size(); ++t) {
        json rec;
        rec["frame"] = static_cast<int>(t);
        rec["left"] = static_cast<bool>(data.contacts.left_contact[t]);
        rec["right"] = static_cast<bool>(data.contacts.right_contact[t]);
        rec["root_velocity"] = vec3_json(data.contacts.root_velocity[t]);
        out << rec.dump() << "\n";
    }
}

ContactsFile read_contacts(const std::string& path) {
    std::ifstream in = open_in(path);
    ContactsFile data;
    const json h = read_header(in, "contacts", path);
    data.fps = h.at("fps");

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = parse_line(line, path);
        data.contacts.left_contact.push_back(static_cast<bool>(rec.at("left")));
        data.contacts.right_contact.push_back(static_cast<bool>(rec.at("right")));
        data.contacts.root_velocity.push_back(vec3_from(rec.at("root_velocity")));
    }
    return data;
}

void write_rel_poses(const std::string& path, const RelPosesFile& data) {
    std::ofstream out = open_out(path);
    out << make_header("rel_poses", data.fps).dump() << "\n";
    for (const RelPoseRecord& rp : data.rel_poses) {
        json rec;
        rec["transition"] = rp.transition;
        rec["rotation"] = mat3_json(rp.rotation);
        rec["t_dir"] = vec3_json(rp.t_dir);
        rec["inlier_count"] = rp.inlier_count;
        rec["yaw_deg"] = rp.yaw_deg;
        out << rec.dump() << "\n";
    }
}

RelPosesFile read_rel_poses(const std::string& path) {
    std::ifstream in = open_in(path);
    RelPosesFile data;
    const json h = read_header(in, "rel_poses", path);
    data.fps = h.at("fps");

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = parse_line(line, path);
        RelPoseRecord rp;
        rp.transition = rec.at("transition");
        rp.rotation = mat3_from(rec.at("rotation"));
        rp.t_dir = vec3_from(rec.at("t_dir"));
        rp.inlier_count = rec.at("inlier_count");
        rp.yaw_deg = rec.at("yaw_deg");
        data.rel_poses.push_back(rp);
    }
    return data;
}

void write_metrics(const std::string& path, const std::vector<MetricRecord>& records) {
    std::ofstream out = open_out(path);
    out << make_header("metrics", 0.0).dump() << "\n";
    for (const MetricRecord& r : records) {
        json rec;
        rec["video"] = r.video;
        rec["metric"] = r.metric;
        rec["value"] = r.value;
        rec["unit"] = r.unit;
        out << rec.dump() << "\n";
    }
}

std::vector<MetricRecord> read_metrics(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<MetricRecord> records;
    read_header(in, "metrics", path);

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = parse_line(line, path);
        records.push_back(
            {rec.at("video"), rec.at("metric"), rec.at("value"), rec.at("unit")});
    }
    return records;
}

}  // namespace ms::io
