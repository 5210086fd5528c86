#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ms/config.hpp"
#include "ms/errors.hpp"
#include "ms/io.hpp"
#include "ms/pipeline.hpp"
#include "ms/synth.hpp"

using namespace ms;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::string path;
    TempDir() {
        path = (std::filesystem::temp_directory_path() /
                ("ms_io_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++)))
                   .string();
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int counter;
};
int TempDir::counter = 0;

}  // namespace

TEST_CASE("every file format round-trips byte-identically") {
    TempDir dir;
    SceneSpec spec;
    spec.seed = 99;
    spec.duration_frames = 90;
    spec.keypoint_noise_px = 0.8;
    pipeline::run_synth(spec, dir.path);
    const pipeline::Paths paths{dir.path};

    const auto roundtrip = [&](const std::string& path, auto reader, auto writer) {
        const std::string original = slurp(path);
        auto data = reader(path);
        const std::string copy = path + ".rt";
        writer(copy, data);
        CHECK(slurp(copy) == original);
    };

    roundtrip(paths.observations(), io::read_observations, io::write_observations);
    roundtrip(paths.tracks(), io::read_tracks, io::write_tracks);
    roundtrip(paths.view_poses(), io::read_poses, io::write_poses);
    roundtrip(paths.truth_poses(), io::read_poses, io::write_poses);
    roundtrip(paths.truth_cameras(), io::read_cameras, io::write_cameras);
    roundtrip(paths.truth_transitions(), io::read_transitions, io::write_transitions);
    roundtrip(paths.truth_contacts(), io::read_contacts, io::write_contacts);
}

TEST_CASE("rel pose and metrics files round-trip") {
    TempDir dir;
    io::RelPosesFile rels;
    rels.fps = 30.0;
    io::RelPoseRecord rec;
    rec.transition = 42;
    rec.rotation = yaw_matrix(0.3);
    rec.t_dir = Vec3(0.1, 0.2, 0.97).normalized();
    rec.inlier_count = 17;
    rec.yaw_deg = rad_to_deg(0.3);
    rels.rel_poses.push_back(rec);
    const std::string p1 = dir.path + "/rel.jsonl";
    io::write_rel_poses(p1, rels);
    const std::string bytes = slurp(p1);
    io::write_rel_poses(p1 + ".rt", io::read_rel_poses(p1));
    CHECK(slurp(p1 + ".rt") == bytes);

    std::vector<io::MetricRecord> metrics = {{"vid", "roe", 1.25, "deg"},
                                             {"vid", "rte", 0.03, "m"}};
    const std::string p2 = dir.path + "/metrics.jsonl";
    io::write_metrics(p2, metrics);
    const auto back = io::read_metrics(p2);
    REQUIRE(back.size() == 2);
    CHECK(back[0].metric == "roe");
    CHECK(back[0].value == 1.25);
}

TEST_CASE("readers reject wrong or corrupt files") {
    TempDir dir;
    const std::string path = dir.path + "/bad.jsonl";
    {
        std::ofstream out(path);
        out << "{\"format\":\"poses\",\"version\":1,\"fps\":30.0,\"joint_count\":24}\n";
    }
    CHECK_THROWS_AS(io::read_observations(path), InputError);
    CHECK_THROWS_AS(io::read_observations(dir.path + "/missing.jsonl"), InputError);
    {
        std::ofstream out(path);
        out << "not json\n";
    }
    CHECK_THROWS_AS(io::read_poses(path), InputError);
}

TEST_CASE("pipeline config") {
    PipelineConfig cfg;
    CHECK(cfg.detect.tau_scene == 0.5);
    CHECK(cfg.ba.window_size == 12);

    cfg.set("detect.tau_scene", "0.25");
    cfg.set("ransac.iterations", "128");
    cfg.set("seed", "99");
    CHECK(cfg.detect.tau_scene == 0.25);
    CHECK(cfg.ransac.iterations == 128);
    CHECK(cfg.seed == 99);

    CHECK_THROWS_AS(cfg.set("no.such.key", "1"), InputError);
    CHECK_THROWS_AS(cfg.set("detect.tau_scene", "abc"), InputError);

    TempDir dir;
    const std::string path = dir.path + "/cfg.txt";
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "detect.tau_bbox = 0.4\n";
        out << "ba.gn_iters=3  # trailing comment\n";
        out << "\n";
    }
    PipelineConfig from_file;
    from_file.load_file(path);
    CHECK(from_file.detect.tau_bbox == 0.4);
    CHECK(from_file.ba.gn_iters == 3);

    {
        std::ofstream out(path);
        out << "detect.tau_bbox 0.4\n";
    }
    PipelineConfig bad;
    CHECK_THROWS_AS(bad.load_file(path), InputError);
    CHECK_THROWS_AS(bad.load_file(dir.path + "/none.txt"), InputError);
}

TEST_CASE("synth writes exactly the nine bundle files") {
    TempDir dir;
    SceneSpec spec;
    spec.seed = 7;
    spec.duration_frames = 120;
    spec.shot_count = 3;
    pipeline::run_synth(spec, dir.path);
    int count = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir.path)) {
        (void)e;
        ++count;
    }
    CHECK(count == 9);
}
