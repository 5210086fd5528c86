// motionstitch: recover one continuous world-frame human motion from
// multi-shot observation streams. Subcommands mirror the pipeline stages;
// `run` chains them all over a working directory produced by `synth`.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ms/config.hpp"
#include "ms/errors.hpp"
#include "ms/pipeline.hpp"
#include "ms/synth.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

ms::PipelineConfig build_config(const CommonOpts& opts) {
    ms::PipelineConfig cfg;
    const char* env = std::getenv("MOTIONSTITCH_CONFIG");
    if (!opts.config_path.empty()) {
        cfg.load_file(opts.config_path);
    } else if (env != nullptr && env[0] != '\0') {
        cfg.load_file(env);
    }
    for (const std::string& kv : opts.overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ms::InputError("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed_set) cfg.seed = opts.seed;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--set", opts.overrides, "override one config key (key=value)")
        ->take_all();
    cmd->add_option("--seed", opts.seed, "pipeline seed")->each([&opts](const std::string&) {
        opts.seed_set = true;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-shot human motion recovery toolchain"};
    app.require_subcommand(1);

    CommonOpts common;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-shot bundle");
    std::string synth_out = ".";
    ms::SceneSpec spec;
    std::string motion_kind = "walk_circle";
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", spec.seed, "scene seed");
    synth->add_option("--frames", spec.duration_frames, "duration in frames");
    synth->add_option("--fps", spec.fps, "frames per second");
    synth->add_option("--shots", spec.shot_count, "number of shots (2, 3 or 4)");
    synth->add_option("--cameras", spec.camera_count, "cameras on the ring");
    synth->add_option("--motion", motion_kind,
                      "motion kind: walk_circle, walk_line, figure_eight, idle");
    synth->add_option("--points", spec.static_point_count, "static scene points");
    synth->add_option("--noise-px", spec.keypoint_noise_px, "keypoint noise sigma, pixels");
    synth->add_option("--outliers", spec.outlier_fraction, "outlier keypoint fraction");
    synth->add_option("--bbox-jitter", spec.bbox_jitter, "fractional bbox jitter");
    synth->add_option("--moving-tracks", spec.moving_track_count, "moving-cluster track count");
    synth->add_option("--min-shot-len", spec.min_shot_len, "minimum shot length, frames");

    // stage commands
    struct StageCmd {
        CLI::App* cmd;
        std::string dir;
    };
    const auto add_stage = [&](const char* name, const char* desc) {
        StageCmd st;
        st.cmd = app.add_subcommand(name, desc);
        st.cmd->add_option("--dir", st.dir, "working directory")->required();
        return st;
    };
    StageCmd detect = add_stage("detect", "detect shot transitions from observations");
    StageCmd calibrate = add_stage("calibrate", "estimate relative camera rotation per transition");
    StageCmd ba = add_stage("ba", "masked bundle adjustment for per-shot camera trajectories");
    StageCmd stitch = add_stage("stitch", "align and stitch per-shot motions");
    StageCmd refine = add_stage("refine", "contact-anchored trajectory refinement");
    StageCmd eval = add_stage("eval", "evaluate poses (and cameras) against ground truth");
    StageCmd run = add_stage("run", "run the full pipeline and evaluate");

    std::string eval_pred;
    std::string video_name = "video";
    eval.cmd->add_option("--pred", eval_pred, "pose file to evaluate (default: refined poses)");
    eval.cmd->add_option("--video", video_name, "video name used in the metrics report");
    run.cmd->add_option("--video", video_name, "video name used in the metrics report");

    for (CLI::App* cmd : {detect.cmd, calibrate.cmd, ba.cmd, stitch.cmd, refine.cmd, eval.cmd,
                          run.cmd}) {
        add_common(cmd, common);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            spec.motion_kind = ms::motion_kind_from_string(motion_kind);
            ms::pipeline::run_synth(spec, synth_out);
            return 0;
        }

        const ms::PipelineConfig cfg = build_config(common);
        if (detect.cmd->parsed()) {
            ms::pipeline::run_detect({detect.dir}, cfg);
        } else if (calibrate.cmd->parsed()) {
            ms::pipeline::run_calibrate({calibrate.dir}, cfg);
        } else if (ba.cmd->parsed()) {
            ms::pipeline::run_ba({ba.dir}, cfg);
        } else if (stitch.cmd->parsed()) {
            ms::pipeline::run_stitch({stitch.dir}, cfg);
        } else if (refine.cmd->parsed()) {
            ms::pipeline::run_refine({refine.dir}, cfg);
        } else if (eval.cmd->parsed()) {
            ms::pipeline::run_eval({eval.dir}, cfg, video_name, eval_pred);
        } else if (run.cmd->parsed()) {
            ms::pipeline::run_all({run.dir}, cfg, video_name);
        }
        return 0;
    } catch (const ms::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ms::UnderConstrainedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
