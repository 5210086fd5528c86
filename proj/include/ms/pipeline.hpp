#ifndef MS_PIPELINE_HPP
#define MS_PIPELINE_HPP

#include <string>
#include <vector>

#include "ms/config.hpp"
#include "ms/io.hpp"
#include "ms/synth.hpp"

namespace ms::pipeline {

/// Conventional artifact names inside a working directory.
struct Paths {
    std::string dir;

    std::string observations() const { return dir + "/observations.jsonl"; }
    std::string tracks() const { return dir + "/tracks.jsonl"; }
    std::string view_poses() const { return dir + "/view_poses.jsonl"; }
    std::string truth_poses() const { return dir + "/truth_poses.jsonl"; }
    std::string truth_cameras() const { return dir + "/truth_cameras.jsonl"; }
    std::string truth_transitions() const { return dir + "/truth_transitions.jsonl"; }
    std::string truth_contacts() const { return dir + "/truth_contacts.jsonl"; }
    std::string scene() const { return dir + "/scene.json"; }
    std::string manifest() const { return dir + "/manifest.json"; }

    std::string transitions() const { return dir + "/transitions.jsonl"; }
    std::string rel_poses() const { return dir + "/rel_poses.jsonl"; }
    std::string cameras_est() const { return dir + "/cameras_est.jsonl"; }
    std::string stitched_poses() const { return dir + "/stitched_poses.jsonl"; }
    std::string stitch_meta() const { return dir + "/stitch_meta.json"; }
    std::string refined_poses() const { return dir + "/refined_poses.jsonl"; }
    std::string contacts_est() const { return dir + "/contacts_est.jsonl"; }
    std::string metrics() const { return dir + "/metrics.jsonl"; }
};

/// Generates a synthetic bundle and writes all input + ground-truth files.
void run_synth(const SceneSpec& spec, const std::string& dir);

void run_detect(const Paths& paths, const PipelineConfig& cfg);
void run_calibrate(const Paths& paths, const PipelineConfig& cfg);
void run_ba(const Paths& paths, const PipelineConfig& cfg);
void run_stitch(const Paths& paths, const PipelineConfig& cfg);
void run_refine(const Paths& paths, const PipelineConfig& cfg);

/// Computes every available metric for `pred_poses_path` (defaults to the
/// refined poses) against the truth sidecars; writes and returns the records.
std::vector<io::MetricRecord> run_eval(const Paths& paths, const PipelineConfig& cfg,
                                       const std::string& video_name,
                                       const std::string& pred_poses_path = "");

/// Full pipeline: detect, calibrate, ba, stitch, refine, eval.
std::vector<io::MetricRecord> run_all(const Paths& paths, const PipelineConfig& cfg,
                                      const std::string& video_name);

}  // namespace ms::pipeline

#endif
