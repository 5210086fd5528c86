#ifndef MS_CONFIG_HPP
#define MS_CONFIG_HPP

#include <cstdint>
#include <string>

#include "ms/ba.hpp"
#include "ms/epipolar.hpp"
#include "ms/shotdet.hpp"
#include "ms/traj.hpp"

namespace ms {

/// All pipeline thresholds and defaults, configurable through a key=value file
/// (path from --config or the MOTIONSTITCH_CONFIG env var) with CLI overrides
/// applied on top. Unknown keys are rejected.
struct PipelineConfig {
    std::uint64_t seed = 0;

    DetectorConfig detect;
    int detect_slack = 2;

    RansacConfig ransac;

    BAConfig ba;

    int align_half_window = 5;

    ContactConfig contact;

    int metrics_wa_chunk = 100;
    int metrics_rpe_delta = 1;

    /// Parses `key=value` lines; '#' starts a comment. Throws InputError on
    /// unknown keys or malformed values.
    void load_file(const std::string& path);

    /// Applies a single `key=value` assignment.
    void set(const std::string& key, const std::string& value);
};

}  // namespace ms

#endif
