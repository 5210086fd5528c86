#include "ms/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "ms/errors.hpp"

namespace ms {

namespace {

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double d = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw InputError("config: bad numeric value '" + value + "' for key '" + key + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const int i = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return i;
    } catch (const std::exception&) {
        throw InputError("config: bad integer value '" + value + "' for key '" + key + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw InputError("config: bad seed value '" + value + "' for key '" + key + "'");
    }
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") { seed = parse_u64(key, value); return; }
    if (key == "detect.tau_scene") { detect.tau_scene = parse_double(key, value); return; }
    if (key == "detect.tau_bbox") { detect.tau_bbox = parse_double(key, value); return; }
    if (key == "detect.tau_kpt") { detect.tau_kpt = parse_double(key, value); return; }
    if (key == "detect.kpt_radius_scale") { detect.kpt_radius_scale = parse_double(key, value); return; }
    if (key == "detect.min_shot_len") { detect.min_shot_len = parse_int(key, value); return; }
    if (key == "detect.slack") { detect_slack = parse_int(key, value); return; }
    if (key == "ransac.iterations") { ransac.iterations = parse_int(key, value); return; }
    if (key == "ransac.threshold_px") { ransac.inlier_threshold_px = parse_double(key, value); return; }
    if (key == "ba.window") { ba.window_size = parse_int(key, value); return; }
    if (key == "ba.gn_iters") { ba.gn_iters = parse_int(key, value); return; }
    if (key == "ba.damping") { ba.damping = parse_double(key, value); return; }
    if (key == "ba.min_track_len") { ba.min_track_len = parse_int(key, value); return; }
    if (key == "ba.confidence_threshold") { ba.confidence_threshold = parse_double(key, value); return; }
    if (key == "ba.max_outer_rounds") { ba.max_outer_rounds = parse_int(key, value); return; }
    if (key == "align.half_window") { align_half_window = parse_int(key, value); return; }
    if (key == "contact.height_thresh") { contact.height_thresh_m = parse_double(key, value); return; }
    if (key == "contact.vel_thresh") { contact.vel_thresh_mps = parse_double(key, value); return; }
    if (key == "metrics.wa_chunk") { metrics_wa_chunk = parse_int(key, value); return; }
    if (key == "metrics.rpe_delta") { metrics_rpe_delta = parse_int(key, value); return; }
    throw InputError("config: unknown key '" + key + "'");
}

void PipelineConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("config: cannot open '" + path + "'");
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // Trim.
        const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
        size_t b = 0, e = line.size();
        while (b < e && is_space(line[b])) ++b;
        while (e > b && is_space(line[e - 1])) --e;
        line = line.substr(b, e - b);
        if (line.empty()) continue;

        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError("config: line " + std::to_string(lineno) + " in '" + path +
                             "' is not key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && is_space(key.back())) key.pop_back();
        size_t vb = 0;
        while (vb < value.size() && is_space(value[vb])) ++vb;
        value = value.substr(vb);
        set(key, value);
    }
}

}  // namespace ms
