#pragma once

#include <optional>
#include <string>
#include <vector>

#include "panomesh/geometry.hpp"
#include "panomesh/matching.hpp"
#include "panomesh/metrics.hpp"
#include "panomesh/motionfield.hpp"
#include "panomesh/optimizer.hpp"
#include "panomesh/warp.hpp"

namespace panomesh {

struct PipelineConfig {
    std::vector<std::string> inputs;      // per-camera frame directories
    std::string output = "out";
    std::uint64_t seed = 1;
    std::vector<Homography> statics;      // empty, or one per camera
    int mesh_rows = 16, mesh_cols = 16;
    MatcherConfig matcher;
    PropagationConfig propagation;
    OptimizerConfig optimizer;
    RobustConfig robust;
    BlendMode blend_mode = BlendMode::Feather;
    int blend_levels = 4;
    // canvas layout; width <= 0 means "derive from frame size and overlap"
    int canvas_w = 0, canvas_h = 0;
    std::vector<Vec2> offsets;
    double overlap_fraction = 0.3;
    std::optional<Vec2> nominal_b_to_a;   // defaults to frame_w*(1-overlap) along x
    // optional externally supplied matches (paths relative to the config file)
    std::string match_intra_a, match_intra_b, match_inter;
};

/// Strict JSON loader: unknown keys and invalid values raise ConfigError;
/// referenced paths must exist.
PipelineConfig load_pipeline_config(const std::string& path);

struct PipelineResult {
    int frames = 0;
    StabilizationReport report;
    StitchReport stitch;
    double stability_input = 1.0;
    double seconds_per_frame = 0.0;
    // rendering state, exposed so callers can transport external points
    // through the same warps (e.g. held-out evaluation matches)
    std::vector<WarpMap> warps_a, warps_b;
    Vec2 offset_a{0, 0}, offset_b{0, 0};
};

/// Full two-camera pipeline: matching, motion fields, joint optimization,
/// panorama rendering, metrics and CSV/JSON reports under cfg.output.
PipelineResult run_pipeline(const PipelineConfig& cfg, int threads, bool verbose);

/// Single-stream stabilization-only variant (beta ignored, warp uses
/// That - T).
PipelineResult run_stabilize(const PipelineConfig& cfg, int threads, bool verbose);

/// Loads a numbered PNG sequence ({frame:06}.png) from a directory.
std::vector<ImageU8> load_sequence(const std::string& dir);

}  // namespace panomesh
