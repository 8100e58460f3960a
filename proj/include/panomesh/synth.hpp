#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panomesh/geometry.hpp"
#include "panomesh/image.hpp"
#include "panomesh/matching.hpp"

namespace panomesh {

struct RigSpec {
    std::uint64_t scene_seed = 1;
    int scene_w = 2048, scene_h = 1024;
    int frame_w = 960, frame_h = 540;
    int n_frames = 100;
    double jitter_sigma = 4.0;            // random-walk step std, px
    double articulation_amplitude = 0.0;  // slow sinusoidal drift of camera B, px
    double articulation_period = 0.0;     // frames; 0 means n_frames / 2
    double overlap_fraction = 0.3;        // horizontal window overlap, (0,1)
    int match_grid_step = 48;             // px between exact GT match samples
};

struct GroundTruth {
    std::vector<Vec2> jitter_a, jitter_b;  // window offset from the base position
    std::vector<Vec2> inter_b_to_a;        // translation mapping B coords to A coords
    std::vector<MatchSet> intra_a, intra_b, inter;
};

/// Deterministic procedural texture: multi-octave value noise plus
/// high-contrast blobs; dense gradients everywhere.
ImageU8 generate_scene(std::uint64_t seed, int w, int h);

struct RigSequence {
    std::vector<ImageU8> frames_a, frames_b;
    GroundTruth gt;
};

/// Two jittering crop windows over the scene; camera B additionally drifts
/// sinusoidally. Ground truth covers trajectories, inter homographies and
/// exact grid-sampled match sets.
RigSequence generate_rig_sequence(const RigSpec& spec);

/// Writes cam_a/, cam_b/ image sequences, match JSON files and
/// ground_truth.json under out_dir.
void write_rig(const std::string& out_dir, const RigSequence& rig, const RigSpec& spec);

/// Match-file writer for the standard JSON schema.
void write_matches_json(const std::string& path, const std::vector<MatchSet>& sets,
                        MatchKind kind, int frame_w, int frame_h);

}  // namespace panomesh
