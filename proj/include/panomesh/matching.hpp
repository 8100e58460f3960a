#pragma once

#include <optional>
#include <string>
#include <vector>

#include "panomesh/geometry.hpp"
#include "panomesh/image.hpp"
#include "panomesh/types.hpp"

namespace panomesh {

enum class MatchKind { Intra, Inter };

/// Matched feature pairs for one frame pair, motions stored as src - dst.
struct MatchSet {
    MatchKind kind = MatchKind::Intra;
    int frame_index = 0;
    int camera = 0;
    int partner = -1;  // inter only
    std::vector<PointPair> pairs;
    std::vector<Vec2> motions;

    std::size_t size() const { return pairs.size(); }
};

struct MatcherConfig {
    int detect_rows = 8;
    int detect_cols = 8;
    int corners_per_cell = 4;
    int block_radius = 8;      // px, ZNCC template half-side
    int search_radius = 32;    // px
    double min_zncc = 0.7;
    // Expected displacement of the match in frame_b relative to frame_a;
    // the search window is centered there (used for inter matching around
    // the nominal overlap alignment).
    Vec2 search_center_offset = {0, 0};
};

/// Shi-Tomasi corners per detection cell + ZNCC block search with parabolic
/// sub-pixel refinement. Deterministic for fixed inputs and config.
MatchSet detect_and_match(const ImageF& frame_a, const ImageF& frame_b,
                          const std::optional<Rect>& roi, const MatcherConfig& cfg);

/// Reads the JSON match-file schema; one MatchSet per frame record.
std::vector<MatchSet> load_matches(const std::string& path, MatchKind kind);

/// Robust global fit over the pairs; returns the surviving inliers and the
/// homography with H(dst) = src (so H(v) - v tracks the motion convention).
std::pair<MatchSet, Homography> reject_outliers(const MatchSet& ms, const RobustConfig& cfg);

}  // namespace panomesh
