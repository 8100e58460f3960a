#pragma once

#include <string>
#include <vector>

#include "panomesh/image.hpp"
#include "panomesh/matching.hpp"
#include "panomesh/profiles.hpp"
#include "panomesh/warp.hpp"

namespace panomesh {

struct StabilizationReport {
    double cropping = 1.0;
    double distortion = 1.0;
    double stability = 1.0;
    std::vector<double> per_frame_cropping;
    std::vector<double> per_frame_distortion;
};

struct StitchReport {
    std::vector<int> frames;            // frames that had matches
    std::vector<double> per_frame_error;
    double score = 0.0;                 // max over frames
};

/// Per-frame homographies H with H(input point) = output point, fitted by
/// feature matching. Frames without enough texture yield std::nullopt.
/// `search_centers` optionally seeds the per-frame expected displacement so
/// the block search stays inside its radius.
std::vector<std::optional<Homography>> fit_frame_homographies(
    const std::vector<ImageU8>& input, const std::vector<ImageU8>& output,
    const MatcherConfig& mcfg, const RobustConfig& rcfg,
    const std::vector<Vec2>* search_centers = nullptr);

/// Geometric mean of the singular values of the affine 2x2 block, clamped to
/// <= 1; video value is the mean over frames. Untextured frames fall back to
/// the non-background area fraction of the output frame.
double cropping_ratio(const std::vector<ImageU8>& input, const std::vector<ImageU8>& output,
                      const std::vector<std::optional<Homography>>& fits,
                      std::vector<double>* per_frame = nullptr);

/// Smaller-to-larger eigenvalue magnitude ratio of the affine block; video
/// value is the minimum over frames.
double distortion(const std::vector<std::optional<Homography>>& fits,
                  std::vector<double>* per_frame = nullptr);

/// Low-frequency energy fraction (DFT bins 2-6 over bins 2-L/2) of the
/// differenced trajectories, averaged over vertices and components.
double stability(const VertexProfileSet& trajectories);

/// Transports each matched pair through both warps and measures the distance;
/// per-frame mean, score = max over frames. Frames without matches are skipped.
StitchReport stitching_score(const std::vector<WarpMap>& warps_a,
                             const std::vector<WarpMap>& warps_b,
                             const std::vector<MatchSet>& inter_matches, const Vec2& offset_a,
                             const Vec2& offset_b);

/// Bilinear interpolation of a warp map's displacement at an arbitrary point.
Vec2 interpolate_displacement(const WarpMap& wm, const Vec2& p);

/// Writes {"cropping":..,"distortion":..,"stability":..,"stitching_score":..,
/// "per_frame":{..}} JSON.
void write_metrics_json(const std::string& path, const StabilizationReport& stab,
                        const StitchReport* stitch, double stability_input = -1.0);

}  // namespace panomesh
