#pragma once

#include <vector>

#include "panomesh/geometry.hpp"
#include "panomesh/image.hpp"
#include "panomesh/motionfield.hpp"
#include "panomesh/optimizer.hpp"

namespace panomesh {

/// Per-vertex displacement for one frame: Vhat + That - T, or That - T for
/// stabilization-only output.
struct WarpMap {
    MeshGrid grid;
    int frame_index = 0;
    std::vector<Vec2> displacement;  // vertex-indexed

    WarpMap() = default;
    WarpMap(const MeshGrid& g, int frame)
        : grid(g), frame_index(frame), displacement(g.vertex_count()) {}
};

struct Canvas {
    int width = 0;
    int height = 0;
    ImageU8 pixels;
    std::vector<std::uint8_t> mask;  // 1 where any source contributed

    Canvas() = default;
    Canvas(int w, int h) : width(w), height(h), pixels(w, h), mask(static_cast<std::size_t>(w) * h, 0) {}
};

enum class BlendMode { Feather, Multiband };

/// Per-frame warp maps for one camera: disp(i) = Vhat(i) + That(i) - T(i).
std::vector<WarpMap> build_warp_maps(const VertexProfileSet& vhat, const VertexProfileSet& that,
                                     const VertexProfileSet& t);
/// Stabilization-only: disp(i) = That(i) - T(i).
std::vector<WarpMap> build_warp_maps(const VertexProfileSet& that, const VertexProfileSet& t);

/// Forward mesh warp (vertex v renders at v + displacement + offset),
/// rasterized per destination pixel via closed-form inverse bilinear
/// interpolation inside each warped cell. Zero displacement is pixel-exact.
Canvas warp_frame(const ImageU8& frame, const WarpMap& wm, int canvas_w, int canvas_h,
                  const Vec2& offset);

/// Fig-style static pre-calibration: each frame inverse-mapped onto the shared
/// canvas by its homography, overlaps feather-blended.
Canvas compose_precalibrated(const std::vector<ImageU8>& frames,
                             const std::vector<Homography>& statics, int canvas_w, int canvas_h);

/// Combine canvases; feather uses distance-to-invalid weights, multiband runs
/// a Laplacian-pyramid blend driven by the same weights.
Canvas blend(const std::vector<Canvas>& canvases, BlendMode mode, int levels = 4);

}  // namespace panomesh
