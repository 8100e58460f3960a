#pragma once

#include <string>
#include <vector>

#include "panomesh/motionfield.hpp"
#include "panomesh/types.hpp"

namespace panomesh {

enum class ProfileRole { Trajectory, Stitching, Smoothed, OptimizedStitching };

/// Per-vertex time series over N frames. Storage is frame-major: all vertex
/// values of one frame are contiguous (x,y interleaved), which lets the
/// Jacobi sweeps in the optimizer run one fused kernel call per frame.
struct VertexProfileSet {
    MeshGrid grid;
    int camera = 0;
    ProfileRole role = ProfileRole::Trajectory;
    int frames = 0;
    std::vector<double> data;  // frames * vertex_count * 2

    VertexProfileSet() = default;
    VertexProfileSet(const MeshGrid& g, int cam, ProfileRole r, int n)
        : grid(g), camera(cam), role(r), frames(n),
          data(static_cast<std::size_t>(n) * g.vertex_count() * 2, 0.0) {}

    int values_per_frame() const { return grid.vertex_count() * 2; }
    double* frame_data(int i) { return data.data() + static_cast<std::size_t>(i) * values_per_frame(); }
    const double* frame_data(int i) const {
        return data.data() + static_cast<std::size_t>(i) * values_per_frame();
    }
    Vec2 at(int frame, int vertex) const {
        const double* p = frame_data(frame) + 2 * vertex;
        return {p[0], p[1]};
    }
    void set(int frame, int vertex, const Vec2& v) {
        double* p = frame_data(frame) + 2 * vertex;
        p[0] = v.x;
        p[1] = v.y;
    }
    bool same_shape(const VertexProfileSet& o) const {
        return grid == o.grid && frames == o.frames;
    }
};

/// Running component-wise sum of the intra fields; role = Trajectory.
/// T(0) equals the first field, T(i) - T(i-1) equals field i.
VertexProfileSet accumulate_trajectories(const std::vector<MotionField>& intra_fields,
                                         int camera = 0);

/// Direct per-frame copy of the inter fields; role = Stitching.
VertexProfileSet collect_stitch_profiles(const std::vector<MotionField>& inter_fields,
                                         int camera = 0);

/// CSV export, header: camera,vertex_row,vertex_col,frame,role,x,y
void export_profiles_csv(const std::string& path,
                         const std::vector<const VertexProfileSet*>& sets);

}  // namespace panomesh
