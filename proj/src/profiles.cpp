#include "panomesh/profiles.hpp"

#include <fstream>

namespace panomesh {

namespace {

void check_fields(const std::vector<MotionField>& fields) {
    if (fields.empty()) throw EmptyInput("no motion fields");
    const int first = fields.front().frame_index;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!(fields[i].grid == fields.front().grid))
            throw GridMismatch("motion fields use different grids");
        if (fields[i].frame_index != first + static_cast<int>(i))
            throw NonContiguousFrames("frame indices are not contiguous ascending");
    }
}

}  // namespace

VertexProfileSet accumulate_trajectories(const std::vector<MotionField>& intra_fields,
                                         int camera) {
    check_fields(intra_fields);
    const MeshGrid& grid = intra_fields.front().grid;
    VertexProfileSet out(grid, camera, ProfileRole::Trajectory,
                         static_cast<int>(intra_fields.size()));
    std::vector<Vec2> running(grid.vertex_count(), Vec2{0, 0});
    for (std::size_t i = 0; i < intra_fields.size(); ++i) {
        for (int g = 0; g < grid.vertex_count(); ++g) {
            running[g] += intra_fields[i].vectors[g];
            out.set(static_cast<int>(i), g, running[g]);
        }
    }
    return out;
}

VertexProfileSet collect_stitch_profiles(const std::vector<MotionField>& inter_fields,
                                         int camera) {
    check_fields(inter_fields);
    const MeshGrid& grid = inter_fields.front().grid;
    VertexProfileSet out(grid, camera, ProfileRole::Stitching,
                         static_cast<int>(inter_fields.size()));
    for (std::size_t i = 0; i < inter_fields.size(); ++i) {
        for (int g = 0; g < grid.vertex_count(); ++g) {
            out.set(static_cast<int>(i), g, inter_fields[i].vectors[g]);
        }
    }
    return out;
}

void export_profiles_csv(const std::string& path,
                         const std::vector<const VertexProfileSet*>& sets) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "camera,vertex_row,vertex_col,frame,role,x,y\n";
    for (const VertexProfileSet* s : sets) {
        const char* role = s->role == ProfileRole::Trajectory ? "trajectory"
                           : s->role == ProfileRole::Stitching ? "stitching"
                           : s->role == ProfileRole::Smoothed  ? "smoothed"
                                                               : "optimized_stitching";
        for (int r = 0; r < s->grid.vertex_rows(); ++r) {
            for (int c = 0; c < s->grid.vertex_cols(); ++c) {
                const int g = s->grid.vertex_index(r, c);
                for (int i = 0; i < s->frames; ++i) {
                    const Vec2 v = s->at(i, g);
                    out << s->camera << ',' << r << ',' << c << ',' << i << ',' << role << ','
                        << v.x << ',' << v.y << '\n';
                }
            }
        }
    }
}

}  // namespace panomesh
