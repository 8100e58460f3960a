#pragma once

#include <vector>

#include "panomesh/geometry.hpp"
#include "panomesh/matching.hpp"
#include "panomesh/types.hpp"

namespace panomesh {

/// Uniform mesh over one frame: m x n cells, (m+1) x (n+1) vertices,
/// vertex (0,0) at the image origin and vertex (m,n) at (w,h).
struct MeshGrid {
    double width = 0;
    double height = 0;
    int rows = 16;  // m cells vertically
    int cols = 16;  // n cells horizontally

    MeshGrid() = default;
    MeshGrid(double w, double h, int m, int n) : width(w), height(h), rows(m), cols(n) {}

    int vertex_rows() const { return rows + 1; }
    int vertex_cols() const { return cols + 1; }
    int vertex_count() const { return vertex_rows() * vertex_cols(); }
    double cell_width() const { return width / cols; }
    double cell_height() const { return height / rows; }

    Vec2 vertex(int r, int c) const { return {c * cell_width(), r * cell_height()}; }
    int vertex_index(int r, int c) const { return r * vertex_cols() + c; }

    /// Cell containing a point; half-open intervals, left/top inclusive,
    /// points on the right/bottom frame edge clamp into the last cell.
    int cell_row(double y) const;
    int cell_col(double x) const;
    int cell_index(double x, double y) const { return cell_row(y) * cols + cell_col(x); }

    bool operator==(const MeshGrid& o) const {
        return width == o.width && height == o.height && rows == o.rows && cols == o.cols;
    }
};

enum class FieldKind { Intra, Inter, Unified };

/// One 2D displacement per mesh vertex for one frame.
struct MotionField {
    MeshGrid grid;
    FieldKind kind = FieldKind::Intra;
    int frame_index = 0;
    std::vector<Vec2> vectors;  // vertex-indexed, row-major

    MotionField() = default;
    MotionField(const MeshGrid& g, FieldKind k, int frame)
        : grid(g), kind(k), frame_index(frame), vectors(g.vertex_count()) {}
};

struct PropagationConfig {
    double ellipse_rx = 2.0;  // cell units
    double ellipse_ry = 2.0;
    int min_pairs_per_cell = 8;
    int spatial_median_window = 3;  // 1, 3 or 5
};

struct FeatureResidual {
    Vec2 position;
    Vec2 residual;
};

/// Per-cell DLT fits (Eq. 3 style) with global fallback for sparse cells.
std::vector<Homography> per_cell_homographies(const MatchSet& ms, const MeshGrid& grid,
                                              const Homography& global_h,
                                              const PropagationConfig& cfg);

/// Vertex displacement H(v) - v; per-cell sources average the predictions of
/// all cells adjacent to a vertex.
MotionField global_vertex_motion(const MeshGrid& grid, const std::vector<Homography>& cell_h,
                                 FieldKind kind, int frame);
MotionField global_vertex_motion(const MeshGrid& grid, const Homography& h, FieldKind kind,
                                 int frame);

/// residual_j = m_j - (H(p_j) - p_j), H per containing cell (or single global).
std::vector<FeatureResidual> residual_motions(const MatchSet& ms,
                                              const std::vector<Homography>& cell_h,
                                              const MeshGrid& grid);
std::vector<FeatureResidual> residual_motions(const MatchSet& ms, const Homography& global_h);

/// Elliptical candidate propagation + two-stage component-wise median.
std::vector<Vec2> propagate_and_refine(const std::vector<FeatureResidual>& residuals,
                                       const MeshGrid& grid, const PropagationConfig& cfg);

/// refined + global, component-wise; kind inherited from the global field.
MotionField assemble_field(const std::vector<Vec2>& refined, const MotionField& global_field);

/// Eq. 10 superposition; exact vector sum, kind = Unified.
MotionField unified_field(const MotionField& intra, const MotionField& inter);

/// CSV export, header: frame,vertex_row,vertex_col,kind,dx,dy
void export_fields_csv(const std::string& path, const std::vector<MotionField>& fields);

}  // namespace panomesh
