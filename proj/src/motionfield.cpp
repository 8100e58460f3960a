#include "panomesh/motionfield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace panomesh {

int MeshGrid::cell_row(double y) const {
    const int r = static_cast<int>(std::floor(y / cell_height()));
    return std::clamp(r, 0, rows - 1);
}

int MeshGrid::cell_col(double x) const {
    const int c = static_cast<int>(std::floor(x / cell_width()));
    return std::clamp(c, 0, cols - 1);
}

std::vector<Homography> per_cell_homographies(const MatchSet& ms, const MeshGrid& grid,
                                              const Homography& global_h,
                                              const PropagationConfig& cfg) {
    std::vector<std::vector<PointPair>> per_cell(grid.rows * grid.cols);
    for (std::size_t j = 0; j < ms.pairs.size(); ++j) {
        const Vec2& p = ms.pairs[j].src;
        // fit targets are src -> src + motion, matching the H(v)-v convention
        PointPair fit;
        fit.src = p;
        fit.dst = p + ms.motions[j];
        per_cell[grid.cell_index(p.x, p.y)].push_back(fit);
    }

    std::vector<Homography> out(per_cell.size(), global_h);
    for (std::size_t g = 0; g < per_cell.size(); ++g) {
        if (static_cast<int>(per_cell[g].size()) < std::max(4, cfg.min_pairs_per_cell)) continue;
        try {
            out[g] = estimate_homography_dlt(per_cell[g]);
        } catch (const DegenerateInput&) {
            // sparse or collinear cell: keep the global model
        }
    }
    return out;
}

MotionField global_vertex_motion(const MeshGrid& grid, const std::vector<Homography>& cell_h,
                                 FieldKind kind, int frame) {
    if (static_cast<int>(cell_h.size()) != grid.rows * grid.cols)
        throw GridMismatch("cell homography count does not match grid");
    MotionField f(grid, kind, frame);
    for (int r = 0; r < grid.vertex_rows(); ++r) {
        for (int c = 0; c < grid.vertex_cols(); ++c) {
            const Vec2 v = grid.vertex(r, c);
            // average the predictions of every adjacent cell
            Vec2 acc{0, 0};
            int count = 0;
            for (int dr = -1; dr <= 0; ++dr) {
                for (int dc = -1; dc <= 0; ++dc) {
                    const int cr = r + dr, cc = c + dc;
                    if (cr < 0 || cc < 0 || cr >= grid.rows || cc >= grid.cols) continue;
                    acc += apply_homography(cell_h[cr * grid.cols + cc], v) - v;
                    ++count;
                }
            }
            f.vectors[grid.vertex_index(r, c)] = acc * (1.0 / count);
        }
    }
    return f;
}

MotionField global_vertex_motion(const MeshGrid& grid, const Homography& h, FieldKind kind,
                                 int frame) {
    MotionField f(grid, kind, frame);
    for (int r = 0; r < grid.vertex_rows(); ++r) {
        for (int c = 0; c < grid.vertex_cols(); ++c) {
            const Vec2 v = grid.vertex(r, c);
            f.vectors[grid.vertex_index(r, c)] = apply_homography(h, v) - v;
        }
    }
    return f;
}

std::vector<FeatureResidual> residual_motions(const MatchSet& ms,
                                              const std::vector<Homography>& cell_h,
                                              const MeshGrid& grid) {
    std::vector<FeatureResidual> out;
    out.reserve(ms.pairs.size());
    for (std::size_t j = 0; j < ms.pairs.size(); ++j) {
        const Vec2& p = ms.pairs[j].src;
        const Homography& H = cell_h[grid.cell_index(p.x, p.y)];
        out.push_back({p, ms.motions[j] - (apply_homography(H, p) - p)});
    }
    return out;
}

std::vector<FeatureResidual> residual_motions(const MatchSet& ms, const Homography& global_h) {
    std::vector<FeatureResidual> out;
    out.reserve(ms.pairs.size());
    for (std::size_t j = 0; j < ms.pairs.size(); ++j) {
        const Vec2& p = ms.pairs[j].src;
        out.push_back({p, ms.motions[j] - (apply_homography(global_h, p) - p)});
    }
    return out;
}

namespace {

double component_median(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

}  // namespace

std::vector<Vec2> propagate_and_refine(const std::vector<FeatureResidual>& residuals,
                                       const MeshGrid& grid, const PropagationConfig& cfg) {
    const int vr = grid.vertex_rows(), vc = grid.vertex_cols();
    std::vector<std::vector<double>> cand_x(grid.vertex_count());
    std::vector<std::vector<double>> cand_y(grid.vertex_count());

    const double ax = cfg.ellipse_rx * grid.cell_width();
    const double ay = cfg.ellipse_ry * grid.cell_height();
    for (const auto& fr : residuals) {
        const int r0 = std::max(0, static_cast<int>(std::ceil((fr.position.y - ay) / grid.cell_height())));
        const int r1 = std::min(vr - 1, static_cast<int>(std::floor((fr.position.y + ay) / grid.cell_height())));
        const int c0 = std::max(0, static_cast<int>(std::ceil((fr.position.x - ax) / grid.cell_width())));
        const int c1 = std::min(vc - 1, static_cast<int>(std::floor((fr.position.x + ax) / grid.cell_width())));
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const Vec2 v = grid.vertex(r, c);
                const double ex = (v.x - fr.position.x) / ax;
                const double ey = (v.y - fr.position.y) / ay;
                if (ex * ex + ey * ey <= 1.0) {
                    const int g = grid.vertex_index(r, c);
                    cand_x[g].push_back(fr.residual.x);
                    cand_y[g].push_back(fr.residual.y);
                }
            }
        }
    }

    // f1: per-vertex candidate median; empty vertices take zero
    std::vector<Vec2> stage1(grid.vertex_count(), Vec2{0, 0});
    for (int g = 0; g < grid.vertex_count(); ++g) {
        if (!cand_x[g].empty()) {
            stage1[g] = {component_median(cand_x[g]), component_median(cand_y[g])};
        }
    }

    // f2: spatial median over the vertex lattice, window clamped at borders
    const int win = cfg.spatial_median_window;
    if (win <= 1) return stage1;
    const int half = win / 2;
    std::vector<Vec2> out(grid.vertex_count());
    std::vector<double> wx, wy;
    for (int r = 0; r < vr; ++r) {
        for (int c = 0; c < vc; ++c) {
            wx.clear();
            wy.clear();
            for (int dr = -half; dr <= half; ++dr) {
                for (int dc = -half; dc <= half; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= vr || cc >= vc) continue;
                    const Vec2& s = stage1[grid.vertex_index(rr, cc)];
                    wx.push_back(s.x);
                    wy.push_back(s.y);
                }
            }
            out[grid.vertex_index(r, c)] = {component_median(wx), component_median(wy)};
        }
    }
    return out;
}

MotionField assemble_field(const std::vector<Vec2>& refined, const MotionField& global_field) {
    if (static_cast<int>(refined.size()) != global_field.grid.vertex_count())
        throw GridMismatch("refined residual count does not match grid");
    MotionField out = global_field;
    for (std::size_t i = 0; i < out.vectors.size(); ++i) out.vectors[i] += refined[i];
    return out;
}

MotionField unified_field(const MotionField& intra, const MotionField& inter) {
    if (!(intra.grid == inter.grid)) throw GridMismatch("grids differ");
    if (intra.frame_index != inter.frame_index) throw FrameMismatch("frame indices differ");
    MotionField out(intra.grid, FieldKind::Unified, intra.frame_index);
    for (std::size_t i = 0; i < out.vectors.size(); ++i) {
        out.vectors[i] = intra.vectors[i] + inter.vectors[i];
    }
    return out;
}

void export_fields_csv(const std::string& path, const std::vector<MotionField>& fields) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "frame,vertex_row,vertex_col,kind,dx,dy\n";
    for (const auto& f : fields) {
        const char* kind = f.kind == FieldKind::Intra   ? "intra"
                           : f.kind == FieldKind::Inter ? "inter"
                                                        : "unified";
        for (int r = 0; r < f.grid.vertex_rows(); ++r) {
            for (int c = 0; c < f.grid.vertex_cols(); ++c) {
                const Vec2& v = f.vectors[f.grid.vertex_index(r, c)];
                out << f.frame_index << ',' << r << ',' << c << ',' << kind << ',' << v.x << ','
                    << v.y << '\n';
            }
        }
    }
}

}  // namespace panomesh
