#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "panomesh/motionfield.hpp"

using namespace panomesh;

namespace {

MatchSet matches_from_h(const Homography& h, const MeshGrid& grid, int per_cell) {
    // per_cell exact correspondences in every mesh cell, motion = H(p) - p
    MatchSet ms;
    ms.kind = MatchKind::Intra;
    std::mt19937_64 rng(77);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            std::uniform_real_distribution<double> dx(c * grid.cell_width(),
                                                      (c + 1) * grid.cell_width() - 1e-6);
            std::uniform_real_distribution<double> dy(r * grid.cell_height(),
                                                      (r + 1) * grid.cell_height() - 1e-6);
            for (int k = 0; k < per_cell; ++k) {
                const Vec2 p{dx(rng), dy(rng)};
                const Vec2 q = apply_homography(h, p);
                ms.pairs.push_back({p, p + p - q});  // dst chosen so src - dst = H(p) - p
                ms.motions.push_back(q - p);
            }
        }
    }
    return ms;
}

MotionField random_field(const MeshGrid& grid, FieldKind kind, int frame, unsigned seed) {
    MotionField f(grid, kind, frame);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-5, 5);
    for (auto& v : f.vectors) v = {d(rng), d(rng)};
    return f;
}

}  // namespace

TEST_CASE("MeshGrid cell lookup uses half-open intervals") {
    const MeshGrid g(100, 50, 5, 10);  // 10x10 cells of 10x10 px
    CHECK(g.cell_col(0.0) == 0);
    CHECK(g.cell_col(9.999) == 0);
    CHECK(g.cell_col(10.0) == 1);
    CHECK(g.cell_col(100.0) == 9);  // right edge clamps into the last cell
    CHECK(g.cell_row(50.0) == 4);
    CHECK(g.vertex(0, 0).x == doctest::Approx(0));
    CHECK(g.vertex(5, 10).x == doctest::Approx(100));
    CHECK(g.vertex(5, 10).y == doctest::Approx(50));
}

TEST_CASE("per_cell_homographies: uniform translation fills every cell") {
    const MeshGrid grid(160, 120, 4, 4);
    const Homography t = Homography::translation(3, -2);
    const MatchSet ms = matches_from_h(t, grid, 10);
    PropagationConfig cfg;
    const auto cells = per_cell_homographies(ms, grid, Homography::identity(), cfg);
    REQUIRE(cells.size() == 16);
    for (const auto& h : cells) {
        const Vec2 p{50, 50};
        CHECK((apply_homography(h, p) - p - Vec2{3, -2}).norm() < 1e-6);
    }
}

TEST_CASE("per_cell_homographies: empty MatchSet falls back to global") {
    const MeshGrid grid(160, 120, 4, 4);
    MatchSet ms;
    PropagationConfig cfg;
    const Homography g = Homography::translation(1, 1);
    const auto cells = per_cell_homographies(ms, grid, g, cfg);
    for (const auto& h : cells) {
        CHECK(h.h == g.h);
    }
}

TEST_CASE("per_cell_homographies: two-plane scene separates left and right") {
    const MeshGrid grid(160, 120, 4, 4);
    MatchSet ms;
    std::mt19937_64 rng(3);
    auto add = [&](double x0, double x1, const Vec2& t) {
        std::uniform_real_distribution<double> dx(x0, x1 - 1e-6);
        std::uniform_real_distribution<double> dy(0, 120 - 1e-6);
        for (int k = 0; k < 200; ++k) {
            const Vec2 p{dx(rng), dy(rng)};
            ms.pairs.push_back({p, p - t});
            ms.motions.push_back(t);
        }
    };
    const Vec2 ta{4, 0}, tb{-3, 2};
    add(0, 80, ta);
    add(80, 160, tb);
    PropagationConfig cfg;
    const auto cells = per_cell_homographies(ms, grid, Homography::identity(), cfg);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            const Vec2 center{(c + 0.5) * grid.cell_width(), (r + 0.5) * grid.cell_height()};
            const Vec2 want = c < 2 ? ta : tb;
            const Vec2 got = apply_homography(cells[r * 4 + c], center) - center;
            CHECK((got - want).norm() < 1e-3);
        }
    }
}

TEST_CASE("global_vertex_motion: identity gives zero field") {
    const MeshGrid grid(160, 120, 4, 4);
    const MotionField f = global_vertex_motion(grid, Homography::identity(), FieldKind::Inter, 0);
    for (const Vec2& v : f.vectors) CHECK(v.norm() < 1e-12);
}

TEST_CASE("global_vertex_motion: translation is uniform") {
    const MeshGrid grid(160, 120, 4, 4);
    const MotionField f =
        global_vertex_motion(grid, Homography::translation(2, -1), FieldKind::Inter, 0);
    for (const Vec2& v : f.vectors) CHECK((v - Vec2{2, -1}).norm() < 1e-12);
}

TEST_CASE("global_vertex_motion: projective H matches direct per-vertex evaluation") {
    const MeshGrid grid(160, 120, 4, 4);
    Homography h;
    h.h = {1.02, 0.01, 5.0, -0.01, 0.98, -3.0, 1e-5, -2e-5, 1.0};
    const MotionField f = global_vertex_motion(grid, h, FieldKind::Inter, 2);
    for (int r = 0; r <= 4; ++r) {
        for (int c = 0; c <= 4; ++c) {
            const Vec2 v = grid.vertex(r, c);
            const Vec2 want = apply_homography(h, v) - v;
            CHECK((f.vectors[grid.vertex_index(r, c)] - want).norm() < 1e-12);
        }
    }
}

TEST_CASE("global_vertex_motion: per-cell interior vertex averages adjacent cells") {
    const MeshGrid grid(40, 40, 2, 2);
    std::vector<Homography> cells = {
        Homography::translation(1, 0), Homography::translation(3, 0),
        Homography::translation(5, 0), Homography::translation(7, 0)};
    const MotionField f = global_vertex_motion(grid, cells, FieldKind::Intra, 0);
    // center vertex (1,1) touches all four cells
    CHECK(f.vectors[grid.vertex_index(1, 1)].x == doctest::Approx(4.0));
    // corner vertex (0,0) touches only cell 0
    CHECK(f.vectors[grid.vertex_index(0, 0)].x == doctest::Approx(1.0));
    // edge vertex (0,1) touches cells 0 and 1
    CHECK(f.vectors[grid.vertex_index(0, 1)].x == doctest::Approx(2.0));
}

TEST_CASE("residual_motions: model-consistent matches give zero residuals") {
    const MeshGrid grid(160, 120, 4, 4);
    const Homography t = Homography::translation(3, -2);
    const MatchSet ms = matches_from_h(t, grid, 10);
    const auto res = residual_motions(ms, t);
    REQUIRE(res.size() == ms.pairs.size());
    for (const auto& fr : res) CHECK(fr.residual.norm() < 1e-9);
}

TEST_CASE("residual_motions: injected constant offset is recovered") {
    const MeshGrid grid(160, 120, 4, 4);
    const Homography t = Homography::translation(3, -2);
    MatchSet ms = matches_from_h(t, grid, 10);
    for (auto& m : ms.motions) m += Vec2{1, 1};
    const auto res = residual_motions(ms, t);
    for (const auto& fr : res) CHECK((fr.residual - Vec2{1, 1}).norm() < 1e-9);
}

TEST_CASE("residual_motions: empty MatchSet yields empty list") {
    MatchSet ms;
    CHECK(residual_motions(ms, Homography::identity()).empty());
}

TEST_CASE("propagate_and_refine: single residual spreads inside the ellipse only") {
    const MeshGrid grid(100, 100, 4, 4);  // 25 px cells
    PropagationConfig cfg;
    cfg.ellipse_rx = 1.0;
    cfg.ellipse_ry = 1.0;
    cfg.spatial_median_window = 1;
    std::vector<FeatureResidual> res = {{grid.vertex(2, 2), {4, 0}}};
    const auto refined = propagate_and_refine(res, grid, cfg);
    CHECK(refined[grid.vertex_index(2, 2)].x == doctest::Approx(4.0));
    // neighbors at distance one cell are on the ellipse boundary (included)
    CHECK(refined[grid.vertex_index(2, 3)].x == doctest::Approx(4.0));
    // diagonal neighbor at distance sqrt(2) cells is outside rx=ry=1
    CHECK(refined[grid.vertex_index(3, 3)].x == doctest::Approx(0.0));
    CHECK(refined[grid.vertex_index(0, 0)].x == doctest::Approx(0.0));
}

TEST_CASE("propagate_and_refine: median rejects the outlier candidate") {
    const MeshGrid grid(100, 100, 4, 4);
    PropagationConfig cfg;
    cfg.ellipse_rx = 0.4;  // tight: candidates reach only the nearest vertex
    cfg.ellipse_ry = 0.4;
    cfg.spatial_median_window = 1;
    const Vec2 v = grid.vertex(2, 2);
    std::vector<FeatureResidual> res = {{v, {1, 0}}, {v, {3, 0}}, {v, {100, 0}}};
    const auto refined = propagate_and_refine(res, grid, cfg);
    CHECK(refined[grid.vertex_index(2, 2)].x == doctest::Approx(3.0));
}

TEST_CASE("propagate_and_refine: zero residuals give a zero field") {
    const MeshGrid grid(100, 100, 4, 4);
    PropagationConfig cfg;
    std::vector<FeatureResidual> res;
    for (int i = 0; i < 10; ++i) res.push_back({{i * 9.0, i * 7.0}, {0, 0}});
    for (const Vec2& v : propagate_and_refine(res, grid, cfg)) CHECK(v.norm() < 1e-12);
}

TEST_CASE("propagate_and_refine is invariant under residual permutation") {
    const MeshGrid grid(100, 100, 4, 4);
    PropagationConfig cfg;
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> c(0, 100), d(-3, 3);
    std::vector<FeatureResidual> res;
    for (int i = 0; i < 40; ++i) res.push_back({{c(rng), c(rng)}, {d(rng), d(rng)}});
    const auto base = propagate_and_refine(res, grid, cfg);
    std::shuffle(res.begin(), res.end(), rng);
    const auto perm = propagate_and_refine(res, grid, cfg);
    REQUIRE(base.size() == perm.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(base[i].x == perm[i].x);
        CHECK(base[i].y == perm[i].y);
    }
}

TEST_CASE("assemble_field adds refined residuals to the global field") {
    const MeshGrid grid(100, 100, 4, 4);
    const MotionField g = random_field(grid, FieldKind::Intra, 1, 1);
    std::vector<Vec2> zero(grid.vertex_count(), Vec2{0, 0});
    const MotionField same = assemble_field(zero, g);
    for (int i = 0; i < grid.vertex_count(); ++i) {
        CHECK(same.vectors[i].x == g.vectors[i].x);
    }
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-2, 2);
    std::vector<Vec2> refined(grid.vertex_count());
    for (auto& v : refined) v = {d(rng), d(rng)};
    const MotionField sum = assemble_field(refined, g);
    for (int i = 0; i < grid.vertex_count(); ++i) {
        CHECK(sum.vectors[i].x == refined[i].x + g.vectors[i].x);
        CHECK(sum.vectors[i].y == refined[i].y + g.vectors[i].y);
    }
    CHECK(sum.kind == FieldKind::Intra);
}

TEST_CASE("assemble_field rejects grid mismatch") {
    const MeshGrid g1(100, 100, 4, 4), g2(100, 100, 5, 5);
    std::vector<Vec2> refined(g2.vertex_count(), Vec2{0, 0});
    MotionField f(g1, FieldKind::Intra, 0);
    CHECK_THROWS_AS(assemble_field(refined, f), GridMismatch);
}

TEST_CASE("unified_field superposition is exact") {
    const MeshGrid grid(256, 256, 16, 16);
    for (int trial = 0; trial < 100; ++trial) {
        const MotionField a = random_field(grid, FieldKind::Intra, trial, 100 + trial);
        const MotionField b = random_field(grid, FieldKind::Inter, trial, 900 + trial);
        const MotionField u = unified_field(a, b);
        CHECK(u.kind == FieldKind::Unified);
        for (int i = 0; i < grid.vertex_count(); ++i) {
            CHECK(u.vectors[i].x == a.vectors[i].x + b.vectors[i].x);
            CHECK(u.vectors[i].y == a.vectors[i].y + b.vectors[i].y);
        }
    }
}

TEST_CASE("unified_field: zero intra passes inter through; opposite fields cancel") {
    const MeshGrid grid(100, 100, 4, 4);
    MotionField zero(grid, FieldKind::Intra, 0);
    const MotionField f = random_field(grid, FieldKind::Inter, 0, 5);
    const MotionField u = unified_field(zero, f);
    for (int i = 0; i < grid.vertex_count(); ++i) CHECK(u.vectors[i].x == f.vectors[i].x);

    MotionField neg = f;
    neg.kind = FieldKind::Intra;
    for (auto& v : neg.vectors) v = v * -1.0;
    const MotionField z = unified_field(neg, f);
    for (const Vec2& v : z.vectors) CHECK(v.norm() == 0.0);
}

TEST_CASE("unified_field rejects mismatched grids and frames") {
    const MeshGrid g1(100, 100, 4, 4), g2(100, 100, 5, 5);
    MotionField a(g1, FieldKind::Intra, 0), b(g2, FieldKind::Inter, 0);
    CHECK_THROWS_AS(unified_field(a, b), GridMismatch);
    MotionField c(g1, FieldKind::Inter, 1);
    CHECK_THROWS_AS(unified_field(a, c), FrameMismatch);
}

TEST_CASE("model-consistent matches: assembled field equals global field") {
    const MeshGrid grid(160, 120, 4, 4);
    const Homography t = Homography::translation(2, 1);
    const MatchSet ms = matches_from_h(t, grid, 12);
    PropagationConfig cfg;
    const auto cells = per_cell_homographies(ms, grid, t, cfg);
    const MotionField global = global_vertex_motion(grid, cells, FieldKind::Intra, 0);
    const auto res = residual_motions(ms, cells, grid);
    const auto refined = propagate_and_refine(res, grid, cfg);
    const MotionField out = assemble_field(refined, global);
    for (int i = 0; i < grid.vertex_count(); ++i) {
        CHECK((out.vectors[i] - global.vectors[i]).norm() < 1e-9);
    }
}
