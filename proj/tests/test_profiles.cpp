#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "panomesh/profiles.hpp"

using namespace panomesh;

namespace {

std::vector<MotionField> random_fields(const MeshGrid& grid, FieldKind kind, int n,
                                       unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-4, 4);
    std::vector<MotionField> out;
    for (int i = 0; i < n; ++i) {
        MotionField f(grid, kind, i);
        for (auto& v : f.vectors) v = {d(rng), d(rng)};
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace

TEST_CASE("accumulate_trajectories: constant field gives an arithmetic series") {
    const MeshGrid grid(80, 60, 2, 2);
    std::vector<MotionField> fields;
    for (int i = 0; i < 5; ++i) {
        MotionField f(grid, FieldKind::Intra, i);
        for (auto& v : f.vectors) v = {1, 0};
        fields.push_back(std::move(f));
    }
    const VertexProfileSet t = accumulate_trajectories(fields);
    CHECK(t.role == ProfileRole::Trajectory);
    CHECK(t.frames == 5);
    for (int i = 0; i < 5; ++i) {
        for (int g = 0; g < grid.vertex_count(); ++g) {
            CHECK(t.at(i, g).x == doctest::Approx(i + 1));
            CHECK(t.at(i, g).y == doctest::Approx(0));
        }
    }
}

TEST_CASE("accumulate_trajectories: zero fields stay zero") {
    const MeshGrid grid(80, 60, 2, 2);
    std::vector<MotionField> fields;
    for (int i = 0; i < 4; ++i) fields.emplace_back(grid, FieldKind::Intra, i);
    const VertexProfileSet t = accumulate_trajectories(fields);
    for (double v : t.data) CHECK(v == 0.0);
}

TEST_CASE("difference oracle: T(i) - T(i-1) reproduces field i") {
    const MeshGrid grid(80, 60, 3, 3);
    const auto fields = random_fields(grid, FieldKind::Intra, 12, 31);
    const VertexProfileSet t = accumulate_trajectories(fields);
    for (int g = 0; g < grid.vertex_count(); ++g) {
        CHECK(t.at(0, g).x == fields[0].vectors[g].x);
        for (int i = 1; i < 12; ++i) {
            const Vec2 diff = t.at(i, g) - t.at(i - 1, g);
            CHECK(diff.x == doctest::Approx(fields[i].vectors[g].x).epsilon(1e-9));
            CHECK(diff.y == doctest::Approx(fields[i].vectors[g].y).epsilon(1e-9));
        }
    }
}

TEST_CASE("accumulate_trajectories validates inputs") {
    const MeshGrid g1(80, 60, 2, 2), g2(80, 60, 3, 3);
    CHECK_THROWS_AS(accumulate_trajectories({}), EmptyInput);

    std::vector<MotionField> mixed;
    mixed.emplace_back(g1, FieldKind::Intra, 0);
    mixed.emplace_back(g2, FieldKind::Intra, 1);
    CHECK_THROWS_AS(accumulate_trajectories(mixed), GridMismatch);

    std::vector<MotionField> gapped;
    gapped.emplace_back(g1, FieldKind::Intra, 0);
    gapped.emplace_back(g1, FieldKind::Intra, 2);
    CHECK_THROWS_AS(accumulate_trajectories(gapped), NonContiguousFrames);
}

TEST_CASE("collect_stitch_profiles: direct readback") {
    const MeshGrid grid(80, 60, 3, 3);
    const auto fields = random_fields(grid, FieldKind::Inter, 7, 44);
    const VertexProfileSet v = collect_stitch_profiles(fields, 1);
    CHECK(v.role == ProfileRole::Stitching);
    CHECK(v.camera == 1);
    CHECK(v.frames == 7);
    for (int i = 0; i < 7; ++i) {
        for (int g = 0; g < grid.vertex_count(); ++g) {
            CHECK(v.at(i, g).x == fields[i].vectors[g].x);
            CHECK(v.at(i, g).y == fields[i].vectors[g].y);
        }
    }
}

TEST_CASE("collect_stitch_profiles: zero fields give zero profiles") {
    const MeshGrid grid(80, 60, 2, 2);
    std::vector<MotionField> fields;
    for (int i = 0; i < 3; ++i) fields.emplace_back(grid, FieldKind::Inter, i);
    const VertexProfileSet v = collect_stitch_profiles(fields);
    for (double x : v.data) CHECK(x == 0.0);
}

TEST_CASE("profile accessors round trip") {
    const MeshGrid grid(80, 60, 2, 2);
    VertexProfileSet p(grid, 0, ProfileRole::Smoothed, 3);
    p.set(2, 5, {1.5, -2.5});
    CHECK(p.at(2, 5).x == 1.5);
    CHECK(p.at(2, 5).y == -2.5);
    CHECK(p.values_per_frame() == grid.vertex_count() * 2);
    CHECK(p.same_shape(VertexProfileSet(grid, 1, ProfileRole::Trajectory, 3)));
    CHECK(!p.same_shape(VertexProfileSet(grid, 0, ProfileRole::Smoothed, 4)));
}

TEST_CASE("export_profiles_csv writes the documented header and rows") {
    const MeshGrid grid(20, 20, 1, 1);
    VertexProfileSet p(grid, 2, ProfileRole::Trajectory, 2);
    p.set(0, 0, {1, 2});
    p.set(1, 3, {3, 4});
    const std::string path = "/tmp/panomesh_profiles_test.csv";
    export_profiles_csv(path, {&p});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "camera,vertex_row,vertex_col,frame,role,x,y");
    int rows = 0;
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
        ++rows;
        if (line.find("2,0,0,0,") == 0 && line.find(",1,2") != std::string::npos) found = true;
    }
    CHECK(rows == 2 * grid.vertex_count());
    CHECK(found);
    std::remove(path.c_str());
}
