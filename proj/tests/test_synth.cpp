#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "panomesh/synth.hpp"

using namespace panomesh;

TEST_CASE("generate_scene is deterministic per seed") {
    const ImageU8 a = generate_scene(7, 256, 256);
    const ImageU8 b = generate_scene(7, 256, 256);
    CHECK(a.data == b.data);
}

TEST_CASE("different seeds change most pixels") {
    const ImageU8 a = generate_scene(7, 256, 256);
    const ImageU8 b = generate_scene(8, 256, 256);
    int differing = 0;
    for (std::size_t i = 0; i < a.data.size(); i += 3) {
        if (a.data[i] != b.data[i] || a.data[i + 1] != b.data[i + 1] ||
            a.data[i + 2] != b.data[i + 2])
            ++differing;
    }
    CHECK(static_cast<double>(differing) / (256.0 * 256.0) >= 0.5);
}

TEST_CASE("every 64x64 tile has usable texture contrast") {
    const ImageU8 img = generate_scene(9, 512, 384);
    const ImageF g = to_grayscale(img);
    for (int ty = 0; ty + 64 <= 384; ty += 64) {
        for (int tx = 0; tx + 64 <= 512; tx += 64) {
            double sum = 0, sumsq = 0;
            for (int y = 0; y < 64; ++y) {
                for (int x = 0; x < 64; ++x) {
                    const double v = g.at(tx + x, ty + y);
                    sum += v;
                    sumsq += v * v;
                }
            }
            const double n = 64.0 * 64.0;
            const double var = sumsq / n - (sum / n) * (sum / n);
            // ZNCC is contrast-normalized; any clearly non-flat tile is usable
            CHECK(std::sqrt(var) >= 5.0);
        }
    }
}

TEST_CASE("too-small scenes are rejected") {
    CHECK_THROWS_AS(generate_scene(1, 255, 256), TooSmall);
    CHECK_THROWS_AS(generate_scene(1, 256, 100), TooSmall);
}

TEST_CASE("zero-jitter rig is static with zero ground truth") {
    RigSpec spec;
    spec.scene_w = 700;
    spec.scene_h = 400;
    spec.frame_w = 240;
    spec.frame_h = 160;
    spec.n_frames = 6;
    spec.jitter_sigma = 0;
    spec.articulation_amplitude = 0;
    const RigSequence rig = generate_rig_sequence(spec);
    REQUIRE(rig.frames_a.size() == 6);
    for (int i = 1; i < 6; ++i) {
        CHECK(rig.frames_a[i].data == rig.frames_a[0].data);
        CHECK(rig.frames_b[i].data == rig.frames_b[0].data);
    }
    for (const Vec2& j : rig.gt.jitter_a) CHECK(j.norm() == 0.0);
    for (const Vec2& j : rig.gt.jitter_b) CHECK(j.norm() == 0.0);
    // nominal inter translation: frame_w * (1 - overlap), horizontal only
    for (const Vec2& t : rig.gt.inter_b_to_a) {
        CHECK(t.x == doctest::Approx(240 * 0.7));
        CHECK(t.y == doctest::Approx(0.0));
    }
}

TEST_CASE("rig generation is deterministic") {
    RigSpec spec;
    spec.scene_w = 700;
    spec.scene_h = 400;
    spec.frame_w = 240;
    spec.frame_h = 160;
    spec.n_frames = 5;
    spec.jitter_sigma = 1.5;
    spec.articulation_amplitude = 4.0;
    const RigSequence r1 = generate_rig_sequence(spec);
    const RigSequence r2 = generate_rig_sequence(spec);
    for (int i = 0; i < 5; ++i) {
        CHECK(r1.frames_a[i].data == r2.frames_a[i].data);
        CHECK(r1.frames_b[i].data == r2.frames_b[i].data);
        CHECK(r1.gt.jitter_a[i].x == r2.gt.jitter_a[i].x);
        CHECK(r1.gt.inter_b_to_a[i].y == r2.gt.inter_b_to_a[i].y);
    }
}

TEST_CASE("ground-truth intra matches equal the jitter steps exactly") {
    RigSpec spec;
    spec.scene_w = 800;
    spec.scene_h = 500;
    spec.frame_w = 240;
    spec.frame_h = 160;
    spec.n_frames = 8;
    spec.jitter_sigma = 2.0;
    const RigSequence rig = generate_rig_sequence(spec);
    REQUIRE(rig.gt.intra_a.size() == 7);
    for (int i = 1; i < 8; ++i) {
        const MatchSet& ms = rig.gt.intra_a[i - 1];
        CHECK(ms.frame_index == i);
        // window moved by step; same scene point shifts by -step in image
        // coords, so motion (src - dst) = -(dst - src) = -step
        const Vec2 step = rig.gt.jitter_a[i] - rig.gt.jitter_a[i - 1];
        REQUIRE(!ms.pairs.empty());
        for (std::size_t k = 0; k < ms.pairs.size(); ++k) {
            CHECK((ms.pairs[k].dst - ms.pairs[k].src - step).norm() < 1e-12);
            CHECK((ms.motions[k] + step).norm() < 1e-12);
        }
    }
}

TEST_CASE("ground-truth inter matches reproject with zero error") {
    RigSpec spec;
    spec.scene_w = 800;
    spec.scene_h = 500;
    spec.frame_w = 240;
    spec.frame_h = 160;
    spec.n_frames = 6;
    spec.jitter_sigma = 1.0;
    spec.articulation_amplitude = 6.0;
    const RigSequence rig = generate_rig_sequence(spec);
    REQUIRE(rig.gt.inter.size() == 6);
    for (int i = 0; i < 6; ++i) {
        const Vec2 t = rig.gt.inter_b_to_a[i];  // p_a = p_b + t
        for (const PointPair& pp : rig.gt.inter[i].pairs) {
            CHECK((pp.dst + t - pp.src).norm() < 1e-12);
        }
    }
}

TEST_CASE("windows leaving the scene raise WindowOutOfScene") {
    RigSpec spec;
    spec.scene_w = 600;
    spec.scene_h = 300;
    spec.frame_w = 240;
    spec.frame_h = 160;
    spec.n_frames = 50;
    spec.jitter_sigma = 40.0;  // walk escapes the margins almost surely
    CHECK_THROWS_AS(generate_rig_sequence(spec), WindowOutOfScene);
}

TEST_CASE("write_rig emits the full dataset layout") {
    namespace fs = std::filesystem;
    RigSpec spec;
    spec.scene_w = 700;
    spec.scene_h = 400;
    spec.frame_w = 240;
    spec.frame_h = 160;
    spec.n_frames = 3;
    spec.jitter_sigma = 1.0;
    const RigSequence rig = generate_rig_sequence(spec);
    const std::string dir = "/tmp/panomesh_synth_rig_test";
    fs::remove_all(dir);
    write_rig(dir, rig, spec);
    for (const char* rel : {"cam_a/000000.png", "cam_a/000002.png", "cam_b/000001.png",
                            "matches_intra_a.json", "matches_intra_b.json", "matches_inter.json",
                            "ground_truth.json"}) {
        CHECK(fs::exists(fs::path(dir) / rel));
    }
    // match files load back through the standard reader
    const auto intra = load_matches(dir + std::string("/matches_intra_a.json"), MatchKind::Intra);
    CHECK(intra.size() == 2);
    const auto inter = load_matches(dir + std::string("/matches_inter.json"), MatchKind::Inter);
    CHECK(inter.size() == 3);
    fs::remove_all(dir);
}
